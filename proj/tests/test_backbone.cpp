#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "mgg/backbone.hpp"

using namespace mgg;

namespace {

BackboneConfig desk_config() {
  BackboneConfig cfg;
  cfg.in_channels = 3;
  cfg.height = cfg.width = 64;
  cfg.blocks = {{16, 1, 2}, {32, 1, 2}, {64, 1, 2}, {128, 1, 2}};
  cfg.tap_blocks = {3, 4};
  return cfg;
}

}  // namespace

TEST_CASE("tap shapes follow the halving rule") {
  auto shapes = desk_config().tap_shapes();
  REQUIRE(shapes.size() == 2);
  CHECK(shapes[0].channels == 64);
  CHECK(shapes[0].height == 8);
  CHECK(shapes[0].width == 8);
  CHECK(shapes[1].channels == 128);
  CHECK(shapes[1].height == 4);
  CHECK(shapes[1].width == 4);

  // The reference full-scale layout: 224x224 input, taps at blocks 3 and 4
  // of a stride-2-per-block stack land on 28x28 and 14x14 maps.
  BackboneConfig full;
  full.in_channels = 3;
  full.height = full.width = 224;
  full.blocks = {{64, 1, 2}, {128, 1, 2}, {256, 1, 2}, {512, 1, 2}};
  full.tap_blocks = {3, 4};
  auto fs = full.tap_shapes();
  CHECK(fs[0].height == 28);
  CHECK(fs[1].height == 14);
}

TEST_CASE("forward produces the configured taps and stays finite on zeros") {
  BackboneConfig cfg;
  cfg.in_channels = 3;
  cfg.height = cfg.width = 16;
  cfg.blocks = {{4, 1, 2}, {8, 1, 2}};
  cfg.tap_blocks = {1, 2};
  Backbone net(cfg);
  ParamStore params;
  Initializer init(5);
  net.init_params(params, init);

  Tape tape;
  Tensor zeros = Tensor::zeros({2, 3, 16, 16});
  auto taps = net.forward(tape, zeros, params, /*train=*/false);
  REQUIRE(taps.size() == 2);
  CHECK(taps[0].shape == Shape{2, 4, 8, 8});
  CHECK(taps[1].shape == Shape{2, 8, 4, 4});
  for (const auto& t : taps)
    for (double v : t.values()) CHECK(std::isfinite(v));
}

TEST_CASE("taps alias true intermediates: early weights reach every tap") {
  BackboneConfig cfg;
  cfg.in_channels = 1;
  cfg.height = cfg.width = 8;
  cfg.blocks = {{2, 1, 1}, {3, 1, 2}};
  cfg.tap_blocks = {1, 2};
  Backbone net(cfg);
  ParamStore params;
  Initializer init(9);
  net.init_params(params, init);

  std::mt19937_64 rng(33);
  Tensor x = Tensor::from({1, 1, 8, 8}, testing::random_values(64, rng));
  auto run = [&]() {
    Tape tape;
    auto taps = net.forward(tape, x, params, /*train=*/true);
    return std::pair<std::vector<double>, std::vector<double>>(
        *taps[0].data, *taps[1].data);
  };
  auto before = run();
  params.get("backbone.block1.conv1.weight")[0] += 0.25;
  auto after_b1 = run();
  CHECK(before.first != after_b1.first);
  CHECK(before.second != after_b1.second);

  params.get("backbone.block1.conv1.weight")[0] -= 0.25;
  params.get("backbone.block2.conv1.weight")[0] += 0.25;
  auto after_b2 = run();
  CHECK(before.first == after_b2.first);   // block 2 cannot reach tap 1
  CHECK(before.second != after_b2.second);
}

TEST_CASE("config validation") {
  BackboneConfig cfg = desk_config();
  cfg.tap_blocks = {};
  CHECK_THROWS_AS(cfg.check(), ShapeError);
  cfg = desk_config();
  cfg.tap_blocks = {5};
  CHECK_THROWS_AS(cfg.check(), ShapeError);
  cfg = desk_config();
  cfg.height = 60;  // not divisible by the total downsample factor
  CHECK_THROWS_AS(cfg.check(), ShapeError);
}

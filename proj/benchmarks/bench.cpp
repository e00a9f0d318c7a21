#include <benchmark/benchmark.h>

#include <random>

#include "mgg/gcl.hpp"
#include "mgg/model.hpp"
#include "mgg/tensor.hpp"

using namespace mgg;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Tensor t = Tensor::zeros(std::move(shape));
  for (auto& v : *t.data) v = dist(rng);
  return t;
}

void BM_Conv2d(benchmark::State& state) {
  Tensor x = random_tensor({8, 8, 16, 16}, 1);
  Tensor w = random_tensor({16, 8, 3, 3}, 2);
  Tensor b = Tensor::zeros({16});
  for (auto _ : state) {
    Tape tape;
    Tensor y = conv2d(tape, x, w, b, Padding::Same);
    benchmark::DoNotOptimize(y.data->data());
  }
}
BENCHMARK(BM_Conv2d);

void BM_GclUpdate(benchmark::State& state) {
  const int K = static_cast<int>(state.range(0));
  GraphCorrelation gcl(1, K, {16}, 0.5);
  ParamStore params;
  Initializer init(3);
  gcl.init_params(params, init);
  std::vector<Tensor> features;
  for (int i = 0; i < K; ++i)
    features.push_back(random_tensor({8, 16}, 10 + static_cast<std::uint64_t>(i)));
  for (auto _ : state) {
    Tape tape;
    auto r = gcl.update(tape, features, params, 0);
    benchmark::DoNotOptimize(r.affinity.data());
  }
}
BENCHMARK(BM_GclUpdate)->Arg(4)->Arg(8);

void BM_TrainStep(benchmark::State& state) {
  ModelConfig cfg;
  cfg.backbone.in_channels = 1;
  cfg.backbone.height = cfg.backbone.width = 32;
  cfg.backbone.blocks = {{8, 1, 2}, {16, 1, 2}};
  cfg.backbone.tap_blocks = {1, 2};
  cfg.num_attributes = 12;
  MggModel model(cfg, GroupAssignment::contiguous(12, 4));
  model.init_params(4);
  Tensor batch = random_tensor({8, 1, 32, 32}, 5);
  std::vector<std::vector<double>> labels(12, std::vector<double>(8, 1.0));
  SgdOptimizer opt(0.01, 0.9);
  for (auto _ : state) {
    Tape tape;
    auto fwd = model.forward(tape, batch, /*train=*/true);
    Tensor loss = total_loss(tape, fwd.preds, labels, LossMode::Plain);
    model.params().zero_grad();
    tape.backward(loss);
    opt.step(model.params());
  }
}
BENCHMARK(BM_TrainStep);

}  // namespace

BENCHMARK_MAIN();

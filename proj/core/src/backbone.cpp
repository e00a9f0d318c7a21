#include "mgg/backbone.hpp"

#include <algorithm>

namespace mgg {

void BackboneConfig::check() const {
  if (blocks.empty()) throw ShapeError("backbone: no blocks");
  if (tap_blocks.empty()) throw ShapeError("backbone: no tap blocks");
  if (!std::is_sorted(tap_blocks.begin(), tap_blocks.end()))
    throw ShapeError("backbone: tap blocks must be ascending");
  for (int t : tap_blocks)
    if (t < 1 || t > static_cast<int>(blocks.size()))
      throw ShapeError("backbone: tap block " + std::to_string(t) +
                       " out of range");
  for (const auto& b : blocks) {
    if (b.conv_count < 1) throw ShapeError("backbone: conv_count < 1");
    if (b.downsample != 1 && b.downsample != 2)
      throw ShapeError("backbone: downsample must be 1 or 2");
  }
  std::size_t hh = height, ww = width;
  for (const auto& b : blocks)
    if (b.downsample == 2) {
      if (hh % 2 != 0 || ww % 2 != 0)
        throw ShapeError("backbone: input size not divisible by downsampling");
      hh /= 2;
      ww /= 2;
    }
}

std::vector<TapShape> BackboneConfig::tap_shapes() const {
  check();
  std::vector<TapShape> out;
  std::size_t hh = height, ww = width;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].downsample == 2) {
      hh /= 2;
      ww /= 2;
    }
    for (int t : tap_blocks)
      if (t == static_cast<int>(i) + 1)
        out.push_back({blocks[i].out_channels, hh, ww});
  }
  return out;
}

Backbone::Backbone(BackboneConfig config) : config_(std::move(config)) {
  config_.check();
}

namespace {
std::string block_prefix(std::size_t block, int conv) {
  return "backbone.block" + std::to_string(block + 1) + ".conv" +
         std::to_string(conv + 1);
}
std::string bn_prefix(std::size_t block, int conv) {
  return "backbone.block" + std::to_string(block + 1) + ".bn" +
         std::to_string(conv + 1);
}
}  // namespace

void Backbone::init_params(ParamStore& params, Initializer& init) const {
  std::size_t cin = config_.in_channels;
  for (std::size_t b = 0; b < config_.blocks.size(); ++b) {
    const auto& spec = config_.blocks[b];
    std::size_t c = cin;
    for (int j = 0; j < spec.conv_count; ++j) {
      Tensor& w = params.create(block_prefix(b, j) + ".weight",
                                {spec.out_channels, c, 3, 3});
      init.fan_in_uniform(w, c * 9);
      params.create(block_prefix(b, j) + ".bias", {spec.out_channels});
      Tensor& gamma =
          params.create(bn_prefix(b, j) + ".gamma", {spec.out_channels});
      std::fill(gamma.data->begin(), gamma.data->end(), 1.0);
      params.create(bn_prefix(b, j) + ".beta", {spec.out_channels});
      params.create(bn_prefix(b, j) + ".running_mean", {spec.out_channels},
                    false);
      Tensor& rv = params.create(bn_prefix(b, j) + ".running_var",
                                 {spec.out_channels}, false);
      std::fill(rv.data->begin(), rv.data->end(), 1.0);
      c = spec.out_channels;
    }
    cin = spec.out_channels;
  }
}

std::vector<Tensor> Backbone::forward(Tape& tape, const Tensor& images,
                                      ParamStore& params, bool train) const {
  if (images.shape.size() != 4 || images.shape[1] != config_.in_channels ||
      images.shape[2] != config_.height || images.shape[3] != config_.width)
    throw ShapeError("backbone: input " + shape_str(images.shape) +
                     " does not match config");
  std::vector<Tensor> taps;
  Tensor x = images;
  for (std::size_t b = 0; b < config_.blocks.size(); ++b) {
    const auto& spec = config_.blocks[b];
    for (int j = 0; j < spec.conv_count; ++j) {
      const int stride = (j == 0) ? spec.downsample : 1;
      x = conv2d(tape, x, params.get(block_prefix(b, j) + ".weight"),
                 params.get(block_prefix(b, j) + ".bias"), Padding::Same,
                 stride);
      x = batchnorm2d(tape, x, params.get(bn_prefix(b, j) + ".gamma"),
                      params.get(bn_prefix(b, j) + ".beta"),
                      params.get(bn_prefix(b, j) + ".running_mean"),
                      params.get(bn_prefix(b, j) + ".running_var"), train);
      x = relu(tape, x);
    }
    for (int t : config_.tap_blocks)
      if (t == static_cast<int>(b) + 1) taps.push_back(x);
  }
  return taps;
}

}  // namespace mgg

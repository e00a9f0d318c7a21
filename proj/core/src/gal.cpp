#include "mgg/gal.hpp"

#include <algorithm>

namespace mgg {

GroupAttention::GroupAttention(std::vector<TapShape> tap_shapes,
                               int num_groups)
    : tap_shapes_(std::move(tap_shapes)), num_groups_(num_groups) {
  if (num_groups_ < 1) throw ShapeError("gal: need at least one group");
  for (const auto& s : tap_shapes_)
    if (s.channels < 2)
      throw ShapeError("gal: tapped feature needs >= 2 channels");
}

std::string GroupAttention::prefix(int block, int group) const {
  return "gal.b" + std::to_string(block + 1) + ".g" +
         std::to_string(group + 1);
}

void GroupAttention::init_params(ParamStore& params, Initializer& init) const {
  for (int b = 0; b < num_blocks(); ++b) {
    const std::size_t c = tap_shapes_[static_cast<std::size_t>(b)].channels;
    const std::size_t mid = c / 2;
    for (int g = 0; g < num_groups_; ++g) {
      const std::string p = prefix(b, g);
      Tensor& w1 = params.create(p + ".conv1.weight", {mid, c, 3, 3});
      init.fan_in_uniform(w1, c * 9);
      params.create(p + ".conv1.bias", {mid});
      Tensor& gamma = params.create(p + ".bn.gamma", {mid});
      std::fill(gamma.data->begin(), gamma.data->end(), 1.0);
      params.create(p + ".bn.beta", {mid});
      params.create(p + ".bn.running_mean", {mid}, false);
      Tensor& rv = params.create(p + ".bn.running_var", {mid}, false);
      std::fill(rv.data->begin(), rv.data->end(), 1.0);
      Tensor& w2 = params.create(p + ".conv2.weight", {1, mid, 1, 1});
      init.fan_in_uniform(w2, mid);
      params.create(p + ".conv2.bias", {1});
    }
  }
}

Tensor GroupAttention::mask(Tape& tape, const Tensor& feature,
                            ParamStore& params, int block, int group,
                            bool train) const {
  const auto& s = tap_shapes_.at(static_cast<std::size_t>(block));
  if (feature.shape.size() != 4 || feature.shape[1] != s.channels)
    throw ShapeError("gal: feature " + shape_str(feature.shape) +
                     " does not match tap shape");
  const std::string p = prefix(block, group);
  Tensor x = conv2d(tape, feature, params.get(p + ".conv1.weight"),
                    params.get(p + ".conv1.bias"), Padding::Same, 1);
  x = batchnorm2d(tape, x, params.get(p + ".bn.gamma"),
                  params.get(p + ".bn.beta"),
                  params.get(p + ".bn.running_mean"),
                  params.get(p + ".bn.running_var"), train);
  x = relu(tape, x);
  x = conv2d(tape, x, params.get(p + ".conv2.weight"),
             params.get(p + ".conv2.bias"), Padding::Same, 1);
  return sigmoid(tape, x);
}

GroupAttention::Result GroupAttention::forward_all(
    Tape& tape, const std::vector<Tensor>& taps, ParamStore& params,
    bool train) const {
  if (static_cast<int>(taps.size()) != num_blocks())
    throw ShapeError("gal: expected " + std::to_string(num_blocks()) +
                     " tapped features, got " + std::to_string(taps.size()));
  Result out;
  out.features.resize(taps.size());
  out.masks.resize(taps.size());
  for (int b = 0; b < num_blocks(); ++b) {
    for (int g = 0; g < num_groups_; ++g) {
      Tensor m = mask(tape, taps[static_cast<std::size_t>(b)], params, b, g,
                      train);
      out.masks[static_cast<std::size_t>(b)].push_back(m);
      out.features[static_cast<std::size_t>(b)].push_back(
          masked_pool(tape, taps[static_cast<std::size_t>(b)], m));
    }
  }
  return out;
}

}  // namespace mgg

#include "mgg/model.hpp"

namespace mgg {

MggModel::MggModel(ModelConfig config, GroupAssignment assignment)
    : config_(std::move(config)),
      assignment_(std::move(assignment)),
      backbone_(config_.backbone) {
  if (config_.num_attributes != assignment_.num_attributes())
    throw ShapeError("model: attribute count does not match group assignment");
  const auto taps = config_.backbone.tap_shapes();
  std::vector<std::size_t> dims;
  for (const auto& t : taps) dims.push_back(t.channels);
  const std::size_t base_dim = taps.back().channels;
  if (!config_.base_only) {
    gal_ = std::make_unique<GroupAttention>(taps, assignment_.num_groups());
    gcl_ = std::make_unique<GraphCorrelation>(
        config_.backbone.num_taps(), assignment_.num_groups(), dims,
        config_.alpha);
  }
  heads_ = std::make_unique<Heads>(&assignment_, config_.backbone.num_taps(),
                                   dims, base_dim);
}

void MggModel::init_params(std::uint64_t seed) {
  Initializer init(seed);
  backbone_.init_params(params_, init);
  if (gal_) gal_->init_params(params_, init);
  if (gcl_) gcl_->init_params(params_, init);
  heads_->init_params(params_, init);
}

MggModel::ForwardResult MggModel::forward(Tape& tape, const Tensor& images,
                                          bool train) {
  ForwardResult out;
  std::vector<Tensor> taps = backbone_.forward(tape, images, params_, train);
  Tensor base_feature = global_avg_pool(tape, taps.back());
  if (config_.base_only) {
    out.preds = heads_->forward_base_only(tape, base_feature, params_);
    return out;
  }
  GroupAttention::Result gal = gal_->forward_all(tape, taps, params_, train);
  out.masks = std::move(gal.masks);
  std::vector<std::vector<Tensor>> refined(gal.features.size());
  for (int b = 0; b < num_blocks(); ++b) {
    auto res = gcl_->update(tape, gal.features[static_cast<std::size_t>(b)],
                            params_, b);
    refined[static_cast<std::size_t>(b)] = res.refined;
    out.gcl.push_back(std::move(res));
  }
  out.preds =
      heads_->forward(tape, gal.features, refined, base_feature, params_);
  return out;
}

Tensor MggModel::make_input(
    const std::vector<const std::vector<double>*>& images,
    int image_size) const {
  const std::size_t batch = images.size();
  const std::size_t c = config_.backbone.in_channels;
  const std::size_t hw = static_cast<std::size_t>(image_size) *
                         static_cast<std::size_t>(image_size);
  if (config_.backbone.height != static_cast<std::size_t>(image_size) ||
      config_.backbone.width != static_cast<std::size_t>(image_size))
    throw ShapeError("model: dataset image size does not match config");
  Tensor input = Tensor::zeros({batch, c, static_cast<std::size_t>(image_size),
                                static_cast<std::size_t>(image_size)});
  for (std::size_t n = 0; n < batch; ++n) {
    if (images[n]->size() != hw)
      throw ShapeError("model: image pixel count mismatch");
    for (std::size_t ch = 0; ch < c; ++ch)
      std::copy(images[n]->begin(), images[n]->end(),
                input.data->begin() + static_cast<std::ptrdiff_t>(
                                          (n * c + ch) * hw));
  }
  return input;
}

}  // namespace mgg

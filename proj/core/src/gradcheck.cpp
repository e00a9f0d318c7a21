#include "mgg/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace mgg {

namespace {

double loss_value(MggModel& model, const Tensor& images,
                  const std::vector<std::vector<double>>& labels,
                  LossMode mode) {
  Tape tape;
  auto fwd = model.forward(tape, images, /*train=*/true);
  return total_loss(tape, fwd.preds, labels, mode).item();
}

std::string family_of(const std::string& name) {
  return name.substr(0, name.find('.'));
}

}  // namespace

GradCheckResult gradcheck(MggModel& model, const Tensor& images,
                          const std::vector<std::vector<double>>& labels,
                          const GradCheckOptions& options) {
  // Analytic gradients from one forward/backward over the fixed batch.
  {
    Tape tape;
    auto fwd = model.forward(tape, images, /*train=*/true);
    Tensor loss = total_loss(tape, fwd.preds, labels, options.mode);
    model.params().zero_grad();
    tape.backward(loss);
  }

  std::map<std::string, std::vector<std::string>> families;
  for (const auto& name : model.params().names())
    if (model.params().get(name).requires_grad)
      families[family_of(name)].push_back(name);
  std::vector<std::string> family_names;
  for (const auto& [f, _] : families) family_names.push_back(f);

  std::mt19937_64 rng(options.seed);
  GradCheckResult result;
  for (int i = 0; i < options.sample_count; ++i) {
    const auto& family =
        families[family_names[static_cast<std::size_t>(i) %
                              family_names.size()]];
    const std::string& name =
        family[std::uniform_int_distribution<std::size_t>(
            0, family.size() - 1)(rng)];
    Tensor& p = model.params().get(name);
    const std::size_t idx = std::uniform_int_distribution<std::size_t>(
        0, p.size() - 1)(rng);

    const double analytic = (*p.grad)[idx] * options.corrupt_scale;
    const double saved = (*p.data)[idx];
    (*p.data)[idx] = saved + options.step;
    const double plus = loss_value(model, images, labels, options.mode);
    (*p.data)[idx] = saved - options.step;
    const double minus = loss_value(model, images, labels, options.mode);
    (*p.data)[idx] = saved;
    const double numeric = (plus - minus) / (2.0 * options.step);

    const double denom = std::max(std::abs(analytic), std::abs(numeric));
    const double rel =
        denom < 1e-7 ? 0.0 : std::abs(analytic - numeric) / denom;
    ++result.checked;
    if (rel > result.max_rel_err) {
      result.max_rel_err = rel;
      result.worst = {name, idx, analytic, numeric, rel};
    }
  }
  result.pass = result.max_rel_err <= options.tolerance;
  return result;
}

GradCheckResult gradcheck_tiny_model(const GradCheckOptions& options) {
  ModelConfig config;
  config.backbone.in_channels = 3;
  config.backbone.height = 16;
  config.backbone.width = 16;
  config.backbone.blocks = {{4, 1, 2}, {8, 1, 2}};
  config.backbone.tap_blocks = {1, 2};
  config.num_attributes = 6;
  config.alpha = 0.5;
  MggModel model(config, GroupAssignment::contiguous(6, 3));
  model.init_params(options.seed);

  const std::size_t batch = 3;
  std::mt19937_64 rng(options.seed ^ 0xabcdef12345ULL);
  std::uniform_real_distribution<double> pix(0.0, 1.0);
  Tensor images = Tensor::zeros({batch, 3, 16, 16});
  for (auto& v : *images.data) v = pix(rng);
  std::vector<std::vector<double>> labels(6, std::vector<double>(batch));
  std::bernoulli_distribution coin(0.5);
  for (auto& row : labels)
    for (auto& y : row) y = coin(rng) ? 1.0 : 0.0;

  return gradcheck(model, images, labels, options);
}

}  // namespace mgg

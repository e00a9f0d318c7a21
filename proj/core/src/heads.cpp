#include "mgg/heads.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace mgg {

void LossReport::write_csv(std::ostream& os) const {
  os.precision(17);
  os << "term,value\n";
  for (const auto& t : terms) os << t.label << "," << t.value << "\n";
  os << "total," << total << "\n";
}

Heads::Heads(const GroupAssignment* assignment, int num_blocks,
             std::vector<std::size_t> group_feature_dims, std::size_t base_dim)
    : assignment_(assignment),
      num_blocks_(num_blocks),
      dims_(std::move(group_feature_dims)),
      base_dim_(base_dim) {
  if (static_cast<int>(dims_.size()) != num_blocks_)
    throw ShapeError("heads: one feature dim per block required");
}

namespace {
std::string head_name(int attr, const std::string& source) {
  return "heads.a" + std::to_string(attr) + "." + source;
}
}  // namespace

void Heads::init_params(ParamStore& params, Initializer& init) const {
  for (int a = 1; a <= assignment_->num_attributes(); ++a) {
    for (int b = 0; b < num_blocks_; ++b) {
      const std::size_t d = dims_[static_cast<std::size_t>(b)];
      for (const char* src : {"gal", "gcl"}) {
        const std::string p =
            head_name(a, std::string(src) + ".b" + std::to_string(b + 1));
        Tensor& w = params.create(p + ".weight", {1, d});
        init.fan_in_uniform(w, d);
        params.create(p + ".bias", {1});
      }
    }
    const std::string p = head_name(a, "base");
    Tensor& w = params.create(p + ".weight", {1, base_dim_});
    init.fan_in_uniform(w, base_dim_);
    params.create(p + ".bias", {1});
  }
}

Tensor Heads::head_prob(Tape& tape, const Tensor& feature, ParamStore& params,
                        const std::string& name) const {
  Tensor logit = linear(tape, feature, params.get(name + ".weight"),
                        params.get(name + ".bias"));
  return sigmoid(tape, logit).reshaped({feature.shape[0]});
}

PredictionSet Heads::forward(
    Tape& tape, const std::vector<std::vector<Tensor>>& gal_features,
    const std::vector<std::vector<Tensor>>& gcl_features,
    const Tensor& base_feature, ParamStore& params) const {
  const int n_attr = assignment_->num_attributes();
  if (static_cast<int>(gal_features.size()) != num_blocks_ ||
      static_cast<int>(gcl_features.size()) != num_blocks_)
    throw ShapeError("heads: feature tables do not cover all blocks");

  PredictionSet out;
  out.gal.resize(static_cast<std::size_t>(num_blocks_));
  out.gcl.resize(static_cast<std::size_t>(num_blocks_));
  for (int a = 1; a <= n_attr; ++a) {
    const std::size_t g =
        static_cast<std::size_t>(assignment_->group_of(a));
    for (int b = 0; b < num_blocks_; ++b) {
      out.gal[static_cast<std::size_t>(b)].push_back(head_prob(
          tape, gal_features[static_cast<std::size_t>(b)].at(g), params,
          head_name(a, "gal.b" + std::to_string(b + 1))));
      out.gcl[static_cast<std::size_t>(b)].push_back(head_prob(
          tape, gcl_features[static_cast<std::size_t>(b)].at(g), params,
          head_name(a, "gcl.b" + std::to_string(b + 1))));
    }
    out.base.push_back(
        head_prob(tape, base_feature, params, head_name(a, "base")));

    // Y_a = (Y^B_a + sum_b Y^{b,GCL}_a) / (1 + B); GAL heads are deep
    // supervision only.
    Tensor acc = out.base.back();
    for (int b = 0; b < num_blocks_; ++b)
      acc = add(tape, acc,
                out.gcl[static_cast<std::size_t>(b)].back());
    out.fused.push_back(
        scale(tape, acc, 1.0 / (1.0 + static_cast<double>(num_blocks_))));
  }
  return out;
}

PredictionSet Heads::forward_base_only(Tape& tape, const Tensor& base_feature,
                                       ParamStore& params) const {
  PredictionSet out;
  for (int a = 1; a <= assignment_->num_attributes(); ++a) {
    out.base.push_back(
        head_prob(tape, base_feature, params, head_name(a, "base")));
    out.fused.push_back(out.base.back());
  }
  return out;
}

double bce(double prob, double label) {
  constexpr double kEps = 1e-12;
  const double p = std::clamp(prob, kEps, 1.0 - kEps);
  return -std::log(p) * label - std::log(1.0 - p) * (1.0 - label);
}

double weighted_bce(double prob, double label, int batch_size,
                    int positive_count) {
  constexpr double kEps = 1e-12;
  const double p = std::clamp(prob, kEps, 1.0 - kEps);
  const double s = static_cast<double>(batch_size);
  const double sa = static_cast<double>(positive_count);
  return -std::log(p) * label * (s - sa) / s -
         std::log(1.0 - p) * (1.0 - label) * sa / s;
}

Tensor total_loss(Tape& tape, const PredictionSet& preds,
                  const std::vector<std::vector<double>>& labels,
                  LossMode mode, LossReport* report) {
  const std::size_t n_attr = preds.fused.size();
  if (labels.size() != n_attr)
    throw ShapeError("total_loss: labels do not cover all attributes");
  if (preds.base.size() != n_attr)
    throw ShapeError("total_loss: missing base predictions");
  const bool base_only = preds.gal.empty() && preds.gcl.empty();

  const std::size_t batch = labels.empty() ? 0 : labels[0].size();
  std::vector<double> w_pos(n_attr, 1.0), w_neg(n_attr, 1.0);
  if (mode == LossMode::Balanced) {
    for (std::size_t a = 0; a < n_attr; ++a) {
      double sa = 0.0;
      for (double y : labels[a]) sa += y;
      w_pos[a] = (static_cast<double>(batch) - sa) /
                 static_cast<double>(batch);
      w_neg[a] = sa / static_cast<double>(batch);
    }
  }
  const char* kind = mode == LossMode::Balanced ? "wbce" : "bce";

  if (report) {
    report->terms.clear();
    report->total = 0.0;
  }
  Tensor total;
  auto add_term = [&](const Tensor& prob, std::size_t a,
                      const std::string& label) {
    Tensor term = bce_mean(tape, prob, labels[a], w_pos[a], w_neg[a]);
    if (!std::isfinite(term.item()))
      throw NumericError("total_loss: non-finite term " + label);
    if (report) report->terms.push_back({label, term.item()});
    total = total.data ? add(tape, total, term) : term;
  };

  auto attr_label = [&](const char* source, std::size_t a) {
    return std::string(kind) + ":" + source + ".a" + std::to_string(a + 1);
  };

  if (base_only) {
    for (std::size_t a = 0; a < n_attr; ++a)
      add_term(preds.base[a], a, attr_label("base", a));
  } else {
    for (std::size_t a = 0; a < n_attr; ++a)
      add_term(preds.fused[a], a, attr_label("fused", a));
    for (std::size_t a = 0; a < n_attr; ++a)
      add_term(preds.base[a], a, attr_label("base", a));
    for (std::size_t b = 0; b < preds.gal.size(); ++b)
      for (std::size_t a = 0; a < n_attr; ++a)
        add_term(preds.gal[b][a], a,
                 attr_label(("gal.b" + std::to_string(b + 1)).c_str(), a));
    for (std::size_t b = 0; b < preds.gcl.size(); ++b)
      for (std::size_t a = 0; a < n_attr; ++a)
        add_term(preds.gcl[b][a], a,
                 attr_label(("gcl.b" + std::to_string(b + 1)).c_str(), a));
  }
  if (report) {
    for (const auto& t : report->terms) report->total += t.value;
  }
  return total;
}

}  // namespace mgg

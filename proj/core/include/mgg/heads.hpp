#pragma once

#include <string>
#include <vector>

#include "mgg/groups.hpp"
#include "mgg/params.hpp"
#include "mgg/tensor.hpp"

namespace mgg {

/// The four prediction families, each a [batch] probability tensor per
/// attribute (0-based attribute slots for attributes 1..N).
struct PredictionSet {
  std::vector<std::vector<Tensor>> gal;  // [block][attr]
  std::vector<std::vector<Tensor>> gcl;  // [block][attr]
  std::vector<Tensor> base;              // [attr]
  std::vector<Tensor> fused;             // [attr]
};

enum class LossMode { Plain, Balanced };

struct LossTerm {
  std::string label;
  double value;
};

struct LossReport {
  std::vector<LossTerm> terms;
  double total = 0.0;

  void write_csv(std::ostream& os) const;
};

/// Per-attribute linear classifiers over every feature source: one head per
/// (block, GAL), one per (block, GCL), and one base head on the pooled final
/// shared feature — 2B+1 heads per attribute. The fused prediction averages
/// the base and GCL heads only.
class Heads {
 public:
  Heads(const GroupAssignment* assignment, int num_blocks,
        std::vector<std::size_t> group_feature_dims, std::size_t base_dim);

  void init_params(ParamStore& params, Initializer& init) const;

  /// gal_features/gcl_features: [block][group] pooled features [batch, D_b];
  /// base_feature: [batch, base_dim]. The assignment routes each attribute
  /// to its group's feature.
  PredictionSet forward(Tape& tape,
                        const std::vector<std::vector<Tensor>>& gal_features,
                        const std::vector<std::vector<Tensor>>& gcl_features,
                        const Tensor& base_feature, ParamStore& params) const;

  /// Base-head-only predictions (the ablation baseline): fused == base.
  PredictionSet forward_base_only(Tape& tape, const Tensor& base_feature,
                                  ParamStore& params) const;

 private:
  Tensor head_prob(Tape& tape, const Tensor& feature, ParamStore& params,
                   const std::string& name) const;

  const GroupAssignment* assignment_;
  int num_blocks_;
  std::vector<std::size_t> dims_;
  std::size_t base_dim_;
};

/// Scalar loss forms (the per-sample identities behind bce_mean).
double bce(double prob, double label);
double weighted_bce(double prob, double label, int batch_size,
                    int positive_count);

/// Sums the 2N(B+1) individual terms of the training objective: N on the
/// fused predictions, N on the base head, and N*B on each of the GAL and GCL
/// families; every term is a batch mean. Balanced mode weights the positive
/// term by (S-S_a)/S and the negative by S_a/S from the batch's label counts.
/// labels[a] holds the batch's 0/1 labels for attribute slot a.
Tensor total_loss(Tape& tape, const PredictionSet& preds,
                  const std::vector<std::vector<double>>& labels,
                  LossMode mode, LossReport* report = nullptr);

}  // namespace mgg

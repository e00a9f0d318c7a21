#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "mgg/backbone.hpp"
#include "mgg/gal.hpp"
#include "mgg/gcl.hpp"
#include "mgg/groups.hpp"
#include "mgg/heads.hpp"
#include "mgg/params.hpp"

namespace mgg {

struct ModelConfig {
  BackboneConfig backbone;
  int num_attributes = 0;
  double alpha = 0.5;
  bool base_only = false;  // ablation: base head alone, no GAL/GCL
};

/// The full network: backbone taps -> group attention features -> graph
/// refinement -> per-attribute heads -> fused prediction.
class MggModel {
 public:
  MggModel(ModelConfig config, GroupAssignment assignment);

  void init_params(std::uint64_t seed);

  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  const ModelConfig& config() const { return config_; }
  const GroupAssignment& assignment() const { return assignment_; }
  int num_blocks() const { return config_.backbone.num_taps(); }

  struct ForwardResult {
    PredictionSet preds;
    std::vector<std::vector<Tensor>> masks;              // [block][group]
    std::vector<GraphCorrelation::Result> gcl;           // per block
  };

  /// images: [batch, C, H, W].
  ForwardResult forward(Tape& tape, const Tensor& images, bool train);

  /// Images from the dataset's single channel replicated across the model's
  /// input channels.
  Tensor make_input(const std::vector<const std::vector<double>*>& images,
                    int image_size) const;

 private:
  ModelConfig config_;
  GroupAssignment assignment_;
  ParamStore params_;
  Backbone backbone_;
  std::unique_ptr<GroupAttention> gal_;
  std::unique_ptr<GraphCorrelation> gcl_;
  std::unique_ptr<Heads> heads_;
};

}  // namespace mgg

#pragma once

#include <vector>

#include "mgg/backbone.hpp"
#include "mgg/params.hpp"
#include "mgg/tensor.hpp"

namespace mgg {

/// Group Attention Learning: one attention module per (tap block, group)
/// producing a single-channel mask in [0,1] over the feature map, followed
/// by masked global average pooling into a part-based group feature.
///
/// Module layout: conv3x3 (C -> C/2) -> batchnorm -> relu ->
/// conv1x1 (C/2 -> 1) -> sigmoid, all stride 1.
class GroupAttention {
 public:
  GroupAttention(std::vector<TapShape> tap_shapes, int num_groups);

  int num_blocks() const { return static_cast<int>(tap_shapes_.size()); }
  int num_groups() const { return num_groups_; }

  void init_params(ParamStore& params, Initializer& init) const;

  /// M^b_i for one (block, group) pair; [N,1,H_b,W_b] with values in [0,1].
  Tensor mask(Tape& tape, const Tensor& feature, ParamStore& params, int block,
              int group, bool train) const;

  struct Result {
    /// features[b][g]: pooled part-based group feature, [batch, C_b].
    std::vector<std::vector<Tensor>> features;
    /// masks[b][g]: the attention masks used.
    std::vector<std::vector<Tensor>> masks;
  };

  /// All B x K part-based group features from the tapped feature maps.
  Result forward_all(Tape& tape, const std::vector<Tensor>& taps,
                     ParamStore& params, bool train) const;

 private:
  std::string prefix(int block, int group) const;

  std::vector<TapShape> tap_shapes_;
  int num_groups_;
};

}  // namespace mgg

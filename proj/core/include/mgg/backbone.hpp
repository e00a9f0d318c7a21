#pragma once

#include <string>
#include <vector>

#include "mgg/params.hpp"
#include "mgg/tensor.hpp"

namespace mgg {

struct BlockSpec {
  std::size_t out_channels;
  int conv_count;     // conv3x3 -> batchnorm -> relu repetitions
  int downsample;     // 1 or 2; stride of the block's first convolution
};

struct TapShape {
  std::size_t channels, height, width;
};

struct BackboneConfig {
  std::size_t in_channels = 3;
  std::size_t height = 0, width = 0;
  std::vector<BlockSpec> blocks;
  std::vector<int> tap_blocks;  // 1-based block numbers, ascending

  int num_taps() const { return static_cast<int>(tap_blocks.size()); }
  void check() const;
  /// Channel/spatial shape of each tapped feature map (pure shape arithmetic).
  std::vector<TapShape> tap_shapes() const;
};

/// Multi-block convolutional feature extractor. Each block is
/// conv_count x (conv3x3 -> batchnorm -> relu); a downsampling block uses
/// stride 2 on its first convolution. The tapped block outputs are the
/// shared features handed to the attention and graph stages; the last tap
/// also feeds the base head.
class Backbone {
 public:
  explicit Backbone(BackboneConfig config);

  const BackboneConfig& config() const { return config_; }

  void init_params(ParamStore& params, Initializer& init) const;

  /// One feature map per tap block, in tap order.
  std::vector<Tensor> forward(Tape& tape, const Tensor& images,
                              ParamStore& params, bool train) const;

 private:
  BackboneConfig config_;
};

}  // namespace mgg

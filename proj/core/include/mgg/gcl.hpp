#pragma once

#include <vector>

#include "mgg/params.hpp"
#include "mgg/tensor.hpp"

namespace mgg {

/// Graph Correlation Learning: a two-way directed graph attention layer over
/// the K group features of each tapped block. Each node i carries a square
/// transfer weight W_g (D x D) and an edge weight w_e (D); incoming affinity
/// from node j is the softmax (over j != i) of w_e . relu(W_g f_j), and the
/// refined feature blends the node's own feature with the affinity-weighted
/// messages:
///
///   f'_i = relu((1 - alpha) f_i + alpha * sum_j e_ij W_g f_j)
class GraphCorrelation {
 public:
  GraphCorrelation(int num_blocks, int num_groups,
                   std::vector<std::size_t> feature_dims, double alpha);

  int num_blocks() const { return num_blocks_; }
  int num_groups() const { return num_groups_; }
  double alpha() const { return alpha_; }

  void init_params(ParamStore& params, Initializer& init) const;

  struct Result {
    std::vector<Tensor> refined;  // K tensors, each [batch, D]
    /// Row-stochastic per-sample affinities, batch x K x K row-major with a
    /// zero diagonal (row i receives from column j). Reporting data only;
    /// gradients flow through the tensors above.
    std::vector<double> affinity;
    std::size_t batch = 0;
  };

  /// One graph update over the K features of a block; K >= 2 required.
  Result update(Tape& tape, const std::vector<Tensor>& features,
                ParamStore& params, int block) const;

 private:
  std::string prefix(int block, int node) const;

  int num_blocks_, num_groups_;
  std::vector<std::size_t> dims_;
  double alpha_;
};

/// Mean affinity matrix over a set of per-batch results, min-max rescaled to
/// [0,1] with a zero diagonal. `raw` (optional) receives the unscaled means.
std::vector<double> mean_affinity(const std::vector<GraphCorrelation::Result>& batches,
                                  int num_groups,
                                  std::vector<double>* raw = nullptr);

void write_affinity_csv(const std::string& path,
                        const std::vector<double>& matrix,
                        const std::vector<std::string>& group_names);

}  // namespace mgg

#include "mgg/gcl.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

namespace mgg {

GraphCorrelation::GraphCorrelation(int num_blocks, int num_groups,
                                   std::vector<std::size_t> feature_dims,
                                   double alpha)
    : num_blocks_(num_blocks),
      num_groups_(num_groups),
      dims_(std::move(feature_dims)),
      alpha_(alpha) {
  if (num_groups_ < 2) throw ShapeError("gcl: degenerate graph (K < 2)");
  if (static_cast<int>(dims_.size()) != num_blocks_)
    throw ShapeError("gcl: one feature dim per block required");
  if (alpha_ < 0.0 || alpha_ > 1.0)
    throw ShapeError("gcl: alpha must be in [0,1]");
}

std::string GraphCorrelation::prefix(int block, int node) const {
  return "gcl.b" + std::to_string(block + 1) + ".node" +
         std::to_string(node + 1);
}

void GraphCorrelation::init_params(ParamStore& params,
                                   Initializer& init) const {
  for (int b = 0; b < num_blocks_; ++b) {
    const std::size_t d = dims_[static_cast<std::size_t>(b)];
    for (int i = 0; i < num_groups_; ++i) {
      Tensor& wg = params.create(prefix(b, i) + ".wg", {d, d});
      init.fan_in_uniform(wg, d);
      Tensor& we = params.create(prefix(b, i) + ".we", {d});
      init.fan_in_uniform(we, d);
    }
  }
}

GraphCorrelation::Result GraphCorrelation::update(
    Tape& tape, const std::vector<Tensor>& features, ParamStore& params,
    int block) const {
  const int k = num_groups_;
  if (static_cast<int>(features.size()) != k)
    throw ShapeError("gcl: expected " + std::to_string(k) + " node features");
  const std::size_t d = dims_.at(static_cast<std::size_t>(block));
  const std::size_t batch = features[0].shape.at(0);
  for (const auto& f : features)
    if (f.shape != Shape{batch, d})
      throw ShapeError("gcl: node feature " + shape_str(f.shape) +
                       " does not match [batch," + std::to_string(d) + "]");

  Result out;
  out.batch = batch;
  out.affinity.assign(batch * static_cast<std::size_t>(k) *
                          static_cast<std::size_t>(k),
                      0.0);
  for (int i = 0; i < k; ++i) {
    const Tensor& wg = params.get(prefix(block, i) + ".wg");
    const Tensor we =
        params.get(prefix(block, i) + ".we").reshaped({1, d});

    // Transformed neighbours W_g f_j, ascending j, skipping the self edge.
    std::vector<Tensor> transformed;
    std::vector<Tensor> logit_cols;
    std::vector<int> senders;
    for (int j = 0; j < k; ++j) {
      if (j == i) continue;
      Tensor t =
          matmul_rows(tape, features[static_cast<std::size_t>(j)], wg);
      Tensor l = matmul_rows(tape, relu(tape, t), we).reshaped({batch});
      transformed.push_back(std::move(t));
      logit_cols.push_back(std::move(l));
      senders.push_back(j);
    }
    Tensor aff = rows_softmax(tape, stack_cols(tape, logit_cols));

    for (std::size_t n = 0; n < batch; ++n)
      for (std::size_t idx = 0; idx < senders.size(); ++idx)
        out.affinity[(n * static_cast<std::size_t>(k) +
                      static_cast<std::size_t>(i)) *
                         static_cast<std::size_t>(k) +
                     static_cast<std::size_t>(senders[idx])] =
            (*aff.data)[n * senders.size() + idx];

    Tensor message;
    for (std::size_t idx = 0; idx < transformed.size(); ++idx) {
      Tensor weighted =
          scale_rows(tape, transformed[idx], select_col(tape, aff, idx));
      message = idx == 0 ? weighted : add(tape, message, weighted);
    }
    Tensor blended =
        add(tape, scale(tape, features[static_cast<std::size_t>(i)],
                        1.0 - alpha_),
            scale(tape, message, alpha_));
    out.refined.push_back(relu(tape, blended));
  }
  return out;
}

std::vector<double> mean_affinity(
    const std::vector<GraphCorrelation::Result>& batches, int num_groups,
    std::vector<double>* raw) {
  const std::size_t k = static_cast<std::size_t>(num_groups);
  std::vector<double> mean(k * k, 0.0);
  std::size_t total = 0;
  for (const auto& r : batches) {
    for (std::size_t n = 0; n < r.batch; ++n)
      for (std::size_t e = 0; e < k * k; ++e)
        mean[e] += r.affinity[n * k * k + e];
    total += r.batch;
  }
  if (total == 0) throw ShapeError("mean_affinity: empty evaluation set");
  for (auto& v : mean) v /= static_cast<double>(total);
  if (raw) *raw = mean;

  // Min-max rescale over the off-diagonal entries; diagonal stays 0.
  double lo = 1.0, hi = 0.0;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      if (i != j) {
        lo = std::min(lo, mean[i * k + j]);
        hi = std::max(hi, mean[i * k + j]);
      }
  const double span = hi > lo ? hi - lo : 1.0;
  std::vector<double> scaled(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      if (i != j) scaled[i * k + j] = (mean[i * k + j] - lo) / span;
  return scaled;
}

void write_affinity_csv(const std::string& path,
                        const std::vector<double>& matrix,
                        const std::vector<std::string>& group_names) {
  const std::size_t k = group_names.size();
  if (matrix.size() != k * k)
    throw ShapeError("write_affinity_csv: matrix/name size mismatch");
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp);
    if (!os) throw std::runtime_error("cannot write affinity CSV: " + path);
    os << "group";
    for (const auto& n : group_names) os << "," << n;
    os << "\n";
    os.precision(17);
    for (std::size_t i = 0; i < k; ++i) {
      os << group_names[i];
      for (std::size_t j = 0; j < k; ++j) os << "," << matrix[i * k + j];
      os << "\n";
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace mgg

#pragma once

#include <functional>
#include <random>
#include <vector>

#include "mgg/tensor.hpp"

namespace mgg::testing {

inline std::vector<double> random_values(std::size_t n, std::mt19937_64& rng,
                                         double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> out(n);
  for (auto& v : out) v = dist(rng);
  return out;
}

/// Central finite-difference gradient of `eval` w.r.t. every entry of
/// `subject`, where `eval` rebuilds the forward pass from current data.
inline std::vector<double> fd_gradient(Tensor& subject,
                                       const std::function<double()>& eval,
                                       double h = 1e-5) {
  std::vector<double> grad(subject.size());
  for (std::size_t i = 0; i < subject.size(); ++i) {
    const double saved = (*subject.data)[i];
    (*subject.data)[i] = saved + h;
    const double up = eval();
    (*subject.data)[i] = saved - h;
    const double down = eval();
    (*subject.data)[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

inline double max_rel_err(const std::vector<double>& analytic,
                          const std::vector<double>& numeric,
                          double floor = 1e-7) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max(std::abs(analytic[i]), std::abs(numeric[i]));
    if (denom < floor) continue;
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

}  // namespace mgg::testing

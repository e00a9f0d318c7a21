#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mgg/heads.hpp"
#include "mgg/model.hpp"

namespace mgg {

struct GradCheckOptions {
  int sample_count = 120;   // parameter coordinates to probe
  double step = 1e-4;       // central-difference step
  double tolerance = 1e-4;  // max relative error allowed
  std::uint64_t seed = 11;
  LossMode mode = LossMode::Plain;
  /// Negative-control hook: scales every analytic gradient, so a value
  /// other than 1 must make the check fail.
  double corrupt_scale = 1.0;
};

struct GradCheckEntry {
  std::string parameter;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_err = 0.0;
};

struct GradCheckResult {
  double max_rel_err = 0.0;
  int checked = 0;
  bool pass = false;
  GradCheckEntry worst;
};

/// Compares analytic gradients of the full training loss against central
/// finite differences for randomly sampled parameter coordinates spanning
/// every parameter family. images/labels define one fixed batch.
GradCheckResult gradcheck(MggModel& model, const Tensor& images,
                          const std::vector<std::vector<double>>& labels,
                          const GradCheckOptions& options);

/// The N=6, K=3, B=2, 16x16 check with a synthesized batch.
GradCheckResult gradcheck_tiny_model(const GradCheckOptions& options);

}  // namespace mgg

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mgg/data.hpp"
#include "mgg/heads.hpp"
#include "mgg/metrics.hpp"
#include "mgg/model.hpp"

namespace mgg {

struct TrainOptions {
  LossMode mode = LossMode::Plain;
  int batch_size = 32;
  std::vector<std::pair<int, double>> schedule;  // (epochs, lr)
  double momentum = 0.9;
  std::uint64_t seed = 7;
  bool augment = true;
};

struct TrainResult {
  /// Per-epoch mean of every loss term (fixed term order).
  std::vector<LossReport> epoch_reports;
};

/// Deterministic end-to-end training: seeded shuffle and augmentation,
/// fixed batch order, SGD with the configured schedule.
TrainResult train_model(MggModel& model, const Dataset& train_set,
                        const TrainOptions& options);

/// Eval-mode forward over the whole set; fused predictions against the 0.5
/// threshold unless overridden.
EvalReport evaluate(MggModel& model, const Dataset& eval_set, int batch_size,
                    double threshold = 0.5);

}  // namespace mgg

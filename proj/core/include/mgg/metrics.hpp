#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mgg/tensor.hpp"

namespace mgg {

/// Per-attribute confusion counters: T samples total, P/I positives and
/// negatives, P'/I' correct among each.
struct AttributeCounters {
  long total = 0;
  long positives = 0;
  long negatives = 0;
  long correct_positives = 0;
  long correct_negatives = 0;

  long correct() const { return correct_positives + correct_negatives; }
};

class MetricCounters {
 public:
  explicit MetricCounters(int num_attributes)
      : counters_(static_cast<std::size_t>(num_attributes)) {}

  int num_attributes() const { return static_cast<int>(counters_.size()); }
  const AttributeCounters& at(int attr_slot) const {
    return counters_.at(static_cast<std::size_t>(attr_slot));
  }

  /// Classify positive iff prob >= threshold (ties positive).
  void accumulate(int attr_slot, double prob, int label, double threshold);

  /// Associative, commutative shard merge.
  void merge(const MetricCounters& other);

 private:
  std::vector<AttributeCounters> counters_;
};

struct AttributeResult {
  double prediction_accuracy = 0.0;
  std::optional<double> balanced_accuracy;  // missing when one class absent
};

struct EvalReport {
  std::vector<AttributeResult> per_attribute;
  double mean_prediction = 0.0;
  double mean_balanced = 0.0;  // over attributes with both classes present
  int balanced_excluded = 0;
  double threshold = 0.5;

  /// One row per attribute (index,name,pred_acc,bal_acc) plus a MEAN row.
  void write_csv(std::ostream& os,
                 const std::vector<std::string>& attr_names) const;
};

EvalReport finalize(const MetricCounters& counters, double threshold);

}  // namespace mgg

#include "mgg/metrics.hpp"

#include <ostream>

namespace mgg {

void MetricCounters::accumulate(int attr_slot, double prob, int label,
                                double threshold) {
  auto& c = counters_.at(static_cast<std::size_t>(attr_slot));
  const bool predicted = prob >= threshold;
  const bool actual = label != 0;
  ++c.total;
  if (actual) {
    ++c.positives;
    if (predicted) ++c.correct_positives;
  } else {
    ++c.negatives;
    if (!predicted) ++c.correct_negatives;
  }
}

void MetricCounters::merge(const MetricCounters& other) {
  if (other.counters_.size() != counters_.size())
    throw ShapeError("MetricCounters::merge: attribute count mismatch");
  for (std::size_t i = 0; i < counters_.size(); ++i) {
    counters_[i].total += other.counters_[i].total;
    counters_[i].positives += other.counters_[i].positives;
    counters_[i].negatives += other.counters_[i].negatives;
    counters_[i].correct_positives += other.counters_[i].correct_positives;
    counters_[i].correct_negatives += other.counters_[i].correct_negatives;
  }
}

EvalReport finalize(const MetricCounters& counters, double threshold) {
  EvalReport report;
  report.threshold = threshold;
  double pred_sum = 0.0, bal_sum = 0.0;
  int bal_count = 0;
  for (int a = 0; a < counters.num_attributes(); ++a) {
    const auto& c = counters.at(a);
    if (c.total < 1) throw ShapeError("finalize: empty counters");
    AttributeResult r;
    r.prediction_accuracy =
        static_cast<double>(c.correct()) / static_cast<double>(c.total);
    if (c.positives > 0 && c.negatives > 0) {
      r.balanced_accuracy =
          (static_cast<double>(c.correct_positives) /
               static_cast<double>(c.positives) +
           static_cast<double>(c.correct_negatives) /
               static_cast<double>(c.negatives)) /
          2.0;
      bal_sum += *r.balanced_accuracy;
      ++bal_count;
    } else {
      ++report.balanced_excluded;
    }
    pred_sum += r.prediction_accuracy;
    report.per_attribute.push_back(r);
  }
  report.mean_prediction =
      pred_sum / static_cast<double>(counters.num_attributes());
  report.mean_balanced =
      bal_count > 0 ? bal_sum / static_cast<double>(bal_count) : 0.0;
  return report;
}

void EvalReport::write_csv(std::ostream& os,
                           const std::vector<std::string>& attr_names) const {
  os.precision(17);
  os << "index,name,pred_acc,bal_acc\n";
  for (std::size_t a = 0; a < per_attribute.size(); ++a) {
    const auto& r = per_attribute[a];
    os << (a + 1) << ","
       << (a < attr_names.size() ? attr_names[a] : "attr" + std::to_string(a + 1))
       << "," << r.prediction_accuracy << ",";
    if (r.balanced_accuracy)
      os << *r.balanced_accuracy;
    else
      os << "missing";
    os << "\n";
  }
  os << "MEAN,," << mean_prediction << "," << mean_balanced << "\n";
}

}  // namespace mgg

#include "mgg/train.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace mgg {

namespace {

struct Batch {
  std::vector<std::vector<double>> images;
  std::vector<std::vector<double>> labels;  // [attr][sample]
};

Batch gather(const Dataset& ds, const std::vector<std::size_t>& idx,
             std::size_t begin, std::size_t end, bool augment,
             std::mt19937_64* rng) {
  Batch b;
  const std::size_t n_attr = static_cast<std::size_t>(ds.num_attributes);
  b.labels.assign(n_attr, {});
  for (std::size_t i = begin; i < end; ++i) {
    b.images.push_back(ds.images[idx[i]]);
    if (augment)
      augment_flip(b.images.back(), ds.image_size, ds.image_size, 0.5, *rng);
    for (std::size_t a = 0; a < n_attr; ++a)
      b.labels[a].push_back(static_cast<double>(ds.labels[idx[i]][a]));
  }
  return b;
}

Tensor batch_input(MggModel& model, const Batch& b, int image_size) {
  std::vector<const std::vector<double>*> ptrs;
  for (const auto& img : b.images) ptrs.push_back(&img);
  return model.make_input(ptrs, image_size);
}

}  // namespace

TrainResult train_model(MggModel& model, const Dataset& train_set,
                        const TrainOptions& options) {
  if (options.schedule.empty())
    throw ShapeError("train: empty learning-rate schedule");
  if (options.batch_size < 1) throw ShapeError("train: batch size must be >= 1");
  if (train_set.size() == 0) throw DataError("train: empty training set");

  std::mt19937_64 rng(options.seed);
  SgdOptimizer opt(options.schedule.front().second, options.momentum);
  TrainResult result;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (const auto& [epochs, lr] : options.schedule) {
    opt.set_lr(lr);
    for (int e = 0; e < epochs; ++e) {
      std::shuffle(order.begin(), order.end(), rng);
      std::vector<double> term_sums;
      std::vector<std::string> term_labels;
      std::size_t steps = 0;
      for (std::size_t begin = 0; begin < order.size();
           begin += static_cast<std::size_t>(options.batch_size)) {
        const std::size_t end =
            std::min(order.size(),
                     begin + static_cast<std::size_t>(options.batch_size));
        Batch batch =
            gather(train_set, order, begin, end, options.augment, &rng);
        Tape tape;
        Tensor input = batch_input(model, batch, train_set.image_size);
        auto fwd = model.forward(tape, input, /*train=*/true);
        LossReport report;
        Tensor loss =
            total_loss(tape, fwd.preds, batch.labels, options.mode, &report);
        model.params().zero_grad();
        tape.backward(loss);
        opt.step(model.params());

        if (term_sums.empty()) {
          term_sums.assign(report.terms.size(), 0.0);
          for (const auto& t : report.terms) term_labels.push_back(t.label);
        }
        for (std::size_t i = 0; i < report.terms.size(); ++i)
          term_sums[i] += report.terms[i].value;
        ++steps;
      }
      LossReport epoch_report;
      for (std::size_t i = 0; i < term_sums.size(); ++i) {
        const double mean = term_sums[i] / static_cast<double>(steps);
        epoch_report.terms.push_back({term_labels[i], mean});
        epoch_report.total += mean;
      }
      result.epoch_reports.push_back(std::move(epoch_report));
    }
  }
  return result;
}

EvalReport evaluate(MggModel& model, const Dataset& eval_set, int batch_size,
                    double threshold) {
  if (eval_set.size() == 0) throw DataError("evaluate: empty dataset");
  MetricCounters counters(eval_set.num_attributes);
  std::vector<std::size_t> order(eval_set.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t begin = 0; begin < order.size();
       begin += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(
        order.size(), begin + static_cast<std::size_t>(batch_size));
    Batch batch = gather(eval_set, order, begin, end, false, nullptr);
    Tape tape;
    Tensor input = batch_input(model, batch, eval_set.image_size);
    auto fwd = model.forward(tape, input, /*train=*/false);
    for (int a = 0; a < eval_set.num_attributes; ++a) {
      const Tensor& prob = fwd.preds.fused[static_cast<std::size_t>(a)];
      for (std::size_t i = 0; i < end - begin; ++i)
        counters.accumulate(
            a, (*prob.data)[i],
            static_cast<int>(batch.labels[static_cast<std::size_t>(a)][i]),
            threshold);
    }
  }
  return finalize(counters, threshold);
}

}  // namespace mgg

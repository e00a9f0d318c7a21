#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "mgg/heads.hpp"

using namespace mgg;

namespace {

struct Fixture {
  GroupAssignment assignment;
  Heads heads;
  ParamStore params;
  int N, B;
  std::size_t batch;

  Fixture(int num_attrs, int num_groups, int num_blocks, std::size_t batch_,
          std::uint64_t seed)
      : assignment(GroupAssignment::contiguous(num_attrs, num_groups)),
        heads(&assignment, num_blocks,
              std::vector<std::size_t>(static_cast<std::size_t>(num_blocks),
                                       3),
              /*base_dim=*/5),
        N(num_attrs),
        B(num_blocks),
        batch(batch_) {
    Initializer init(seed);
    heads.init_params(params, init);
  }

  PredictionSet forward(Tape& tape, std::mt19937_64& rng) {
    std::vector<std::vector<Tensor>> gal, gcl;
    for (int b = 0; b < B; ++b) {
      gal.emplace_back();
      gcl.emplace_back();
      for (int g = 0; g < assignment.num_groups(); ++g) {
        gal.back().push_back(
            Tensor::from({batch, 3}, testing::random_values(batch * 3, rng)));
        gcl.back().push_back(
            Tensor::from({batch, 3}, testing::random_values(batch * 3, rng)));
      }
    }
    Tensor base =
        Tensor::from({batch, 5}, testing::random_values(batch * 5, rng));
    return heads.forward(tape, gal, gcl, base, params);
  }
};

}  // namespace

TEST_CASE("scalar loss identities") {
  CHECK(bce(0.5, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(bce(0.5, 0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(bce(0.8, 1.0) == doctest::Approx(-std::log(0.8)).epsilon(1e-12));

  // S=4, S_a=1, positive label: (3/4) * (-ln 0.8).
  CHECK(weighted_bce(0.8, 1.0, 4, 1) ==
        doctest::Approx(0.75 * -std::log(0.8)).epsilon(1e-12));
  // Balanced batch halves the plain loss for either label.
  for (double label : {0.0, 1.0}) {
    CHECK(weighted_bce(0.3, label, 10, 5) ==
          doctest::Approx(0.5 * bce(0.3, label)).epsilon(1e-12));
  }
  // Degenerate batches zero the prescribed term exactly.
  CHECK(weighted_bce(0.8, 1.0, 6, 6) == 0.0);
  CHECK(weighted_bce(0.8, 0.0, 6, 0) == 0.0);
}

TEST_CASE("head predictions are probabilities and fuse by averaging") {
  std::mt19937_64 rng(61);
  Fixture fx(6, 3, 2, 4, 71);
  Tape tape;
  auto preds = fx.forward(tape, rng);
  REQUIRE(preds.fused.size() == 6);
  REQUIRE(preds.base.size() == 6);
  REQUIRE(preds.gal.size() == 2);
  REQUIRE(preds.gcl.size() == 2);
  for (int a = 0; a < 6; ++a) {
    const auto slot = static_cast<std::size_t>(a);
    for (std::size_t n = 0; n < 4; ++n) {
      const double want =
          (preds.base[slot][n] + preds.gcl[0][slot][n] + preds.gcl[1][slot][n]) /
          3.0;
      CHECK(preds.fused[slot][n] == doctest::Approx(want).epsilon(1e-12));
      CHECK(preds.fused[slot][n] > 0.0);
      CHECK(preds.fused[slot][n] < 1.0);
    }
  }
}

TEST_CASE("loss report counts 2N(B+1) terms that sum to the total") {
  std::mt19937_64 rng(62);
  Fixture fx(6, 3, 2, 4, 72);
  Tape tape;
  auto preds = fx.forward(tape, rng);
  std::vector<std::vector<double>> labels(6, std::vector<double>(4, 0.0));
  labels[0] = {1, 0, 1, 0};
  labels[3] = {1, 1, 1, 0};
  LossReport report;
  Tensor loss = total_loss(tape, preds, labels, LossMode::Plain, &report);
  CHECK(report.terms.size() == 2u * 6u * 3u);  // 2N(B+1), N=6, B=2
  double sum = 0;
  for (const auto& t : report.terms) sum += t.value;
  CHECK(sum == doctest::Approx(report.total).epsilon(1e-9));
  CHECK(loss.item() == doctest::Approx(report.total).epsilon(1e-9));
  CHECK(report.terms.front().label == "bce:fused.a1");
  // Fixed order: fused block, then base, then per-block GAL, then GCL.
  CHECK(report.terms[6].label == "bce:base.a1");
  CHECK(report.terms[12].label == "bce:gal.b1.a1");
  CHECK(report.terms[24].label == "bce:gcl.b1.a1");
}

TEST_CASE("forcing every prediction to one half gives 2N(B+1) ln 2") {
  const int N = 40, B = 2;
  const std::size_t batch = 3;
  PredictionSet preds;
  auto half_vec = [&]() {
    return Tensor::full({batch}, 0.5);
  };
  for (int b = 0; b < B; ++b) {
    preds.gal.emplace_back();
    preds.gcl.emplace_back();
    for (int a = 0; a < N; ++a) {
      preds.gal.back().push_back(half_vec());
      preds.gcl.back().push_back(half_vec());
    }
  }
  for (int a = 0; a < N; ++a) {
    preds.base.push_back(half_vec());
    preds.fused.push_back(half_vec());
  }
  std::vector<std::vector<double>> labels(
      static_cast<std::size_t>(N), std::vector<double>(batch, 1.0));
  Tape tape;
  LossReport report;
  Tensor loss = total_loss(tape, preds, labels, LossMode::Plain, &report);
  CHECK(report.terms.size() == 240);
  CHECK(loss.item() ==
        doctest::Approx(240.0 * std::log(2.0)).epsilon(1e-6));
}

TEST_CASE("balanced mode uses batch counts and halves on balanced batches") {
  std::mt19937_64 rng(63);
  Fixture fx(4, 2, 1, 4, 73);
  Tape tape;
  auto preds = fx.forward(tape, rng);
  // Every attribute balanced: S_a = S/2.
  std::vector<std::vector<double>> labels(4, {1.0, 1.0, 0.0, 0.0});
  LossReport plain, balanced;
  Tensor lp = total_loss(tape, preds, labels, LossMode::Plain, &plain);
  Tensor lb = total_loss(tape, preds, labels, LossMode::Balanced, &balanced);
  CHECK(lb.item() == doctest::Approx(0.5 * lp.item()).epsilon(1e-9));
  CHECK(balanced.terms.front().label == "wbce:fused.a1");
}

TEST_CASE("base-only prediction set produces N loss terms") {
  std::mt19937_64 rng(64);
  Fixture fx(4, 2, 1, 3, 74);
  Tape tape;
  Tensor base =
      Tensor::from({3, 5}, testing::random_values(15, rng));
  auto preds = fx.heads.forward_base_only(tape, base, fx.params);
  CHECK(preds.gal.empty());
  CHECK(preds.gcl.empty());
  for (int a = 0; a < 4; ++a)
    for (std::size_t n = 0; n < 3; ++n)
      CHECK(preds.fused[static_cast<std::size_t>(a)][n] ==
            preds.base[static_cast<std::size_t>(a)][n]);
  std::vector<std::vector<double>> labels(4, std::vector<double>(3, 1.0));
  LossReport report;
  total_loss(tape, preds, labels, LossMode::Plain, &report);
  CHECK(report.terms.size() == 4);
}

TEST_CASE("head gradient check") {
  std::mt19937_64 rng(65);
  GroupAssignment assignment = GroupAssignment::contiguous(2, 2);
  Heads heads(&assignment, 1, {2}, 3);
  ParamStore params;
  Initializer init(75);
  heads.init_params(params, init);
  Tensor base = Tensor::from({2, 3}, testing::random_values(6, rng), true);
  std::vector<std::vector<double>> labels = {{1.0, 0.0}, {0.0, 0.0}};
  auto eval = [&]() {
    Tape t;
    auto preds = heads.forward_base_only(t, base, params);
    Tensor loss = total_loss(t, preds, labels, LossMode::Plain);
    return loss.item();
  };
  Tape tape;
  auto preds = heads.forward_base_only(tape, base, params);
  Tensor loss = total_loss(tape, preds, labels, LossMode::Plain);
  tape.backward(loss);
  Tensor& w = params.get("heads.a1.base.weight");
  CHECK(testing::max_rel_err(w.grad_ref(), testing::fd_gradient(w, eval)) <
        1e-5);
  CHECK(testing::max_rel_err(base.grad_ref(),
                             testing::fd_gradient(base, eval)) < 1e-5);
}

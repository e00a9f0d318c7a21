#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "mgg/tensor.hpp"

namespace mgg {

struct ParamError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Named parameter map preserving creation order (the documented
/// initialization and serialization order). Entries with requires_grad=false
/// are persistent state (batchnorm running stats), skipped by the optimizer.
class ParamStore {
 public:
  Tensor& create(const std::string& name, Shape shape,
                 bool requires_grad = true);
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  const std::vector<std::string>& names() const { return order_; }
  std::size_t size() const { return order_.size(); }

  void zero_grad();

  /// Checkpoint: one MGGT tensor file per parameter plus manifest.csv
  /// (name,filename). Directory is created if needed.
  void save(const std::string& dir) const;
  /// Loads into this store; every loaded name must exist with the same shape.
  void load(const std::string& dir);

 private:
  std::vector<std::string> order_;
  std::unordered_map<std::string, Tensor> params_;
};

/// Binary tensor file: magic "MGGT", u32 rank, u32 dims[rank],
/// little-endian f64 payload.
void save_tensor(const std::string& path, const Tensor& t);
Tensor load_tensor(const std::string& path);

/// All weight draws come from one seeded generator in creation order.
class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}

  /// U(-1/sqrt(fan_in), +1/sqrt(fan_in)).
  void fan_in_uniform(Tensor& t, std::size_t fan_in);

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

/// Plain SGD with momentum; gradients are zeroed after each step.
class SgdOptimizer {
 public:
  SgdOptimizer(double lr, double momentum) : lr_(lr), momentum_(momentum) {}

  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }

  void step(ParamStore& params);

 private:
  double lr_;
  double momentum_;
  std::unordered_map<std::string, std::vector<double>> velocity_;
};

}  // namespace mgg

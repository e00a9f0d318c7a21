#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mgg/model.hpp"
#include "mgg/train.hpp"

namespace mgg {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataConfig {
  // Either explicit train/val manifests, or one manifest plus split
  // fractions and a split seed.
  std::optional<std::string> train_manifest;
  std::optional<std::string> val_manifest;
  std::optional<std::string> manifest;
  std::vector<double> split_fractions = {0.8, 0.1, 0.1};
  std::uint64_t split_seed = 1;
};

struct RunConfig {
  ModelConfig model;
  int num_groups = 0;
  std::string groups = "default";  // "default" | "contiguous" | CSV path
  TrainOptions training;
  DataConfig data;
  std::string output_dir = "out";

  /// Flat JSON document; throws ConfigError with a field path on problems.
  static RunConfig load(const std::string& path);

  GroupAssignment make_assignment() const;
  MggModel make_model() const;
};

}  // namespace mgg

#include "mgg/config.hpp"

#include <fstream>

#include <json.hpp>

namespace mgg {

using nlohmann::json;

namespace {

json require(const json& j, const char* key, const char* where) {
  if (!j.contains(key))
    throw ConfigError(std::string("config: missing field ") + where + "." +
                      key);
  return j.at(key);
}

}  // namespace

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: parse error: ") + e.what());
  }

  RunConfig cfg;
  try {
    const json m = require(j, "model", "");
    const auto input = require(m, "input", "model").get<std::vector<int>>();
    if (input.size() != 3)
      throw ConfigError("config: model.input must be [channels, H, W]");
    cfg.model.backbone.in_channels = static_cast<std::size_t>(input[0]);
    cfg.model.backbone.height = static_cast<std::size_t>(input[1]);
    cfg.model.backbone.width = static_cast<std::size_t>(input[2]);
    for (const auto& b :
         require(m, "blocks", "model").get<std::vector<std::vector<int>>>()) {
      if (b.size() != 3)
        throw ConfigError(
            "config: each model.blocks entry is [channels, convs, stride]");
      cfg.model.backbone.blocks.push_back(
          {static_cast<std::size_t>(b[0]), b[1], b[2]});
    }
    cfg.model.backbone.tap_blocks =
        require(m, "taps", "model").get<std::vector<int>>();
    cfg.model.num_attributes = require(m, "num_attributes", "model").get<int>();
    cfg.num_groups = require(m, "num_groups", "model").get<int>();
    cfg.model.alpha = m.value("alpha", 0.5);
    cfg.groups = m.value("groups", std::string("default"));
    const std::string arch = m.value("arch", std::string("mgg"));
    if (arch != "mgg" && arch != "base-only")
      throw ConfigError("config: model.arch must be 'mgg' or 'base-only'");
    cfg.model.base_only = arch == "base-only";

    const json t = require(j, "training", "");
    const std::string mode = t.value("mode", std::string("plain"));
    if (mode != "plain" && mode != "balanced")
      throw ConfigError("config: training.mode must be 'plain' or 'balanced'");
    cfg.training.mode =
        mode == "balanced" ? LossMode::Balanced : LossMode::Plain;
    cfg.training.batch_size = t.value("batch_size", 32);
    cfg.training.schedule.clear();
    for (const auto& s : require(t, "schedule", "training")
                             .get<std::vector<std::vector<double>>>()) {
      if (s.size() != 2)
        throw ConfigError("config: schedule entries are [epochs, lr]");
      cfg.training.schedule.emplace_back(static_cast<int>(s[0]), s[1]);
    }
    cfg.training.momentum = t.value("momentum", 0.9);
    cfg.training.seed = t.value("seed", std::uint64_t{7});
    cfg.training.augment = t.value("augment", true);

    const json d = require(j, "data", "");
    if (d.contains("train_manifest"))
      cfg.data.train_manifest = d.at("train_manifest").get<std::string>();
    if (d.contains("val_manifest"))
      cfg.data.val_manifest = d.at("val_manifest").get<std::string>();
    if (d.contains("manifest"))
      cfg.data.manifest = d.at("manifest").get<std::string>();
    if (d.contains("split"))
      cfg.data.split_fractions = d.at("split").get<std::vector<double>>();
    cfg.data.split_seed = d.value("split_seed", std::uint64_t{1});
    if (!cfg.data.manifest &&
        !(cfg.data.train_manifest && cfg.data.val_manifest))
      throw ConfigError(
          "config: data needs either 'manifest' or both 'train_manifest' and "
          "'val_manifest'");

    cfg.output_dir = j.value("output_dir", std::string("out"));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  if (cfg.training.schedule.empty())
    throw ConfigError("config: training.schedule must be nonempty");
  if (cfg.training.batch_size < 1)
    throw ConfigError("config: training.batch_size must be >= 1");
  return cfg;
}

GroupAssignment RunConfig::make_assignment() const {
  if (groups == "default") {
    if (model.num_attributes != 40)
      throw ConfigError(
          "config: the default group table requires num_attributes=40; use "
          "'contiguous' or an assignment CSV");
    return GroupAssignment::default_celeba();
  }
  if (groups == "contiguous")
    return GroupAssignment::contiguous(model.num_attributes, num_groups);
  GroupAssignment a =
      GroupAssignment::load_csv(groups, model.num_attributes);
  const auto violations = validate(a, model.num_attributes);
  if (!violations.empty())
    throw ConfigError("config: assignment CSV is not a partition (" +
                      violations.front().kind + ": " +
                      violations.front().detail + ")");
  if (a.num_groups() != num_groups)
    throw ConfigError("config: assignment CSV has " +
                      std::to_string(a.num_groups()) + " groups, expected " +
                      std::to_string(num_groups));
  return a;
}

MggModel RunConfig::make_model() const {
  return MggModel(model, make_assignment());
}

}  // namespace mgg

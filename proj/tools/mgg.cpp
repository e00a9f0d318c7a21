#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mgg/config.hpp"
#include "mgg/data.hpp"
#include "mgg/gradcheck.hpp"
#include "mgg/groups.hpp"
#include "mgg/metrics.hpp"
#include "mgg/model.hpp"
#include "mgg/train.hpp"

namespace fs = std::filesystem;
using namespace mgg;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitCheckpoint = 5;

void write_text_atomic(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path().empty() ? "."
                                                    : path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    os << content;
    if (!os) throw DataError("cannot write " + path.string());
  }
  fs::rename(tmp, path);
}

Dataset load_from_manifest(const std::string& path) {
  return load_dataset(load_manifest(path));
}

struct LoadedData {
  Dataset train, val;
};

LoadedData load_data(const RunConfig& cfg) {
  LoadedData out;
  if (cfg.data.train_manifest && cfg.data.val_manifest) {
    out.train = load_from_manifest(*cfg.data.train_manifest);
    out.val = load_from_manifest(*cfg.data.val_manifest);
  } else {
    Dataset all = load_from_manifest(*cfg.data.manifest);
    const auto& f = cfg.data.split_fractions;
    if (f.size() != 3) throw ConfigError("config: data.split needs 3 values");
    auto parts = split(all, f[0], f[1], f[2], cfg.data.split_seed);
    out.train = std::move(parts.train);
    out.val = std::move(parts.val);
  }
  return out;
}

SyntheticSpec load_spec(const std::string& path) {
  if (path == "default") return SyntheticSpec::default_desk();
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open spec: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("spec parse error: ") + e.what());
  }
  SyntheticSpec spec;
  spec.image_size = j.value("image_size", 32);
  spec.num_attributes = j.value("num_attributes", 12);
  spec.num_groups = j.value("num_groups", 4);
  if (j.contains("positive_rates"))
    spec.positive_rates = j.at("positive_rates").get<std::vector<double>>();
  if (j.contains("correlations"))
    for (const auto& c :
         j.at("correlations").get<std::vector<std::vector<double>>>()) {
      if (c.size() != 3)
        throw ConfigError("spec: correlations entries are [u, v, strength]");
      spec.correlations.push_back(
          {static_cast<int>(c[0]), static_cast<int>(c[1]), c[2]});
    }
  spec.noise = j.value("noise", 0.05);
  spec.seed = j.value("seed", std::uint64_t{1});
  return spec;
}

std::vector<std::string> attribute_names(const RunConfig& cfg) {
  if (cfg.groups == "default") return AttributeCatalog::celeba40().names;
  std::vector<std::string> names;
  for (int a = 1; a <= cfg.model.num_attributes; ++a)
    names.push_back("attr" + std::to_string(a));
  return names;
}

int run_train(const std::string& config_path,
              std::optional<std::uint64_t> seed_override) {
  RunConfig cfg = RunConfig::load(config_path);
  if (seed_override) cfg.training.seed = *seed_override;
  LoadedData data = load_data(cfg);
  if (data.train.num_attributes != cfg.model.num_attributes)
    throw DataError("dataset has " +
                    std::to_string(data.train.num_attributes) +
                    " attributes, config expects " +
                    std::to_string(cfg.model.num_attributes));
  MggModel model = cfg.make_model();
  model.init_params(cfg.training.seed);

  TrainResult result = train_model(model, data.train, cfg.training);

  std::ostringstream log;
  log.precision(17);
  log << "epoch,term,value\n";
  for (std::size_t e = 0; e < result.epoch_reports.size(); ++e) {
    for (const auto& t : result.epoch_reports[e].terms)
      log << (e + 1) << "," << t.label << "," << t.value << "\n";
    log << (e + 1) << ",total," << result.epoch_reports[e].total << "\n";
  }
  fs::create_directories(cfg.output_dir);
  write_text_atomic(fs::path(cfg.output_dir) / "train_log.csv", log.str());
  model.params().save((fs::path(cfg.output_dir) / "checkpoint").string());

  EvalReport report = evaluate(model, data.val, cfg.training.batch_size);
  std::ostringstream ev;
  report.write_csv(ev, attribute_names(cfg));
  write_text_atomic(fs::path(cfg.output_dir) / "eval_val.csv", ev.str());
  std::cout << "trained " << result.epoch_reports.size()
            << " epochs; val mean prediction " << report.mean_prediction
            << ", mean balanced " << report.mean_balanced << "\n";
  return 0;
}

int run_eval(const std::string& config_path, const std::string& checkpoint,
             const std::string& manifest, const std::string& out_path) {
  RunConfig cfg = RunConfig::load(config_path);
  MggModel model = cfg.make_model();
  model.init_params(cfg.training.seed);
  try {
    model.params().load(checkpoint);
  } catch (const ParamError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckpoint;
  }
  Dataset ds = load_from_manifest(manifest);
  EvalReport report = evaluate(model, ds, cfg.training.batch_size);
  std::ostringstream os;
  report.write_csv(os, attribute_names(cfg));
  write_text_atomic(out_path, os.str());
  std::cout << "mean prediction " << report.mean_prediction
            << ", mean balanced " << report.mean_balanced;
  if (report.balanced_excluded > 0)
    std::cout << " (warning: " << report.balanced_excluded
              << " single-class attributes excluded from the balanced mean)";
  std::cout << "\n";
  return 0;
}

int run_export_attention(const std::string& config_path,
                         const std::string& checkpoint,
                         const std::string& manifest,
                         const std::vector<std::string>& sample_ids,
                         const std::string& out_dir) {
  RunConfig cfg = RunConfig::load(config_path);
  MggModel model = cfg.make_model();
  model.init_params(cfg.training.seed);
  try {
    model.params().load(checkpoint);
  } catch (const ParamError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckpoint;
  }
  Dataset ds = load_from_manifest(manifest);
  fs::create_directories(out_dir);
  for (const auto& id : sample_ids) {
    auto it = std::find(ds.ids.begin(), ds.ids.end(), id);
    if (it == ds.ids.end()) throw DataError("unknown sample id: " + id);
    const std::size_t idx =
        static_cast<std::size_t>(it - ds.ids.begin());
    Tape tape;
    Tensor input = model.make_input({&ds.images[idx]}, ds.image_size);
    auto fwd = model.forward(tape, input, /*train=*/false);
    for (std::size_t b = 0; b < fwd.masks.size(); ++b)
      for (std::size_t g = 0; g < fwd.masks[b].size(); ++g) {
        const Tensor& m = fwd.masks[b][g];
        std::ostringstream name;
        name << "mask_b" << (b + 1) << "_g" << (g + 1) << "_s"
             << (id.rfind('s', 0) == 0 ? id.substr(1) : id) << ".pgm";
        write_pgm((fs::path(out_dir) / name.str()).string(), *m.data,
                  static_cast<int>(m.shape[3]), static_cast<int>(m.shape[2]));
      }
  }
  std::cout << "exported masks for " << sample_ids.size() << " sample(s) to "
            << out_dir << "\n";
  return 0;
}

int run_export_affinity(const std::string& config_path,
                        const std::string& checkpoint,
                        const std::string& manifest,
                        const std::string& out_dir) {
  RunConfig cfg = RunConfig::load(config_path);
  MggModel model = cfg.make_model();
  model.init_params(cfg.training.seed);
  try {
    model.params().load(checkpoint);
  } catch (const ParamError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckpoint;
  }
  Dataset ds = load_from_manifest(manifest);
  GroupAssignment assignment = cfg.make_assignment();

  std::vector<std::vector<GraphCorrelation::Result>> per_block(
      static_cast<std::size_t>(model.num_blocks()));
  const int batch_size = cfg.training.batch_size;
  for (std::size_t begin = 0; begin < ds.size();
       begin += static_cast<std::size_t>(batch_size)) {
    const std::size_t end =
        std::min(ds.size(), begin + static_cast<std::size_t>(batch_size));
    std::vector<const std::vector<double>*> imgs;
    for (std::size_t i = begin; i < end; ++i) imgs.push_back(&ds.images[i]);
    Tape tape;
    Tensor input = model.make_input(imgs, ds.image_size);
    auto fwd = model.forward(tape, input, /*train=*/false);
    for (std::size_t b = 0; b < fwd.gcl.size(); ++b)
      per_block[b].push_back(std::move(fwd.gcl[b]));
  }
  fs::create_directories(out_dir);
  for (std::size_t b = 0; b < per_block.size(); ++b) {
    std::vector<double> raw;
    auto scaled = mean_affinity(per_block[b], assignment.num_groups(), &raw);
    const std::string stem =
        (fs::path(out_dir) / ("affinity_b" + std::to_string(b + 1))).string();
    write_affinity_csv(stem + ".csv", scaled, assignment.group_names());
    write_affinity_csv(stem + ".raw.csv", raw, assignment.group_names());
  }
  std::cout << "exported " << per_block.size() << " affinity matrices to "
            << out_dir << "\n";
  return 0;
}

int run_gen_data(const std::string& spec_path, int count,
                 const std::string& out_dir,
                 std::optional<std::uint64_t> seed_override) {
  SyntheticSpec spec = load_spec(spec_path);
  if (seed_override) spec.seed = *seed_override;
  auto manifest = generate_dataset(spec, count, out_dir);
  std::cout << "generated " << manifest.entries.size() << " samples in "
            << out_dir << "\n";
  return 0;
}

int run_gradcheck(int samples, bool corrupt,
                  std::optional<std::uint64_t> seed_override) {
  GradCheckOptions options;
  options.sample_count = samples;
  if (seed_override) options.seed = *seed_override;
  if (corrupt) options.corrupt_scale = 1.5;
  GradCheckResult result = gradcheck_tiny_model(options);
  std::cout.precision(6);
  std::cout << "gradcheck: " << result.checked
            << " parameters, max rel err " << result.max_rel_err << " ("
            << result.worst.parameter << "[" << result.worst.index
            << "]: analytic " << result.worst.analytic << ", numeric "
            << result.worst.numeric << ") -> "
            << (result.pass ? "PASS" : "FAIL") << "\n";
  return result.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-scale group and graph attribute recognition"};
  app.require_subcommand(1);

  std::string config_path, checkpoint, manifest, out_path, spec_path;
  std::vector<std::string> sample_ids;
  int count = 1000;
  int gc_samples = 120;
  bool corrupt = false;
  std::optional<std::uint64_t> seed;

  auto* train = app.add_subcommand("train", "Train a model from a config");
  train->add_option("--config", config_path, "Run config JSON")->required();
  train->add_option("--seed", seed, "Override the training seed");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval->add_option("--config", config_path, "Run config JSON")->required();
  eval->add_option("--checkpoint", checkpoint, "Checkpoint directory")
      ->required();
  eval->add_option("--manifest", manifest, "Dataset manifest CSV")->required();
  eval->add_option("--out", out_path, "Report CSV path")
      ->default_val("eval.csv");

  auto* exa = app.add_subcommand("export-attention",
                                 "Write group attention masks as PGM files");
  exa->add_option("--config", config_path)->required();
  exa->add_option("--checkpoint", checkpoint)->required();
  exa->add_option("--manifest", manifest)->required();
  exa->add_option("--samples", sample_ids, "Sample ids")->required();
  exa->add_option("--out", out_path, "Output directory")->default_val("masks");

  auto* exf = app.add_subcommand("export-affinity",
                                 "Write per-block group affinity CSVs");
  exf->add_option("--config", config_path)->required();
  exf->add_option("--checkpoint", checkpoint)->required();
  exf->add_option("--manifest", manifest)->required();
  exf->add_option("--out", out_path, "Output directory")
      ->default_val("affinity");

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  gen->add_option("--spec", spec_path, "Spec JSON path or 'default'")
      ->default_val("default");
  gen->add_option("--count", count, "Sample count")->required();
  gen->add_option("--out", out_path, "Output directory")->required();
  gen->add_option("--seed", seed, "Override the spec seed");

  auto* gc = app.add_subcommand(
      "gradcheck", "Finite-difference gradient check on the tiny model");
  gc->add_option("--samples", gc_samples, "Parameter coordinates to probe");
  gc->add_option("--seed", seed, "Sampling seed");
  gc->add_flag("--corrupt-backward", corrupt,
               "Negative control: scale analytic gradients so the check "
               "must fail");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return run_train(config_path, seed);
    if (eval->parsed())
      return run_eval(config_path, checkpoint, manifest, out_path);
    if (exa->parsed())
      return run_export_attention(config_path, checkpoint, manifest,
                                  sample_ids, out_path);
    if (exf->parsed())
      return run_export_affinity(config_path, checkpoint, manifest, out_path);
    if (gen->parsed()) return run_gen_data(spec_path, count, out_path, seed);
    if (gc->parsed()) return run_gradcheck(gc_samples, corrupt, seed);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const GroupError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

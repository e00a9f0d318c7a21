#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mgg/groups.hpp"
#include "mgg/tensor.hpp"

namespace mgg {

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Synthetic benchmark: K disjoint horizontal group bands (symmetric about
/// the vertical axis, so a horizontal flip preserves labels), one row stripe
/// per attribute inside its group's band. A positive attribute brightens its
/// stripe; labels are drawn through a Gaussian copula so cross-group pairs
/// can be correlated and per-attribute rates imbalanced.
struct SyntheticSpec {
  int image_size = 32;
  int num_attributes = 12;
  int num_groups = 4;
  std::vector<double> positive_rates;  // per attribute; default 0.5
  struct Correlation {
    int attr_u = 0, attr_v = 0;  // 1-based
    double strength = 0.0;       // latent correlation in [-1,1]
  };
  std::vector<Correlation> correlations;
  double noise = 0.05;
  std::uint64_t seed = 1;

  void check() const;

  /// Row span [first,last) of attribute a's stripe (1-based attribute).
  std::pair<int, int> stripe_rows(int attr) const;
  /// Column span of every group band.
  std::pair<int, int> band_cols() const;

  /// N=12, K=4, 32x32, two strongly correlated cross-group pairs, three
  /// rare attributes.
  static SyntheticSpec default_desk();
};

struct ManifestEntry {
  std::string id;
  std::string image_file;  // relative to the manifest's directory
  std::vector<int> labels;
};

struct DatasetManifest {
  std::string root;
  std::vector<ManifestEntry> entries;
};

struct Dataset {
  int image_size = 0;
  int num_attributes = 0;
  std::vector<std::string> ids;
  std::vector<std::vector<double>> images;  // row-major, values in [0,1]
  std::vector<std::vector<int>> labels;

  std::size_t size() const { return images.size(); }
};

/// 8-bit binary PGM (P5).
void write_pgm(const std::string& path, const std::vector<double>& image,
               int width, int height);
std::vector<double> read_pgm(const std::string& path, int& width, int& height);

/// Renders `count` samples into out_dir (images + manifest.csv + groups.csv);
/// deterministic for a fixed seed, with per-sample derived seeds.
DatasetManifest generate_dataset(const SyntheticSpec& spec, int count,
                                 const std::string& out_dir);

DatasetManifest load_manifest(const std::string& path);
Dataset load_dataset(const DatasetManifest& manifest);

struct SplitResult {
  Dataset train, val, test;
};
SplitResult split(const Dataset& dataset, double train_frac, double val_frac,
                  double test_frac, std::uint64_t seed);

void flip_horizontal(std::vector<double>& image, int width, int height);
/// Flip with probability p; labels are flip-invariant by construction.
void augment_flip(std::vector<double>& image, int width, int height, double p,
                  std::mt19937_64& rng);

/// Inverse standard normal CDF (Acklam's rational approximation).
double inverse_normal_cdf(double p);

}  // namespace mgg

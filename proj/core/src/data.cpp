#include "mgg/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace mgg {

namespace fs = std::filesystem;

void SyntheticSpec::check() const {
  if (image_size < 8) throw DataError("synthetic: image_size too small");
  if (num_groups < 1 || num_attributes < num_groups)
    throw DataError("synthetic: need 1 <= K <= N");
  if (!positive_rates.empty() &&
      static_cast<int>(positive_rates.size()) != num_attributes)
    throw DataError("synthetic: positive_rates must cover all attributes");
  for (double r : positive_rates)
    if (r <= 0.0 || r >= 1.0)
      throw DataError("synthetic: positive rates must be in (0,1)");
  for (const auto& c : correlations) {
    if (c.attr_u < 1 || c.attr_u > num_attributes || c.attr_v < 1 ||
        c.attr_v > num_attributes || c.attr_u == c.attr_v)
      throw DataError("synthetic: bad correlation pair");
    if (c.strength < -1.0 || c.strength > 1.0)
      throw DataError("synthetic: correlation strength outside [-1,1]");
  }
}

std::pair<int, int> SyntheticSpec::band_cols() const {
  const int margin = std::max(1, image_size / 16);
  return {margin, image_size - margin};
}

std::pair<int, int> SyntheticSpec::stripe_rows(int attr) const {
  // Group bands split the rows evenly; each band splits evenly again over
  // its attributes (contiguous assignment).
  const int g = (attr - 1) * num_groups / num_attributes;
  int first_attr = 1;
  while ((first_attr - 1) * num_groups / num_attributes != g) ++first_attr;
  int last_attr = first_attr;
  while (last_attr < num_attributes &&
         last_attr * num_groups / num_attributes == g)
    ++last_attr;
  const int in_group = attr - first_attr;
  const int group_count = last_attr - first_attr + 1;
  const int band_top = g * image_size / num_groups;
  const int band_bot = (g + 1) * image_size / num_groups;
  const int band_h = band_bot - band_top;
  return {band_top + in_group * band_h / group_count,
          band_top + (in_group + 1) * band_h / group_count};
}

SyntheticSpec SyntheticSpec::default_desk() {
  SyntheticSpec spec;
  spec.image_size = 32;
  spec.num_attributes = 12;
  spec.num_groups = 4;
  spec.positive_rates.assign(12, 0.5);
  spec.positive_rates[2] = 0.1;   // one rare attribute per-ish group
  spec.positive_rates[6] = 0.1;
  spec.positive_rates[10] = 0.1;
  spec.correlations = {{1, 5, 0.9}, {4, 10, 0.9}};  // cross-group pairs
  spec.noise = 0.08;
  spec.seed = 1;
  return spec;
}

double inverse_normal_cdf(double p) {
  if (p <= 0.0 || p >= 1.0)
    throw DataError("inverse_normal_cdf: p outside (0,1)");
  // Acklam's approximation, |relative error| < 1.15e-9.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1 - plow;
  double q, r;
  if (p < plow) {
    q = std::sqrt(-2 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
            c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  if (p > phigh) {
    q = std::sqrt(-2 * std::log(1 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
             c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  q = p - 0.5;
  r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r +
          a[5]) *
         q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

void write_pgm(const std::string& path, const std::vector<double>& image,
               int width, int height) {
  if (static_cast<int>(image.size()) != width * height)
    throw DataError("write_pgm: size mismatch");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write PGM: " + path);
  os << "P5\n" << width << " " << height << "\n255\n";
  for (double v : image) {
    const double clamped = std::clamp(v, 0.0, 1.0);
    os.put(static_cast<char>(
        static_cast<unsigned char>(std::lround(clamped * 255.0))));
  }
  if (!os) throw DataError("write failed: " + path);
}

std::vector<double> read_pgm(const std::string& path, int& width,
                             int& height) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot read PGM: " + path);
  std::string magic;
  int maxval = 0;
  is >> magic >> width >> height >> maxval;
  if (magic != "P5" || maxval != 255 || width < 1 || height < 1)
    throw DataError("unsupported PGM header: " + path);
  is.get();  // single whitespace after header
  std::vector<double> image(static_cast<std::size_t>(width) *
                            static_cast<std::size_t>(height));
  for (auto& v : image) {
    const int byte = is.get();
    if (byte == EOF) throw DataError("truncated PGM: " + path);
    v = static_cast<double>(byte) / 255.0;
  }
  return image;
}

namespace {

// Cholesky factor of the copula correlation matrix (identity plus the
// requested pair strengths).
std::vector<double> copula_cholesky(const SyntheticSpec& spec) {
  const std::size_t n = static_cast<std::size_t>(spec.num_attributes);
  std::vector<double> m(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) m[i * n + i] = 1.0;
  for (const auto& c : spec.correlations) {
    const std::size_t u = static_cast<std::size_t>(c.attr_u - 1);
    const std::size_t v = static_cast<std::size_t>(c.attr_v - 1);
    m[u * n + v] = c.strength;
    m[v * n + u] = c.strength;
  }
  std::vector<double> l(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = m[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= l[i * n + k] * l[j * n + k];
      if (i == j) {
        if (s <= 0.0)
          throw DataError(
              "synthetic: correlation matrix is not positive definite");
        l[i * n + i] = std::sqrt(s);
      } else {
        l[i * n + j] = s / l[j * n + j];
      }
    }
  }
  return l;
}

std::uint64_t sample_seed(std::uint64_t base, std::uint64_t id) {
  // splitmix64 of the id, xored into the base seed
  std::uint64_t z = id + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return base ^ (z ^ (z >> 31));
}

}  // namespace

DatasetManifest generate_dataset(const SyntheticSpec& spec, int count,
                                 const std::string& out_dir) {
  spec.check();
  if (count < 1) throw DataError("generate_dataset: count must be >= 1");
  fs::create_directories(out_dir);

  const int n = spec.num_attributes;
  const int size = spec.image_size;
  std::vector<double> rates = spec.positive_rates;
  if (rates.empty()) rates.assign(static_cast<std::size_t>(n), 0.5);
  std::vector<double> thresholds(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a)
    thresholds[static_cast<std::size_t>(a)] =
        inverse_normal_cdf(rates[static_cast<std::size_t>(a)]);
  const std::vector<double> chol = copula_cholesky(spec);

  const auto [col_lo, col_hi] = spec.band_cols();
  DatasetManifest manifest;
  manifest.root = out_dir;

  for (int s = 0; s < count; ++s) {
    std::mt19937_64 rng(
        sample_seed(spec.seed, static_cast<std::uint64_t>(s)));
    std::normal_distribution<double> normal(0.0, 1.0);

    // Correlated latent draws -> labels via copula thresholding.
    std::vector<double> g(static_cast<std::size_t>(n));
    for (auto& v : g) v = normal(rng);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) {
      double z = 0.0;
      for (int k = 0; k <= a; ++k)
        z += chol[static_cast<std::size_t>(a * n + k)] *
             g[static_cast<std::size_t>(k)];
      labels[static_cast<std::size_t>(a)] =
          z < thresholds[static_cast<std::size_t>(a)] ? 1 : 0;
    }

    std::vector<double> image(static_cast<std::size_t>(size) *
                                  static_cast<std::size_t>(size),
                              0.2);
    for (int a = 1; a <= n; ++a) {
      if (!labels[static_cast<std::size_t>(a - 1)]) continue;
      const auto [row_lo, row_hi] = spec.stripe_rows(a);
      for (int r = row_lo; r < row_hi; ++r)
        for (int c = col_lo; c < col_hi; ++c)
          image[static_cast<std::size_t>(r * size + c)] += 0.6;
    }
    if (spec.noise > 0.0) {
      std::normal_distribution<double> noise(0.0, spec.noise);
      for (auto& v : image) v += noise(rng);
    }
    for (auto& v : image) v = std::clamp(v, 0.0, 1.0);

    std::ostringstream id;
    id << "s" << std::setw(6) << std::setfill('0') << s;
    const std::string file = id.str() + ".pgm";
    write_pgm((fs::path(out_dir) / file).string(), image, size, size);
    manifest.entries.push_back({id.str(), file, labels});
  }

  // Manifest last, written atomically: readers never see a partial dataset.
  const fs::path manifest_path = fs::path(out_dir) / "manifest.csv";
  const fs::path tmp = manifest_path.string() + ".tmp";
  {
    std::ofstream os(tmp);
    if (!os) throw DataError("cannot write manifest in " + out_dir);
    for (const auto& e : manifest.entries) {
      os << e.id << "," << e.image_file;
      for (int b : e.labels) os << "," << b;
      os << "\n";
    }
  }
  fs::rename(tmp, manifest_path);
  GroupAssignment::contiguous(n, spec.num_groups)
      .save_csv((fs::path(out_dir) / "groups.csv").string());
  return manifest;
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open manifest: " + path);
  DatasetManifest manifest;
  manifest.root = fs::path(path).parent_path().string();
  if (manifest.root.empty()) manifest.root = ".";
  std::string line;
  int line_no = 0;
  std::size_t n_labels = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string field;
    ManifestEntry e;
    if (!std::getline(row, e.id, ',') || !std::getline(row, e.image_file, ','))
      throw DataError("malformed manifest row " + std::to_string(line_no));
    while (std::getline(row, field, ',')) {
      if (field != "0" && field != "1")
        throw DataError("bad label on manifest row " +
                        std::to_string(line_no) + ": '" + field + "'");
      e.labels.push_back(field == "1" ? 1 : 0);
    }
    if (e.labels.empty())
      throw DataError("no labels on manifest row " + std::to_string(line_no));
    if (n_labels == 0) n_labels = e.labels.size();
    if (e.labels.size() != n_labels)
      throw DataError("label width mismatch on manifest row " +
                      std::to_string(line_no));
    manifest.entries.push_back(std::move(e));
  }
  if (manifest.entries.empty()) throw DataError("empty manifest: " + path);
  return manifest;
}

Dataset load_dataset(const DatasetManifest& manifest) {
  Dataset ds;
  ds.num_attributes = static_cast<int>(manifest.entries[0].labels.size());
  for (const auto& e : manifest.entries) {
    int w = 0, h = 0;
    auto image = read_pgm((fs::path(manifest.root) / e.image_file).string(),
                          w, h);
    if (w != h) throw DataError("non-square image: " + e.image_file);
    if (ds.image_size == 0) ds.image_size = w;
    if (w != ds.image_size)
      throw DataError("image size mismatch: " + e.image_file);
    ds.ids.push_back(e.id);
    ds.images.push_back(std::move(image));
    ds.labels.push_back(e.labels);
  }
  return ds;
}

SplitResult split(const Dataset& dataset, double train_frac, double val_frac,
                  double test_frac, std::uint64_t seed) {
  const double sum = train_frac + val_frac + test_frac;
  if (std::abs(sum - 1.0) > 1e-9)
    throw DataError("split: fractions must sum to 1");
  const std::size_t n = dataset.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t n_train =
      static_cast<std::size_t>(train_frac * static_cast<double>(n));
  const std::size_t n_val =
      static_cast<std::size_t>(val_frac * static_cast<double>(n));

  SplitResult out;
  auto push = [&](Dataset& d, std::size_t idx) {
    d.image_size = dataset.image_size;
    d.num_attributes = dataset.num_attributes;
    d.ids.push_back(dataset.ids[idx]);
    d.images.push_back(dataset.images[idx]);
    d.labels.push_back(dataset.labels[idx]);
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (i < n_train)
      push(out.train, order[i]);
    else if (i < n_train + n_val)
      push(out.val, order[i]);
    else
      push(out.test, order[i]);
  }
  return out;
}

void flip_horizontal(std::vector<double>& image, int width, int height) {
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width / 2; ++c)
      std::swap(image[static_cast<std::size_t>(r * width + c)],
                image[static_cast<std::size_t>(r * width + width - 1 - c)]);
}

void augment_flip(std::vector<double>& image, int width, int height, double p,
                  std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (u(rng) < p) flip_horizontal(image, width, height);
}

}  // namespace mgg

#include "mgg/params.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace mgg {

namespace fs = std::filesystem;

Tensor& ParamStore::create(const std::string& name, Shape shape,
                           bool requires_grad) {
  if (params_.count(name)) throw ParamError("duplicate parameter: " + name);
  order_.push_back(name);
  auto [it, ok] =
      params_.emplace(name, Tensor::zeros(std::move(shape), requires_grad));
  (void)ok;
  return it->second;
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ParamError("unknown parameter: " + name);
  return it->second;
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ParamError("unknown parameter: " + name);
  return it->second;
}

bool ParamStore::contains(const std::string& name) const {
  return params_.count(name) != 0;
}

void ParamStore::zero_grad() {
  for (const auto& name : order_) params_.at(name).zero_grad();
}

namespace {

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f64_le(std::ostream& os, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

double read_f64_le(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

std::string tensor_filename(std::size_t index) {
  std::ostringstream os;
  os << "t" << index << ".mggt";
  return os.str();
}

}  // namespace

void save_tensor(const std::string& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ParamError("cannot write tensor file: " + path);
  os.write("MGGT", 4);
  write_u32(os, static_cast<std::uint32_t>(t.shape.size()));
  for (std::size_t d : t.shape) write_u32(os, static_cast<std::uint32_t>(d));
  for (double v : *t.data) write_f64_le(os, v);
  if (!os) throw ParamError("write failed: " + path);
}

Tensor load_tensor(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParamError("cannot read tensor file: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "MGGT", 4) != 0)
    throw ParamError("bad magic in tensor file: " + path);
  const std::uint32_t rank = read_u32(is);
  if (rank > 8) throw ParamError("implausible rank in tensor file: " + path);
  Shape shape(rank);
  for (auto& d : shape) d = read_u32(is);
  Tensor t = Tensor::zeros(shape);
  for (auto& v : *t.data) v = read_f64_le(is);
  if (!is) throw ParamError("truncated tensor file: " + path);
  return t;
}

void ParamStore::save(const std::string& dir) const {
  // Write into a sibling temp dir, then rename — no partial checkpoints.
  fs::path target(dir);
  fs::path tmp = target;
  tmp += ".tmp";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  std::ofstream manifest(tmp / "manifest.csv");
  if (!manifest) throw ParamError("cannot write checkpoint manifest");
  for (std::size_t i = 0; i < order_.size(); ++i) {
    const std::string file = tensor_filename(i);
    save_tensor((tmp / file).string(), params_.at(order_[i]));
    manifest << order_[i] << "," << file << "\n";
  }
  manifest.close();
  fs::remove_all(target);
  fs::rename(tmp, target);
}

void ParamStore::load(const std::string& dir) {
  fs::path root(dir);
  std::ifstream manifest(root / "manifest.csv");
  if (!manifest)
    throw ParamError("cannot read checkpoint manifest in " + dir);
  std::string line;
  std::size_t loaded = 0;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw ParamError("malformed manifest line: " + line);
    const std::string name = line.substr(0, comma);
    const std::string file = line.substr(comma + 1);
    Tensor t = load_tensor((root / file).string());
    Tensor& dst = get(name);
    if (dst.shape != t.shape)
      throw ParamError("checkpoint shape mismatch for " + name + ": have " +
                       shape_str(dst.shape) + ", file has " +
                       shape_str(t.shape));
    *dst.data = *t.data;
    ++loaded;
  }
  if (loaded != order_.size())
    throw ParamError("checkpoint covers " + std::to_string(loaded) + " of " +
                     std::to_string(order_.size()) + " parameters");
}

void Initializer::fan_in_uniform(Tensor& t, std::size_t fan_in) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : *t.data) v = dist(rng_);
}

void SgdOptimizer::step(ParamStore& params) {
  for (const auto& name : params.names()) {
    Tensor& p = params.get(name);
    if (!p.requires_grad) continue;
    if (!p.grad)
      throw ParamError("sgd_step: parameter has no gradient: " + name);
    auto& v = velocity_[name];
    if (v.empty()) v.assign(p.size(), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
      v[i] = momentum_ * v[i] + (*p.grad)[i];
      (*p.data)[i] -= lr_ * v[i];
    }
    p.zero_grad();
  }
}

}  // namespace mgg

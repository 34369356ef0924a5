#include "ctxgrid/params.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace ctxgrid::ad {

int ParamStore::add(const std::string& name, int rows, int cols) {
  if (by_name_.count(name)) throw std::invalid_argument("duplicate parameter: " + name);
  Entry e;
  e.name = name;
  e.value = Eigen::MatrixXd::Zero(rows, cols);
  e.grad = Eigen::MatrixXd::Zero(rows, cols);
  e.m1 = Eigen::MatrixXd::Zero(rows, cols);
  e.m2 = Eigen::MatrixXd::Zero(rows, cols);
  entries_.push_back(std::move(e));
  int id = static_cast<int>(entries_.size()) - 1;
  by_name_[name] = id;
  return id;
}

int ParamStore::find(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? -1 : it->second;
}

int ParamStore::require(const std::string& name) const {
  int id = find(name);
  if (id < 0) throw std::invalid_argument("missing parameter: " + name);
  return id;
}

int64_t ParamStore::total_params() const {
  int64_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& e : entries_) e.grad.setZero();
}

double ParamStore::grad_global_norm() const {
  double sq = 0.0;
  for (const auto& e : entries_) sq += e.grad.squaredNorm();
  return std::sqrt(sq);
}

void ParamStore::clip_global_norm(double max_norm) {
  if (max_norm <= 0.0) return;
  const double norm = grad_global_norm();
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& e : entries_) e.grad *= s;
  }
}

void ParamStore::adam_update(const AdamConfig& cfg) {
  for (const auto& e : entries_) {
    if (!e.grad.allFinite())
      throw std::runtime_error("non-finite gradient in parameter '" + e.name + "'");
  }
  clip_global_norm(cfg.clip);
  ++adam_step_;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(adam_step_));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(adam_step_));
  for (auto& e : entries_) {
    e.m1 = cfg.beta1 * e.m1 + (1.0 - cfg.beta1) * e.grad;
    e.m2 = cfg.beta2 * e.m2 + (1.0 - cfg.beta2) * e.grad.cwiseProduct(e.grad);
    e.value.array() -=
        cfg.lr * (e.m1.array() / bc1) / ((e.m2.array() / bc2).sqrt() + cfg.eps);
    e.grad.setZero();
  }
}

namespace {

constexpr char kMagic[8] = {'C', 'T', 'X', 'C', 'K', 'P', 'T', '1'};

void write_u32(std::ofstream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

uint32_t read_u32(std::ifstream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& store,
                     const std::string& meta_json) {
  namespace fs = std::filesystem;
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + tmp);
    out.write(kMagic, sizeof(kMagic));
    write_u32(out, static_cast<uint32_t>(meta_json.size()));
    out.write(meta_json.data(), static_cast<std::streamsize>(meta_json.size()));
    write_u32(out, static_cast<uint32_t>(store.count()));
    for (int i = 0; i < store.count(); ++i) {
      const auto& e = store.entry(i);
      write_u32(out, static_cast<uint32_t>(e.name.size()));
      out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
      write_u32(out, static_cast<uint32_t>(e.value.rows()));
      write_u32(out, static_cast<uint32_t>(e.value.cols()));
      for (Eigen::Index r = 0; r < e.value.rows(); ++r) {
        for (Eigen::Index c = 0; c < e.value.cols(); ++c) {
          const double v = e.value(r, c);
          out.write(reinterpret_cast<const char*>(&v), sizeof(v));
        }
      }
    }
    if (!out) throw std::runtime_error("short write on checkpoint: " + tmp);
  }
  fs::rename(tmp, path);
}

std::string load_checkpoint(const std::string& path, ParamStore& store) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("bad checkpoint magic in " + path);
  const uint32_t meta_len = read_u32(in);
  std::string meta(meta_len, '\0');
  in.read(meta.data(), meta_len);
  const uint32_t n_params = read_u32(in);
  for (uint32_t p = 0; p < n_params; ++p) {
    const uint32_t name_len = read_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const uint32_t rows = read_u32(in);
    const uint32_t cols = read_u32(in);
    int id = store.find(name);
    if (id < 0) id = store.add(name, static_cast<int>(rows), static_cast<int>(cols));
    auto& e = store.entry(id);
    if (e.value.rows() != static_cast<Eigen::Index>(rows) ||
        e.value.cols() != static_cast<Eigen::Index>(cols))
      throw std::runtime_error("checkpoint shape mismatch for '" + name + "' in " + path);
    for (uint32_t r = 0; r < rows; ++r) {
      for (uint32_t c = 0; c < cols; ++c) {
        double v = 0;
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        e.value(r, c) = v;
      }
    }
  }
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  return meta;
}

}  // namespace ctxgrid::ad

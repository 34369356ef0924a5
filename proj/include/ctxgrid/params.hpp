#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace ctxgrid::ad {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip = 1.0;  // global gradient-norm clip; <= 0 disables
};

// Named dense parameters with grad and Adam moment slots. Vectors are stored
// as n x 1 matrices so everything shares one layout.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Eigen::MatrixXd value, grad, m1, m2;
  };

  int add(const std::string& name, int rows, int cols);
  int find(const std::string& name) const;  // -1 if absent
  int require(const std::string& name) const;

  Entry& entry(int id) { return entries_[id]; }
  const Entry& entry(int id) const { return entries_[id]; }
  int count() const { return static_cast<int>(entries_.size()); }
  int64_t total_params() const;

  void zero_grads();
  double grad_global_norm() const;
  // Scales all grads so the global norm is at most max_norm.
  void clip_global_norm(double max_norm);

  // Global-norm clip followed by a bias-corrected adaptive-moment update;
  // clears grads afterwards. Throws std::runtime_error on non-finite grads.
  void adam_update(const AdamConfig& cfg);

  int64_t adam_step() const { return adam_step_; }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, int> by_name_;
  int64_t adam_step_ = 0;
};

// Versioned binary checkpoint: magic, a JSON metadata header, then a flat
// list of (name, rows, cols, row-major float64 data). See README for the
// exact byte layout.
void save_checkpoint(const std::string& path, const ParamStore& store,
                     const std::string& meta_json);
std::string load_checkpoint(const std::string& path, ParamStore& store);  // returns meta JSON

}  // namespace ctxgrid::ad

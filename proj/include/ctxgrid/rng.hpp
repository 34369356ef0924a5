#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace ctxgrid {

// Seeded random stream. All draws go through explicit helpers built on
// mt19937_64 so sequences are identical across platforms and compilers
// (std::uniform_* distributions are implementation-defined and avoided).
class RngStream {
 public:
  // Named sub-streams so parameter init, action sampling and probe
  // collection draw from independent sequences for the same run seed.
  enum class Purpose : uint64_t {
    Init = 0x9e3779b97f4a7c15ull,
    Action = 0xbf58476d1ce4e5b9ull,
    Probe = 0x94d049bb133111ebull,
    Test = 0xd6e8feb86659fd93ull,
  };

  RngStream(uint64_t seed, Purpose purpose)
      : engine_(mix(seed ^ static_cast<uint64_t>(purpose))) {}

  explicit RngStream(uint64_t seed) : RngStream(seed, Purpose::Test) {}

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Index in [0, n).
  int uniform_int(int n) { return static_cast<int>(engine_() % static_cast<uint64_t>(n)); }

  // Draws from a discrete distribution by inverse CDF walk. Probabilities
  // are assumed nonnegative; any numerical shortfall falls through to the
  // last index.
  int categorical(const Eigen::VectorXd& probs) {
    double u = uniform();
    double acc = 0.0;
    for (int i = 0; i + 1 < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    return static_cast<int>(probs.size()) - 1;
  }

  void fill_uniform(Eigen::Ref<Eigen::MatrixXd> out, double lo, double hi) {
    for (Eigen::Index r = 0; r < out.rows(); ++r)
      for (Eigen::Index c = 0; c < out.cols(); ++c) out(r, c) = uniform(lo, hi);
  }

  uint64_t raw() { return engine_(); }

 private:
  // splitmix64 finalizer; decorrelates nearby seeds before seeding the engine.
  static uint64_t mix(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  std::mt19937_64 engine_;
};

}  // namespace ctxgrid

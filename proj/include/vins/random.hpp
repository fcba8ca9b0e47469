#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace vins {

/// SplitMix64 finalizer, used to derive independent stream seeds from a run
/// seed and a stream tag.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double normal(double sigma) { return sigma * normal_(engine_); }
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
  }
  Eigen::Vector3d normal3(const Eigen::Vector3d& sigma) {
    Eigen::Vector3d v;
    for (int i = 0; i < 3; ++i) {
      v[i] = sigma[i] * normal_(engine_);
    }
    return v;
  }
  Eigen::Vector3d normal3(double sigma) { return normal3(Eigen::Vector3d::Constant(sigma)); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace vins

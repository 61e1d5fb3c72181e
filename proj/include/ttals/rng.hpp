#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace ttals {

/// Seedable, splittable 64-bit generator. A stream is identified by its seed
/// and the path of split() ids that produced it, so child streams are
/// reproducible regardless of which thread consumes them.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : path_{seed} { reseed(); }

  Rng split(std::uint64_t stream) const {
    Rng child(*this);
    child.path_.push_back(stream);
    child.reseed();
    return child;
  }

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform() { return std::generate_canonical<double, 64>(engine_); }
  /// Uniform on [0, n).
  std::uint64_t uniform_int(std::uint64_t n) { return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_); }
  double normal() { return normal_(engine_); }

 private:
  void reseed() {
    std::vector<std::uint32_t> words;
    for (std::uint64_t w : path_) {
      words.push_back(static_cast<std::uint32_t>(w));
      words.push_back(static_cast<std::uint32_t>(w >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    engine_.seed(seq);
    normal_.reset();
  }

  std::vector<std::uint64_t> path_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace ttals

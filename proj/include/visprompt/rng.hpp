#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace visprompt {

// Seeded random source. Copying an Rng copies its full state, so a copy
// replays exactly the draws the original would have produced. Parallel
// callers take child() streams instead of sharing one instance.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  // Independent generator derived from (seed, stream index).
  Rng child(std::uint64_t stream) const;

  std::uint64_t next_u64();
  // Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  double normal(double mean, double stddev);
  // Uniform over {0, ..., n-1}; n must be positive.
  std::size_t uniform_index(std::size_t n);
  bool bernoulli(double p);
  // Standard Gumbel(0, 1) draw: -log(-log(u)).
  double gumbel();

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace visprompt

#include "visprompt/rng.hpp"

#include <cmath>

#include "visprompt/error.hpp"

namespace visprompt {
namespace {

// splitmix64 finalizer; spreads (seed, stream) pairs over the engine seed space.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(mix(seed) ^ mix(stream + 0x632be59bd9b4e019ULL)) {}

Rng Rng::child(std::uint64_t stream) const {
  return Rng(mix(seed_ ^ mix(stream_)), stream + 1);
}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() {
  // 53 random bits, shifted by half an ulp so that 0 is never returned.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() { return normal_(engine_); }

double Rng::normal(double mean, double stddev) { return mean + stddev * normal(); }

std::size_t Rng::uniform_index(std::size_t n) {
  if (n == 0) fail(ErrorCode::InvalidArgument, "uniform_index: n must be positive");
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

bool Rng::bernoulli(double p) { return uniform() < p; }

double Rng::gumbel() { return -std::log(-std::log(uniform())); }

}  // namespace visprompt

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "visprompt/rng.hpp"

namespace visprompt {

// Fixed-dimension real vector shared by text prompts, visual prompt rows
// and region features. Finiteness is checked at I/O boundaries through
// all_finite(); arithmetic helpers below check dimensions.
class Embedding {
 public:
  Embedding() = default;
  explicit Embedding(std::size_t dim, double fill = 0.0) : values_(dim, fill) {}
  explicit Embedding(std::vector<double> values) : values_(std::move(values)) {}
  Embedding(std::initializer_list<double> values) : values_(values) {}

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  const std::vector<double>& raw() const noexcept { return values_; }

  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  bool all_finite() const noexcept;

  bool operator==(const Embedding&) const = default;

 private:
  std::vector<double> values_;
};

// Per-dimension Normal prior. sigma holds standard deviations, not variances.
struct GaussianPrior {
  Embedding mu;
  Embedding sigma;

  std::size_t dim() const noexcept { return mu.size(); }
};

void require_same_dim(const Embedding& a, const Embedding& b, const char* context);

double dot(const Embedding& a, const Embedding& b);
double dot(std::span<const double> a, std::span<const double> b);
double norm(const Embedding& a);
// Throws on zero-norm input.
double cosine(const Embedding& a, const Embedding& b);
Embedding normalized(const Embedding& a);

// y += alpha * x
void axpy(double alpha, const Embedding& x, Embedding& y);
Embedding scaled(const Embedding& a, double factor);

Embedding mean_of_set(std::span<const Embedding> embeddings);

// Per-dimension mean and population standard deviation (divides by B).
GaussianPrior estimate_gaussian_prior(std::span<const Embedding> embeddings);

std::vector<Embedding> sample_gaussian(const GaussianPrior& prior, std::size_t n, Rng& rng);

}  // namespace visprompt

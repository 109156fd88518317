#include "visprompt/embedding.hpp"

#include <cmath>
#include <string>

#include "visprompt/error.hpp"

namespace visprompt {

bool Embedding::all_finite() const noexcept {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void require_same_dim(const Embedding& a, const Embedding& b, const char* context) {
  if (a.size() != b.size()) {
    fail(ErrorCode::DimensionMismatch, std::string(context) + ": dimension " +
                                           std::to_string(a.size()) + " vs " +
                                           std::to_string(b.size()));
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    fail(ErrorCode::DimensionMismatch, "dot: dimension " + std::to_string(a.size()) + " vs " +
                                           std::to_string(b.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

double dot(const Embedding& a, const Embedding& b) { return dot(a.values(), b.values()); }

double norm(const Embedding& a) { return std::sqrt(dot(a, a)); }

double cosine(const Embedding& a, const Embedding& b) {
  require_same_dim(a, b, "cosine");
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) fail(ErrorCode::InvalidArgument, "cosine: zero-norm input");
  return dot(a, b) / (na * nb);
}

Embedding normalized(const Embedding& a) {
  const double n = norm(a);
  if (n == 0.0) fail(ErrorCode::InvalidArgument, "normalized: zero-norm input");
  return scaled(a, 1.0 / n);
}

void axpy(double alpha, const Embedding& x, Embedding& y) {
  require_same_dim(x, y, "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

Embedding scaled(const Embedding& a, double factor) {
  Embedding out = a;
  for (double& v : out.values()) v *= factor;
  return out;
}

Embedding mean_of_set(std::span<const Embedding> embeddings) {
  if (embeddings.empty()) fail(ErrorCode::EmptyInput, "mean_of_set: empty input");
  Embedding sum(embeddings.front().size());
  for (const auto& e : embeddings) axpy(1.0, e, sum);
  const double inv = 1.0 / static_cast<double>(embeddings.size());
  for (double& v : sum.values()) v *= inv;
  return sum;
}

GaussianPrior estimate_gaussian_prior(std::span<const Embedding> embeddings) {
  if (embeddings.empty()) fail(ErrorCode::EmptyInput, "estimate_gaussian_prior: empty input");
  GaussianPrior prior{mean_of_set(embeddings), Embedding(embeddings.front().size())};
  for (const auto& e : embeddings) {
    for (std::size_t d = 0; d < e.size(); ++d) {
      const double diff = e[d] - prior.mu[d];
      prior.sigma[d] += diff * diff;
    }
  }
  const double inv = 1.0 / static_cast<double>(embeddings.size());
  for (double& s : prior.sigma.values()) s = std::sqrt(s * inv);
  return prior;
}

std::vector<Embedding> sample_gaussian(const GaussianPrior& prior, std::size_t n, Rng& rng) {
  if (n == 0) fail(ErrorCode::InvalidArgument, "sample_gaussian: n must be at least 1");
  require_same_dim(prior.mu, prior.sigma, "sample_gaussian");
  std::vector<Embedding> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Embedding e(prior.dim());
    for (std::size_t d = 0; d < prior.dim(); ++d) {
      e[d] = prior.mu[d] + prior.sigma[d] * rng.normal();
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace visprompt

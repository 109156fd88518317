#include "visprompt/scoring.hpp"

#include <algorithm>
#include <cmath>

#include "visprompt/error.hpp"

namespace visprompt {

CategorySlot visual_slot(const VisualPrompt& prompt) {
  return {SlotKind::VisualPrompt, prompt.category_id, prompt.vectors};
}

CategorySlot negative_slot(const Embedding& text) {
  return {SlotKind::NegativeText, -1, std::span<const Embedding>(&text, 1)};
}

std::vector<double> similarity_vector(const Embedding& region_feature,
                                      std::span<const Embedding> rows) {
  std::vector<double> w(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) w[k] = dot(region_feature, rows[k]);
  return w;
}

std::vector<double> similarity_vector(const Embedding& region_feature, const VisualPrompt& prompt) {
  return similarity_vector(region_feature, std::span<const Embedding>(prompt.vectors));
}

GumbelScore gumbel_soft_score(std::span<const double> w, std::span<const double> gumbel_noise,
                              double tau) {
  if (!(tau > 0.0)) fail(ErrorCode::InvalidArgument, "gumbel score: tau must be positive");
  if (w.empty()) fail(ErrorCode::EmptyInput, "gumbel score: empty similarity vector");
  if (gumbel_noise.size() != w.size()) {
    fail(ErrorCode::DimensionMismatch, "gumbel score: noise length differs from similarity length");
  }
  GumbelScore out;
  out.weights.resize(w.size());
  double peak = -INFINITY;
  for (std::size_t k = 0; k < w.size(); ++k) {
    out.weights[k] = (w[k] + gumbel_noise[k]) / tau;
    peak = std::max(peak, out.weights[k]);
  }
  double total = 0.0;
  for (double& x : out.weights) {
    x = std::exp(x - peak);
    total += x;
  }
  for (std::size_t k = 0; k < w.size(); ++k) {
    out.weights[k] /= total;
    out.score += out.weights[k] * w[k];
  }
  // Rounding can push a convex combination a hair outside [min, max].
  const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
  out.score = std::clamp(out.score, *lo, *hi);
  return out;
}

GumbelScore score_train(std::span<const double> w, double tau, Rng& rng) {
  if (!(tau > 0.0)) fail(ErrorCode::InvalidArgument, "score_train: tau must be positive");
  std::vector<double> noise(w.size());
  for (double& g : noise) g = rng.gumbel();
  return gumbel_soft_score(w, noise, tau);
}

double score_eval(std::span<const double> w) {
  if (w.empty()) fail(ErrorCode::EmptyInput, "score_eval: empty similarity vector");
  return *std::max_element(w.begin(), w.end());
}

std::vector<double> gumbel_score_gradient(std::span<const double> w,
                                          std::span<const double> weights, double tau) {
  if (w.size() != weights.size()) {
    fail(ErrorCode::DimensionMismatch, "gumbel_score_gradient: length mismatch");
  }
  double score = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) score += weights[k] * w[k];
  // sum_k weights_k W_k (delta_km - weights_m) = weights_m * (W_m - S)
  std::vector<double> grad(w.size());
  for (std::size_t m = 0; m < w.size(); ++m) {
    grad[m] = weights[m] + weights[m] * (w[m] - score) / tau;
  }
  return grad;
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

DetectionResult detector_forward(const ImageSample& image, std::span<const CategorySlot> slots,
                                 ScoreMode mode, double tau, Rng* rng) {
  if (slots.empty()) fail(ErrorCode::InvalidArgument, "detector_forward: empty slot list");
  if (mode == ScoreMode::Train) {
    if (rng == nullptr) fail(ErrorCode::InvalidArgument, "detector_forward: train mode needs an rng");
    if (!(tau > 0.0)) fail(ErrorCode::InvalidArgument, "detector_forward: tau must be positive");
  }
  DetectionResult result;
  result.image_id = image.id;
  result.proposals.reserve(image.proposals.size());
  for (const auto& proposal : image.proposals) {
    ProposalScores scores;
    scores.box = proposal.box;
    scores.slots.reserve(slots.size());
    for (const auto& slot : slots) {
      SlotScore s;
      s.similarities = similarity_vector(proposal.feature, slot.rows);
      if (mode == ScoreMode::Train) {
        GumbelScore g = score_train(s.similarities, tau, *rng);
        s.score = g.score;
        s.weights = std::move(g.weights);
      } else {
        s.score = score_eval(s.similarities);
      }
      s.probability = logistic(s.score);
      scores.slots.push_back(std::move(s));
    }
    result.proposals.push_back(std::move(scores));
  }
  return result;
}

}  // namespace visprompt

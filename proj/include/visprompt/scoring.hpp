#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "visprompt/dataset.hpp"
#include "visprompt/embedding.hpp"
#include "visprompt/prompt_builder.hpp"
#include "visprompt/rng.hpp"

namespace visprompt {

enum class ScoreMode { Train, Eval };

enum class SlotKind { VisualPrompt, NegativeText };

// One entry in the prompt list fed to the detector. Non-owning: `rows`
// views either a visual prompt's vectors or a single negative text
// embedding, which then behaves as an N = 1 prompt.
struct CategorySlot {
  SlotKind kind = SlotKind::VisualPrompt;
  CategoryId category_id = -1;
  std::span<const Embedding> rows;
};

CategorySlot visual_slot(const VisualPrompt& prompt);
CategorySlot negative_slot(const Embedding& text);

// Entry k = dot(region_feature, rows[k]).
std::vector<double> similarity_vector(const Embedding& region_feature,
                                      std::span<const Embedding> rows);
std::vector<double> similarity_vector(const Embedding& region_feature, const VisualPrompt& prompt);

struct GumbelScore {
  double score = 0.0;
  std::vector<double> weights;
};

// Soft Gumbel-softmax selection with explicit noise:
// weights = softmax((w + g) / tau), score = sum_k weights_k * w_k.
GumbelScore gumbel_soft_score(std::span<const double> w, std::span<const double> gumbel_noise,
                              double tau);

// Draws one Gumbel variate per entry of w, in order, then calls gumbel_soft_score.
GumbelScore score_train(std::span<const double> w, double tau, Rng& rng);

double score_eval(std::span<const double> w);

// dS/dW_m for S = sum_k weights_k * W_k with weights = softmax((W + g)/tau):
//   weights_m + sum_k weights_k * W_k * (delta_km - weights_m) / tau
std::vector<double> gumbel_score_gradient(std::span<const double> w,
                                          std::span<const double> weights, double tau);

double logistic(double x);

struct SlotScore {
  std::vector<double> similarities;
  double score = 0.0;
  std::vector<double> weights;  // train mode only
  double probability = 0.5;
};

struct ProposalScores {
  Box box;
  std::vector<SlotScore> slots;
};

struct DetectionResult {
  ImageId image_id = 0;
  std::vector<ProposalScores> proposals;
};

// Frozen-detector surrogate: scores every proposal against every slot and
// passes boxes through. Train mode draws Gumbel noise proposal by proposal,
// slot by slot; eval mode draws nothing and `rng` may be null.
DetectionResult detector_forward(const ImageSample& image, std::span<const CategorySlot> slots,
                                 ScoreMode mode, double tau, Rng* rng);

}  // namespace visprompt

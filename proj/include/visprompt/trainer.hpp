#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "visprompt/dataset.hpp"
#include "visprompt/losses.hpp"
#include "visprompt/prompt_builder.hpp"
#include "visprompt/rng.hpp"
#include "visprompt/sim_dictionary.hpp"

namespace visprompt {

struct AdamWHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;

  bool operator==(const AdamWHyper&) const = default;
};

struct OptimizerState {
  AdamWHyper hyper;
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
};

OptimizerState make_optimizer_state(std::size_t parameter_count, const AdamWHyper& hyper = {});

// Decoupled weight decay, then the bias-corrected Adam update.
void adamw_step(std::span<double> params, std::span<const double> grads, OptimizerState& state,
                double learning_rate);

// How prompts are seeded before training.
enum class InitMode {
  Statistical,   // Gaussian prior from the vocabulary, then stochastic similarity
  GaussianOnly,  // Gaussian prior without stochastic similarity
  Text,          // N copies of a vocabulary phrase
  TextSimilarity,  // text copies, then stochastic similarity
};

const char* to_string(InitMode mode);
InitMode init_mode_from_string(const std::string& name);

struct TrainConfig {
  std::size_t n_vectors = 20;
  double independence = 0.99;
  double neg_probability = 0.7;
  double fusion_probability = 0.5;
  double nms_threshold = 0.7;
  std::size_t top_k = 50;
  std::size_t neg_max_len = 20;
  double temperature = 1.0;
  double learning_rate = 0.1;
  std::size_t epochs = 12;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  AlignmentOptions alignment;
  SimilarityMode similarity = SimilarityMode::Cosine;
  AdamWHyper adamw;
  InitMode init = InitMode::Statistical;
  // Text init phrase; empty means the category's own name.
  std::string init_phrase;

  // Throws Error(Validation) on the first violated invariant.
  void validate() const;
};

struct EpochStats {
  double alignment = 0.0;
  double l1_box = 0.0;
  double giou_loss = 0.0;
  std::size_t steps = 0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::vector<VisualPrompt> initial_prompts;
  std::vector<VisualPrompt> prompts;
  TrainConfig config;
  std::uint64_t seed = 0;
  double wall_clock_seconds = 0.0;
};

// One prompt per category, in category order.
std::vector<VisualPrompt> initialize_prompts(std::span<const Category> categories,
                                             const Vocabulary& vocab, const TrainConfig& config,
                                             Rng& rng);

struct BatchGradient {
  double alignment = 0.0;
  LocalizationLoss localization;
  std::size_t regions = 0;
  // grads[p][k] is d loss / d prompts[p].vectors[k].
  std::vector<std::vector<Embedding>> grads;
};

// Forward + backward for one batch with a fixed negative list. Gumbel noise
// is drawn from `rng` image by image, proposal by proposal, slot by slot.
BatchGradient compute_batch_gradient(std::span<const ImageSample* const> images,
                                     std::span<const VisualPrompt> prompts,
                                     std::span<const Embedding> negatives,
                                     const TrainConfig& config, Rng& rng);

/// Optimizes visual prompt rows against frozen region features.
///
/// Per epoch the image order is shuffled (one Fisher-Yates pass); per batch
/// the merged dictionaries yield a fresh negative list, then every image is
/// scored in train mode, the alignment loss is back-propagated into prompt
/// rows and AdamW takes one step. Localization terms are logged only.
TrainReport train_visual_prompts(const Dataset& dataset,
                                 const std::vector<SimilarityDictionary>& dictionaries,
                                 std::vector<VisualPrompt> initial_prompts,
                                 const TrainConfig& config, Rng& rng,
                                 std::ostream* progress = nullptr);

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t parameters_checked = 0;
};

// Central finite differences of the batch alignment loss against the
// analytic prompt gradient, with Gumbel noise and negatives held fixed.
// Relative error uses max(|analytic|, |numeric|, abs_floor) as denominator.
GradientCheckResult end_to_end_gradient_check(std::span<const ImageSample* const> images,
                                              std::span<const VisualPrompt> prompts,
                                              std::span<const Embedding> negatives,
                                              const TrainConfig& config, std::uint64_t seed,
                                              double step = 1e-6, double abs_floor = 1e-4);

}  // namespace visprompt

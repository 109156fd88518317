#pragma once

#include <cstddef>
#include <vector>

#include "visprompt/dataset.hpp"
#include "visprompt/embedding.hpp"
#include "visprompt/rng.hpp"

namespace visprompt {

// Construction parameters recorded on a prompt. independence/fusion_probability
// stay at (1, 0) until stochastic_similarity runs.
struct PromptParams {
  std::size_t n_vectors = 0;
  double independence = 1.0;
  double fusion_probability = 0.0;

  bool operator==(const PromptParams&) const = default;
};

// A category represented by N learnable embedding rows.
struct VisualPrompt {
  CategoryId category_id = 0;
  std::vector<Embedding> vectors;
  PromptParams params_used;

  std::size_t size() const noexcept { return vectors.size(); }
  std::size_t dim() const noexcept { return vectors.empty() ? 0 : vectors.front().size(); }

  bool operator==(const VisualPrompt&) const = default;
};

// N rows drawn i.i.d. from the prior.
VisualPrompt init_visual_prompt(const GaussianPrior& prior, std::size_t n_vectors,
                                CategoryId category_id, Rng& rng);

// The fusion step alone, without the mean correction. Same draws and
// argument checks as stochastic_similarity.
VisualPrompt fuse_rows(const VisualPrompt& prompt, double independence,
                       double fusion_probability, Rng& rng);

/// Stochastic similarity layer.
///
/// Rows are visited in order; with probability `fusion_probability` row i is
/// fused with a donor j != i drawn uniformly:
///
///     E_i <- a * E_i + sqrt(1 - a^2) * E_j
///
/// Donors are read from the rows as they were before any fusion. Afterwards
/// every row is shifted by (mu_before - mu_after) so the per-dimension mean
/// of the block is unchanged. With a single row no fusion happens.
///
/// Draw order per row: one bernoulli(fusion_probability), then one donor
/// index if the row fuses.
VisualPrompt stochastic_similarity(const VisualPrompt& prompt, double independence,
                                   double fusion_probability, Rng& rng);

// Baseline prompt: N copies of a text embedding.
VisualPrompt text_init_prompt(const Embedding& text_embedding, std::size_t n_vectors,
                              CategoryId category_id);

}  // namespace visprompt

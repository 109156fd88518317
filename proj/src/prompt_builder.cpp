#include "visprompt/prompt_builder.hpp"

#include <cmath>

#include "visprompt/error.hpp"

namespace visprompt {

VisualPrompt init_visual_prompt(const GaussianPrior& prior, std::size_t n_vectors,
                                CategoryId category_id, Rng& rng) {
  if (n_vectors == 0) fail(ErrorCode::InvalidArgument, "init_visual_prompt: n_vectors must be >= 1");
  VisualPrompt prompt;
  prompt.category_id = category_id;
  prompt.vectors = sample_gaussian(prior, n_vectors, rng);
  prompt.params_used.n_vectors = n_vectors;
  return prompt;
}

VisualPrompt fuse_rows(const VisualPrompt& prompt, double independence,
                       double fusion_probability, Rng& rng) {
  if (!(independence >= 0.0 && independence <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "stochastic_similarity: independence must lie in [0, 1]");
  }
  if (!(fusion_probability >= 0.0 && fusion_probability <= 1.0)) {
    fail(ErrorCode::InvalidArgument,
         "stochastic_similarity: fusion probability must lie in [0, 1]");
  }
  if (prompt.vectors.empty()) {
    fail(ErrorCode::EmptyInput, "stochastic_similarity: prompt has no vectors");
  }

  VisualPrompt out = prompt;
  out.params_used.independence = independence;
  out.params_used.fusion_probability = fusion_probability;

  const std::size_t n = prompt.vectors.size();
  if (n < 2) return out;
  const double donor_weight = std::sqrt(1.0 - independence * independence);
  for (std::size_t i = 0; i < n; ++i) {
    if (!rng.bernoulli(fusion_probability)) continue;
    std::size_t j = rng.uniform_index(n - 1);
    if (j >= i) ++j;
    Embedding& row = out.vectors[i];
    const Embedding& donor = prompt.vectors[j];
    for (std::size_t d = 0; d < row.size(); ++d) {
      row[d] = independence * row[d] + donor_weight * donor[d];
    }
  }
  return out;
}

VisualPrompt stochastic_similarity(const VisualPrompt& prompt, double independence,
                                   double fusion_probability, Rng& rng) {
  VisualPrompt out = fuse_rows(prompt, independence, fusion_probability, rng);
  const Embedding mu_before = mean_of_set(prompt.vectors);
  const Embedding mu_after = mean_of_set(out.vectors);
  for (auto& row : out.vectors) {
    for (std::size_t d = 0; d < row.size(); ++d) row[d] -= mu_after[d] - mu_before[d];
  }
  return out;
}

VisualPrompt text_init_prompt(const Embedding& text_embedding, std::size_t n_vectors,
                              CategoryId category_id) {
  if (n_vectors == 0) fail(ErrorCode::InvalidArgument, "text_init_prompt: n_vectors must be >= 1");
  VisualPrompt prompt;
  prompt.category_id = category_id;
  prompt.vectors.assign(n_vectors, text_embedding);
  prompt.params_used.n_vectors = n_vectors;
  return prompt;
}

}  // namespace visprompt

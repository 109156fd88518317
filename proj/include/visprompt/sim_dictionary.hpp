#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "visprompt/dataset.hpp"
#include "visprompt/embedding.hpp"
#include "visprompt/rng.hpp"

namespace visprompt {

// How text-region and text-text similarities are measured. Cosine is the
// default; RawDot uses the unnormalized inner product.
enum class SimilarityMode { Cosine, RawDot };

const char* to_string(SimilarityMode mode);
SimilarityMode similarity_mode_from_string(const std::string& name);

double similarity(const Embedding& a, const Embedding& b, SimilarityMode mode);

struct VocabEntry {
  std::string phrase;
  Embedding embedding;

  bool operator==(const VocabEntry&) const = default;
};

struct Vocabulary {
  std::vector<VocabEntry> entries;

  std::size_t size() const noexcept { return entries.size(); }
  std::size_t dim() const noexcept { return entries.empty() ? 0 : entries.front().embedding.size(); }
  const VocabEntry* find(const std::string& phrase) const;
  // Unique phrases, uniform finite embeddings, at least one entry.
  void validate() const;

  bool operator==(const Vocabulary&) const = default;
};

struct DictionaryEntry {
  std::string phrase;
  Embedding embedding;
  double query_similarity = 0.0;

  bool operator==(const DictionaryEntry&) const = default;
};

// Deduplicated confusable phrases for one category, ranked by similarity
// to the pooled query feature.
struct SimilarityDictionary {
  CategoryId category_id = 0;
  std::vector<DictionaryEntry> entries;
  std::size_t top_k = 0;
  double nms_threshold = 1.0;
  SimilarityMode mode = SimilarityMode::Cosine;

  std::size_t size() const noexcept { return entries.size(); }

  bool operator==(const SimilarityDictionary&) const = default;
};

Embedding pool_query_feature(std::span<const Embedding> context_features);

// min(k, B) entries with the highest similarity to `query`, descending.
// Ties go to the lower vocabulary index.
std::vector<DictionaryEntry> top_k_similar(const Embedding& query, const Vocabulary& vocab,
                                           std::size_t k,
                                           SimilarityMode mode = SimilarityMode::Cosine);

// Greedy NMS over a ranked candidate list: a candidate survives iff its
// similarity to every previously kept candidate is <= q.
SimilarityDictionary dedup_nms(const std::vector<DictionaryEntry>& candidates, double q,
                               SimilarityMode mode = SimilarityMode::Cosine);

SimilarityDictionary build_similarity_dictionary(const Dataset& dataset, const Vocabulary& vocab,
                                                 CategoryId category_id, std::size_t k, double q,
                                                 const std::vector<std::string>& exclude = {},
                                                 SimilarityMode mode = SimilarityMode::Cosine);

// With probability p1 draws a length L uniform on {0..min(z_max, size)} and
// returns L distinct entries; otherwise returns nothing. Draw order: one
// bernoulli(p1); if taken, one length draw then L partial-shuffle draws.
std::vector<Embedding> sample_negatives(const SimilarityDictionary& dict, std::size_t z_max,
                                        double p1, Rng& rng);

// Concatenates several per-category dictionaries into one pool, keeping the
// first occurrence of each phrase.
SimilarityDictionary merge_dictionaries(const std::vector<SimilarityDictionary>& dicts);

}  // namespace visprompt

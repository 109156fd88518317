#include "visprompt/sim_dictionary.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "visprompt/error.hpp"

namespace visprompt {

const char* to_string(SimilarityMode mode) {
  return mode == SimilarityMode::Cosine ? "cosine" : "dot";
}

SimilarityMode similarity_mode_from_string(const std::string& name) {
  if (name == "cosine") return SimilarityMode::Cosine;
  if (name == "dot") return SimilarityMode::RawDot;
  fail(ErrorCode::Validation, "unknown similarity mode '" + name + "' (expected cosine|dot)");
}

double similarity(const Embedding& a, const Embedding& b, SimilarityMode mode) {
  return mode == SimilarityMode::Cosine ? cosine(a, b) : dot(a, b);
}

const VocabEntry* Vocabulary::find(const std::string& phrase) const {
  for (const auto& e : entries) {
    if (e.phrase == phrase) return &e;
  }
  return nullptr;
}

void Vocabulary::validate() const {
  if (entries.empty()) fail(ErrorCode::Validation, "vocabulary: no entries");
  std::set<std::string> seen;
  const std::size_t c = dim();
  if (c == 0) fail(ErrorCode::Validation, "vocabulary: dimension must be at least 1");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const std::string where = "entries[" + std::to_string(i) + "]";
    if (!seen.insert(entries[i].phrase).second) {
      fail(ErrorCode::Validation, where + ".phrase: duplicate phrase '" + entries[i].phrase + "'");
    }
    if (entries[i].embedding.size() != c) {
      fail(ErrorCode::DimensionMismatch, where + ".embedding: expected dimension " +
                                             std::to_string(c) + ", got " +
                                             std::to_string(entries[i].embedding.size()));
    }
    if (!entries[i].embedding.all_finite()) {
      fail(ErrorCode::Validation, where + ".embedding: non-finite entry");
    }
  }
}

Embedding pool_query_feature(std::span<const Embedding> context_features) {
  if (context_features.empty()) fail(ErrorCode::EmptyInput, "pool_query_feature: no features");
  return mean_of_set(context_features);
}

std::vector<DictionaryEntry> top_k_similar(const Embedding& query, const Vocabulary& vocab,
                                           std::size_t k, SimilarityMode mode) {
  if (k == 0) fail(ErrorCode::InvalidArgument, "top_k_similar: k must be >= 1");
  if (mode == SimilarityMode::Cosine && norm(query) == 0.0) {
    fail(ErrorCode::InvalidArgument, "top_k_similar: zero-norm query");
  }
  std::vector<double> sims(vocab.size());
  for (std::size_t b = 0; b < vocab.size(); ++b) {
    sims[b] = similarity(query, vocab.entries[b].embedding, mode);
  }
  std::vector<std::size_t> order(vocab.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t keep = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (sims[a] != sims[b]) return sims[a] > sims[b];
                      return a < b;
                    });
  std::vector<DictionaryEntry> out;
  out.reserve(keep);
  for (std::size_t r = 0; r < keep; ++r) {
    const auto& entry = vocab.entries[order[r]];
    out.push_back({entry.phrase, entry.embedding, sims[order[r]]});
  }
  return out;
}

SimilarityDictionary dedup_nms(const std::vector<DictionaryEntry>& candidates, double q,
                               SimilarityMode mode) {
  if (!(q >= 0.0 && q <= 1.0)) fail(ErrorCode::InvalidArgument, "dedup_nms: q must lie in [0, 1]");
  SimilarityDictionary dict;
  dict.top_k = candidates.size();
  dict.nms_threshold = q;
  dict.mode = mode;
  for (const auto& cand : candidates) {
    const bool suppressed = std::any_of(dict.entries.begin(), dict.entries.end(),
                                        [&](const DictionaryEntry& kept) {
                                          return similarity(cand.embedding, kept.embedding, mode) > q;
                                        });
    if (!suppressed) dict.entries.push_back(cand);
  }
  return dict;
}

SimilarityDictionary build_similarity_dictionary(const Dataset& dataset, const Vocabulary& vocab,
                                                 CategoryId category_id, std::size_t k, double q,
                                                 const std::vector<std::string>& exclude,
                                                 SimilarityMode mode) {
  std::vector<Embedding> context;
  bool any_instance = false;
  for (const auto& img : dataset.images) {
    for (const auto& inst : img.instances) {
      if (inst.category != category_id) continue;
      any_instance = true;
      context.insert(context.end(), inst.context.begin(), inst.context.end());
    }
  }
  if (!any_instance || context.empty()) {
    fail(ErrorCode::Validation, "build_similarity_dictionary: no instances with context features "
                                "for category " + std::to_string(category_id));
  }
  const Embedding query = pool_query_feature(context);

  const std::set<std::string> excluded(exclude.begin(), exclude.end());
  Vocabulary filtered;
  for (const auto& e : vocab.entries) {
    if (!excluded.contains(e.phrase)) filtered.entries.push_back(e);
  }
  if (filtered.entries.empty()) {
    fail(ErrorCode::Validation, "build_similarity_dictionary: vocabulary is empty after exclusion");
  }

  SimilarityDictionary dict = dedup_nms(top_k_similar(query, filtered, k, mode), q, mode);
  dict.category_id = category_id;
  dict.top_k = k;
  return dict;
}

std::vector<Embedding> sample_negatives(const SimilarityDictionary& dict, std::size_t z_max,
                                        double p1, Rng& rng) {
  if (!(p1 >= 0.0 && p1 <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "sample_negatives: p1 must lie in [0, 1]");
  }
  if (!rng.bernoulli(p1)) return {};
  const std::size_t max_len = std::min(z_max, dict.size());
  const std::size_t length = rng.uniform_index(max_len + 1);

  std::vector<std::size_t> pool(dict.size());
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  std::vector<Embedding> out;
  out.reserve(length);
  for (std::size_t i = 0; i < length; ++i) {
    const std::size_t pick = i + rng.uniform_index(pool.size() - i);
    std::swap(pool[i], pool[pick]);
    out.push_back(dict.entries[pool[i]].embedding);
  }
  return out;
}

SimilarityDictionary merge_dictionaries(const std::vector<SimilarityDictionary>& dicts) {
  SimilarityDictionary merged;
  std::set<std::string> seen;
  for (const auto& d : dicts) {
    merged.mode = d.mode;
    merged.nms_threshold = d.nms_threshold;
    merged.top_k += d.top_k;
    for (const auto& e : d.entries) {
      if (seen.insert(e.phrase).second) merged.entries.push_back(e);
    }
  }
  return merged;
}

}  // namespace visprompt

#include "visprompt/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>

#include "visprompt/error.hpp"
#include "visprompt/scoring.hpp"

namespace visprompt {

OptimizerState make_optimizer_state(std::size_t parameter_count, const AdamWHyper& hyper) {
  OptimizerState state;
  state.hyper = hyper;
  state.m.assign(parameter_count, 0.0);
  state.v.assign(parameter_count, 0.0);
  return state;
}

void adamw_step(std::span<double> params, std::span<const double> grads, OptimizerState& state,
                double learning_rate) {
  if (params.size() != grads.size() || params.size() != state.m.size() ||
      params.size() != state.v.size()) {
    fail(ErrorCode::DimensionMismatch, "adamw_step: parameter, gradient and state shapes differ");
  }
  const AdamWHyper& h = state.hyper;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(h.beta1, t);
  const double correction2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i] -= learning_rate * h.weight_decay * params[i];
    state.m[i] = h.beta1 * state.m[i] + (1.0 - h.beta1) * grads[i];
    state.v[i] = h.beta2 * state.v[i] + (1.0 - h.beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / correction1;
    const double v_hat = state.v[i] / correction2;
    params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + h.eps);
  }
}

const char* to_string(InitMode mode) {
  switch (mode) {
    case InitMode::Statistical: return "statistical";
    case InitMode::GaussianOnly: return "gaussian";
    case InitMode::Text: return "text";
    case InitMode::TextSimilarity: return "text-similarity";
  }
  return "statistical";
}

InitMode init_mode_from_string(const std::string& name) {
  if (name == "statistical") return InitMode::Statistical;
  if (name == "gaussian") return InitMode::GaussianOnly;
  if (name == "text") return InitMode::Text;
  if (name == "text-similarity") return InitMode::TextSimilarity;
  fail(ErrorCode::Validation, "unknown init mode '" + name + "'");
}

namespace {

void require_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    fail(ErrorCode::Validation, std::string("config.") + name + " must lie in [0, 1]");
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (n_vectors == 0) fail(ErrorCode::Validation, "config.n_vectors must be >= 1");
  require_probability(independence, "independence");
  require_probability(neg_probability, "neg_probability");
  require_probability(fusion_probability, "fusion_probability");
  require_probability(nms_threshold, "nms_threshold");
  if (top_k == 0) fail(ErrorCode::Validation, "config.top_k must be >= 1");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    fail(ErrorCode::Validation, "config.temperature must be positive");
  }
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    fail(ErrorCode::Validation, "config.learning_rate must be non-negative");
  }
  if (batch_size == 0) fail(ErrorCode::Validation, "config.batch_size must be >= 1");
  require_probability(adamw.beta1, "adamw.beta1");
  require_probability(adamw.beta2, "adamw.beta2");
  if (!(adamw.eps > 0.0)) fail(ErrorCode::Validation, "config.adamw.eps must be positive");
  if (!(adamw.weight_decay >= 0.0)) {
    fail(ErrorCode::Validation, "config.adamw.weight_decay must be non-negative");
  }
}

std::vector<VisualPrompt> initialize_prompts(std::span<const Category> categories,
                                             const Vocabulary& vocab, const TrainConfig& config,
                                             Rng& rng) {
  config.validate();
  std::vector<VisualPrompt> prompts;
  prompts.reserve(categories.size());
  std::vector<Embedding> text;
  for (const auto& e : vocab.entries) text.push_back(e.embedding);
  const GaussianPrior prior = estimate_gaussian_prior(text);

  for (const auto& category : categories) {
    VisualPrompt prompt;
    if (config.init == InitMode::Text || config.init == InitMode::TextSimilarity) {
      const std::string& phrase = config.init_phrase.empty() ? category.name : config.init_phrase;
      const VocabEntry* entry = vocab.find(phrase);
      if (entry == nullptr) {
        fail(ErrorCode::Validation, "text init: phrase '" + phrase + "' not in vocabulary");
      }
      prompt = text_init_prompt(entry->embedding, config.n_vectors, category.id);
    } else {
      prompt = init_visual_prompt(prior, config.n_vectors, category.id, rng);
    }
    if (config.init == InitMode::Statistical || config.init == InitMode::TextSimilarity) {
      prompt = stochastic_similarity(prompt, config.independence, config.fusion_probability, rng);
    }
    prompts.push_back(std::move(prompt));
  }
  return prompts;
}

BatchGradient compute_batch_gradient(std::span<const ImageSample* const> images,
                                     std::span<const VisualPrompt> prompts,
                                     std::span<const Embedding> negatives,
                                     const TrainConfig& config, Rng& rng) {
  const std::size_t d_p = prompts.size();
  const std::size_t d_n = negatives.size();
  if (d_p == 0) fail(ErrorCode::InvalidArgument, "compute_batch_gradient: no prompts");

  std::map<CategoryId, std::size_t> column_of;
  std::vector<CategorySlot> slots;
  slots.reserve(d_p + d_n);
  for (std::size_t p = 0; p < d_p; ++p) {
    column_of[prompts[p].category_id] = p;
    slots.push_back(visual_slot(prompts[p]));
  }
  for (const auto& neg : negatives) slots.push_back(negative_slot(neg));

  BatchGradient out;
  out.grads.resize(d_p);
  for (std::size_t p = 0; p < d_p; ++p) {
    out.grads[p].assign(prompts[p].size(), Embedding(prompts[p].dim()));
  }

  // Forward pass over the whole batch, keeping what the backward pass needs.
  std::vector<DetectionResult> forwards;
  std::vector<const Embedding*> features;
  std::vector<std::optional<std::size_t>> targets;
  std::vector<Box> pred_boxes;
  std::vector<Box> gt_boxes;
  std::vector<BoxMatch> matches;
  forwards.reserve(images.size());
  for (const ImageSample* image : images) {
    forwards.push_back(
        detector_forward(*image, slots, ScoreMode::Train, config.temperature, &rng));
    for (const auto& proposal : image->proposals) {
      features.push_back(&proposal.feature);
      if (!proposal.label) {
        targets.emplace_back();
        continue;
      }
      const auto it = column_of.find(*proposal.label);
      if (it == column_of.end()) {
        fail(ErrorCode::Validation, "proposal labeled with category " +
                                        std::to_string(*proposal.label) + " which has no prompt");
      }
      targets.emplace_back(it->second);

      const GtInstance* best = nullptr;
      double best_iou = -1.0;
      for (const auto& inst : image->instances) {
        if (inst.category != *proposal.label) continue;
        const double v = iou(proposal.box, inst.box);
        if (v > best_iou) {
          best_iou = v;
          best = &inst;
        }
      }
      if (best != nullptr) {
        matches.emplace_back(pred_boxes.size(), gt_boxes.size());
        pred_boxes.push_back(proposal.box);
        gt_boxes.push_back(best->box);
      }
    }
  }
  out.regions = features.size();
  out.localization = localization_loss(pred_boxes, gt_boxes, matches);
  if (out.regions == 0) return out;

  ScoreMatrix scores(out.regions, d_p + d_n);
  std::vector<const SlotScore*> slot_scores(out.regions * (d_p + d_n));
  std::size_t row = 0;
  for (const auto& forward : forwards) {
    for (const auto& proposal : forward.proposals) {
      for (std::size_t c = 0; c < d_p + d_n; ++c) {
        scores.at(row, c) = proposal.slots[c].score;
        slot_scores[row * (d_p + d_n) + c] = &proposal.slots[c];
      }
      ++row;
    }
  }

  const AlignmentResult loss = alignment_loss(scores, targets, d_p, d_n, config.alignment);
  out.alignment = loss.loss;

  // Only visual-prompt columns carry parameters; negatives are frozen.
  for (std::size_t r = 0; r < out.regions; ++r) {
    for (std::size_t p = 0; p < d_p; ++p) {
      const double upstream = loss.grad.at(r, p);
      if (upstream == 0.0) continue;
      const SlotScore& s = *slot_scores[r * (d_p + d_n) + p];
      const std::vector<double> ds_dw =
          gumbel_score_gradient(s.similarities, s.weights, config.temperature);
      for (std::size_t k = 0; k < ds_dw.size(); ++k) {
        axpy(upstream * ds_dw[k], *features[r], out.grads[p][k]);
      }
    }
  }
  return out;
}

namespace {

std::size_t parameter_count(const std::vector<VisualPrompt>& prompts) {
  std::size_t n = 0;
  for (const auto& p : prompts) n += p.size() * p.dim();
  return n;
}

void flatten_into(const std::vector<VisualPrompt>& prompts, std::vector<double>& flat) {
  flat.clear();
  for (const auto& p : prompts) {
    for (const auto& row : p.vectors) flat.insert(flat.end(), row.begin(), row.end());
  }
}

void unflatten_into(std::span<const double> flat, std::vector<VisualPrompt>& prompts) {
  std::size_t i = 0;
  for (auto& p : prompts) {
    for (auto& row : p.vectors) {
      for (double& v : row.values()) v = flat[i++];
    }
  }
}

void flatten_grads(const BatchGradient& g, std::vector<double>& flat) {
  flat.clear();
  for (const auto& rows : g.grads) {
    for (const auto& row : rows) flat.insert(flat.end(), row.begin(), row.end());
  }
}

}  // namespace

TrainReport train_visual_prompts(const Dataset& dataset,
                                 const std::vector<SimilarityDictionary>& dictionaries,
                                 std::vector<VisualPrompt> initial_prompts,
                                 const TrainConfig& config, Rng& rng, std::ostream* progress) {
  config.validate();
  if (dataset.images.empty()) fail(ErrorCode::Validation, "train: dataset has no images");
  if (initial_prompts.empty()) fail(ErrorCode::Validation, "train: no prompts to train");
  for (const auto& p : initial_prompts) {
    if (p.size() == 0) fail(ErrorCode::Validation, "train: prompt with no vectors");
    for (const auto& row : p.vectors) {
      if (row.size() != dataset.dim) {
        fail(ErrorCode::DimensionMismatch, "train: prompt dimension " + std::to_string(row.size()) +
                                               " vs dataset dimension " +
                                               std::to_string(dataset.dim));
      }
    }
  }
  for (const auto& d : dictionaries) {
    for (const auto& e : d.entries) {
      if (e.embedding.size() != dataset.dim) {
        fail(ErrorCode::DimensionMismatch, "train: dictionary dimension differs from dataset");
      }
    }
  }

  const auto started = std::chrono::steady_clock::now();
  TrainReport report;
  report.config = config;
  report.seed = rng.seed();
  report.initial_prompts = initial_prompts;
  std::vector<VisualPrompt> prompts = std::move(initial_prompts);

  const SimilarityDictionary pool = merge_dictionaries(dictionaries);
  OptimizerState optimizer = make_optimizer_state(parameter_count(prompts), config.adamw);
  std::vector<double> params;
  std::vector<double> grads;

  std::vector<const ImageSample*> order;
  order.reserve(dataset.images.size());
  for (const auto& img : dataset.images) order.push_back(&img);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.uniform_index(i)]);
    }
    EpochStats stats;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const std::span<const ImageSample* const> batch(order.data() + start, stop - start);
      const std::vector<Embedding> negatives =
          sample_negatives(pool, config.neg_max_len, config.neg_probability, rng);
      const BatchGradient g = compute_batch_gradient(batch, prompts, negatives, config, rng);

      flatten_into(prompts, params);
      flatten_grads(g, grads);
      adamw_step(params, grads, optimizer, config.learning_rate);
      unflatten_into(params, prompts);

      stats.alignment += g.alignment;
      stats.l1_box += g.localization.l1;
      stats.giou_loss += g.localization.giou_loss;
      stats.steps += 1;
    }
    if (stats.steps > 0) {
      const double inv = 1.0 / static_cast<double>(stats.steps);
      stats.alignment *= inv;
      stats.l1_box *= inv;
      stats.giou_loss *= inv;
    }
    report.epochs.push_back(stats);
    if (progress != nullptr) {
      *progress << "epoch " << (epoch + 1) << "/" << config.epochs
                << " alignment=" << stats.alignment << " l1=" << stats.l1_box
                << " giou=" << stats.giou_loss << '\n';
    }
  }

  report.prompts = std::move(prompts);
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

GradientCheckResult end_to_end_gradient_check(std::span<const ImageSample* const> images,
                                              std::span<const VisualPrompt> prompts,
                                              std::span<const Embedding> negatives,
                                              const TrainConfig& config, std::uint64_t seed,
                                              double step, double abs_floor) {
  const Rng noise(seed);
  std::vector<VisualPrompt> work(prompts.begin(), prompts.end());

  Rng replay = noise;
  const BatchGradient analytic = compute_batch_gradient(images, work, negatives, config, replay);

  auto loss_at = [&]() {
    Rng r = noise;
    return compute_batch_gradient(images, work, negatives, config, r).alignment;
  };

  GradientCheckResult result;
  for (std::size_t p = 0; p < work.size(); ++p) {
    for (std::size_t k = 0; k < work[p].size(); ++k) {
      for (std::size_t d = 0; d < work[p].dim(); ++d) {
        double& x = work[p].vectors[k][d];
        const double saved = x;
        x = saved + step;
        const double plus = loss_at();
        x = saved - step;
        const double minus = loss_at();
        x = saved;
        const double numeric = (plus - minus) / (2.0 * step);
        const double exact = analytic.grads[p][k][d];
        const double denom = std::max({std::abs(exact), std::abs(numeric), abs_floor});
        result.max_relative_error =
            std::max(result.max_relative_error, std::abs(exact - numeric) / denom);
        ++result.parameters_checked;
      }
    }
  }
  return result;
}

}  // namespace visprompt

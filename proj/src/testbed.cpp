#include "visprompt/testbed.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>

#include "visprompt/error.hpp"

namespace visprompt {

void TestbedSpec::validate() const {
  auto bad = [](const std::string& msg) { fail(ErrorCode::Validation, "testbed spec: " + msg); };
  if (dim < 2) bad("dim must be >= 2");
  if (categories == 0) bad("categories must be >= 1");
  if (!(archetype_separation >= -1.0 && archetype_separation <= 1.0)) {
    bad("archetype_separation must lie in [-1, 1]");
  }
  if (modes_per_category == 0) bad("modes_per_category must be >= 1");
  if (!(mode_similarity > 0.0 && mode_similarity <= 1.0)) bad("mode_similarity must lie in (0, 1]");
  if (!(noise_sigma >= 0.0)) bad("noise_sigma must be >= 0");
  if (!(confuser_similarity >= 0.0 && confuser_similarity < 1.0)) {
    bad("confuser_similarity must lie in [0, 1)");
  }
  if (min_proposals > max_proposals) bad("min_proposals must not exceed max_proposals");
  if (!(background_fraction >= 0.0 && background_fraction <= 1.0)) {
    bad("background_fraction must lie in [0, 1]");
  }
  if (!(confuser_object_rate >= 0.0 && confuser_object_rate <= 1.0)) {
    bad("confuser_object_rate must lie in [0, 1]");
  }
  if (!(context_noise >= 0.0)) bad("context_noise must be >= 0");
  if (!(box_jitter >= 0.0 && box_jitter < 0.5)) bad("box_jitter must lie in [0, 0.5)");
  if (!(cross_plant_rate >= 0.0 && cross_plant_rate <= 1.0)) {
    bad("cross_plant_rate must lie in [0, 1]");
  }
  if (!(pair_similarity >= -1.0 && pair_similarity < 1.0)) bad("pair_similarity must lie in [-1, 1)");
}

const char* to_string(PlantKind kind) {
  switch (kind) {
    case PlantKind::Category: return "category";
    case PlantKind::Confuser: return "confuser";
    case PlantKind::Filler: return "filler";
    case PlantKind::CrossPlant: return "cross-plant";
  }
  return "filler";
}

PlantKind plant_kind_from_string(const std::string& name) {
  if (name == "category") return PlantKind::Category;
  if (name == "confuser") return PlantKind::Confuser;
  if (name == "filler") return PlantKind::Filler;
  if (name == "cross-plant") return PlantKind::CrossPlant;
  fail(ErrorCode::Validation, "unknown plant kind '" + name + "'");
}

std::string category_phrase(CategoryId id) { return "category_" + std::to_string(id); }

namespace {

constexpr int kMaxAttempts = 10000;
constexpr double kOwnMargin = 0.1;

Embedding random_unit(std::size_t dim, Rng& rng) {
  for (;;) {
    Embedding e(dim);
    for (double& v : e.values()) v = rng.normal();
    if (norm(e) > 1e-12) return normalized(e);
  }
}

// Unit vector with cosine exactly `s` to the unit vector `anchor`.
Embedding at_cosine(const Embedding& anchor, double s, Rng& rng) {
  for (;;) {
    Embedding u = random_unit(anchor.size(), rng);
    axpy(-dot(u, anchor), anchor, u);
    const double n = norm(u);
    if (n < 1e-9) continue;
    Embedding out = scaled(anchor, s);
    axpy(std::sqrt(1.0 - s * s) / n, u, out);
    return out;
  }
}

struct World {
  std::vector<Embedding> archetypes;
  std::vector<std::vector<Embedding>> modes;
  std::vector<std::vector<Embedding>> confusers;
  std::vector<Embedding> fillers;
  Vocabulary vocabulary;
  std::vector<PlantedConfuser> planted;
};

bool clear_of_others(const Embedding& v, std::size_t own, const std::vector<Embedding>& archetypes,
                     double limit) {
  for (std::size_t c = 0; c < archetypes.size(); ++c) {
    if (c != own && dot(v, archetypes[c]) >= limit) return false;
  }
  return true;
}

// `pinned` maps a category to (partner, cosine): its archetype is placed at
// that cosine to the partner instead of being rejection sampled.
World build_world(const TestbedSpec& spec, Rng& rng, std::optional<std::pair<std::size_t, std::size_t>> pinned) {
  World w;
  for (std::size_t c = 0; c < spec.categories; ++c) {
    if (pinned && pinned->second == c) {
      w.archetypes.push_back(at_cosine(w.archetypes[pinned->first], spec.pair_similarity, rng));
      continue;
    }
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      Embedding cand = random_unit(spec.dim, rng);
      placed = std::all_of(w.archetypes.begin(), w.archetypes.end(), [&](const Embedding& a) {
        return dot(cand, a) <= spec.archetype_separation;
      });
      if (placed) w.archetypes.push_back(std::move(cand));
    }
    if (!placed) {
      fail(ErrorCode::Infeasible, "testbed: could not place " + std::to_string(spec.categories) +
                                      " archetypes with pairwise cosine <= archetype_separation (" +
                                      std::to_string(spec.archetype_separation) + ") in dim " +
                                      std::to_string(spec.dim));
    }
  }

  auto near_archetype = [&](std::size_t c, double s, const char* what) {
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
      Embedding v = at_cosine(w.archetypes[c], s, rng);
      if (clear_of_others(v, c, w.archetypes, s - kOwnMargin)) return v;
    }
    fail(ErrorCode::Infeasible, std::string("testbed: could not place a ") + what +
                                    " closer to its own archetype than to the others (" + what +
                                    " similarity " + std::to_string(s) + ")");
  };

  w.modes.resize(spec.categories);
  w.confusers.resize(spec.categories);
  for (std::size_t c = 0; c < spec.categories; ++c) {
    if (spec.modes_per_category == 1) {
      w.modes[c].push_back(w.archetypes[c]);
    } else {
      for (std::size_t m = 0; m < spec.modes_per_category; ++m) {
        w.modes[c].push_back(near_archetype(c, spec.mode_similarity, "mode"));
      }
    }
  }
  for (std::size_t c = 0; c < spec.categories; ++c) {
    for (std::size_t j = 0; j < spec.confusers_per_category; ++j) {
      w.confusers[c].push_back(near_archetype(c, spec.confuser_similarity, "confuser"));
    }
  }
  for (std::size_t f = 0; f < spec.vocab_fillers; ++f) w.fillers.push_back(random_unit(spec.dim, rng));

  for (std::size_t c = 0; c < spec.categories; ++c) {
    w.vocabulary.entries.push_back({category_phrase(static_cast<CategoryId>(c)), w.archetypes[c]});
  }
  for (std::size_t c = 0; c < spec.categories; ++c) {
    for (std::size_t j = 0; j < w.confusers[c].size(); ++j) {
      const std::string phrase = "confuser_" + std::to_string(c) + "_" + std::to_string(j);
      w.vocabulary.entries.push_back({phrase, w.confusers[c][j]});
      w.planted.push_back({phrase, static_cast<CategoryId>(c), cosine(w.confusers[c][j], w.archetypes[c])});
    }
  }
  for (std::size_t f = 0; f < w.fillers.size(); ++f) {
    w.vocabulary.entries.push_back({"filler_" + std::to_string(f), w.fillers[f]});
  }
  return w;
}

Embedding noisy(const Embedding& base, double sigma, Rng& rng) {
  Embedding out = base;
  for (double& v : out.values()) v += sigma * rng.normal();
  return out;
}

Box random_box(Rng& rng) {
  const double w = 0.1 + 0.3 * rng.uniform();
  const double h = 0.1 + 0.3 * rng.uniform();
  const double x = (1.0 - w) * rng.uniform();
  const double y = (1.0 - h) * rng.uniform();
  return {x, y, x + w, y + h};
}

Box jittered(const Box& b, double jitter, Rng& rng) {
  const double w = b.x2 - b.x1;
  const double h = b.y2 - b.y1;
  auto shift = [&](double v, double size) {
    return std::clamp(v + jitter * size * (2.0 * rng.uniform() - 1.0), 0.0, 1.0);
  };
  Box out{shift(b.x1, w), shift(b.y1, h), shift(b.x2, w), shift(b.y2, h)};
  return out.valid() ? out : b;
}

struct SplitRequest {
  std::vector<std::size_t> own;    // categories labeled in this task
  std::vector<std::size_t> cross;  // categories planted unlabeled
  std::size_t images = 0;
  ImageId first_id = 0;
};

Dataset make_split(const TestbedSpec& spec, const World& w, const SplitRequest& req, Rng& rng,
                   std::vector<PlantedObject>& record) {
  Dataset ds;
  ds.dim = spec.dim;
  for (std::size_t c : req.own) {
    ds.categories.push_back({static_cast<CategoryId>(c), category_phrase(static_cast<CategoryId>(c))});
  }
  std::size_t confuser_pool = 0;
  for (std::size_t c : req.own) confuser_pool += w.confusers[c].size();

  for (std::size_t i = 0; i < req.images; ++i) {
    ImageSample img;
    img.id = req.first_id + static_cast<ImageId>(i);
    const std::size_t count =
        spec.min_proposals + rng.uniform_index(spec.max_proposals - spec.min_proposals + 1);

    auto add_object = [&](std::size_t category, bool labeled, PlantKind kind) {
      const std::size_t mode = rng.uniform_index(w.modes[category].size());
      const Embedding feature = noisy(w.modes[category][mode], spec.noise_sigma, rng);
      const Box gt = random_box(rng);
      const Box prop = jittered(gt, spec.box_jitter, rng);
      record.push_back({img.id, img.proposals.size(), kind, static_cast<CategoryId>(category), mode, gt});
      const auto id = static_cast<CategoryId>(category);
      img.proposals.push_back({feature, prop, labeled ? std::optional<CategoryId>(id) : std::nullopt});
      if (labeled) {
        GtInstance inst{id, gt, {}};
        for (std::size_t k = 0; k < spec.context_features; ++k) {
          inst.context.push_back(noisy(feature, spec.context_noise, rng));
        }
        img.instances.push_back(std::move(inst));
      }
    };

    for (std::size_t p = 0; p < count; ++p) {
      if (!rng.bernoulli(spec.background_fraction)) {
        add_object(req.own[rng.uniform_index(req.own.size())], true, PlantKind::Category);
        continue;
      }
      const bool confuser =
          confuser_pool > 0 && (w.fillers.empty() || rng.bernoulli(spec.confuser_object_rate));
      if (confuser) {
        std::size_t pick = rng.uniform_index(confuser_pool);
        std::size_t category = 0;
        for (std::size_t c : req.own) {
          if (pick < w.confusers[c].size()) {
            category = c;
            break;
          }
          pick -= w.confusers[c].size();
        }
        const Embedding feature = noisy(w.confusers[category][pick], spec.noise_sigma, rng);
        const Box box = random_box(rng);
        record.push_back({img.id, img.proposals.size(), PlantKind::Confuser,
                          static_cast<CategoryId>(category), pick, box});
        img.proposals.push_back({feature, box, std::nullopt});
      } else {
        Embedding base;
        std::size_t source = 0;
        if (w.fillers.empty()) {
          base = random_unit(spec.dim, rng);
        } else {
          source = rng.uniform_index(w.fillers.size());
          base = w.fillers[source];
        }
        const Embedding feature = noisy(base, spec.noise_sigma, rng);
        const Box box = random_box(rng);
        record.push_back({img.id, img.proposals.size(), PlantKind::Filler, -1, source, box});
        img.proposals.push_back({feature, box, std::nullopt});
      }
    }
    if (!req.cross.empty() && rng.bernoulli(spec.cross_plant_rate)) {
      add_object(req.cross[rng.uniform_index(req.cross.size())], false, PlantKind::CrossPlant);
    }
    ds.images.push_back(std::move(img));
  }
  return ds;
}

GeneratedTask assemble(const TestbedSpec& spec, const World& w, const std::vector<std::size_t>& own,
                       const std::vector<std::size_t>& cross, ImageId first_id, Rng& rng) {
  GeneratedTask task;
  task.vocabulary = w.vocabulary;
  task.planting.archetypes = w.archetypes;
  task.planting.confusers = w.planted;
  task.train = make_split(spec, w, {own, cross, spec.images, first_id}, rng, task.planting.train_objects);
  task.eval = make_split(spec, w, {own, cross, spec.eval_images, first_id + static_cast<ImageId>(spec.images)},
                         rng, task.planting.eval_objects);
  return task;
}

}  // namespace

GeneratedTask generate(const TestbedSpec& spec, Rng& rng) {
  spec.validate();
  const World w = build_world(spec, rng, std::nullopt);
  std::vector<std::size_t> all(spec.categories);
  for (std::size_t c = 0; c < all.size(); ++c) all[c] = c;
  return assemble(spec, w, all, {}, 0, rng);
}

GeneratedTask generate(const TestbedSpec& spec) {
  Rng rng(spec.seed);
  return generate(spec, rng);
}

PairedTasks make_paired_tasks(const TestbedSpec& spec, Rng& rng) {
  spec.validate();
  if (spec.categories < 2) fail(ErrorCode::Validation, "make_paired_tasks: need at least 2 categories");
  const std::size_t half = spec.categories / 2;
  const World w = build_world(spec, rng, std::make_pair(std::size_t{0}, half));

  std::vector<std::size_t> own_a;
  std::vector<std::size_t> own_b;
  for (std::size_t c = 0; c < spec.categories; ++c) (c < half ? own_a : own_b).push_back(c);

  constexpr ImageId kTaskBOffset = 1000000;
  PairedTasks out;
  out.a = assemble(spec, w, own_a, own_b, 0, rng);
  out.b = assemble(spec, w, own_b, own_a, kTaskBOffset, rng);

  out.union_eval.dim = spec.dim;
  out.union_eval.categories = out.a.eval.categories;
  out.union_eval.categories.insert(out.union_eval.categories.end(), out.b.eval.categories.begin(),
                                   out.b.eval.categories.end());
  for (const GeneratedTask* task : {&out.a, &out.b}) {
    std::vector<ImageSample> images = task->eval.images;
    for (const auto& obj : task->planting.eval_objects) {
      if (obj.kind != PlantKind::CrossPlant) continue;
      for (auto& img : images) {
        if (img.id != obj.image_id) continue;
        Proposal& prop = img.proposals[obj.proposal];
        prop.label = obj.category;
        img.instances.push_back({obj.category, obj.box, {}});
      }
    }
    out.union_eval.images.insert(out.union_eval.images.end(), images.begin(), images.end());
  }
  return out;
}

PairedTasks make_paired_tasks(const TestbedSpec& spec) {
  Rng rng(spec.seed);
  return make_paired_tasks(spec, rng);
}

}  // namespace visprompt

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "visprompt/dataset.hpp"
#include "visprompt/rng.hpp"
#include "visprompt/sim_dictionary.hpp"

namespace visprompt {

// Parameters of a synthetic embedding-space detection task. Every category
// has a unit-norm archetype (its "name" text embedding) and a few appearance
// modes around it; region features are modes plus Gaussian noise. Planted
// confusers are vocabulary phrases close to an archetype whose objects also
// appear unlabeled in the images.
struct TestbedSpec {
  std::size_t dim = 32;
  std::size_t categories = 2;
  double archetype_separation = 0.3;  // max pairwise archetype cosine
  std::size_t modes_per_category = 3;
  double mode_similarity = 0.75;      // cosine of each mode to its archetype
  double noise_sigma = 0.1;           // per-dimension feature noise
  std::size_t confusers_per_category = 4;
  double confuser_similarity = 0.8;   // cosine of each confuser to its archetype
  std::size_t images = 200;           // training split
  std::size_t eval_images = 100;
  std::size_t min_proposals = 4;
  std::size_t max_proposals = 12;
  double background_fraction = 0.6;
  double confuser_object_rate = 0.5;  // share of background objects that are confusers
  std::size_t vocab_fillers = 200;
  std::size_t context_features = 3;
  double context_noise = 0.05;
  double box_jitter = 0.1;
  // Paired tasks only.
  double cross_plant_rate = 0.6;
  double pair_similarity = 0.5;
  std::uint64_t seed = 0;

  // Throws Error(Validation) naming the violated bound.
  void validate() const;

  bool operator==(const TestbedSpec&) const = default;
};

enum class PlantKind { Category, Confuser, Filler, CrossPlant };

const char* to_string(PlantKind kind);
PlantKind plant_kind_from_string(const std::string& name);

// Where a proposal came from. `source` is the mode index for category and
// cross-planted objects, the confuser index within its category, or the
// filler index. `box` is the object's true extent (the ground-truth box
// for category and cross-planted objects).
struct PlantedObject {
  ImageId image_id = 0;
  std::size_t proposal = 0;
  PlantKind kind = PlantKind::Filler;
  CategoryId category = -1;
  std::size_t source = 0;
  Box box;

  bool operator==(const PlantedObject&) const = default;
};

struct PlantedConfuser {
  std::string phrase;
  CategoryId category = 0;
  double cosine = 0.0;  // to the category archetype

  bool operator==(const PlantedConfuser&) const = default;
};

struct PlantingRecord {
  std::vector<Embedding> archetypes;  // indexed by category id
  std::vector<PlantedConfuser> confusers;
  std::vector<PlantedObject> train_objects;
  std::vector<PlantedObject> eval_objects;

  bool operator==(const PlantingRecord&) const = default;
};

struct GeneratedTask {
  Dataset train;
  Dataset eval;
  Vocabulary vocabulary;
  PlantingRecord planting;

  bool operator==(const GeneratedTask&) const = default;
};

std::string category_phrase(CategoryId id);

GeneratedTask generate(const TestbedSpec& spec, Rng& rng);
GeneratedTask generate(const TestbedSpec& spec);

struct PairedTasks {
  GeneratedTask a;
  GeneratedTask b;
  // Eval splits of both tasks with every object of either task's categories
  // labeled, including the cross-planted ones.
  Dataset union_eval;

  bool operator==(const PairedTasks&) const = default;
};

/// Two tasks with disjoint categories sharing one vocabulary. Categories
/// [0, n/2) belong to task A and the rest to task B; the first archetypes of
/// the two tasks have cosine `pair_similarity`. With probability
/// `cross_plant_rate` an image also contains one unlabeled object of the
/// other task's categories.
PairedTasks make_paired_tasks(const TestbedSpec& spec, Rng& rng);
PairedTasks make_paired_tasks(const TestbedSpec& spec);

}  // namespace visprompt

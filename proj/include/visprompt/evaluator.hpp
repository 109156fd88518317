#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "visprompt/box.hpp"
#include "visprompt/dataset.hpp"
#include "visprompt/prompt_builder.hpp"

namespace visprompt {

struct Detection {
  ImageId image_id = 0;
  Box box;
  CategoryId category_id = 0;
  double score = 0.0;

  bool operator==(const Detection&) const = default;
};

// IoU thresholds 0.50, 0.55, ..., 0.95.
std::vector<double> coco_iou_thresholds();

/// COCO-style average precision for one category at one IoU threshold.
///
/// Detections are ranked by score (descending), then image id, then box
/// coordinates, so the result does not depend on input order. Each
/// detection claims the highest-IoU unmatched ground truth of its category
/// in the same image with IoU >= threshold. The precision envelope is
/// sampled at 101 recall points. Returns nullopt when the category has no
/// ground truth.
std::optional<double> average_precision(std::span<const Detection> detections,
                                        const Dataset& dataset, CategoryId category,
                                        double iou_threshold);

struct CategoryReport {
  CategoryId id = 0;
  std::string name;
  std::size_t gt_count = 0;
  std::size_t detection_count = 0;
  std::vector<double> ap;  // one per threshold; empty when gt_count == 0

  bool operator==(const CategoryReport&) const = default;
};

struct EvalReport {
  std::vector<double> thresholds;
  std::vector<CategoryReport> categories;
  double map = 0.0;
  double map50 = 0.0;
  std::size_t gt_total = 0;
  std::size_t detection_total = 0;

  bool operator==(const EvalReport&) const = default;
};

// Categories without ground truth are left out of the means.
EvalReport evaluate(std::span<const Detection> detections, const Dataset& dataset);

// Eval-mode detections: one per proposal, labeled with the arg-max prompt
// and scored logistic(max similarity). `max_per_image` of 0 keeps all.
std::vector<Detection> predict_detections(const Dataset& dataset,
                                          std::span<const VisualPrompt> prompts,
                                          std::size_t max_per_image = 0);

EvalReport evaluate_prompts(const Dataset& dataset, std::span<const VisualPrompt> prompts);

struct CombinedReport {
  std::vector<EvalReport> solo;
  EvalReport combined;
  double mean_solo_map = 0.0;
  double drop = 0.0;  // mean_solo_map - combined.map
};

// Each prompt set is first evaluated alone on its own dataset, then all sets
// are concatenated and evaluated on `union_dataset`.
CombinedReport combined_inference(const std::vector<std::vector<VisualPrompt>>& prompt_sets,
                                  const std::vector<Dataset>& solo_datasets,
                                  const Dataset& union_dataset);

// Concatenates datasets with disjoint category tables into one; image ids
// are renumbered consecutively in input order.
Dataset union_of(const std::vector<Dataset>& datasets);

}  // namespace visprompt

#include "visprompt/evaluator.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <tuple>

#include "visprompt/error.hpp"
#include "visprompt/losses.hpp"
#include "visprompt/scoring.hpp"

namespace visprompt {

std::vector<double> coco_iou_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back(static_cast<double>(50 + 5 * i) / 100.0);
  return t;
}

namespace {

bool ranks_before(const Detection& a, std::size_t ia, const Detection& b, std::size_t ib) {
  if (a.score != b.score) return a.score > b.score;
  return std::tie(a.image_id, a.box.x1, a.box.y1, a.box.x2, a.box.y2, ia) <
         std::tie(b.image_id, b.box.x1, b.box.y1, b.box.x2, b.box.y2, ib);
}

}  // namespace

std::optional<double> average_precision(std::span<const Detection> detections,
                                        const Dataset& dataset, CategoryId category,
                                        double iou_threshold) {
  std::map<ImageId, std::vector<Box>> gts;
  std::size_t gt_count = 0;
  for (const auto& img : dataset.images) {
    for (const auto& inst : img.instances) {
      if (inst.category != category) continue;
      gts[img.id].push_back(inst.box);
      ++gt_count;
    }
  }
  if (gt_count == 0) return std::nullopt;

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    if (detections[i].category_id == category) order.push_back(i);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ranks_before(detections[a], a, detections[b], b);
  });

  std::map<ImageId, std::vector<bool>> taken;
  for (const auto& [id, boxes] : gts) taken[id].assign(boxes.size(), false);

  std::vector<double> precision;
  std::vector<double> recall;
  precision.reserve(order.size());
  recall.reserve(order.size());
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t idx : order) {
    const Detection& det = detections[idx];
    bool matched = false;
    const auto it = gts.find(det.image_id);
    if (it != gts.end()) {
      auto& used = taken[det.image_id];
      double best = iou_threshold;
      std::optional<std::size_t> best_gt;
      for (std::size_t g = 0; g < it->second.size(); ++g) {
        if (used[g]) continue;
        const double v = iou(det.box, it->second[g]);
        if (v >= best && (!best_gt || v > best)) {
          best = v;
          best_gt = g;
        }
      }
      if (best_gt) {
        used[*best_gt] = true;
        matched = true;
      }
    }
    matched ? ++tp : ++fp;
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(gt_count));
  }

  // Precision envelope: non-increasing from the right.
  for (std::size_t i = precision.size(); i > 1; --i) {
    precision[i - 2] = std::max(precision[i - 2], precision[i - 1]);
  }
  double sum = 0.0;
  for (int r = 0; r <= 100; ++r) {
    const double level = static_cast<double>(r) / 100.0;
    const auto pos = std::lower_bound(recall.begin(), recall.end(), level);
    if (pos != recall.end()) sum += precision[static_cast<std::size_t>(pos - recall.begin())];
  }
  return sum / 101.0;
}

EvalReport evaluate(std::span<const Detection> detections, const Dataset& dataset) {
  if (dataset.images.empty()) fail(ErrorCode::Validation, "evaluate: dataset has no images");
  for (const auto& d : detections) {
    if (!dataset.has_category(d.category_id)) {
      fail(ErrorCode::Validation,
           "evaluate: detection for unknown category " + std::to_string(d.category_id));
    }
  }
  EvalReport report;
  report.thresholds = coco_iou_thresholds();
  report.detection_total = detections.size();

  double map_sum = 0.0;
  double map50_sum = 0.0;
  std::size_t scored = 0;
  for (const auto& category : dataset.categories) {
    CategoryReport cr;
    cr.id = category.id;
    cr.name = category.name;
    for (const auto& img : dataset.images) {
      for (const auto& inst : img.instances) cr.gt_count += inst.category == category.id ? 1 : 0;
    }
    for (const auto& d : detections) cr.detection_count += d.category_id == category.id ? 1 : 0;
    report.gt_total += cr.gt_count;
    if (cr.gt_count > 0) {
      for (double t : report.thresholds) {
        cr.ap.push_back(*average_precision(detections, dataset, category.id, t));
      }
      map_sum += std::accumulate(cr.ap.begin(), cr.ap.end(), 0.0) /
                 static_cast<double>(cr.ap.size());
      map50_sum += cr.ap.front();
      ++scored;
    }
    report.categories.push_back(std::move(cr));
  }
  if (scored > 0) {
    report.map = map_sum / static_cast<double>(scored);
    report.map50 = map50_sum / static_cast<double>(scored);
  }
  return report;
}

std::vector<Detection> predict_detections(const Dataset& dataset,
                                          std::span<const VisualPrompt> prompts,
                                          std::size_t max_per_image) {
  if (prompts.empty()) fail(ErrorCode::InvalidArgument, "predict_detections: no prompts");
  std::vector<CategorySlot> slots;
  for (const auto& p : prompts) slots.push_back(visual_slot(p));

  std::vector<Detection> detections;
  for (const auto& image : dataset.images) {
    const DetectionResult result = detector_forward(image, slots, ScoreMode::Eval, 1.0, nullptr);
    std::vector<Detection> per_image;
    for (const auto& proposal : result.proposals) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < proposal.slots.size(); ++c) {
        if (proposal.slots[c].score > proposal.slots[best].score) best = c;
      }
      per_image.push_back({image.id, proposal.box, prompts[best].category_id,
                           proposal.slots[best].probability});
    }
    if (max_per_image > 0 && per_image.size() > max_per_image) {
      std::stable_sort(per_image.begin(), per_image.end(),
                       [](const Detection& a, const Detection& b) { return a.score > b.score; });
      per_image.resize(max_per_image);
    }
    detections.insert(detections.end(), per_image.begin(), per_image.end());
  }
  return detections;
}

EvalReport evaluate_prompts(const Dataset& dataset, std::span<const VisualPrompt> prompts) {
  const std::vector<Detection> detections = predict_detections(dataset, prompts);
  return evaluate(detections, dataset);
}

CombinedReport combined_inference(const std::vector<std::vector<VisualPrompt>>& prompt_sets,
                                  const std::vector<Dataset>& solo_datasets,
                                  const Dataset& union_dataset) {
  if (prompt_sets.empty()) fail(ErrorCode::InvalidArgument, "combined_inference: no prompt sets");
  if (prompt_sets.size() != solo_datasets.size()) {
    fail(ErrorCode::InvalidArgument, "combined_inference: one dataset per prompt set required");
  }
  std::set<CategoryId> seen;
  std::vector<VisualPrompt> all;
  for (const auto& set : prompt_sets) {
    for (const auto& p : set) {
      if (!seen.insert(p.category_id).second) {
        fail(ErrorCode::Validation,
             "combined_inference: category " + std::to_string(p.category_id) +
                 " appears in more than one prompt set");
      }
      all.push_back(p);
    }
  }

  CombinedReport report;
  for (std::size_t i = 0; i < prompt_sets.size(); ++i) {
    report.solo.push_back(evaluate_prompts(solo_datasets[i], prompt_sets[i]));
    report.mean_solo_map += report.solo.back().map;
  }
  report.mean_solo_map /= static_cast<double>(prompt_sets.size());
  report.combined = evaluate_prompts(union_dataset, all);
  report.drop = report.mean_solo_map - report.combined.map;
  return report;
}

Dataset union_of(const std::vector<Dataset>& datasets) {
  Dataset out;
  std::set<CategoryId> ids;
  ImageId next_id = 0;
  for (const auto& d : datasets) {
    if (out.dim == 0) out.dim = d.dim;
    if (d.dim != out.dim) fail(ErrorCode::DimensionMismatch, "union_of: dimension mismatch");
    for (const auto& c : d.categories) {
      if (!ids.insert(c.id).second) {
        fail(ErrorCode::Validation, "union_of: category " + std::to_string(c.id) +
                                        " appears in more than one dataset");
      }
      out.categories.push_back(c);
    }
    for (auto img : d.images) {
      img.id = next_id++;
      out.images.push_back(std::move(img));
    }
  }
  return out;
}

}  // namespace visprompt

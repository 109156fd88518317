#include "visprompt/losses.hpp"

#include <algorithm>
#include <cmath>

#include "visprompt/error.hpp"
#include "visprompt/scoring.hpp"

namespace visprompt {

const char* to_string(AlignmentTerm term) {
  return term == AlignmentTerm::FullBce ? "full-bce" : "positive-only";
}

const char* to_string(BranchRule rule) {
  return rule == BranchRule::MatchedVsBackground ? "matched-vs-background" : "all-categories";
}

AlignmentTerm alignment_term_from_string(const std::string& name) {
  if (name == "full-bce") return AlignmentTerm::FullBce;
  if (name == "positive-only") return AlignmentTerm::PositiveTermOnly;
  fail(ErrorCode::Validation, "unknown alignment term '" + name + "'");
}

BranchRule branch_rule_from_string(const std::string& name) {
  if (name == "matched-vs-background") return BranchRule::MatchedVsBackground;
  if (name == "all-categories") return BranchRule::AllCategories;
  fail(ErrorCode::Validation, "unknown branch rule '" + name + "'");
}

namespace {

// log(1 + exp(x)) without overflow.
double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace

AlignmentResult alignment_loss(const ScoreMatrix& scores,
                               std::span<const std::optional<std::size_t>> targets,
                               std::size_t d_p, std::size_t d_n,
                               const AlignmentOptions& options) {
  if (scores.cols != d_p + d_n) {
    fail(ErrorCode::DimensionMismatch, "alignment_loss: score columns must equal d_p + d_n");
  }
  if (targets.size() != scores.rows) {
    fail(ErrorCode::DimensionMismatch, "alignment_loss: one target per region required");
  }
  if (d_p == 0) fail(ErrorCode::InvalidArgument, "alignment_loss: d_p must be >= 1");
  for (const auto& t : targets) {
    if (t && *t >= d_p) {
      fail(ErrorCode::InvalidArgument, "alignment_loss: target index " + std::to_string(*t) +
                                           " is not a visual-prompt category (d_p = " +
                                           std::to_string(d_p) + ")");
    }
  }

  AlignmentResult result;
  result.grad = ScoreMatrix(scores.rows, scores.cols);
  if (scores.rows == 0) return result;

  const double region_weight = 1.0 / static_cast<double>(scores.rows);
  double total = 0.0;
  for (std::size_t r = 0; r < scores.rows; ++r) {
    const bool matched = targets[r].has_value();
    const std::size_t used =
        (matched || options.branch == BranchRule::AllCategories) ? d_p + d_n : d_p;
    const double scale = region_weight / static_cast<double>(used);
    double region_loss = 0.0;
    for (std::size_t c = 0; c < used; ++c) {
      const double s = scores.at(r, c);
      const bool positive = matched && *targets[r] == c;
      double term = 0.0;
      double dterm = 0.0;
      // With binary y, -[y log sig(s) + (1-y) log(1 - sig(s))] is softplus(-s)
      // or softplus(s); the split form stays finite at infinite scores.
      if (positive) {
        term = softplus(-s);
        dterm = logistic(s) - 1.0;
      } else if (options.term == AlignmentTerm::FullBce) {
        term = softplus(s);
        dterm = logistic(s);
      }
      region_loss += term;
      result.grad.at(r, c) = dterm * scale;
    }
    total += region_loss / static_cast<double>(used);
  }
  result.loss = total * region_weight;
  return result;
}

namespace {

void require_valid(const Box& b, const char* context) {
  if (!b.valid()) fail(ErrorCode::InvalidArgument, std::string(context) + ": degenerate box");
}

double intersection_area(const Box& a, const Box& b) {
  const double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  return (w > 0.0 && h > 0.0) ? w * h : 0.0;
}

}  // namespace

double iou(const Box& a, const Box& b) {
  require_valid(a, "iou");
  require_valid(b, "iou");
  const double inter = intersection_area(a, b);
  return inter / (a.area() + b.area() - inter);
}

double giou(const Box& a, const Box& b) {
  require_valid(a, "giou");
  require_valid(b, "giou");
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  const Box hull{std::min(a.x1, b.x1), std::min(a.y1, b.y1), std::max(a.x2, b.x2),
                 std::max(a.y2, b.y2)};
  const double hull_area = hull.area();
  // The hull covers the union; clamp so round-off cannot push GIoU above IoU.
  return inter / uni - std::max(0.0, hull_area - uni) / hull_area;
}

LocalizationLoss localization_loss(std::span<const Box> pred_boxes, std::span<const Box> gt_boxes,
                                   std::span<const BoxMatch> matches) {
  LocalizationLoss out;
  if (matches.empty()) return out;
  for (const auto& [p, g] : matches) {
    if (p >= pred_boxes.size() || g >= gt_boxes.size()) {
      fail(ErrorCode::InvalidArgument, "localization_loss: match index out of range");
    }
    const Box& a = pred_boxes[p];
    const Box& b = gt_boxes[g];
    out.l1 += std::abs(a.x1 - b.x1) + std::abs(a.y1 - b.y1) + std::abs(a.x2 - b.x2) +
              std::abs(a.y2 - b.y2);
    out.giou_loss += 1.0 - giou(a, b);
  }
  const double inv = 1.0 / static_cast<double>(matches.size());
  out.l1 *= inv;
  out.giou_loss *= inv;
  return out;
}

}  // namespace visprompt

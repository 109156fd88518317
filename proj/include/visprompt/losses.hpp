#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "visprompt/box.hpp"

namespace visprompt {

// Row-major regions x categories matrix of logits or gradients.
struct ScoreMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  ScoreMatrix() = default;
  ScoreMatrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

// Per-category term of the alignment loss.
enum class AlignmentTerm {
  FullBce,           // -[y log s + (1-y) log(1-s)]
  PositiveTermOnly,  // -y log s, the literal single-term form
};

// Which categories enter the loss of a background region.
enum class BranchRule {
  MatchedVsBackground,  // background regions: visual-prompt categories only
  AllCategories,        // every region uses all D_p + D_n categories
};

const char* to_string(AlignmentTerm term);
const char* to_string(BranchRule rule);
AlignmentTerm alignment_term_from_string(const std::string& name);
BranchRule branch_rule_from_string(const std::string& name);

struct AlignmentOptions {
  AlignmentTerm term = AlignmentTerm::FullBce;
  BranchRule branch = BranchRule::MatchedVsBackground;
};

struct AlignmentResult {
  double loss = 0.0;
  ScoreMatrix grad;  // d loss / d score, same shape as the input
};

/// Sigmoid alignment loss over a batch of regions.
///
/// Columns [0, d_p) are visual-prompt categories, [d_p, d_p + d_n) negative
/// text prompts. targets[r] is the matched visual-prompt column, or empty for
/// a background region. A matched region averages its terms over all
/// d_p + d_n columns (negative columns have target 0); a background region
/// averages over the d_p visual-prompt columns only. The batch loss is the
/// mean over regions.
AlignmentResult alignment_loss(const ScoreMatrix& scores,
                               std::span<const std::optional<std::size_t>> targets,
                               std::size_t d_p, std::size_t d_n,
                               const AlignmentOptions& options = {});

double iou(const Box& a, const Box& b);
double giou(const Box& a, const Box& b);

struct LocalizationLoss {
  double l1 = 0.0;
  double giou_loss = 0.0;
};

// (pred index, gt index) pairs.
using BoxMatch = std::pair<std::size_t, std::size_t>;

// Mean per-match L1 corner distance and mean (1 - GIoU). Both zero when
// there are no matches.
LocalizationLoss localization_loss(std::span<const Box> pred_boxes, std::span<const Box> gt_boxes,
                                   std::span<const BoxMatch> matches);

}  // namespace visprompt

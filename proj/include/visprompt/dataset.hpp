#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "visprompt/box.hpp"
#include "visprompt/embedding.hpp"

namespace visprompt {

using CategoryId = int;
using ImageId = int;

struct Category {
  CategoryId id = 0;
  std::string name;

  bool operator==(const Category&) const = default;
};

// One region emitted by the frozen detector. `label` is the pre-assigned
// category, or empty for background.
struct Proposal {
  Embedding feature;
  Box box;
  std::optional<CategoryId> label;

  bool operator==(const Proposal&) const = default;
};

struct GtInstance {
  CategoryId category = 0;
  Box box;
  // Features of the enlarged crops around the instance, extracted upstream.
  std::vector<Embedding> context;

  bool operator==(const GtInstance&) const = default;
};

struct ImageSample {
  ImageId id = 0;
  std::vector<Proposal> proposals;
  std::vector<GtInstance> instances;

  bool operator==(const ImageSample&) const = default;
};

struct Dataset {
  std::size_t dim = 0;
  std::vector<Category> categories;
  std::vector<ImageSample> images;

  bool has_category(CategoryId id) const;
  const Category* find_category(CategoryId id) const;
  std::size_t proposal_count() const;

  // Throws Error(Validation / DimensionMismatch) naming the offending field.
  void validate() const;

  bool operator==(const Dataset&) const = default;
};

}  // namespace visprompt

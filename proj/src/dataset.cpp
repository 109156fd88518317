#include "visprompt/dataset.hpp"

#include <set>
#include <string>

#include "visprompt/error.hpp"

namespace visprompt {

bool Dataset::has_category(CategoryId id) const { return find_category(id) != nullptr; }

const Category* Dataset::find_category(CategoryId id) const {
  for (const auto& c : categories) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

std::size_t Dataset::proposal_count() const {
  std::size_t n = 0;
  for (const auto& img : images) n += img.proposals.size();
  return n;
}

namespace {

void check_embedding(const Embedding& e, std::size_t dim, const std::string& where) {
  if (e.size() != dim) {
    fail(ErrorCode::DimensionMismatch, where + ": expected dimension " + std::to_string(dim) +
                                           ", got " + std::to_string(e.size()));
  }
  if (!e.all_finite()) fail(ErrorCode::Validation, where + ": non-finite entry");
}

void check_box(const Box& b, const std::string& where) {
  if (!b.valid() || !b.inside_unit_square()) {
    fail(ErrorCode::Validation, where + ": box must satisfy 0<=x1<x2<=1 and 0<=y1<y2<=1");
  }
}

}  // namespace

void Dataset::validate() const {
  if (dim == 0) fail(ErrorCode::Validation, "dataset: dimension must be at least 1");
  std::set<CategoryId> ids;
  for (const auto& c : categories) {
    if (!ids.insert(c.id).second) {
      fail(ErrorCode::Validation, "dataset: duplicate category id " + std::to_string(c.id));
    }
  }
  std::set<ImageId> image_ids;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto& img = images[i];
    const std::string base = "images[" + std::to_string(i) + "]";
    if (!image_ids.insert(img.id).second) {
      fail(ErrorCode::Validation, base + ": duplicate image id " + std::to_string(img.id));
    }
    for (std::size_t p = 0; p < img.proposals.size(); ++p) {
      const auto& prop = img.proposals[p];
      const std::string where = base + ".proposals[" + std::to_string(p) + "]";
      check_embedding(prop.feature, dim, where + ".feature");
      check_box(prop.box, where + ".box");
      if (prop.label && !ids.contains(*prop.label)) {
        fail(ErrorCode::Validation,
             where + ".label: unknown category id " + std::to_string(*prop.label));
      }
    }
    for (std::size_t g = 0; g < img.instances.size(); ++g) {
      const auto& inst = img.instances[g];
      const std::string where = base + ".instances[" + std::to_string(g) + "]";
      check_box(inst.box, where + ".box");
      if (!ids.contains(inst.category)) {
        fail(ErrorCode::Validation,
             where + ".category: unknown category id " + std::to_string(inst.category));
      }
      for (std::size_t k = 0; k < inst.context.size(); ++k) {
        check_embedding(inst.context[k], dim, where + ".context[" + std::to_string(k) + "]");
      }
    }
  }
}

}  // namespace visprompt

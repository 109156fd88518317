#pragma once

namespace visprompt {

// Corner-format box in normalized image coordinates.
struct Box {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  bool valid() const noexcept { return x1 < x2 && y1 < y2; }
  bool inside_unit_square() const noexcept {
    return x1 >= 0.0 && y1 >= 0.0 && x2 <= 1.0 && y2 <= 1.0;
  }
  double area() const noexcept { return (x2 - x1) * (y2 - y1); }

  bool operator==(const Box&) const = default;
};

}  // namespace visprompt

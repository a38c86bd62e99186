#pragma once

#include <compare>
#include <string>
#include <vector>

namespace favar {

// Calendar quarter on the quarterly grid, e.g. "1959-Q1".
struct Quarter {
  int year = 0;
  int q = 1;  // 1..4

  // Accepts "1959-Q1" and "1959Q1" (case-insensitive Q).
  static Quarter parse(const std::string& text);

  static Quarter from_index(int index);
  int index() const { return year * 4 + (q - 1); }
  Quarter next() const { return from_index(index() + 1); }
  std::string str() const;

  auto operator<=>(const Quarter&) const = default;
};

// Inclusive grid [first, last], one entry per quarter.
std::vector<Quarter> quarter_range(Quarter first, Quarter last);

}  // namespace favar

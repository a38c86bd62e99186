#include "favar/dates.hpp"

#include <cctype>
#include <cstdio>

#include "favar/error.hpp"

namespace favar {

Quarter Quarter::parse(const std::string& text) {
  // YYYY-Qq or YYYYQq
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  size_t qpos = s.find_first_of("Qq");
  if (qpos == std::string::npos || qpos + 1 >= s.size())
    fail("bad quarter date '" + text + "' (want e.g. 1959-Q1)");
  std::string ypart = s.substr(0, qpos);
  if (!ypart.empty() && ypart.back() == '-') ypart.pop_back();
  if (ypart.empty()) fail("bad quarter date '" + text + "'");
  for (char c : ypart)
    if (!std::isdigit(static_cast<unsigned char>(c)))
      fail("bad quarter date '" + text + "'");
  std::string qpart = s.substr(qpos + 1);
  if (qpart.size() != 1 || qpart[0] < '1' || qpart[0] > '4')
    fail("bad quarter date '" + text + "' (quarter must be 1..4)");
  return Quarter{std::stoi(ypart), qpart[0] - '0'};
}

Quarter Quarter::from_index(int index) {
  int y = index / 4;
  int r = index % 4;
  if (r < 0) {
    r += 4;
    y -= 1;
  }
  return Quarter{y, r + 1};
}

std::string Quarter::str() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-Q%d", year, q);
  return buf;
}

std::vector<Quarter> quarter_range(Quarter first, Quarter last) {
  if (last < first) fail("quarter_range: last before first");
  std::vector<Quarter> out;
  out.reserve(static_cast<size_t>(last.index() - first.index() + 1));
  for (int i = first.index(); i <= last.index(); ++i)
    out.push_back(Quarter::from_index(i));
  return out;
}

}  // namespace favar

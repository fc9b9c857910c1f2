#include "memchan/grids.hpp"

#include <algorithm>
#include <cmath>

namespace memchan {

namespace {

void check_strictly_increasing_finite(const std::vector<double>& v, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) fail(Errc::invalid_params, std::string(what) + ": non-finite value");
    if (i > 0 && !(v[i] > v[i - 1]))
      fail(Errc::invalid_params, std::string(what) + ": values must be strictly increasing");
  }
}

}  // namespace

VoltageGrid::VoltageGrid(std::vector<double> levels) : levels_(std::move(levels)) {
  if (levels_.empty()) fail(Errc::invalid_params, "VoltageGrid: needs at least one level");
  check_strictly_increasing_finite(levels_, "VoltageGrid");
}

VoltageGrid VoltageGrid::linspace(double lo, double hi, std::size_t count) {
  if (count == 0) fail(Errc::invalid_params, "VoltageGrid::linspace: count must be >= 1");
  std::vector<double> levels(count);
  if (count == 1) {
    levels[0] = lo;
  } else {
    const double step = (hi - lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) levels[i] = lo + step * static_cast<double>(i);
    levels.back() = hi;
  }
  return VoltageGrid(std::move(levels));
}

std::size_t VoltageGrid::nearest(double v) const {
  const auto it = std::lower_bound(levels_.begin(), levels_.end(), v);
  if (it == levels_.begin()) return 0;
  if (it == levels_.end()) return levels_.size() - 1;
  const std::size_t hi = static_cast<std::size_t>(it - levels_.begin());
  const std::size_t lo = hi - 1;
  return (v - levels_[lo] <= levels_[hi] - v) ? lo : hi;
}

ResistanceGrid::ResistanceGrid(std::vector<double> edges) : edges_(std::move(edges)) {
  if (edges_.size() < 2) fail(Errc::invalid_params, "ResistanceGrid: needs at least 2 edges");
  check_strictly_increasing_finite(edges_, "ResistanceGrid");
}

ResistanceGrid ResistanceGrid::uniform_cells(double lo, double hi, std::size_t cells) {
  if (cells == 0) fail(Errc::invalid_params, "ResistanceGrid::uniform_cells: cells must be >= 1");
  if (!(hi > lo)) fail(Errc::invalid_params, "ResistanceGrid::uniform_cells: hi must exceed lo");
  std::vector<double> edges(cells + 1);
  const double step = (hi - lo) / static_cast<double>(cells);
  for (std::size_t i = 0; i <= cells; ++i) edges[i] = lo + step * static_cast<double>(i);
  edges.back() = hi;
  return ResistanceGrid(std::move(edges));
}

bool ResistanceGrid::is_uniform(double rel_tol) const noexcept {
  const double span = edges_.back() - edges_.front();
  const double step = span / static_cast<double>(cell_count());
  for (std::size_t j = 0; j < cell_count(); ++j) {
    if (std::abs(cell_width(j) - step) > rel_tol * span) return false;
  }
  return true;
}

std::size_t ResistanceGrid::cell_of(double x) const {
  const auto it = std::upper_bound(edges_.begin(), edges_.end(), x);
  if (it == edges_.begin()) return 0;
  const std::size_t j = static_cast<std::size_t>(it - edges_.begin()) - 1;
  return std::min(j, cell_count() - 1);
}

}  // namespace memchan

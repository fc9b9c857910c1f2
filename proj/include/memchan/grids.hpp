#pragma once

#include <cstddef>
#include <vector>

#include "memchan/errors.hpp"

namespace memchan {

// Write-voltage axis (volts). Levels are strictly increasing and finite.
class VoltageGrid {
 public:
  explicit VoltageGrid(std::vector<double> levels);

  static VoltageGrid linspace(double lo, double hi, std::size_t count);

  std::size_t size() const noexcept { return levels_.size(); }
  double operator[](std::size_t i) const { return levels_[i]; }
  const std::vector<double>& levels() const noexcept { return levels_; }

  // Index of the grid level closest to v; ties go to the lower level.
  std::size_t nearest(double v) const;

  bool operator==(const VoltageGrid&) const = default;

 private:
  std::vector<double> levels_;
};

// Read axis in log10 ohms. Stores cell edges: channel columns are the cells
// between consecutive edges, so a grid with n+1 edges carries n cells.
// Grids produced by the KDE and synthetic-channel builders are uniformly
// spaced; discretization to read thresholds yields non-uniform cells.
class ResistanceGrid {
 public:
  explicit ResistanceGrid(std::vector<double> edges);

  // Uniform grid with `cells` cells covering [lo, hi].
  static ResistanceGrid uniform_cells(double lo, double hi, std::size_t cells);

  std::size_t edge_count() const noexcept { return edges_.size(); }
  std::size_t cell_count() const noexcept { return edges_.size() - 1; }
  double edge(std::size_t i) const { return edges_[i]; }
  const std::vector<double>& edges() const noexcept { return edges_; }

  double lo() const noexcept { return edges_.front(); }
  double hi() const noexcept { return edges_.back(); }
  double cell_center(std::size_t j) const { return 0.5 * (edges_[j] + edges_[j + 1]); }
  double cell_width(std::size_t j) const { return edges_[j + 1] - edges_[j]; }

  bool is_uniform(double rel_tol = 1e-9) const noexcept;

  // Cell whose center interval contains x, clamped to [0, cell_count() - 1].
  std::size_t cell_of(double x) const;

  bool operator==(const ResistanceGrid&) const = default;

 private:
  std::vector<double> edges_;
};

}  // namespace memchan

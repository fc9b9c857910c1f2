#pragma once

#include <cstddef>
#include <vector>

#include "memchan/errors.hpp"

namespace memchan {

// Discretized scalar source: grid of symbol values with cell masses.
// For the Gaussian builder the grid is rescaled so that the discrete mean
// and variance match the nominal parameters exactly; tail truncation then
// cannot bias variance-normalized metrics like SNR.
struct SourceModel {
  double mean = 0.0;
  double variance = 1.0;  // exact discrete variance after moment matching
  std::vector<double> grid;
  std::vector<double> weights;

  static SourceModel gaussian(double mean, double variance, std::size_t points = 1000,
                              double span_sigmas = 4.0);

  std::size_t size() const noexcept { return grid.size(); }
  void validate() const;
};

}  // namespace memchan

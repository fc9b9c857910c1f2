#include "memchan/source_model.hpp"

#include <cmath>

namespace memchan {

SourceModel SourceModel::gaussian(double mean, double variance, std::size_t points,
                                  double span_sigmas) {
  if (points < 2) fail(Errc::invalid_params, "SourceModel::gaussian: need at least 2 grid points");
  if (!(variance > 0.0)) fail(Errc::invalid_params, "SourceModel::gaussian: variance must be positive");
  if (!(span_sigmas > 0.0)) fail(Errc::invalid_params, "SourceModel::gaussian: span must be positive");

  const double sigma = std::sqrt(variance);
  const double lo = mean - span_sigmas * sigma;
  const double hi = mean + span_sigmas * sigma;
  const double step = (hi - lo) / static_cast<double>(points - 1);

  SourceModel src;
  src.mean = mean;
  src.variance = variance;
  src.grid.resize(points);
  src.weights.resize(points);

  const auto cdf = [&](double x) { return 0.5 * std::erfc(-(x - mean) / (sigma * std::sqrt(2.0))); };
  double total = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    src.grid[i] = lo + step * static_cast<double>(i);
    const double a = src.grid[i] - 0.5 * step;
    const double b = src.grid[i] + 0.5 * step;
    src.weights[i] = cdf(b) - cdf(a);
    total += src.weights[i];
  }
  for (auto& w : src.weights) w /= total;

  // Moment-match the truncated grid to the nominal mean and variance.
  double m1 = 0.0;
  for (std::size_t i = 0; i < points; ++i) m1 += src.weights[i] * src.grid[i];
  double m2 = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    const double d = src.grid[i] - m1;
    m2 += src.weights[i] * d * d;
  }
  const double scale = std::sqrt(variance / m2);
  for (auto& x : src.grid) x = mean + (x - m1) * scale;
  return src;
}

void SourceModel::validate() const {
  if (grid.size() < 2 || grid.size() != weights.size())
    fail(Errc::invalid_params, "SourceModel: grid and weights must match and hold >= 2 points");
  double sum = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i > 0 && !(grid[i] > grid[i - 1]))
      fail(Errc::invalid_params, "SourceModel: grid must be strictly increasing");
    if (weights[i] < 0.0) fail(Errc::invalid_params, "SourceModel: negative weight");
    sum += weights[i];
  }
  if (std::abs(sum - 1.0) > 1e-9) fail(Errc::invalid_params, "SourceModel: weights must sum to 1");
}

}  // namespace memchan

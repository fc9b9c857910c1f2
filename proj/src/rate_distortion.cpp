#include "memchan/rate_distortion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace memchan {

namespace {

double snr_db_of(double variance, double mse) {
  if (mse <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(variance / mse);
}

std::string short_num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", x);
  return buf;
}

}  // namespace

RDPoint gaussian_rd_bound(double variance, double rate_bits) {
  if (rate_bits < 0.0) fail(Errc::negative_rate, "gaussian_rd_bound: rate must be >= 0");
  if (!(variance > 0.0)) fail(Errc::invalid_params, "gaussian_rd_bound: variance must be positive");
  RDPoint pt;
  pt.rate_devices_per_symbol = rate_bits;
  pt.mse = variance * std::exp2(-2.0 * rate_bits);
  pt.snr_db = snr_db_of(variance, pt.mse);
  pt.label = "gaussian_rd_bound";
  return pt;
}

std::vector<RDPoint> separate_bound_curve(double capacity_bits_per_device,
                                          std::span<const double> rates_devices_per_symbol,
                                          double variance) {
  if (!(capacity_bits_per_device > 0.0))
    fail(Errc::invalid_params, "separate_bound_curve: capacity must be positive");
  std::vector<RDPoint> out;
  out.reserve(rates_devices_per_symbol.size());
  for (double m : rates_devices_per_symbol) {
    RDPoint pt = gaussian_rd_bound(variance, m * capacity_bits_per_device);
    pt.rate_devices_per_symbol = m;
    pt.label = "separate C=" + short_num(capacity_bits_per_device);
    out.push_back(std::move(pt));
  }
  return out;
}

Quantizer lloyd_max(const SourceModel& src, std::size_t n_levels, double tol,
                    std::size_t max_iter) {
  src.validate();
  if (n_levels < 1) fail(Errc::invalid_params, "lloyd_max: n_levels must be >= 1");
  if (!(tol > 0.0)) fail(Errc::invalid_params, "lloyd_max: tol must be positive");

  const std::size_t n = src.size();

  // Start levels at the (k + 0.5)/n_levels quantiles of the source.
  std::vector<double> levels(n_levels);
  {
    std::size_t i = 0;
    double cum = 0.0;
    for (std::size_t k = 0; k < n_levels; ++k) {
      const double target = (static_cast<double>(k) + 0.5) / static_cast<double>(n_levels);
      while (i + 1 < n && cum + src.weights[i] < target) cum += src.weights[i++];
      levels[k] = src.grid[i];
    }
    // Collapse of initial levels is possible on coarse grids; spread them.
    for (std::size_t k = 1; k < n_levels; ++k) {
      if (levels[k] <= levels[k - 1]) levels[k] = std::nextafter(levels[k - 1], src.grid.back() + 1.0);
    }
  }

  Quantizer q;
  std::vector<double> boundaries(n_levels >= 1 ? n_levels - 1 : 0);
  std::vector<double> mass(n_levels), moment(n_levels);

  for (std::size_t iter = 1; iter <= max_iter; ++iter) {
    for (std::size_t k = 0; k + 1 < n_levels; ++k) boundaries[k] = 0.5 * (levels[k] + levels[k + 1]);

    std::fill(mass.begin(), mass.end(), 0.0);
    std::fill(moment.begin(), moment.end(), 0.0);
    std::size_t region = 0;
    for (std::size_t i = 0; i < n; ++i) {
      while (region < boundaries.size() && src.grid[i] > boundaries[region]) ++region;
      mass[region] += src.weights[i];
      moment[region] += src.weights[i] * src.grid[i];
    }

    double max_move = 0.0;
    for (std::size_t k = 0; k < n_levels; ++k) {
      if (mass[k] <= 0.0) continue;  // empty region keeps its level
      const double centroid = moment[k] / mass[k];
      max_move = std::max(max_move, std::abs(centroid - levels[k]));
      levels[k] = centroid;
    }
    q.iterations = iter;
    if (max_move < tol) {
      q.converged = true;
      break;
    }
  }

  for (std::size_t k = 0; k + 1 < n_levels; ++k) boundaries[k] = 0.5 * (levels[k] + levels[k + 1]);

  double mse = 0.0;
  std::size_t region = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (region < boundaries.size() && src.grid[i] > boundaries[region]) ++region;
    const double d = src.grid[i] - levels[region];
    mse += src.weights[i] * d * d;
  }

  q.levels = std::move(levels);
  q.boundaries = std::move(boundaries);
  q.distortion = mse;
  return q;
}

std::vector<RDPoint> comparison_report(std::span<const CodingResult> joint_results,
                                       std::span<const double> capacities,
                                       std::span<const std::size_t> quantizer_levels,
                                       const SourceModel& src) {
  if (capacities.empty() && joint_results.empty() && quantizer_levels.empty())
    fail(Errc::invalid_params, "comparison_report: nothing to report");
  src.validate();

  std::vector<RDPoint> out;
  for (const auto& res : joint_results) {
    RDPoint pt;
    pt.rate_devices_per_symbol = 1.0;  // block length 1, symbol by symbol
    pt.mse = res.mse;
    pt.snr_db = res.snr_db;
    pt.label = "joint " + to_string(res.variant);
    out.push_back(std::move(pt));
  }

  for (double c : capacities) {
    RDPoint pt = gaussian_rd_bound(src.variance, c);
    pt.rate_devices_per_symbol = 1.0;
    pt.label = "separate C=" + short_num(c);
    out.push_back(std::move(pt));
  }

  const double ref_capacity = capacities.empty() ? 0.0 : capacities.front();
  for (std::size_t n : quantizer_levels) {
    if (n < 1) fail(Errc::invalid_params, "comparison_report: quantizer levels must be >= 1");
    const Quantizer q = lloyd_max(src, n);
    RDPoint pt;
    pt.rate_devices_per_symbol =
        ref_capacity > 0.0 ? std::log2(static_cast<double>(n)) / ref_capacity : 1.0;
    pt.mse = q.distortion;
    pt.snr_db = snr_db_of(src.variance, q.distortion);
    pt.label = "scalar-quantized n=" + std::to_string(n);
    out.push_back(std::move(pt));
  }
  return out;
}

}  // namespace memchan

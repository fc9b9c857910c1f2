#include "memchan/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace memchan {

namespace {

constexpr double kRowSumTol = 1e-9;

// Cell masses below this are flushed to zero when building channels: they
// are far below any capacity tolerance, and subnormal matrix entries make
// the capacity inner loops pay the denormal-arithmetic penalty.
constexpr double kTinyMass = 1e-250;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Linear-interpolated quantile on sorted data.
double quantile_sorted(const std::vector<double>& x, double p) {
  const double pos = p * static_cast<double>(x.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= x.size()) return x.back();
  const double frac = pos - static_cast<double>(lo);
  return x[lo] + frac * (x[lo + 1] - x[lo]);
}

// Silverman's rule of thumb on log10 values. Falls back to half the mean
// cell width when the sample spread is degenerate.
double silverman_bandwidth(std::vector<double> x, double fallback) {
  const std::size_t n = x.size();
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  std::sort(x.begin(), x.end());
  const double iqr = quantile_sorted(x, 0.75) - quantile_sorted(x, 0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  const double h = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
  return h > 0.0 ? h : fallback;
}

// Masses of N(mu, sigma^2) integrated over the grid cells, renormalized.
void gaussian_cell_masses(double mu, double sigma, const ResistanceGrid& grid, double* out) {
  const std::size_t cells = grid.cell_count();
  double prev = normal_cdf((grid.edge(0) - mu) / sigma);
  double total = 0.0;
  for (std::size_t j = 0; j < cells; ++j) {
    const double next = normal_cdf((grid.edge(j + 1) - mu) / sigma);
    out[j] = next - prev;
    if (out[j] < kTinyMass) out[j] = 0.0;
    total += out[j];
    prev = next;
  }
  if (total <= 0.0) {
    // All mass fell outside the grid; put it in the nearest boundary cell.
    std::fill(out, out + cells, 0.0);
    out[mu <= grid.lo() ? 0 : cells - 1] = 1.0;
    return;
  }
  for (std::size_t j = 0; j < cells; ++j) out[j] /= total;
}

}  // namespace

ConditionalChannel::ConditionalChannel(VoltageGrid v_grid, ResistanceGrid r_grid,
                                       std::vector<double> row_major)
    : v_grid_(std::move(v_grid)), r_grid_(std::move(r_grid)), matrix_(std::move(row_major)) {
  const std::size_t n = v_grid_.size();
  const std::size_t m = r_grid_.cell_count();
  if (matrix_.size() != n * m)
    fail(Errc::dimension_mismatch, "ConditionalChannel: matrix size " + std::to_string(matrix_.size()) +
                                       " != rows*cols " + std::to_string(n * m));
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double p = matrix_[i * m + j];
      if (!std::isfinite(p) || p < 0.0)
        fail(Errc::degenerate_channel, "ConditionalChannel: row " + std::to_string(i) +
                                           " has a negative or non-finite entry");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kRowSumTol)
      fail(Errc::degenerate_channel,
           "ConditionalChannel: row " + std::to_string(i) + " sums to " + std::to_string(sum));
  }
}

ConditionalChannel ConditionalChannel::from_matrix(const std::vector<std::vector<double>>& rows) {
  if (rows.empty() || rows.front().empty())
    fail(Errc::invalid_params, "from_matrix: matrix must be non-empty");
  const std::size_t m = rows.front().size();
  std::vector<double> flat;
  flat.reserve(rows.size() * m);
  for (const auto& r : rows) {
    if (r.size() != m) fail(Errc::dimension_mismatch, "from_matrix: ragged rows");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  std::vector<double> v(rows.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  std::vector<double> e(m + 1);
  for (std::size_t j = 0; j <= m; ++j) e[j] = static_cast<double>(j);
  return ConditionalChannel(VoltageGrid(std::move(v)), ResistanceGrid(std::move(e)), std::move(flat));
}

void SynthPcmParams::validate() const {
  if (!(r_set < r_max)) fail(Errc::invalid_params, "SynthPcmParams: r_set must be below r_max");
  if (!(v_onset < v_melt)) fail(Errc::invalid_params, "SynthPcmParams: v_onset must be below v_melt");
  if (!(noise_floor > 0.0)) fail(Errc::invalid_params, "SynthPcmParams: noise_floor must be positive");
  if (noise_slope < 0.0) fail(Errc::invalid_params, "SynthPcmParams: noise_slope must be non-negative");
  if (dip_depth < 0.0) fail(Errc::invalid_params, "SynthPcmParams: dip_depth must be non-negative");
  if (!(slope1 > 0.0) || !(slope2 > 0.0)) fail(Errc::invalid_params, "SynthPcmParams: slopes must be positive");
}

double SynthPcmParams::mean_log10_r(double v) const {
  const auto logistic = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  const double rise = 0.5 * (logistic(slope1 * (v - v_onset)) + logistic(slope2 * (v - v_melt)));
  const double w = (v_melt - v_onset) / 4.0;
  const double z = (v - v_melt) / w;
  const double bump = std::exp(-0.5 * z * z);
  return r_set + (r_max - r_set) * rise - dip_depth * bump;
}

double SynthPcmParams::sigma_log10_r(double v) const {
  return noise_floor + noise_slope * std::max(0.0, v - v_onset);
}

ConditionalChannel estimate_kde(const MeasurementSet& measurements, const VoltageGrid& v_grid,
                                const ResistanceGrid& r_grid, std::optional<double> bandwidth) {
  if (bandwidth && !(*bandwidth > 0.0))
    fail(Errc::invalid_params, "estimate_kde: bandwidth must be positive");

  // Nearest-level assignment of log10 resistances.
  std::vector<std::vector<double>> bins(v_grid.size());
  for (const auto& rec : measurements.records) {
    if (!(rec.resistance_ohms > 0.0) || !std::isfinite(rec.resistance_ohms))
      fail(Errc::non_positive_resistance,
           "estimate_kde: non-positive resistance for device " + std::to_string(rec.device_id));
    bins[v_grid.nearest(rec.v_wl)].push_back(std::log10(rec.resistance_ohms));
  }

  const std::size_t cells = r_grid.cell_count();
  const double mean_cell_width = (r_grid.hi() - r_grid.lo()) / static_cast<double>(cells);
  std::vector<double> matrix(v_grid.size() * cells, 0.0);
  std::vector<double> cdf(r_grid.edge_count());

  for (std::size_t i = 0; i < v_grid.size(); ++i) {
    const auto& x = bins[i];
    if (x.size() < 2)
      fail(Errc::empty_voltage_bin, "estimate_kde: grid level " + std::to_string(i) + " (" +
                                        std::to_string(v_grid[i]) + " V) has " +
                                        std::to_string(x.size()) + " records, needs >= 2");
    const double h = bandwidth ? *bandwidth : silverman_bandwidth(x, 0.5 * mean_cell_width);

    // Sum the per-sample kernel CDFs at every cell edge, then difference.
    std::fill(cdf.begin(), cdf.end(), 0.0);
    for (double xi : x) {
      for (std::size_t e = 0; e < cdf.size(); ++e) cdf[e] += normal_cdf((r_grid.edge(e) - xi) / h);
    }
    double* row = matrix.data() + i * cells;
    double total = 0.0;
    for (std::size_t j = 0; j < cells; ++j) {
      row[j] = cdf[j + 1] - cdf[j];
      if (row[j] < kTinyMass) row[j] = 0.0;
      total += row[j];
    }
    if (total <= 0.0)
      fail(Errc::empty_voltage_bin,
           "estimate_kde: all density for grid level " + std::to_string(i) + " falls outside r_grid");
    for (std::size_t j = 0; j < cells; ++j) row[j] /= total;
  }
  return ConditionalChannel(v_grid, r_grid, std::move(matrix));
}

ConditionalChannel synth_pcm_channel(const SynthPcmParams& params, const VoltageGrid& v_grid,
                                     const ResistanceGrid& r_grid) {
  params.validate();
  const std::size_t cells = r_grid.cell_count();
  std::vector<double> matrix(v_grid.size() * cells);
  for (std::size_t i = 0; i < v_grid.size(); ++i) {
    const double v = v_grid[i];
    gaussian_cell_masses(params.mean_log10_r(v), params.sigma_log10_r(v), r_grid,
                         matrix.data() + i * cells);
  }
  return ConditionalChannel(v_grid, r_grid, std::move(matrix));
}

ConditionalChannel discretize_reads(const ConditionalChannel& ch, std::span<const double> thresholds) {
  const ResistanceGrid& grid = ch.r_grid();
  for (std::size_t k = 0; k < thresholds.size(); ++k) {
    if (k > 0 && !(thresholds[k] > thresholds[k - 1]))
      fail(Errc::unsorted_thresholds, "discretize_reads: thresholds must be strictly increasing");
    if (!(thresholds[k] > grid.lo()) || !(thresholds[k] < grid.hi()))
      fail(Errc::threshold_out_of_range,
           "discretize_reads: threshold " + std::to_string(thresholds[k]) + " outside (" +
               std::to_string(grid.lo()) + ", " + std::to_string(grid.hi()) + ")");
  }

  const std::size_t cells = ch.cols();
  const std::size_t super = thresholds.size() + 1;
  // Super-cell of each original cell, by cell center.
  std::vector<std::size_t> dest(cells);
  for (std::size_t j = 0; j < cells; ++j) {
    dest[j] = static_cast<std::size_t>(
        std::upper_bound(thresholds.begin(), thresholds.end(), grid.cell_center(j)) -
        thresholds.begin());
  }

  std::vector<double> matrix(ch.rows() * super, 0.0);
  for (std::size_t i = 0; i < ch.rows(); ++i) {
    const auto row = ch.row(i);
    double* out = matrix.data() + i * super;
    for (std::size_t j = 0; j < cells; ++j) out[dest[j]] += row[j];
  }

  std::vector<double> edges;
  edges.reserve(super + 1);
  edges.push_back(grid.lo());
  edges.insert(edges.end(), thresholds.begin(), thresholds.end());
  edges.push_back(grid.hi());
  return ConditionalChannel(ch.v_grid(), ResistanceGrid(std::move(edges)), std::move(matrix));
}

ConditionalChannel restrict_writes(const ConditionalChannel& ch, std::span<const std::size_t> indices) {
  if (indices.empty()) fail(Errc::empty_index_set, "restrict_writes: empty write-level selection");
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  std::sort(idx.begin(), idx.end());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] >= ch.rows())
      fail(Errc::index_out_of_range, "restrict_writes: index " + std::to_string(idx[k]) +
                                         " >= row count " + std::to_string(ch.rows()));
    if (k > 0 && idx[k] == idx[k - 1])
      fail(Errc::invalid_params, "restrict_writes: duplicate index " + std::to_string(idx[k]));
  }
  std::vector<double> levels(idx.size());
  std::vector<double> matrix(idx.size() * ch.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    levels[k] = ch.v_grid()[idx[k]];
    const auto row = ch.row(idx[k]);
    std::copy(row.begin(), row.end(), matrix.begin() + static_cast<std::ptrdiff_t>(k * ch.cols()));
  }
  return ConditionalChannel(VoltageGrid(std::move(levels)), ch.r_grid(), std::move(matrix));
}

MeasurementSet sample_synth_measurements(const SynthPcmParams& params, const VoltageGrid& v_grid,
                                         std::size_t trials_per_level, std::uint64_t seed) {
  params.validate();
  std::mt19937_64 rng(seed);
  MeasurementSet out;
  out.records.reserve(v_grid.size() * trials_per_level);
  for (std::size_t i = 0; i < v_grid.size(); ++i) {
    const double v = v_grid[i];
    std::normal_distribution<double> dist(params.mean_log10_r(v), params.sigma_log10_r(v));
    for (std::size_t t = 0; t < trials_per_level; ++t) {
      const std::int64_t device = static_cast<std::int64_t>(t % 100);
      out.records.push_back({device, v, std::pow(10.0, dist(rng))});
    }
  }
  return out;
}

}  // namespace memchan

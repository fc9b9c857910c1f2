#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "memchan/grids.hpp"

namespace memchan {

struct Measurement {
  std::int64_t device_id = 0;
  double v_wl = 0.0;             // volts
  double resistance_ohms = 0.0;  // linear ohms, > 0
};

struct MeasurementSet {
  std::vector<Measurement> records;
};

// Conditional distribution P(R|V): one row per write level, one column per
// read cell of the resistance grid. Rows sum to 1 within 1e-9.
class ConditionalChannel {
 public:
  ConditionalChannel(VoltageGrid v_grid, ResistanceGrid r_grid, std::vector<double> row_major);

  // Channel with index-valued grids, for matrices that do not come from a
  // physical device (test channels, capacity-only inputs).
  static ConditionalChannel from_matrix(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return v_grid_.size(); }
  std::size_t cols() const noexcept { return r_grid_.cell_count(); }
  double at(std::size_t i, std::size_t j) const { return matrix_[i * cols() + j]; }
  std::span<const double> row(std::size_t i) const { return {matrix_.data() + i * cols(), cols()}; }
  const std::vector<double>& matrix() const noexcept { return matrix_; }

  const VoltageGrid& v_grid() const noexcept { return v_grid_; }
  const ResistanceGrid& r_grid() const noexcept { return r_grid_; }

 private:
  VoltageGrid v_grid_;
  ResistanceGrid r_grid_;
  std::vector<double> matrix_;  // row-major, rows() x cols()
};

// Synthetic PCM surrogate. Mean log10-resistance follows a double sigmoid
// with an optional Gaussian dip near the melt voltage:
//
//   mu(v)    = r_set + (r_max - r_set) * 0.5 * (sig1(v) + sig2(v)) - dip_depth * bump(v)
//   sig1(v)  = logistic(slope1 * (v - v_onset))      first rise, onset of the amorphous cap
//   sig2(v)  = logistic(slope2 * (v - v_melt))       second rise, full melt
//   bump(v)  = exp(-0.5 * ((v - v_melt) / w)^2),  w = (v_melt - v_onset) / 4
//   sigma(v) = noise_floor + noise_slope * max(0, v - v_onset)
//
// Each row is the N(mu(v), sigma(v)^2) density integrated over the grid
// cells and renormalized.
struct SynthPcmParams {
  double r_set = 3.5;        // log10 ohms, low-resistance plateau
  double r_max = 6.0;        // log10 ohms, high plateau
  double v_onset = 1.0;      // volts
  double v_melt = 2.4;       // volts
  double slope1 = 6.0;       // 1/volt
  double slope2 = 8.0;       // 1/volt
  double noise_floor = 0.15; // log10-ohm std dev
  double noise_slope = 0.05; // log10-ohm std dev per volt above onset
  double dip_depth = 0.5;    // log10 ohms; 0 disables the dip

  void validate() const;
  double mean_log10_r(double v) const;
  double sigma_log10_r(double v) const;
};

// Gaussian KDE of P(R|V) from measurements. Records are assigned to the
// nearest v_grid level; density is estimated in log10 ohms per level and
// integrated over the r_grid cells. bandwidth: log10-ohm kernel width, or
// nullopt for Silverman's rule per row.
ConditionalChannel estimate_kde(const MeasurementSet& measurements, const VoltageGrid& v_grid,
                                const ResistanceGrid& r_grid,
                                std::optional<double> bandwidth = std::nullopt);

ConditionalChannel synth_pcm_channel(const SynthPcmParams& params, const VoltageGrid& v_grid,
                                     const ResistanceGrid& r_grid);

// Marginalize read cells into the k+1 super-cells induced by k thresholds
// (log10 ohms, strictly increasing, within the grid range). A cell belongs
// to the super-cell containing its center, so thresholds effectively snap
// to cell edges.
ConditionalChannel discretize_reads(const ConditionalChannel& ch, std::span<const double> thresholds);

// Channel restricted to the selected write levels (rows), same columns.
ConditionalChannel restrict_writes(const ConditionalChannel& ch, std::span<const std::size_t> indices);

// Draw `trials_per_level` resistance samples per grid level from the
// synthetic model. Used to produce replay datasets shaped like a pulsed
// array measurement.
MeasurementSet sample_synth_measurements(const SynthPcmParams& params, const VoltageGrid& v_grid,
                                         std::size_t trials_per_level, std::uint64_t seed);

}  // namespace memchan

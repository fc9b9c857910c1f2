#pragma once

#include <span>
#include <string>
#include <vector>

#include "memchan/joint_coding.hpp"
#include "memchan/source_model.hpp"

namespace memchan {

struct RDPoint {
  double rate_devices_per_symbol = 0.0;
  double mse = 0.0;
  double snr_db = 0.0;
  std::string label;
};

// MSE-optimal scalar quantizer from Lloyd iteration on the discrete source
// grid. Boundaries are exact midpoints of adjacent levels.
struct Quantizer {
  std::vector<double> levels;
  std::vector<double> boundaries;
  double distortion = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
};

// Shannon bound for a Gaussian source: D = variance * 2^(-2 rate), so
// SNR = 20 log10(2) * rate ~ 6.0206 dB per bit. The returned point's rate
// field carries rate_bits (bits/symbol).
RDPoint gaussian_rd_bound(double variance, double rate_bits);

// Separate-coding bound at rate m devices/symbol through a capacity-C
// device: the effective source-code budget is m*C bits/symbol.
std::vector<RDPoint> separate_bound_curve(double capacity_bits_per_device,
                                          std::span<const double> rates_devices_per_symbol,
                                          double variance);

Quantizer lloyd_max(const SourceModel& src, std::size_t n_levels, double tol = 1e-10,
                    std::size_t max_iter = 10000);

// Merged comparison table: joint variants at 1 device/symbol, the separate
// bound per capacity, and hybrid points (ideal channel coding at the
// reference capacity + Lloyd scalar quantization at the given level
// counts). The first capacity is the reference for hybrid rates.
std::vector<RDPoint> comparison_report(std::span<const CodingResult> joint_results,
                                       std::span<const double> capacities,
                                       std::span<const std::size_t> quantizer_levels,
                                       const SourceModel& src);

}  // namespace memchan

#pragma once

#include <span>
#include <string>
#include <vector>

#include "memchan/capacity.hpp"
#include "memchan/channel.hpp"

namespace memchan {

// Per-write-level pulse energy in nJ. Either a measured table or the
// parametric form e(v) = a*v^2 + b*v + c evaluated on the voltage grid.
// Array line losses belong in the table, populated from external
// simulation; they are not modeled here.
struct EnergyModel {
  std::vector<double> per_level_nj;
  std::string source = "table";  // "table" | "parametric"

  static EnergyModel table(std::vector<double> per_level_nj);
  static EnergyModel parametric(const VoltageGrid& v_grid, double a, double b = 0.0, double c = 0.0);

  void validate(std::size_t expected_levels) const;
  double min_cost() const;
};

struct EfficiencyPoint {
  double lagrange_s = 0.0;
  double capacity_bits = 0.0;
  double avg_energy_nj = 0.0;
  double energy_per_bit_nj = 0.0;  // +inf when capacity is 0
  InputDistribution input;
};

// One constrained-BA solve per Lagrange multiplier. s_values must be sorted
// ascending and start at 0 so the first point is the unconstrained capacity.
std::vector<EfficiencyPoint> energy_sweep(const ConditionalChannel& ch, const EnergyModel& em,
                                          std::span<const double> s_values,
                                          double tol = kDefaultBaTol,
                                          std::size_t max_iter = kDefaultBaMaxIter);

// Default multiplier grid: {0} followed by points - 1 log-spaced values up
// to an s_max at which the average cost sits within 1% of the cheapest
// level.
std::vector<double> default_s_grid(const ConditionalChannel& ch, const EnergyModel& em,
                                   std::size_t points = 60, double tol = kDefaultBaTol);

struct EfficiencySummary {
  EfficiencyPoint best;                  // minimizes energy per bit
  double saving_vs_unconstrained = 0.0;  // 1 - min_epb / epb(s = 0)
};

EfficiencySummary min_energy_per_bit(std::span<const EfficiencyPoint> points);

// E[v] under an input distribution; used to compare the efficient input
// against the max-capacity input.
double mean_write_voltage(const VoltageGrid& v_grid, const InputDistribution& input);

}  // namespace memchan

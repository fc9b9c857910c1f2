#include "memchan/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace memchan {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

EnergyModel EnergyModel::table(std::vector<double> per_level_nj) {
  EnergyModel em;
  em.per_level_nj = std::move(per_level_nj);
  em.source = "table";
  return em;
}

EnergyModel EnergyModel::parametric(const VoltageGrid& v_grid, double a, double b, double c) {
  EnergyModel em;
  em.source = "parametric";
  em.per_level_nj.reserve(v_grid.size());
  for (double v : v_grid.levels()) em.per_level_nj.push_back(a * v * v + b * v + c);
  return em;
}

void EnergyModel::validate(std::size_t expected_levels) const {
  if (per_level_nj.size() != expected_levels)
    fail(Errc::dimension_mismatch, "EnergyModel: " + std::to_string(per_level_nj.size()) +
                                       " energies for " + std::to_string(expected_levels) +
                                       " write levels");
  for (double e : per_level_nj) {
    if (!(e > 0.0) || !std::isfinite(e))
      fail(Errc::invalid_params, "EnergyModel: energies must be positive and finite");
  }
}

double EnergyModel::min_cost() const {
  return *std::min_element(per_level_nj.begin(), per_level_nj.end());
}

std::vector<EfficiencyPoint> energy_sweep(const ConditionalChannel& ch, const EnergyModel& em,
                                          std::span<const double> s_values, double tol,
                                          std::size_t max_iter) {
  em.validate(ch.rows());
  if (s_values.empty() || s_values.front() != 0.0)
    fail(Errc::invalid_params, "energy_sweep: s_values must start at 0");
  for (std::size_t k = 1; k < s_values.size(); ++k) {
    if (!(s_values[k] > s_values[k - 1]))
      fail(Errc::invalid_params, "energy_sweep: s_values must be strictly ascending");
  }

  std::vector<EfficiencyPoint> points;
  points.reserve(s_values.size());
  for (double s : s_values) {
    auto solved = blahut_arimoto_constrained(ch, em.per_level_nj, s, tol, max_iter);
    EfficiencyPoint pt;
    pt.lagrange_s = s;
    pt.capacity_bits = solved.result.capacity_bits;
    pt.avg_energy_nj = solved.avg_cost;
    pt.energy_per_bit_nj = pt.capacity_bits > 0.0 ? pt.avg_energy_nj / pt.capacity_bits : kInf;
    pt.input = std::move(solved.result.input);
    points.push_back(std::move(pt));
  }
  return points;
}

std::vector<double> default_s_grid(const ConditionalChannel& ch, const EnergyModel& em,
                                   std::size_t points, double tol) {
  em.validate(ch.rows());
  if (points < 2) fail(Errc::invalid_params, "default_s_grid: need at least 2 points");

  // Find s_max by doubling until the constrained input is essentially
  // pinned to the cheapest level(s).
  const double min_cost = em.min_cost();
  double s_max = 1.0 / (em.per_level_nj[0] + min_cost);
  for (int i = 0; i < 60; ++i) {
    const auto solved = blahut_arimoto_constrained(ch, em.per_level_nj, s_max, tol, 20000);
    if (solved.avg_cost <= 1.01 * min_cost) break;
    s_max *= 2.0;
  }

  std::vector<double> s_values(points);
  s_values[0] = 0.0;
  s_values.back() = s_max;
  if (points > 2) {
    const double s_min = s_max * 1e-3;
    const double ratio = std::pow(s_max / s_min, 1.0 / static_cast<double>(points - 2));
    double s = s_min;
    for (std::size_t k = 1; k + 1 < points; ++k) {
      s_values[k] = s;
      s *= ratio;
    }
  }
  return s_values;
}

EfficiencySummary min_energy_per_bit(std::span<const EfficiencyPoint> points) {
  if (points.empty()) fail(Errc::invalid_params, "min_energy_per_bit: empty sweep");
  const EfficiencyPoint* best = nullptr;
  for (const auto& pt : points) {
    if (pt.capacity_bits > 0.0 && (!best || pt.energy_per_bit_nj < best->energy_per_bit_nj))
      best = &pt;
  }
  if (!best) fail(Errc::all_zero_capacity, "min_energy_per_bit: no sweep point has positive capacity");

  EfficiencySummary out;
  out.best = *best;
  const double epb0 = points.front().energy_per_bit_nj;
  out.saving_vs_unconstrained = epb0 > 0.0 ? 1.0 - out.best.energy_per_bit_nj / epb0 : 0.0;
  return out;
}

double mean_write_voltage(const VoltageGrid& v_grid, const InputDistribution& input) {
  input.validate(v_grid.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < v_grid.size(); ++i) mean += input.probs[i] * v_grid[i];
  return mean;
}

}  // namespace memchan

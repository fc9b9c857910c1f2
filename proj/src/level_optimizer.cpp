#include "memchan/level_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "memchan/util.hpp"

namespace memchan {

namespace {

// Scan-time objective evaluations run Blahut-Arimoto at a relaxed tolerance
// and a hard iteration cap; suppressed rows take thousands of iterations to
// drain at tight tolerance and contribute nothing to design ranking. The
// winning design is re-scored at full tolerance.
constexpr double kScanBaTol = 1e-4;
constexpr std::size_t kScanBaMaxIter = 2500;
constexpr double kFinalBaTol = 1e-6;
constexpr std::size_t kFinalBaMaxIter = 100000;
constexpr double kMaxSearchSpace = 1e7;

// Evaluates discrete designs against a fixed base channel using per-row
// prefix sums, so one evaluation costs O(rows * n_reads) plus the small BA
// solve instead of a full re-marginalization.
class DesignEvaluator {
 public:
  explicit DesignEvaluator(const ConditionalChannel& ch) : ch_(ch) {
    const std::size_t cells = ch.cols();
    prefix_.resize(ch.rows() * (cells + 1));
    for (std::size_t i = 0; i < ch.rows(); ++i) {
      const auto row = ch.row(i);
      double* pre = prefix_.data() + i * (cells + 1);
      pre[0] = 0.0;
      for (std::size_t j = 0; j < cells; ++j) pre[j + 1] = pre[j] + row[j];
    }
    centers_.resize(cells);
    for (std::size_t j = 0; j < cells; ++j) centers_[j] = ch.r_grid().cell_center(j);
  }

  // Boundary cell index of a threshold value: number of cells whose center
  // lies below it. Matches the cell-center convention of discretize_reads.
  std::size_t boundary(double threshold) const {
    return static_cast<std::size_t>(
        std::lower_bound(centers_.begin(), centers_.end(), threshold) - centers_.begin());
  }

  double capacity(std::span<const std::size_t> writes, std::span<const double> thresholds,
                  double tol, std::size_t max_iter) const {
    std::vector<std::size_t> cuts(thresholds.size() + 2);
    cuts.front() = 0;
    for (std::size_t k = 0; k < thresholds.size(); ++k) cuts[k + 1] = boundary(thresholds[k]);
    cuts.back() = ch_.cols();
    return capacity_at_cuts(writes, cuts, tol, max_iter);
  }

  // Same, with thresholds given directly as interior cell-edge indices.
  double capacity_at_edges(std::span<const std::size_t> writes,
                           std::span<const std::size_t> edge_indices, double tol,
                           std::size_t max_iter) const {
    std::vector<std::size_t> cuts(edge_indices.size() + 2);
    cuts.front() = 0;
    std::copy(edge_indices.begin(), edge_indices.end(), cuts.begin() + 1);
    cuts.back() = ch_.cols();
    return capacity_at_cuts(writes, cuts, tol, max_iter);
  }

  const ConditionalChannel& channel() const { return ch_; }

 private:
  double capacity_at_cuts(std::span<const std::size_t> writes, std::span<const std::size_t> cuts,
                          double tol, std::size_t max_iter) const {
    const std::size_t super = cuts.size() - 1;
    const std::size_t cells = ch_.cols();
    std::vector<std::vector<double>> rows(writes.size(), std::vector<double>(super));
    for (std::size_t k = 0; k < writes.size(); ++k) {
      const double* pre = prefix_.data() + writes[k] * (cells + 1);
      double sum = 0.0;
      for (std::size_t s = 0; s < super; ++s) {
        rows[k][s] = std::max(0.0, pre[cuts[s + 1]] - pre[cuts[s]]);
        sum += rows[k][s];
      }
      for (std::size_t s = 0; s < super; ++s) rows[k][s] /= sum;
    }
    return blahut_arimoto(ConditionalChannel::from_matrix(rows), tol, max_iter).capacity_bits;
  }

  const ConditionalChannel& ch_;
  std::vector<double> prefix_;   // rows x (cells + 1)
  std::vector<double> centers_;
};

void check_counts(const ConditionalChannel& ch, std::size_t n_reads, std::size_t n_writes) {
  if (n_reads < 2) fail(Errc::invalid_counts, "level optimizer: n_reads must be >= 2");
  if (n_reads > ch.cols())
    fail(Errc::invalid_counts, "level optimizer: n_reads " + std::to_string(n_reads) +
                                   " exceeds read cell count " + std::to_string(ch.cols()));
  if (n_writes < 1 || n_writes > ch.rows())
    fail(Errc::invalid_counts, "level optimizer: n_writes " + std::to_string(n_writes) +
                                   " outside [1, " + std::to_string(ch.rows()) + "]");
}

std::vector<std::size_t> spread_write_indices(std::size_t rows, std::size_t n_writes) {
  std::vector<std::size_t> idx(n_writes);
  if (n_writes == 1) {
    idx[0] = rows - 1;  // a single write level carries no information anyway
    return idx;
  }
  for (std::size_t k = 0; k < n_writes; ++k) {
    idx[k] = static_cast<std::size_t>(std::llround(static_cast<double>(k) *
                                                   static_cast<double>(rows - 1) /
                                                   static_cast<double>(n_writes - 1)));
  }
  for (std::size_t k = 1; k < n_writes; ++k) {
    if (idx[k] <= idx[k - 1]) idx[k] = idx[k - 1] + 1;
  }
  return idx;
}

// Thresholds at the output-marginal quantiles under a uniform input on the
// selected rows. A strong starting point: large read counts begin near the
// analog capacity and the annealer only needs to polish.
std::vector<double> quantile_thresholds(const ConditionalChannel& ch,
                                        std::span<const std::size_t> writes, std::size_t n_reads) {
  const std::size_t cells = ch.cols();
  std::vector<double> cum(cells + 1, 0.0);
  for (std::size_t j = 0; j < cells; ++j) {
    double q = 0.0;
    for (std::size_t w : writes) q += ch.at(w, j);
    cum[j + 1] = cum[j] + q / static_cast<double>(writes.size());
  }
  std::vector<double> thresholds;
  thresholds.reserve(n_reads - 1);
  std::size_t e = 1;
  for (std::size_t k = 1; k < n_reads; ++k) {
    const double target = static_cast<double>(k) / static_cast<double>(n_reads);
    while (e < cells && cum[e] < target) ++e;
    std::size_t pick = std::min(e, cells - 1);
    if (!thresholds.empty() && ch.r_grid().edge(pick) <= thresholds.back()) {
      // keep thresholds strictly increasing across flat regions
      const double prev = thresholds.back();
      pick = static_cast<std::size_t>(
          std::upper_bound(ch.r_grid().edges().begin() + 1, ch.r_grid().edges().end() - 1, prev) -
          ch.r_grid().edges().begin());
      if (pick >= cells) pick = cells - 1;
    }
    thresholds.push_back(ch.r_grid().edge(pick));
    e = std::min(pick + 1, cells - 1);
  }
  std::sort(thresholds.begin(), thresholds.end());
  return thresholds;
}

// Output marginal per cell under a uniform input on the selected rows.
std::vector<double> uniform_marginal(const ConditionalChannel& ch,
                                     std::span<const std::size_t> writes) {
  std::vector<double> q(ch.cols(), 0.0);
  for (std::size_t w : writes) {
    const auto row = ch.row(w);
    for (std::size_t j = 0; j < ch.cols(); ++j) q[j] += row[j];
  }
  for (auto& x : q) x /= static_cast<double>(writes.size());
  return q;
}

// Extra threshold splitting the heaviest super-cell at its mass median.
// Returns false when no distinct interior edge is available.
bool split_heaviest_supercell(const ConditionalChannel& ch, std::span<const std::size_t> writes,
                              std::vector<double>& thresholds) {
  const auto& grid = ch.r_grid();
  const std::vector<double> q = uniform_marginal(ch, writes);

  std::vector<double> cuts;
  cuts.push_back(grid.lo());
  cuts.insert(cuts.end(), thresholds.begin(), thresholds.end());
  cuts.push_back(grid.hi());

  double best_mass = -1.0;
  std::size_t best_lo = 0, best_hi = 0;
  std::size_t j = 0;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    double mass = 0.0;
    const std::size_t cell_lo = j;
    while (j < ch.cols() && grid.cell_center(j) <= cuts[s + 1]) mass += q[j++];
    if (s + 2 == cuts.size()) {
      while (j < ch.cols()) mass += q[j++];
    }
    if (mass > best_mass && j > cell_lo + 1) {
      best_mass = mass;
      best_lo = cell_lo;
      best_hi = j;
    }
  }
  if (best_mass <= 0.0) return false;

  double cum = 0.0;
  std::size_t split = best_lo + 1;
  for (std::size_t c = best_lo; c < best_hi; ++c) {
    cum += q[c];
    if (cum >= 0.5 * best_mass) {
      split = std::clamp(c + 1, best_lo + 1, best_hi - 1);
      break;
    }
  }
  const double edge = grid.edge(split);
  if (std::find(thresholds.begin(), thresholds.end(), edge) != thresholds.end()) return false;
  thresholds.push_back(edge);
  std::sort(thresholds.begin(), thresholds.end());
  return true;
}

double binomial_or_cap(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  double c = 1.0;
  for (std::size_t i = 0; i < k; ++i) {
    c *= static_cast<double>(n - i) / static_cast<double>(i + 1);
    if (c > 1e18) return 1e18;
  }
  return c;
}

template <typename F>
void for_each_combination(std::size_t n, std::size_t k, F&& fn) {
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  if (k == 0) {
    fn(idx);
    return;
  }
  while (true) {
    fn(idx);
    std::size_t i = k;
    while (i > 0) {
      --i;
      if (idx[i] != i + n - k) break;
      if (i == 0) return;
    }
    ++idx[i];
    for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace

void AnnealSchedule::validate() const {
  if (!(initial_temp > min_temp) || !(min_temp > 0.0))
    fail(Errc::invalid_params, "AnnealSchedule: need initial_temp > min_temp > 0");
  if (!(cooling_rate > 0.0) || !(cooling_rate < 1.0))
    fail(Errc::invalid_params, "AnnealSchedule: cooling_rate must be in (0, 1)");
  if (steps_per_temp < 1) fail(Errc::invalid_params, "AnnealSchedule: steps_per_temp must be >= 1");
  if (!(proposal_sigma > 0.0)) fail(Errc::invalid_params, "AnnealSchedule: proposal_sigma must be > 0");
}

LevelDesign optimize_read_levels(const ConditionalChannel& ch, std::size_t n_reads,
                                 std::size_t n_writes, const AnnealSchedule& sched,
                                 std::vector<double>* best_trace,
                                 const LevelDesign* warm_start) {
  check_counts(ch, n_reads, n_writes);
  sched.validate();

  const DesignEvaluator eval(ch);
  const double lo = ch.r_grid().lo();
  const double hi = ch.r_grid().hi();
  const double margin = 1e-9 * (hi - lo);

  std::vector<std::size_t> writes = spread_write_indices(ch.rows(), n_writes);
  std::vector<double> thresholds = quantile_thresholds(ch, writes, n_reads);
  double current = eval.capacity(writes, thresholds, kScanBaTol, kScanBaMaxIter);

  if (warm_start && warm_start->n_writes() == n_writes && warm_start->n_reads() <= n_reads) {
    std::vector<std::size_t> w_writes = warm_start->write_indices;
    std::vector<double> w_thresholds = warm_start->read_thresholds;
    bool ok = true;
    while (ok && w_thresholds.size() + 1 < n_reads)
      ok = split_heaviest_supercell(ch, w_writes, w_thresholds);
    if (ok) {
      const double cap = eval.capacity(w_writes, w_thresholds, kScanBaTol, kScanBaMaxIter);
      if (cap > current) {
        writes = std::move(w_writes);
        thresholds = std::move(w_thresholds);
        current = cap;
      }
    }
  }
  std::vector<std::size_t> best_writes = writes;
  std::vector<double> best_thresholds = thresholds;
  double best = current;

  std::mt19937_64 rng(sched.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> jitter(0.0, sched.proposal_sigma);

  std::vector<std::size_t> unselected;
  std::vector<std::size_t> prop_writes;
  std::vector<double> prop_thresholds;

  for (double temp = sched.initial_temp; temp > sched.min_temp; temp *= sched.cooling_rate) {
    for (std::size_t step = 0; step < sched.steps_per_temp; ++step) {
      prop_writes = writes;
      prop_thresholds = thresholds;

      const bool swap_write = n_writes < ch.rows() && unit(rng) < 0.2;
      if (swap_write) {
        unselected.clear();
        std::size_t w = 0;
        for (std::size_t i = 0; i < ch.rows(); ++i) {
          if (w < writes.size() && writes[w] == i) {
            ++w;
          } else {
            unselected.push_back(i);
          }
        }
        const std::size_t out = rng() % prop_writes.size();
        const std::size_t in = rng() % unselected.size();
        prop_writes[out] = unselected[in];
        std::sort(prop_writes.begin(), prop_writes.end());
      } else {
        const std::size_t t = rng() % prop_thresholds.size();
        prop_thresholds[t] = std::clamp(prop_thresholds[t] + jitter(rng), lo + margin, hi - margin);
        std::sort(prop_thresholds.begin(), prop_thresholds.end());
      }

      const double cap = eval.capacity(prop_writes, prop_thresholds, kScanBaTol, kScanBaMaxIter);
      const double delta = cap - current;
      if (delta >= 0.0 || unit(rng) < std::exp(delta / temp)) {
        writes.swap(prop_writes);
        thresholds.swap(prop_thresholds);
        current = cap;
        if (cap > best) {
          best = cap;
          best_writes = writes;
          best_thresholds = thresholds;
        }
      }
      if (best_trace) best_trace->push_back(best);
    }
  }

  // Clamping and flat quantile regions can leave exact threshold ties;
  // separate them so the design is valid for discretize_reads. A nextafter
  // nudge cannot cross a cell center, so the induced channel is unchanged.
  for (std::size_t k = 1; k < best_thresholds.size(); ++k) {
    if (best_thresholds[k] <= best_thresholds[k - 1])
      best_thresholds[k] = std::nextafter(best_thresholds[k - 1], hi + 1.0);
  }

  LevelDesign design;
  design.write_indices = std::move(best_writes);
  design.read_thresholds = std::move(best_thresholds);
  design.capacity_bits =
      eval.capacity(design.write_indices, design.read_thresholds, kFinalBaTol, kFinalBaMaxIter);
  return design;
}

LevelDesign exhaustive_read_levels(const ConditionalChannel& ch, std::size_t n_reads,
                                   std::size_t n_writes) {
  check_counts(ch, n_reads, n_writes);

  const std::size_t interior = ch.cols() - 1;
  const double space =
      binomial_or_cap(interior, n_reads - 1) * binomial_or_cap(ch.rows(), n_writes);
  if (space > kMaxSearchSpace)
    fail(Errc::search_space_too_large,
         "exhaustive_read_levels: ~" + std::to_string(space) + " combinations exceeds 1e7");

  const DesignEvaluator eval(ch);
  LevelDesign best;
  best.capacity_bits = -1.0;

  for_each_combination(ch.rows(), n_writes, [&](const std::vector<std::size_t>& writes) {
    for_each_combination(interior, n_reads - 1, [&](const std::vector<std::size_t>& edge_offsets) {
      // edge_offsets are 0-based over interior edges 1..cells-1
      std::vector<std::size_t> edges(edge_offsets.size());
      for (std::size_t k = 0; k < edges.size(); ++k) edges[k] = edge_offsets[k] + 1;
      const double cap = eval.capacity_at_edges(writes, edges, kScanBaTol, kScanBaMaxIter);
      if (cap > best.capacity_bits) {
        best.capacity_bits = cap;
        best.write_indices = writes;
        best.read_thresholds.clear();
        for (std::size_t e : edges) best.read_thresholds.push_back(ch.r_grid().edge(e));
      }
    });
  });
  best.capacity_bits =
      eval.capacity(best.write_indices, best.read_thresholds, kFinalBaTol, kFinalBaMaxIter);
  return best;
}

std::vector<LevelDesign> capacity_surface(const ConditionalChannel& ch,
                                          std::span<const std::size_t> reads_list,
                                          std::span<const std::size_t> writes_list,
                                          const AnnealSchedule& sched) {
  if (reads_list.empty() || writes_list.empty())
    fail(Errc::invalid_counts, "capacity_surface: empty reads or writes list");

  // Process read counts in ascending order so each cell can warm-start from
  // the previous design; emit in the requested order.
  std::vector<std::size_t> read_order(reads_list.size());
  for (std::size_t i = 0; i < read_order.size(); ++i) read_order[i] = i;
  std::sort(read_order.begin(), read_order.end(),
            [&](std::size_t a, std::size_t b) { return reads_list[a] < reads_list[b]; });

  std::vector<LevelDesign> out(reads_list.size() * writes_list.size());
  for (std::size_t wi = 0; wi < writes_list.size(); ++wi) {
    const LevelDesign* prev = nullptr;
    for (std::size_t k = 0; k < read_order.size(); ++k) {
      const std::size_t ri = read_order[k];
      const std::size_t cell = wi * reads_list.size() + ri;
      AnnealSchedule cell_sched = sched;
      cell_sched.seed = splitmix64(sched.seed ^ (0x5eedULL + cell));
      out[cell] = optimize_read_levels(ch, reads_list[ri], writes_list[wi], cell_sched, nullptr, prev);
      prev = &out[cell];
    }
  }
  return out;
}

}  // namespace memchan

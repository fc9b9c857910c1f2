#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "memchan/capacity.hpp"
#include "memchan/channel.hpp"

namespace memchan {

// A discrete read/write design: which write levels are used and where the
// read thresholds sit, with the capacity of the induced discrete channel.
struct LevelDesign {
  std::vector<std::size_t> write_indices;   // sorted, into the channel's v_grid
  std::vector<double> read_thresholds;      // sorted, log10 ohms; n_reads - 1 entries
  double capacity_bits = 0.0;

  std::size_t n_writes() const noexcept { return write_indices.size(); }
  std::size_t n_reads() const noexcept { return read_thresholds.size() + 1; }
};

struct AnnealSchedule {
  double initial_temp = 0.1;    // bits
  double cooling_rate = 0.95;
  std::size_t steps_per_temp = 200;
  double min_temp = 1e-4;       // bits
  double proposal_sigma = 0.1;  // log10 ohms
  std::uint64_t seed = 0;

  void validate() const;
};

// Simulated annealing over (threshold vector, write subset), objective =
// Blahut-Arimoto capacity of the discretized, row-restricted channel.
// Deterministic given the schedule seed. The returned design is the best
// seen, re-scored at tight tolerance. `best_trace`, when non-null, receives
// the best-so-far capacity after every step. `warm_start`, when given with
// one fewer threshold, seeds the chain with that design plus a split of its
// heaviest super-cell if that beats the default quantile start.
LevelDesign optimize_read_levels(const ConditionalChannel& ch, std::size_t n_reads,
                                 std::size_t n_writes, const AnnealSchedule& sched,
                                 std::vector<double>* best_trace = nullptr,
                                 const LevelDesign* warm_start = nullptr);

// Global optimum over thresholds restricted to interior r_grid edges and all
// write subsets of the requested size. Oracle for the annealer; refuses
// search spaces above 1e7 combinations.
LevelDesign exhaustive_read_levels(const ConditionalChannel& ch, std::size_t n_reads,
                                   std::size_t n_writes);

// One optimized design per (n_writes, n_reads) pair, writes-major order.
std::vector<LevelDesign> capacity_surface(const ConditionalChannel& ch,
                                          std::span<const std::size_t> reads_list,
                                          std::span<const std::size_t> writes_list,
                                          const AnnealSchedule& sched);

}  // namespace memchan

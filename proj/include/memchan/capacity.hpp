#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "memchan/channel.hpp"

namespace memchan {

// Input states count as present above this probability.
inline constexpr double kSupportEpsilon = 1e-6;

inline constexpr double kDefaultBaTol = 1e-6;       // bits
inline constexpr std::size_t kDefaultBaMaxIter = 100000;

struct InputDistribution {
  std::vector<double> probs;

  static InputDistribution uniform(std::size_t n);
  // Uniform over a subset of indices, zero elsewhere.
  static InputDistribution uniform_on(std::size_t n, std::span<const std::size_t> support);

  void validate(std::size_t expected_size) const;
};

struct CapacityResult {
  double capacity_bits = 0.0;
  InputDistribution input;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<std::size_t> support;  // indices with prob > kSupportEpsilon
};

// I(V;R) in bits for the given input distribution, with the 0*log(0) = 0
// convention.
double mutual_information(const ConditionalChannel& ch, const InputDistribution& input);

// Blahut-Arimoto capacity. Starts from the uniform input and stops when
// Arimoto's bound gap  max_v D(P(R|v) || P(R)) - I(V;R)  drops below tol,
// which certifies |capacity_bits - C| < tol.
CapacityResult blahut_arimoto(const ConditionalChannel& ch, double tol = kDefaultBaTol,
                              std::size_t max_iter = kDefaultBaMaxIter);

// Same, recording the per-iteration lower bound I(V;R).
CapacityResult blahut_arimoto_traced(const ConditionalChannel& ch, double tol, std::size_t max_iter,
                                     std::vector<double>* lower_bound_trace);

struct ConstrainedCapacityResult {
  CapacityResult result;  // capacity_bits is I(V;R) at the returned input
  double avg_cost = 0.0;  // E[cost] under the returned input
};

// Cost-constrained Blahut-Arimoto in Lagrangian form: the update exponent is
// tilted by -s * cost[v], so the iteration maximizes I(V;R) - s * E[cost].
// s = 0 reduces exactly to blahut_arimoto.
ConstrainedCapacityResult blahut_arimoto_constrained(const ConditionalChannel& ch,
                                                     std::span<const double> cost, double lagrange_s,
                                                     double tol = kDefaultBaTol,
                                                     std::size_t max_iter = kDefaultBaMaxIter);

// Mutual information under the uniform input on `support` (default: the
// Blahut-Arimoto support).
double uniform_capacity(const ConditionalChannel& ch,
                        std::optional<std::vector<std::size_t>> support = std::nullopt);

}  // namespace memchan

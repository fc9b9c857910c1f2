#include "memchan/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace memchan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log2 of the output marginal, with empty columns mapped to a very small
// finite value so unreachable cells cannot poison the row divergences.
void output_log_marginal(const ConditionalChannel& ch, std::span<const double> probs,
                         std::vector<double>& q, std::vector<double>& log_q) {
  const std::size_t m = ch.cols();
  std::fill(q.begin(), q.end(), 0.0);
  double* qd = q.data();
  for (std::size_t i = 0; i < ch.rows(); ++i) {
    const double p = probs[i];
    if (p == 0.0) continue;
    const double* row = ch.row(i).data();
    for (std::size_t j = 0; j < m; ++j) qd[j] += p * row[j];
  }
  constexpr double kLog2Min = -1074.0;  // ~log2(denorm_min)
  for (std::size_t j = 0; j < m; ++j) log_q[j] = qd[j] > 0.0 ? std::log2(qd[j]) : kLog2Min;
}

// Dot product with four accumulators; the independent partial sums break
// the floating-add latency chain while keeping the result deterministic.
double dot4(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    s0 += a[j] * b[j];
    s1 += a[j + 1] * b[j + 1];
    s2 += a[j + 2] * b[j + 2];
    s3 += a[j + 3] * b[j + 3];
  }
  for (; j < n; ++j) s0 += a[j] * b[j];
  return (s0 + s1) + (s2 + s3);
}

// D(P(R|v) || q) = sum_j P log2 P  -  sum_j P log2 q, with the first term
// fixed per row. Zero channel entries contribute zero to both sums, so the
// inner loop stays branch-free.
void row_divergences(const ConditionalChannel& ch, const std::vector<double>& row_neg_entropy,
                     const std::vector<double>& log_q, std::vector<double>& d) {
  const std::size_t m = ch.cols();
  const double* lq = log_q.data();
  for (std::size_t i = 0; i < ch.rows(); ++i)
    d[i] = row_neg_entropy[i] - dot4(ch.row(i).data(), lq, m);
}

std::vector<double> row_neg_entropies(const ConditionalChannel& ch) {
  std::vector<double> out(ch.rows(), 0.0);
  for (std::size_t i = 0; i < ch.rows(); ++i) {
    const auto row = ch.row(i);
    double acc = 0.0;
    for (double p : row) {
      if (!std::isfinite(p) || p < 0.0)
        fail(Errc::degenerate_channel, "blahut_arimoto: channel matrix has invalid entries");
      if (p > 0.0) acc += p * std::log2(p);
    }
    out[i] = acc;
  }
  return out;
}

std::vector<std::size_t> support_of(std::span<const double> probs) {
  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > kSupportEpsilon) support.push_back(i);
  }
  return support;
}

// Shared core of the plain and cost-tilted iterations. `cost` may be empty
// (treated as all-zero); the update is p_v <- p_v * 2^(D_v - s*cost_v) / Z,
// evaluated in log space for stability.
CapacityResult run_blahut_arimoto(const ConditionalChannel& ch, std::span<const double> cost,
                                  double lagrange_s, double tol, std::size_t max_iter,
                                  std::vector<double>* lower_bound_trace) {
  if (!(tol > 0.0)) fail(Errc::invalid_params, "blahut_arimoto: tol must be positive");
  if (max_iter < 1) fail(Errc::invalid_params, "blahut_arimoto: max_iter must be >= 1");
  if (!cost.empty() && cost.size() != ch.rows())
    fail(Errc::dimension_mismatch, "blahut_arimoto: cost vector length != row count");
  if (lagrange_s < 0.0) fail(Errc::invalid_params, "blahut_arimoto: lagrange multiplier must be >= 0");

  const std::size_t n = ch.rows();
  const std::vector<double> neg_entropy = row_neg_entropies(ch);
  const auto tilt = [&](std::size_t v) { return cost.empty() ? 0.0 : lagrange_s * cost[v]; };

  std::vector<double> p(n, 1.0 / static_cast<double>(n));
  std::vector<double> q(ch.cols()), log_q(ch.cols()), d(n), log_w(n);

  CapacityResult res;
  for (std::size_t iter = 1; iter <= max_iter; ++iter) {
    output_log_marginal(ch, p, q, log_q);
    row_divergences(ch, neg_entropy, log_q, d);

    // Arimoto bounds on the (tilted) objective.
    double lower = 0.0;
    double upper = -kInf;
    double mutual = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      const double t = d[v] - tilt(v);
      lower += p[v] * t;
      mutual += p[v] * d[v];
      upper = std::max(upper, t);
    }
    if (lower_bound_trace) lower_bound_trace->push_back(mutual);

    res.capacity_bits = mutual;
    res.iterations = iter;
    if (upper - lower < tol) {
      res.converged = true;
      break;
    }
    if (iter == max_iter) break;

    // Multiplicative update in log2 space. Probabilities that have decayed
    // hundreds of orders below the support threshold are flushed to exact
    // zero; otherwise they idle in the subnormal range and every later
    // iteration pays the denormal-arithmetic penalty on whole rows.
    constexpr double kProbFloor = 1e-300;
    double max_lw = -kInf;
    for (std::size_t v = 0; v < n; ++v) {
      log_w[v] = (p[v] > 0.0 ? std::log2(p[v]) : -kInf) + d[v] - tilt(v);
      max_lw = std::max(max_lw, log_w[v]);
    }
    double z = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      p[v] = std::exp2(log_w[v] - max_lw);
      if (p[v] < kProbFloor) p[v] = 0.0;
      z += p[v];
    }
    for (std::size_t v = 0; v < n; ++v) p[v] /= z;
  }

  res.capacity_bits = std::max(0.0, res.capacity_bits);
  res.input.probs = std::move(p);
  res.support = support_of(res.input.probs);
  return res;
}

}  // namespace

InputDistribution InputDistribution::uniform(std::size_t n) {
  if (n == 0) fail(Errc::invalid_params, "InputDistribution::uniform: empty");
  return {std::vector<double>(n, 1.0 / static_cast<double>(n))};
}

InputDistribution InputDistribution::uniform_on(std::size_t n, std::span<const std::size_t> support) {
  if (support.empty()) fail(Errc::empty_index_set, "InputDistribution::uniform_on: empty support");
  std::vector<double> p(n, 0.0);
  for (std::size_t i : support) {
    if (i >= n) fail(Errc::index_out_of_range, "InputDistribution::uniform_on: index out of range");
    p[i] = 1.0 / static_cast<double>(support.size());
  }
  return {std::move(p)};
}

void InputDistribution::validate(std::size_t expected_size) const {
  if (probs.size() != expected_size)
    fail(Errc::dimension_mismatch, "InputDistribution: length " + std::to_string(probs.size()) +
                                       " != channel rows " + std::to_string(expected_size));
  double sum = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0)
      fail(Errc::invalid_params, "InputDistribution: negative or non-finite probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    fail(Errc::invalid_params, "InputDistribution: probabilities sum to " + std::to_string(sum));
}

double mutual_information(const ConditionalChannel& ch, const InputDistribution& input) {
  input.validate(ch.rows());
  const std::size_t m = ch.cols();
  std::vector<double> q(m, 0.0);
  for (std::size_t i = 0; i < ch.rows(); ++i) {
    const double p = input.probs[i];
    if (p == 0.0) continue;
    const auto row = ch.row(i);
    for (std::size_t j = 0; j < m; ++j) q[j] += p * row[j];
  }
  double info = 0.0;
  for (std::size_t i = 0; i < ch.rows(); ++i) {
    const double p = input.probs[i];
    if (p == 0.0) continue;
    const auto row = ch.row(i);
    for (std::size_t j = 0; j < m; ++j) {
      if (row[j] > 0.0) info += p * row[j] * std::log2(row[j] / q[j]);
    }
  }
  return std::max(0.0, info);
}

CapacityResult blahut_arimoto(const ConditionalChannel& ch, double tol, std::size_t max_iter) {
  return run_blahut_arimoto(ch, {}, 0.0, tol, max_iter, nullptr);
}

CapacityResult blahut_arimoto_traced(const ConditionalChannel& ch, double tol, std::size_t max_iter,
                                     std::vector<double>* lower_bound_trace) {
  return run_blahut_arimoto(ch, {}, 0.0, tol, max_iter, lower_bound_trace);
}

ConstrainedCapacityResult blahut_arimoto_constrained(const ConditionalChannel& ch,
                                                     std::span<const double> cost, double lagrange_s,
                                                     double tol, std::size_t max_iter) {
  if (cost.size() != ch.rows())
    fail(Errc::dimension_mismatch, "blahut_arimoto_constrained: cost length != row count");
  ConstrainedCapacityResult out;
  out.result = run_blahut_arimoto(ch, cost, lagrange_s, tol, max_iter, nullptr);
  double avg = 0.0;
  for (std::size_t v = 0; v < ch.rows(); ++v) avg += out.result.input.probs[v] * cost[v];
  out.avg_cost = avg;
  return out;
}

double uniform_capacity(const ConditionalChannel& ch, std::optional<std::vector<std::size_t>> support) {
  std::vector<std::size_t> idx;
  if (support) {
    if (support->empty()) fail(Errc::empty_index_set, "uniform_capacity: empty support");
    idx = std::move(*support);
  } else {
    idx = blahut_arimoto(ch).support;
    if (idx.empty()) return 0.0;  // capacity-zero channel
  }
  return mutual_information(ch, InputDistribution::uniform_on(ch.rows(), idx));
}

}  // namespace memchan

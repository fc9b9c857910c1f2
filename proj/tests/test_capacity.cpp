#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "memchan/capacity.hpp"
#include "memchan/channel.hpp"
#include "memchan/io.hpp"
#include "test_support.hpp"

using namespace memchan;
using testsup::bec;
using testsup::binary_entropy;
using testsup::bsc;
using testsup::grid_search_capacity_2row;
using testsup::random_channel;
using testsup::random_input;

TEST_SUITE("capacity") {
  TEST_CASE("mutual information: noiseless binary channel") {
    const auto ch = ConditionalChannel::from_matrix({{1.0, 0.0}, {0.0, 1.0}});
    CHECK(mutual_information(ch, InputDistribution{{0.5, 0.5}}) == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("mutual information: identical rows carry nothing") {
    const auto ch = ConditionalChannel::from_matrix(
        {{0.2, 0.3, 0.5}, {0.2, 0.3, 0.5}, {0.2, 0.3, 0.5}});
    for (int k = 0; k < 5; ++k)
      CHECK(mutual_information(ch, random_input(3, 10 + k)) == doctest::Approx(0.0).epsilon(1e-12));
  }

  TEST_CASE("mutual information: BSC analytic value") {
    CHECK(mutual_information(bsc(0.1), InputDistribution{{0.5, 0.5}}) ==
          doctest::Approx(1.0 - binary_entropy(0.1)).epsilon(1e-12));
  }

  TEST_CASE("mutual information: dimension mismatch") {
    CHECK_THROWS_AS(mutual_information(bsc(0.1), InputDistribution{{1.0}}), Error);
  }

  TEST_CASE("blahut-arimoto: BSC and BEC analytic capacities") {
    for (double p : {0.01, 0.1, 0.3}) {
      const auto res = blahut_arimoto(bsc(p));
      CHECK(res.converged);
      CHECK(std::abs(res.capacity_bits - (1.0 - binary_entropy(p))) < 1e-6);
      CHECK(std::abs(res.input.probs[0] - 0.5) < 1e-3);
    }
    for (double eps : {0.1, 0.25, 0.5}) {
      const auto res = blahut_arimoto(bec(eps));
      CHECK(std::abs(res.capacity_bits - (1.0 - eps)) < 1e-6);
    }
  }

  TEST_CASE("blahut-arimoto: zero-capacity and degenerate inputs") {
    const auto ch = ConditionalChannel::from_matrix({{0.4, 0.6}, {0.4, 0.6}});
    CHECK(blahut_arimoto(ch).capacity_bits < 1e-12);
    CHECK_THROWS_AS(blahut_arimoto(ch, -1.0), Error);
    CHECK_THROWS_AS(blahut_arimoto(ch, 1e-6, 0), Error);
  }

  TEST_CASE("blahut-arimoto: lower bound trace is non-decreasing") {
    std::vector<double> trace;
    blahut_arimoto_traced(random_channel(4, 6, 31), 1e-9, 5000, &trace);
    REQUIRE(trace.size() > 2);
    for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] >= trace[i - 1] - 1e-12);
  }

  TEST_CASE("blahut-arimoto: matches exhaustive simplex search on random 2xN channels") {
    for (int t = 0; t < 5; ++t) {
      const auto ch = random_channel(2, 8, 500 + t);
      const double ba = blahut_arimoto(ch).capacity_bits;
      const double brute = grid_search_capacity_2row(ch);
      CHECK(std::abs(ba - brute) < 1e-4);
    }
  }

  TEST_CASE("capacity is invariant under row and column permutations") {
    const auto ch = random_channel(4, 8, 77);
    const double base = blahut_arimoto(ch).capacity_bits;

    std::vector<std::vector<double>> cols_swapped(4, std::vector<double>(8));
    std::vector<std::vector<double>> rows_swapped(4, std::vector<double>(8));
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 8; ++j) {
        cols_swapped[i][(j + 3) % 8] = ch.at(i, j);
        rows_swapped[(i + 1) % 4][j] = ch.at(i, j);
      }
    }
    CHECK(std::abs(blahut_arimoto(ConditionalChannel::from_matrix(cols_swapped)).capacity_bits -
                   base) < 2e-6);
    CHECK(std::abs(blahut_arimoto(ConditionalChannel::from_matrix(rows_swapped)).capacity_bits -
                   base) < 2e-6);
  }

  TEST_CASE("capacity never exceeds log2 of the alphabet sizes") {
    for (int t = 0; t < 4; ++t) {
      const auto ch = random_channel(3, 5, 900 + t);
      const double c = blahut_arimoto(ch).capacity_bits;
      CHECK(c >= 0.0);
      CHECK(c <= std::log2(3.0) + 1e-9);
    }
  }

  TEST_CASE("constrained: s = 0 reduces exactly to plain blahut-arimoto") {
    const auto ch = bsc(0.1);
    const std::vector<double> cost = {1.0, 7.0};
    const auto plain = blahut_arimoto(ch);
    const auto tilted = blahut_arimoto_constrained(ch, cost, 0.0);
    CHECK(tilted.result.capacity_bits == doctest::Approx(plain.capacity_bits).epsilon(1e-15));
    CHECK(tilted.result.input.probs == plain.input.probs);
    CHECK(tilted.avg_cost ==
          doctest::Approx(0.5 * cost[0] + 0.5 * cost[1]).epsilon(1e-6));
  }

  TEST_CASE("constrained: huge multiplier pins the input to the cheapest row") {
    const auto ch = ConditionalChannel::from_matrix({{1.0, 0.0}, {0.0, 1.0}});
    const std::vector<double> cost = {1.0, 2.0};
    const auto res = blahut_arimoto_constrained(ch, cost, 1e6);
    CHECK(res.result.input.probs[0] > 0.999);
    CHECK(res.result.capacity_bits < 1e-3);
    CHECK(res.avg_cost == doctest::Approx(1.0).epsilon(1e-3));
  }

  TEST_CASE("constrained: sweep is non-increasing and matches 1-parameter brute force") {
    const auto ch = ConditionalChannel::from_matrix({{1.0, 0.0}, {0.0, 1.0}});
    const std::vector<double> cost = {1.0, 2.0};
    double prev_cap = 1e300, prev_cost = 1e300;
    for (double s : {0.0, 0.25, 0.5, 1.0, 2.0, 4.0}) {
      const auto res = blahut_arimoto_constrained(ch, cost, s, 1e-8, 200000);
      CHECK(res.result.capacity_bits <= prev_cap + 1e-6);
      CHECK(res.avg_cost <= prev_cost + 1e-6);
      prev_cap = res.result.capacity_bits;
      prev_cost = res.avg_cost;

      // brute force over p0: maximize I(p) - s * E[cost]
      double best_obj = -1e300, best_i = 0.0, best_e = 0.0;
      for (double p0 = 0.0; p0 <= 1.0 + 1e-12; p0 += 1e-4) {
        const double p = std::min(p0, 1.0);
        const double mi = mutual_information(ch, InputDistribution{{p, 1.0 - p}});
        const double e = p * cost[0] + (1.0 - p) * cost[1];
        if (mi - s * e > best_obj) {
          best_obj = mi - s * e;
          best_i = mi;
          best_e = e;
        }
      }
      CHECK(std::abs(res.result.capacity_bits - best_i) < 1e-4);
      CHECK(std::abs(res.avg_cost - best_e) < 1e-4);
    }
  }

  TEST_CASE("constrained: cost length mismatch") {
    CHECK_THROWS_AS(blahut_arimoto_constrained(bsc(0.1), std::vector<double>{1.0}, 0.5), Error);
  }

  TEST_CASE("uniform capacity: symmetric channels lose nothing") {
    const auto id = ConditionalChannel::from_matrix({{1.0, 0.0}, {0.0, 1.0}});
    CHECK(uniform_capacity(id) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(uniform_capacity(bsc(0.1)) ==
          doctest::Approx(1.0 - binary_entropy(0.1)).epsilon(1e-6));
    CHECK_THROWS_AS(uniform_capacity(bsc(0.1), std::vector<std::size_t>{}), Error);
  }

  TEST_CASE("uniform capacity never beats the optimum") {
    for (int t = 0; t < 4; ++t) {
      const auto ch = random_channel(5, 7, 321 + t);
      CHECK(uniform_capacity(ch) <= blahut_arimoto(ch).capacity_bits + 1e-6);
    }
  }

  TEST_CASE("synthetic channel: optimal input uses a small subset of write levels") {
    ChannelConfig cfg;
    cfg.source = "synthetic";
    cfg.r_cells = 256;
    const auto ch = build_channel(cfg);
    const auto res = blahut_arimoto(ch);
    CHECK(res.support.size() >= 2);
    CHECK(res.support.size() <= ch.rows() / 2);  // 11 of 40 on the default surrogate
  }
}

#include <doctest.h>

#include <cmath>
#include <random>

#include "memchan/channel.hpp"
#include "memchan/capacity.hpp"
#include "test_support.hpp"

using namespace memchan;
using testsup::random_input;

namespace {

// Analytic N(mu, sigma^2) cell masses on a grid, renormalized.
std::vector<double> analytic_masses(const ResistanceGrid& grid, double mu, double sigma) {
  const auto cdf = [&](double x) { return 0.5 * std::erfc(-(x - mu) / (sigma * std::sqrt(2.0))); };
  std::vector<double> m(grid.cell_count());
  double total = 0.0;
  for (std::size_t j = 0; j < m.size(); ++j) {
    m[j] = cdf(grid.edge(j + 1)) - cdf(grid.edge(j));
    total += m[j];
  }
  for (auto& x : m) x /= total;
  return m;
}

MeasurementSet lognormal_set(double mean_log10, double sd_log10, std::size_t n, double v,
                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(mean_log10, sd_log10);
  MeasurementSet set;
  for (std::size_t i = 0; i < n; ++i)
    set.records.push_back({static_cast<std::int64_t>(i % 100), v, std::pow(10.0, dist(rng))});
  return set;
}

double row_l1(std::span<const double> a, std::span<const double> b) {
  double l1 = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) l1 += std::abs(a[j] - b[j]);
  return l1;
}

}  // namespace

TEST_SUITE("channel") {
  TEST_CASE("grid validation") {
    CHECK_THROWS_AS(VoltageGrid({1.0, 1.0}), Error);
    CHECK_THROWS_AS(VoltageGrid({2.0, 1.0}), Error);
    CHECK_THROWS_AS(VoltageGrid(std::vector<double>{}), Error);
    CHECK_THROWS_AS(ResistanceGrid({1.0}), Error);
    CHECK_THROWS_AS(ResistanceGrid({1.0, 1.0}), Error);
    const auto g = ResistanceGrid::uniform_cells(0.0, 1.0, 10);
    CHECK(g.cell_count() == 10);
    CHECK(g.is_uniform());
    CHECK(g.cell_of(0.05) == 0);
    CHECK(g.cell_of(0.999) == 9);
    CHECK(g.cell_of(-5.0) == 0);
    CHECK(g.cell_of(5.0) == 9);
    const auto v = VoltageGrid::linspace(0.5, 3.0, 6);
    CHECK(v.nearest(0.0) == 0);
    CHECK(v.nearest(1.01) == 1);
    CHECK(v.nearest(10.0) == 5);
  }

  TEST_CASE("channel constructor enforces row stochasticity") {
    CHECK_THROWS_AS(ConditionalChannel::from_matrix({{0.5, 0.4}}), Error);
    CHECK_THROWS_AS(ConditionalChannel::from_matrix({{1.2, -0.2}}), Error);
    const auto ch = ConditionalChannel::from_matrix({{0.25, 0.75}, {1.0, 0.0}});
    CHECK(ch.rows() == 2);
    CHECK(ch.cols() == 2);
    CHECK(ch.at(0, 1) == 0.75);
  }

  TEST_CASE("kde: degenerate point mass lands in one cell") {
    MeasurementSet set;
    const double r0 = std::pow(10.0, 5.05);
    for (int i = 0; i < 10; ++i) set.records.push_back({i, 1.0, r0});
    const auto ch = estimate_kde(set, VoltageGrid({1.0}), ResistanceGrid::uniform_cells(4.0, 6.0, 20),
                                 0.01);
    const std::size_t cell = ch.r_grid().cell_of(5.05);
    CHECK(ch.at(0, cell) > 0.999);
  }

  TEST_CASE("kde: log-normal sampling oracle recovers mean and spread") {
    const auto v_grid = VoltageGrid({1.0});
    const auto r_grid = ResistanceGrid::uniform_cells(4.0, 6.0, 400);
    const auto ch = estimate_kde(lognormal_set(5.0, 0.2, 10000, 1.0, 1234), v_grid, r_grid);
    double mean = 0.0, var = 0.0;
    for (std::size_t j = 0; j < ch.cols(); ++j) mean += ch.at(0, j) * r_grid.cell_center(j);
    for (std::size_t j = 0; j < ch.cols(); ++j) {
      const double d = r_grid.cell_center(j) - mean;
      var += ch.at(0, j) * d * d;
    }
    CHECK(std::abs(mean - 5.0) < 0.02);
    CHECK(std::abs(std::sqrt(var) - 0.2) < 0.02);  // within 10 % of 0.2
  }

  TEST_CASE("kde: L1 error to analytic masses shrinks with sample count") {
    const auto v_grid = VoltageGrid({1.0});
    const auto r_grid = ResistanceGrid::uniform_cells(4.0, 6.0, 400);
    const auto truth = analytic_masses(r_grid, 5.0, 0.2);
    const auto ch1 = estimate_kde(lognormal_set(5.0, 0.2, 10000, 1.0, 77), v_grid, r_grid);
    const auto ch2 = estimate_kde(lognormal_set(5.0, 0.2, 40000, 1.0, 78), v_grid, r_grid);
    const double l1_small = row_l1(ch1.row(0), truth);
    const double l1_large = row_l1(ch2.row(0), truth);
    CHECK(l1_small < 0.05);
    CHECK(l1_large < l1_small);
  }

  TEST_CASE("kde: disjoint clusters produce near-disjoint rows") {
    MeasurementSet set;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> lo(3.5, 0.02), hi(6.5, 0.02);
    for (int i = 0; i < 50; ++i) {
      set.records.push_back({i, 1.0, std::pow(10.0, lo(rng))});
      set.records.push_back({i, 2.0, std::pow(10.0, hi(rng))});
    }
    const auto ch = estimate_kde(set, VoltageGrid({1.0, 2.0}),
                                 ResistanceGrid::uniform_cells(2.5, 7.5, 100), 0.05);
    double overlap = 0.0;
    for (std::size_t j = 0; j < ch.cols(); ++j) overlap += std::min(ch.at(0, j), ch.at(1, j));
    CHECK(overlap < 1e-6);
  }

  TEST_CASE("kde: error paths") {
    MeasurementSet set;
    for (int i = 0; i < 4; ++i) set.records.push_back({i, 1.0, 1e5});
    // second grid level gets no records
    CHECK_THROWS_AS(estimate_kde(set, VoltageGrid({1.0, 2.0}),
                                 ResistanceGrid::uniform_cells(4.0, 6.0, 10), 0.01),
                    Error);
    set.records.push_back({9, 2.0, -3.0});
    CHECK_THROWS_AS(estimate_kde(set, VoltageGrid({1.0, 2.0}),
                                 ResistanceGrid::uniform_cells(4.0, 6.0, 10), 0.01),
                    Error);
    CHECK_THROWS_AS(estimate_kde(MeasurementSet{}, VoltageGrid({1.0}),
                                 ResistanceGrid::uniform_cells(4.0, 6.0, 10), -0.5),
                    Error);
  }

  TEST_CASE("synth: huge noise floor destroys information") {
    SynthPcmParams p;
    p.noise_floor = 100.0;
    const auto ch = synth_pcm_channel(p, VoltageGrid::linspace(0.5, 3.0, 8),
                                      ResistanceGrid::uniform_cells(2.5, 7.0, 64));
    CHECK(blahut_arimoto(ch).capacity_bits < 0.01);
  }

  TEST_CASE("synth: plateau row sits at r_set") {
    SynthPcmParams p;
    p.dip_depth = 0.0;
    const auto r_grid = ResistanceGrid::uniform_cells(2.5, 7.0, 450);
    const auto ch = synth_pcm_channel(p, VoltageGrid({0.0, 2.0}), r_grid);
    std::size_t argmax = 0;
    for (std::size_t j = 1; j < ch.cols(); ++j)
      if (ch.at(0, j) > ch.at(0, argmax)) argmax = j;
    CHECK(std::abs(r_grid.cell_center(argmax) - p.r_set) <= r_grid.cell_width(0) + 1e-12);
  }

  TEST_CASE("synth: mean curve is non-monotone iff dip_depth > 0") {
    SynthPcmParams with_dip;     // defaults carry a dip
    SynthPcmParams without = with_dip;
    without.dip_depth = 0.0;
    const auto grid = VoltageGrid::linspace(0.5, 3.0, 40);
    int drops_with = 0, drops_without = 0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
      drops_with += with_dip.mean_log10_r(grid[i]) < with_dip.mean_log10_r(grid[i - 1]) - 1e-12;
      drops_without += without.mean_log10_r(grid[i]) < without.mean_log10_r(grid[i - 1]) - 1e-12;
    }
    CHECK(drops_with > 0);
    CHECK(drops_without == 0);
  }

  TEST_CASE("synth: deterministic and validated") {
    SynthPcmParams p;
    const auto v = VoltageGrid::linspace(0.5, 3.0, 10);
    const auto r = ResistanceGrid::uniform_cells(2.5, 7.0, 100);
    CHECK(synth_pcm_channel(p, v, r).matrix() == synth_pcm_channel(p, v, r).matrix());
    SynthPcmParams bad = p;
    bad.r_set = bad.r_max + 1.0;
    CHECK_THROWS_AS(synth_pcm_channel(bad, v, r), Error);
    bad = p;
    bad.noise_floor = 0.0;
    CHECK_THROWS_AS(synth_pcm_channel(bad, v, r), Error);
  }

  TEST_CASE("discretize: identity refinement") {
    const auto ch = testsup::random_channel(3, 8, 11);
    std::vector<double> all_interior;
    for (std::size_t e = 1; e < ch.r_grid().edge_count() - 1; ++e)
      all_interior.push_back(ch.r_grid().edge(e));
    const auto out = discretize_reads(ch, all_interior);
    CHECK(out.cols() == ch.cols());
    for (std::size_t k = 0; k < ch.matrix().size(); ++k)
      CHECK(out.matrix()[k] == doctest::Approx(ch.matrix()[k]).epsilon(1e-12));
    CHECK(out.r_grid().edges() == ch.r_grid().edges());
  }

  TEST_CASE("discretize: no thresholds collapses to one read state") {
    const auto ch = testsup::random_channel(3, 8, 12);
    const auto out = discretize_reads(ch, {});
    CHECK(out.cols() == 1);
    for (std::size_t i = 0; i < out.rows(); ++i) CHECK(out.at(i, 0) == doctest::Approx(1.0));
    CHECK(blahut_arimoto(out).capacity_bits < 1e-9);
  }

  TEST_CASE("discretize: one threshold separates disjoint rows") {
    const auto ch = testsup::gaussian_rows_channel({1.0, 2.0}, {3.5, 6.5}, 0.1, 2.5, 7.5, 50);
    const std::vector<double> t = {5.0};
    const auto out = discretize_reads(ch, t);
    CHECK(out.cols() == 2);
    CHECK(out.at(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(out.at(1, 1) == doctest::Approx(1.0).epsilon(1e-9));
  }

  TEST_CASE("discretize: threshold validation") {
    const auto ch = testsup::random_channel(2, 8, 13);
    CHECK_THROWS_AS(discretize_reads(ch, std::vector<double>{3.0, 2.0}), Error);
    CHECK_THROWS_AS(discretize_reads(ch, std::vector<double>{2.0, 2.0}), Error);
    CHECK_THROWS_AS(discretize_reads(ch, std::vector<double>{-1.0}), Error);
    CHECK_THROWS_AS(discretize_reads(ch, std::vector<double>{ch.r_grid().hi()}), Error);
  }

  TEST_CASE("discretize: merging reads never increases mutual information") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 3; ++trial) {
      const auto ch = testsup::random_channel(4, 16, 100 + trial);
      std::vector<double> thresholds;
      for (std::size_t e = 1; e < ch.r_grid().edge_count() - 1; ++e)
        if (rng() % 3 == 0) thresholds.push_back(ch.r_grid().edge(e));
      const auto coarse = discretize_reads(ch, thresholds);
      for (int k = 0; k < 20; ++k) {
        const auto input = random_input(4, rng());
        CHECK(mutual_information(coarse, input) <= mutual_information(ch, input) + 1e-9);
      }
    }
  }

  TEST_CASE("restrict_writes: projection semantics and errors") {
    const auto ch = testsup::random_channel(5, 6, 21);
    std::vector<std::size_t> all = {0, 1, 2, 3, 4};
    CHECK(restrict_writes(ch, all).matrix() == ch.matrix());

    const std::vector<std::size_t> one = {2};
    const auto single = restrict_writes(ch, one);
    CHECK(single.rows() == 1);
    CHECK(blahut_arimoto(single).capacity_bits < 1e-9);

    const std::vector<std::size_t> some = {1, 3};
    const auto sub = restrict_writes(ch, some);
    for (std::size_t j = 0; j < ch.cols(); ++j) {
      CHECK(sub.at(0, j) == ch.at(1, j));
      CHECK(sub.at(1, j) == ch.at(3, j));
    }

    CHECK_THROWS_AS(restrict_writes(ch, std::vector<std::size_t>{}), Error);
    CHECK_THROWS_AS(restrict_writes(ch, std::vector<std::size_t>{7}), Error);
    CHECK_THROWS_AS(restrict_writes(ch, std::vector<std::size_t>{1, 1}), Error);
  }

  TEST_CASE("transforms preserve row stochasticity") {
    SynthPcmParams p;
    const auto ch = synth_pcm_channel(p, VoltageGrid::linspace(0.5, 3.0, 12),
                                      ResistanceGrid::uniform_cells(2.5, 7.0, 200));
    const std::vector<double> t = {3.2, 4.4, 5.1};
    const std::vector<std::size_t> idx = {0, 3, 7, 11};
    const auto out = restrict_writes(discretize_reads(ch, t), idx);
    for (std::size_t i = 0; i < out.rows(); ++i) {
      double sum = 0.0;
      for (double x : out.row(i)) sum += x;
      CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
  }

  TEST_CASE("sample_synth_measurements is deterministic and array-shaped") {
    SynthPcmParams p;
    const auto v = VoltageGrid::linspace(0.5, 3.0, 40);
    const auto a = sample_synth_measurements(p, v, 380, 42);
    const auto b = sample_synth_measurements(p, v, 380, 42);
    CHECK(a.records.size() == 40 * 380);
    REQUIRE(a.records.size() == b.records.size());
    CHECK(a.records[12345].resistance_ohms == b.records[12345].resistance_ohms);
    for (const auto& rec : a.records) CHECK(rec.resistance_ohms > 0.0);
  }
}

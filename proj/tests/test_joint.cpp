#include <doctest.h>

#include <cmath>

#include "memchan/io.hpp"
#include "memchan/joint_coding.hpp"
#include "test_support.hpp"

using namespace memchan;
using testsup::awgn_channel;
using testsup::random_channel;

namespace {

const double kHalfNormalMean = std::sqrt(2.0 / M_PI);  // E[S | S > 0] for standard normal

ConditionalChannel uninformative(std::size_t rows, std::size_t cols) {
  std::vector<std::vector<double>> m(rows, std::vector<double>(cols, 1.0 / static_cast<double>(cols)));
  return ConditionalChannel::from_matrix(m);
}

ConditionalChannel reduced_synth() {
  ChannelConfig cfg;
  cfg.source = "synthetic";
  cfg.r_cells = 256;
  return build_channel(cfg);
}

}  // namespace

TEST_SUITE("joint") {
  TEST_CASE("naive mapping: midpoint and endpoints") {
    const auto src = SourceModel::gaussian(0.0, 1.0, 101);
    const auto ch = uninformative(11, 8);
    const auto map = naive_mapping(src, ch);
    CHECK(map.encoder.front() == 0);
    CHECK(map.encoder[50] == 5);   // source mean -> middle write level
    CHECK(map.encoder.back() == 10);
    CHECK(map.decoder.front() == doctest::Approx(src.grid.front()).epsilon(1e-12));
    CHECK(map.decoder.back() == doctest::Approx(src.grid.back()).epsilon(1e-12));
  }

  TEST_CASE("optimal decoder: sign encoder recovers the half-normal means") {
    const auto src = SourceModel::gaussian(0.0, 1.0, 1000);
    const auto ch = ConditionalChannel::from_matrix({{1.0, 0.0}, {0.0, 1.0}});
    std::vector<std::size_t> encoder(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) encoder[i] = src.grid[i] >= 0.0 ? 1 : 0;
    const auto dec = optimal_decoder(src, ch, encoder);
    REQUIRE(dec.size() == 2);
    CHECK(std::abs(dec[0] + kHalfNormalMean) < 2e-3);
    CHECK(std::abs(dec[1] - kHalfNormalMean) < 2e-3);
  }

  TEST_CASE("optimal decoder: uninformative channel falls back to the source mean") {
    const auto src = SourceModel::gaussian(0.0, 1.0, 500);
    const auto ch = uninformative(4, 6);
    const auto naive = naive_mapping(src, ch);
    MappingTable map = naive;
    map.decoder = optimal_decoder(src, ch, naive.encoder);
    for (double g : map.decoder) CHECK(g == doctest::Approx(0.0).epsilon(1e-9));
    const auto res = evaluate(src, ch, map);
    CHECK(res.mse == doctest::Approx(src.variance).epsilon(1e-12));
    CHECK(res.snr_db == doctest::Approx(0.0).epsilon(1e-9));
  }

  TEST_CASE("optimal decoder never loses to the naive decoder") {
    const auto src = SourceModel::gaussian(0.0, 1.0, 400);
    const auto ch = reduced_synth();
    const auto naive = naive_mapping(src, ch);
    MappingTable mmse = naive;
    mmse.decoder = optimal_decoder(src, ch, naive.encoder);
    CHECK(evaluate(src, ch, mmse).mse <= evaluate(src, ch, naive).mse + 1e-12);
  }

  TEST_CASE("optimal decoder satisfies the orthogonality property") {
    const auto src = SourceModel::gaussian(0.0, 1.0, 300);
    const auto ch = random_channel(5, 12, 2024);
    const auto naive = naive_mapping(src, ch);
    const auto dec = optimal_decoder(src, ch, naive.encoder);
    for (std::size_t r = 0; r < ch.cols(); ++r) {
      double resid = 0.0;
      for (std::size_t i = 0; i < src.size(); ++i)
        resid += src.weights[i] * ch.at(naive.encoder[i], r) * (src.grid[i] - dec[r]);
      CHECK(std::abs(resid) < 1e-8);
    }
  }

  TEST_CASE("optimal encoder: nearest-centroid structure on a noiseless channel") {
    const auto src = SourceModel::gaussian(0.0, 1.0, 200);
    const auto ch = ConditionalChannel::from_matrix({{1.0, 0.0, 0.0, 0.0},
                                                     {0.0, 1.0, 0.0, 0.0},
                                                     {0.0, 0.0, 1.0, 0.0},
                                                     {0.0, 0.0, 0.0, 1.0}});
    const std::vector<double> decoder = {-3.0, -1.0, 1.0, 3.0};
    const auto enc = optimal_encoder(src, ch, decoder);
    for (std::size_t i = 0; i < src.size(); ++i) {
      std::size_t nearest = 0;
      for (std::size_t v = 1; v < decoder.size(); ++v)
        if (std::abs(decoder[v] - src.grid[i]) < std::abs(decoder[nearest] - src.grid[i]))
          nearest = v;
      CHECK(enc[i] == nearest);
    }
  }

  TEST_CASE("optimal encoder: single write level forces a constant mapping") {
    const auto src = SourceModel::gaussian(0.0, 1.0, 100);
    const auto ch = ConditionalChannel::from_matrix({{0.3, 0.7}});
    const auto enc = optimal_encoder(src, ch, {0.1, 0.4});
    for (std::size_t v : enc) CHECK(v == 0);
  }

  TEST_CASE("optimal encoder beats arbitrary encoders for the same decoder") {
    const auto src = SourceModel::gaussian(0.0, 1.0, 256);
    const auto ch = random_channel(6, 10, 31337);
    const auto naive = naive_mapping(src, ch);
    MappingTable best = naive;
    best.encoder = optimal_encoder(src, ch, naive.decoder);
    const double best_mse = evaluate(src, ch, best).mse;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      MappingTable other = naive;
      std::mt19937_64 rng(seed);
      for (auto& v : other.encoder) v = rng() % ch.rows();
      CHECK(best_mse <= evaluate(src, ch, other).mse + 1e-12);
    }
  }

  TEST_CASE("solve_joint: AWGN channel attains the analytic linear-MMSE benchmark") {
    const auto src = SourceModel::gaussian(0.0, 1.0, 1000);
    for (double sigma_n : {0.5, 1.0}) {
      const auto ch = awgn_channel(sigma_n, 129, -4.0, 4.0, 512);
      const double analytic = sigma_n * sigma_n / (1.0 + sigma_n * sigma_n);

      const auto naive = naive_mapping(src, ch);
      MappingTable dec_only = naive;
      dec_only.decoder = optimal_decoder(src, ch, naive.encoder);
      CHECK(evaluate(src, ch, dec_only).mse == doctest::Approx(analytic).epsilon(0.02));

      const auto joint = solve_joint(src, ch, naive, 200, 1e-12);
      CHECK(joint.converged);
      CHECK(joint.mse <= 1.02 * analytic);
      for (std::size_t k = 1; k < joint.mse_trace.size(); ++k)
        CHECK(joint.mse_trace[k] <= joint.mse_trace[k - 1] + 1e-12);
    }
  }

  TEST_CASE("solve_joint: uninformative channel cannot beat the source variance") {
    const auto src = SourceModel::gaussian(0.0, 1.0, 300);
    const auto ch = uninformative(6, 8);
    const auto res = solve_joint(src, ch, naive_mapping(src, ch));
    CHECK(res.mse == doctest::Approx(src.variance).epsilon(1e-9));
    CHECK(res.snr_db == doctest::Approx(0.0).epsilon(1e-6));
  }

  TEST_CASE("variant ordering on the synthetic channel") {
    const auto src = SourceModel::gaussian(0.0, 1.0, 500);
    const auto ch = reduced_synth();

    const auto naive = naive_mapping(src, ch);
    const double naive_snr = evaluate(src, ch, naive).snr_db;

    MappingTable dec_map = naive;
    dec_map.decoder = optimal_decoder(src, ch, naive.encoder);
    const double dec_snr = evaluate(src, ch, dec_map).snr_db;

    MappingTable enc_map = naive;
    enc_map.encoder = optimal_encoder(src, ch, naive.decoder);
    const double enc_snr = evaluate(src, ch, enc_map).snr_db;

    const auto joint = solve_joint_multistart(src, ch, 5, 99);
    CHECK(joint.snr_db >= enc_snr - 1e-9);
    CHECK(joint.snr_db >= dec_snr - 1e-9);
    CHECK(enc_snr >= naive_snr - 1e-9);
    CHECK(dec_snr >= naive_snr - 1e-9);
  }

  TEST_CASE("solve_joint reports exactly what evaluate computes") {
    const auto src = SourceModel::gaussian(0.0, 1.0, 300);
    const auto ch = reduced_synth();
    const auto res = solve_joint(src, ch, naive_mapping(src, ch), 60, 1e-12);
    CHECK(evaluate(src, ch, res.mapping).mse == doctest::Approx(res.mse).epsilon(1e-12));
  }

  TEST_CASE("monotone low-noise channel learns a monotone encoder") {
    SynthPcmParams p;
    p.dip_depth = 0.0;
    p.noise_floor = 0.05;
    p.noise_slope = 0.0;
    const auto ch = synth_pcm_channel(p, VoltageGrid::linspace(0.5, 3.0, 24),
                                      ResistanceGrid::uniform_cells(2.5, 7.0, 256));
    const auto src = SourceModel::gaussian(0.0, 1.0, 400);
    const auto res = solve_joint(src, ch, naive_mapping(src, ch));
    CHECK(encoder_is_monotone(res.mapping.encoder));
  }

  TEST_CASE("effective channel: diagonal for a clean setup, flat for a useless one") {
    const auto src = SourceModel::gaussian(0.0, 1.0, 64);
    const auto awgn = awgn_channel(0.05, 33, -4.0, 4.0, 256);
    const auto joint = solve_joint(src, awgn, naive_mapping(src, awgn));
    const auto eff = effective_channel(src, awgn, joint.mapping, 64);
    // diagonal concentration: the argmax bin must track the source index
    for (std::size_t probe : {std::size_t{5}, std::size_t{32}, std::size_t{60}}) {
      std::size_t arg = 0;
      for (std::size_t b = 1; b < eff.bins; ++b)
        if (eff.matrix[probe * eff.bins + b] > eff.matrix[probe * eff.bins + arg]) arg = b;
      const double shat = 0.5 * (eff.bin_edges[arg] + eff.bin_edges[arg + 1]);
      CHECK(std::abs(shat - src.grid[probe]) < 0.4);
    }

    const auto flat_ch = uninformative(4, 16);
    const auto naive = naive_mapping(src, flat_ch);
    const auto eff_flat = effective_channel(src, flat_ch, naive, 8);
    for (std::size_t b = 0; b < eff_flat.bins; ++b)
      CHECK(eff_flat.matrix[b] == doctest::Approx(eff_flat.matrix[20 * eff_flat.bins + b]).epsilon(1e-12));
  }

  TEST_CASE("effective channel: naive mapping re-axes the device channel") {
    const auto src = SourceModel::gaussian(0.0, 1.0, 200);
    const auto ch = reduced_synth();
    const auto naive = naive_mapping(src, ch);
    const auto eff = effective_channel(src, ch, naive, ch.cols());
    // each row's bin pattern matches the raw channel row up to edge binning
    for (std::size_t probe : {std::size_t{50}, std::size_t{100}, std::size_t{150}}) {
      const auto raw = ch.row(naive.encoder[probe]);
      double tv = 0.0;
      for (std::size_t j = 0; j + 1 < ch.cols(); ++j)
        tv += std::abs(eff.matrix[probe * eff.bins + j] - raw[j]);
      CHECK(tv < 0.05);
    }
  }

  TEST_CASE("mapping validation") {
    const auto src = SourceModel::gaussian(0.0, 1.0, 50);
    const auto ch = uninformative(3, 4);
    MappingTable map = naive_mapping(src, ch);
    map.encoder[3] = 17;
    CHECK_THROWS_AS(evaluate(src, ch, map), Error);
    map = naive_mapping(src, ch);
    map.decoder.pop_back();
    CHECK_THROWS_AS(evaluate(src, ch, map), Error);
    CHECK_THROWS_AS(effective_channel(src, ch, naive_mapping(src, ch), 1), Error);
  }
}

#include "memchan/joint_coding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "memchan/util.hpp"

namespace memchan {

namespace {

// Per-level moments of the decoder under P(R|v):
//   b[v] = E[G(R) | v],  a[v] = E[G(R)^2 | v]
// so the per-symbol cost is  E[(G(R) - s)^2 | v] = a[v] - 2 s b[v] + s^2.
struct DecoderMoments {
  std::vector<double> a;
  std::vector<double> b;
};

DecoderMoments decoder_moments(const ConditionalChannel& ch, const std::vector<double>& decoder) {
  DecoderMoments m;
  m.a.assign(ch.rows(), 0.0);
  m.b.assign(ch.rows(), 0.0);
  for (std::size_t v = 0; v < ch.rows(); ++v) {
    const auto row = ch.row(v);
    double a = 0.0, b = 0.0;
    for (std::size_t r = 0; r < ch.cols(); ++r) {
      a += row[r] * decoder[r] * decoder[r];
      b += row[r] * decoder[r];
    }
    m.a[v] = a;
    m.b[v] = b;
  }
  return m;
}

double distortion(const SourceModel& src, const ConditionalChannel& ch, const MappingTable& map) {
  const DecoderMoments m = decoder_moments(ch, map.decoder);
  double mse = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const std::size_t v = map.encoder[i];
    const double s = src.grid[i];
    mse += src.weights[i] * (m.a[v] - 2.0 * s * m.b[v] + s * s);
  }
  return std::max(0.0, mse);
}

double snr_db_of(double variance, double mse) {
  if (mse <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(variance / mse);
}

MappingTable random_start(const SourceModel& src, const ConditionalChannel& ch, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  MappingTable map = naive_mapping(src, ch);
  for (auto& level : map.encoder) level = rng() % ch.rows();
  return map;
}

}  // namespace

void MappingTable::validate(const SourceModel& src, const ConditionalChannel& ch) const {
  if (encoder.size() != src.size())
    fail(Errc::dimension_mismatch, "MappingTable: encoder length != source grid size");
  if (decoder.size() != ch.cols())
    fail(Errc::dimension_mismatch, "MappingTable: decoder length != read cell count");
  for (std::size_t v : encoder) {
    if (v >= ch.rows()) fail(Errc::index_out_of_range, "MappingTable: encoder level out of range");
  }
  for (double g : decoder) {
    if (!std::isfinite(g)) fail(Errc::invalid_params, "MappingTable: non-finite decoder value");
  }
}

std::string to_string(CodingVariant v) {
  switch (v) {
    case CodingVariant::naive: return "naive";
    case CodingVariant::encoder_only: return "encoder_only";
    case CodingVariant::decoder_only: return "decoder_only";
    case CodingVariant::joint: return "joint";
  }
  return "unknown";
}

MappingTable naive_mapping(const SourceModel& src, const ConditionalChannel& ch) {
  src.validate();
  MappingTable map;
  const double s_lo = src.grid.front();
  const double s_hi = src.grid.back();
  const double v_lo = ch.v_grid()[0];
  const double v_hi = ch.v_grid()[ch.rows() - 1];

  map.encoder.resize(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double t = (src.grid[i] - s_lo) / (s_hi - s_lo);
    map.encoder[i] = ch.v_grid().nearest(v_lo + t * (v_hi - v_lo));
  }

  // Cell centers span the reconstruction range end to end.
  const double c_lo = ch.r_grid().cell_center(0);
  const double c_hi = ch.r_grid().cell_center(ch.cols() - 1);
  map.decoder.resize(ch.cols());
  for (std::size_t j = 0; j < ch.cols(); ++j) {
    const double t = c_hi > c_lo ? (ch.r_grid().cell_center(j) - c_lo) / (c_hi - c_lo) : 0.5;
    map.decoder[j] = s_lo + t * (s_hi - s_lo);
  }
  return map;
}

std::vector<double> optimal_decoder(const SourceModel& src, const ConditionalChannel& ch,
                                    const std::vector<std::size_t>& encoder) {
  src.validate();
  if (encoder.size() != src.size())
    fail(Errc::dimension_mismatch, "optimal_decoder: encoder length != source grid size");

  // Group source mass by write level, then take one pass over the matrix.
  std::vector<double> w_by_level(ch.rows(), 0.0);
  std::vector<double> ws_by_level(ch.rows(), 0.0);
  for (std::size_t i = 0; i < src.size(); ++i) {
    const std::size_t v = encoder[i];
    if (v >= ch.rows()) fail(Errc::index_out_of_range, "optimal_decoder: encoder level out of range");
    w_by_level[v] += src.weights[i];
    ws_by_level[v] += src.weights[i] * src.grid[i];
  }

  std::vector<double> num(ch.cols(), 0.0);
  std::vector<double> den(ch.cols(), 0.0);
  for (std::size_t v = 0; v < ch.rows(); ++v) {
    if (w_by_level[v] == 0.0) continue;
    const auto row = ch.row(v);
    for (std::size_t r = 0; r < ch.cols(); ++r) {
      num[r] += ws_by_level[v] * row[r];
      den[r] += w_by_level[v] * row[r];
    }
  }

  std::vector<double> decoder(ch.cols());
  for (std::size_t r = 0; r < ch.cols(); ++r)
    decoder[r] = den[r] > 0.0 ? num[r] / den[r] : src.mean;
  return decoder;
}

std::vector<std::size_t> optimal_encoder(const SourceModel& src, const ConditionalChannel& ch,
                                         const std::vector<double>& decoder) {
  src.validate();
  if (decoder.size() != ch.cols())
    fail(Errc::dimension_mismatch, "optimal_encoder: decoder length != read cell count");

  const DecoderMoments m = decoder_moments(ch, decoder);
  std::vector<std::size_t> encoder(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double s = src.grid[i];
    std::size_t arg = 0;
    double best = m.a[0] - 2.0 * s * m.b[0];
    for (std::size_t v = 1; v < ch.rows(); ++v) {
      const double cost = m.a[v] - 2.0 * s * m.b[v];
      if (cost < best) {  // strict: ties stay on the lower level
        best = cost;
        arg = v;
      }
    }
    encoder[i] = arg;
  }
  return encoder;
}

CodingResult evaluate(const SourceModel& src, const ConditionalChannel& ch,
                      const MappingTable& mapping, CodingVariant variant) {
  src.validate();
  mapping.validate(src, ch);
  CodingResult res;
  res.mapping = mapping;
  res.mse = distortion(src, ch, mapping);
  res.snr_db = snr_db_of(src.variance, res.mse);
  res.variant = variant;
  return res;
}

CodingResult solve_joint(const SourceModel& src, const ConditionalChannel& ch,
                         const MappingTable& init, std::size_t max_rounds, double tol) {
  src.validate();
  init.validate(src, ch);
  if (max_rounds < 1) fail(Errc::invalid_params, "solve_joint: max_rounds must be >= 1");
  if (tol < 0.0) fail(Errc::invalid_params, "solve_joint: tol must be >= 0");

  MappingTable map = init;
  CodingResult res;
  res.variant = CodingVariant::joint;
  double mse = distortion(src, ch, map);

  for (std::size_t round = 1; round <= max_rounds; ++round) {
    map.decoder = optimal_decoder(src, ch, map.encoder);
    res.mse_trace.push_back(distortion(src, ch, map));

    map.encoder = optimal_encoder(src, ch, map.decoder);
    const double after = distortion(src, ch, map);
    res.mse_trace.push_back(after);

    res.rounds = round;
    const double improvement = mse - after;
    mse = after;
    if (improvement <= tol) {
      res.converged = true;
      break;
    }
    res.converged = round < max_rounds;
  }

  res.mapping = std::move(map);
  res.mse = mse;
  res.snr_db = snr_db_of(src.variance, mse);
  return res;
}

CodingResult solve_joint_multistart(const SourceModel& src, const ConditionalChannel& ch,
                                    std::size_t starts, std::uint64_t seed, std::size_t max_rounds,
                                    double tol) {
  if (starts < 1) fail(Errc::invalid_params, "solve_joint_multistart: starts must be >= 1");

  std::vector<MappingTable> inits;
  inits.push_back(naive_mapping(src, ch));
  if (starts >= 2) {
    MappingTable reversed = inits.front();
    std::reverse(reversed.encoder.begin(), reversed.encoder.end());
    std::reverse(reversed.decoder.begin(), reversed.decoder.end());
    inits.push_back(std::move(reversed));
  }
  for (std::size_t k = inits.size(); k < starts; ++k)
    inits.push_back(random_start(src, ch, splitmix64(seed ^ (0x6a6f696e74ULL + k))));

  CodingResult best;
  bool have = false;
  for (const auto& init : inits) {
    CodingResult run = solve_joint(src, ch, init, max_rounds, tol);
    if (!have || run.mse < best.mse) {
      best = std::move(run);
      have = true;
    }
  }
  return best;
}

EffectiveChannel effective_channel(const SourceModel& src, const ConditionalChannel& ch,
                                   const MappingTable& mapping, std::size_t n_bins) {
  src.validate();
  mapping.validate(src, ch);
  if (n_bins < 2) fail(Errc::invalid_params, "effective_channel: n_bins must be >= 2");

  double lo = *std::min_element(mapping.decoder.begin(), mapping.decoder.end());
  double hi = *std::max_element(mapping.decoder.begin(), mapping.decoder.end());
  if (!(hi - lo > 0.0)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / static_cast<double>(n_bins);

  std::vector<std::size_t> bin_of(ch.cols());
  for (std::size_t r = 0; r < ch.cols(); ++r) {
    const auto b = static_cast<std::ptrdiff_t>((mapping.decoder[r] - lo) / width);
    bin_of[r] = static_cast<std::size_t>(
        std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(n_bins) - 1));
  }

  EffectiveChannel eff;
  eff.rows = src.size();
  eff.bins = n_bins;
  eff.bin_edges.resize(n_bins + 1);
  for (std::size_t b = 0; b <= n_bins; ++b) eff.bin_edges[b] = lo + width * static_cast<double>(b);
  eff.matrix.assign(src.size() * n_bins, 0.0);
  for (std::size_t i = 0; i < src.size(); ++i) {
    const auto row = ch.row(mapping.encoder[i]);
    double* out = eff.matrix.data() + i * n_bins;
    for (std::size_t r = 0; r < ch.cols(); ++r) out[bin_of[r]] += row[r];
  }
  return eff;
}

bool encoder_is_monotone(const std::vector<std::size_t>& encoder) {
  bool up = true, down = true;
  for (std::size_t i = 1; i < encoder.size(); ++i) {
    if (encoder[i] < encoder[i - 1]) up = false;
    if (encoder[i] > encoder[i - 1]) down = false;
  }
  return up || down;
}

}  // namespace memchan

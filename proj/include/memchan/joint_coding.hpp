#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "memchan/channel.hpp"
#include "memchan/source_model.hpp"

namespace memchan {

// Block-length-1 storage mapping: encoder F assigns each source grid point a
// write level index, decoder G assigns each read cell a reconstruction.
struct MappingTable {
  std::vector<std::size_t> encoder;  // |source grid| entries, v_grid indices
  std::vector<double> decoder;       // one value per read cell

  void validate(const SourceModel& src, const ConditionalChannel& ch) const;
};

enum class CodingVariant { naive, encoder_only, decoder_only, joint };

std::string to_string(CodingVariant v);

struct CodingResult {
  MappingTable mapping;
  double mse = 0.0;
  double snr_db = 0.0;  // 10*log10(source variance / mse)
  CodingVariant variant = CodingVariant::naive;
  std::size_t rounds = 0;
  bool converged = true;
  std::vector<double> mse_trace;  // after every decoder/encoder half-step
};

// Effective channel P(Shat | S): reconstruction binned over the decoder's
// output range, one row per source grid point.
struct EffectiveChannel {
  std::vector<double> bin_edges;  // n_bins + 1
  std::vector<double> matrix;     // row-major, |S| x n_bins
  std::size_t rows = 0;
  std::size_t bins = 0;
};

// Uncoded baseline: source range mapped affinely onto the write-voltage
// range (snapped to grid levels), read cells mapped affinely back onto the
// source range.
MappingTable naive_mapping(const SourceModel& src, const ConditionalChannel& ch);

// MMSE decoder for a fixed encoder: G(r) = E[S | R = r]. Read cells with no
// posterior mass fall back to the source mean.
std::vector<double> optimal_decoder(const SourceModel& src, const ConditionalChannel& ch,
                                    const std::vector<std::size_t>& encoder);

// Per-symbol enumeration encoder for a fixed decoder:
// F(s) = argmin_v  E[(G(R) - s)^2 | V = v], ties toward the lower level.
std::vector<std::size_t> optimal_encoder(const SourceModel& src, const ConditionalChannel& ch,
                                         const std::vector<double>& decoder);

// Exact discrete end-to-end distortion of a mapping.
CodingResult evaluate(const SourceModel& src, const ConditionalChannel& ch,
                      const MappingTable& mapping,
                      CodingVariant variant = CodingVariant::naive);

// Alternate optimal_decoder / optimal_encoder from `init` until the MSE
// improvement drops below tol or max_rounds is hit. Distortion is
// non-increasing at every half-step; the trace records it.
CodingResult solve_joint(const SourceModel& src, const ConditionalChannel& ch,
                         const MappingTable& init, std::size_t max_rounds = 100,
                         double tol = 1e-12);

// Coordinate descent can stall in local minima; run from several starts
// (naive, reversed naive, seeded random encoders) and keep the best.
CodingResult solve_joint_multistart(const SourceModel& src, const ConditionalChannel& ch,
                                    std::size_t starts = 5, std::uint64_t seed = 0,
                                    std::size_t max_rounds = 100, double tol = 1e-12);

EffectiveChannel effective_channel(const SourceModel& src, const ConditionalChannel& ch,
                                   const MappingTable& mapping, std::size_t n_bins);

bool encoder_is_monotone(const std::vector<std::size_t>& encoder);

}  // namespace memchan

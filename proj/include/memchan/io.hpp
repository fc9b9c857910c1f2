#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "memchan/capacity.hpp"
#include "memchan/channel.hpp"
#include "memchan/energy.hpp"
#include "memchan/joint_coding.hpp"
#include "memchan/level_optimizer.hpp"
#include "memchan/rate_distortion.hpp"
#include "memchan/source_model.hpp"

namespace memchan {

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------- config --

struct ChannelConfig {
  std::string source;  // "csv" | "synthetic"
  std::string csv_path;
  SynthPcmParams synth;
  double v_min = 0.5, v_max = 3.0;
  std::size_t v_count = 40;
  double r_min = 2.5, r_max = 7.0;
  std::size_t r_cells = 2001;
  std::optional<double> kde_bandwidth;  // nullopt = Silverman per row
};

struct CapacityConfig {
  double tol = kDefaultBaTol;
  std::size_t max_iter = kDefaultBaMaxIter;
};

struct LevelsConfig {
  std::vector<std::size_t> reads = {2, 4, 8, 16, 32, 64};
  std::vector<std::size_t> writes = {2, 4, 8, 16, 40};
};

struct EnergyConfig {
  std::string model = "parametric";  // "parametric" | "table"
  double a = 1.0 / 9.0;              // default: e(3 V) = 1 nJ, placeholder scale
  double b = 0.0;
  double c = 0.0;
  std::vector<double> table;
  std::vector<double> s_values;  // empty = default_s_grid
  std::size_t sweep_points = 60;
};

struct SourceConfig {
  double mean = 0.0;
  double variance = 1.0;
  std::size_t points = 1000;
  double span_sigmas = 4.0;
};

struct JointConfig {
  std::size_t max_rounds = 100;
  double tol = 1e-12;
  std::size_t starts = 5;
  std::size_t effective_bins = 256;
};

struct RdConfig {
  std::vector<double> rates = {0.25, 0.5, 0.75, 1.0, 1.5, 2.0};
  std::vector<std::size_t> quantizer_levels = {2, 4, 8};
  std::vector<double> extra_capacities;
};

struct RunConfig {
  ChannelConfig channel;
  CapacityConfig capacity;
  AnnealSchedule anneal;
  LevelsConfig levels;
  EnergyConfig energy;
  SourceConfig source;
  JointConfig joint;
  RdConfig rd;
  std::uint64_t seed = 0;
};

RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

// Canonical JSON of the channel section; its hash ties artifacts to the
// config that produced them.
nlohmann::json channel_config_json(const ChannelConfig& cfg);
std::string hash_hex(const nlohmann::json& doc);

// ------------------------------------------------------------- artifacts --

MeasurementSet read_measurements_csv(const std::filesystem::path& path);

VoltageGrid make_v_grid(const ChannelConfig& cfg);
ResistanceGrid make_r_grid(const ChannelConfig& cfg);
ConditionalChannel build_channel(const ChannelConfig& cfg);

nlohmann::json channel_to_json(const ConditionalChannel& ch, const std::string& config_hash);
ConditionalChannel channel_from_json(const nlohmann::json& doc, std::string* config_hash_out = nullptr);

nlohmann::json capacity_result_json(const CapacityResult& ba, double uniform_bits);
nlohmann::json coding_result_json(const SourceModel& src, const ConditionalChannel& ch,
                                  const CodingResult& res);
nlohmann::json efficiency_inputs_json(std::span<const EfficiencyPoint> points);

// ------------------------------------------------------------------ csv ---

std::string fmt_g17(double x);

std::string surface_csv(std::span<const LevelDesign> designs);
std::string frontier_csv(std::span<const EfficiencyPoint> points);
std::string rd_csv(std::span<const RDPoint> points);
std::string effective_channel_csv(const EffectiveChannel& eff);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace memchan

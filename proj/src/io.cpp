#include "memchan/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "memchan/util.hpp"

namespace memchan {

namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

double parse_double(const std::string& s, std::size_t line_no, const char* col) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(Errc::csv_schema, "CSV line " + std::to_string(line_no) + ": bad " + col + " value '" + s + "'");
  }
}

std::int64_t parse_int(const std::string& s, std::size_t line_no, const char* col) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    fail(Errc::csv_schema, "CSV line " + std::to_string(line_no) + ": bad " + col + " value '" + s + "'");
  return v;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(Errc::bad_config, std::string("config key '") + key + "': " + e.what());
  }
}

const json& require_obj(const json& j, const char* key) {
  if (!j.contains(key)) fail(Errc::bad_config, std::string("config: missing required key '") + key + "'");
  return j.at(key);
}

}  // namespace

// ------------------------------------------------------------------ config

RunConfig parse_config(const json& doc) {
  RunConfig cfg;
  if (!doc.is_object()) fail(Errc::bad_config, "config: top-level document must be an object");
  if (!doc.contains("seed")) fail(Errc::bad_config, "config: missing required key 'seed'");
  cfg.seed = doc.at("seed").get<std::uint64_t>();

  const json& ch = require_obj(doc, "channel");
  cfg.channel.source = get_or<std::string>(ch, "source", "");
  if (cfg.channel.source != "csv" && cfg.channel.source != "synthetic")
    fail(Errc::bad_config, "config channel.source must be 'csv' or 'synthetic'");
  cfg.channel.csv_path = get_or<std::string>(ch, "csv_path", "");
  if (cfg.channel.source == "csv" && cfg.channel.csv_path.empty())
    fail(Errc::bad_config, "config channel.csv_path required for source 'csv'");
  if (ch.contains("synth")) {
    const json& sp = ch.at("synth");
    auto& p = cfg.channel.synth;
    p.r_set = get_or(sp, "r_set", p.r_set);
    p.r_max = get_or(sp, "r_max", p.r_max);
    p.v_onset = get_or(sp, "v_onset", p.v_onset);
    p.v_melt = get_or(sp, "v_melt", p.v_melt);
    p.slope1 = get_or(sp, "slope1", p.slope1);
    p.slope2 = get_or(sp, "slope2", p.slope2);
    p.noise_floor = get_or(sp, "noise_floor", p.noise_floor);
    p.noise_slope = get_or(sp, "noise_slope", p.noise_slope);
    p.dip_depth = get_or(sp, "dip_depth", p.dip_depth);
  }
  if (ch.contains("v_grid")) {
    const json& g = ch.at("v_grid");
    cfg.channel.v_min = get_or(g, "min", cfg.channel.v_min);
    cfg.channel.v_max = get_or(g, "max", cfg.channel.v_max);
    cfg.channel.v_count = get_or(g, "count", cfg.channel.v_count);
  }
  if (ch.contains("r_grid")) {
    const json& g = ch.at("r_grid");
    cfg.channel.r_min = get_or(g, "min", cfg.channel.r_min);
    cfg.channel.r_max = get_or(g, "max", cfg.channel.r_max);
    cfg.channel.r_cells = get_or(g, "cells", cfg.channel.r_cells);
  }
  if (ch.contains("kde_bandwidth")) {
    const json& bw = ch.at("kde_bandwidth");
    if (bw.is_string()) {
      if (bw.get<std::string>() != "auto")
        fail(Errc::bad_config, "config channel.kde_bandwidth must be a number or \"auto\"");
    } else {
      cfg.channel.kde_bandwidth = bw.get<double>();
    }
  }

  if (doc.contains("capacity")) {
    const json& c = doc.at("capacity");
    cfg.capacity.tol = get_or(c, "tol", cfg.capacity.tol);
    cfg.capacity.max_iter = get_or(c, "max_iter", cfg.capacity.max_iter);
  }
  if (doc.contains("anneal")) {
    const json& a = doc.at("anneal");
    cfg.anneal.initial_temp = get_or(a, "initial_temp", cfg.anneal.initial_temp);
    cfg.anneal.cooling_rate = get_or(a, "cooling_rate", cfg.anneal.cooling_rate);
    cfg.anneal.steps_per_temp = get_or(a, "steps_per_temp", cfg.anneal.steps_per_temp);
    cfg.anneal.min_temp = get_or(a, "min_temp", cfg.anneal.min_temp);
    cfg.anneal.proposal_sigma = get_or(a, "proposal_sigma", cfg.anneal.proposal_sigma);
  }
  if (doc.contains("levels")) {
    const json& l = doc.at("levels");
    cfg.levels.reads = get_or(l, "reads", cfg.levels.reads);
    cfg.levels.writes = get_or(l, "writes", cfg.levels.writes);
  }
  if (doc.contains("energy")) {
    const json& e = doc.at("energy");
    cfg.energy.model = get_or(e, "model", cfg.energy.model);
    cfg.energy.a = get_or(e, "a", cfg.energy.a);
    cfg.energy.b = get_or(e, "b", cfg.energy.b);
    cfg.energy.c = get_or(e, "c", cfg.energy.c);
    cfg.energy.table = get_or(e, "table", cfg.energy.table);
    cfg.energy.s_values = get_or(e, "s_values", cfg.energy.s_values);
    cfg.energy.sweep_points = get_or(e, "sweep_points", cfg.energy.sweep_points);
    if (cfg.energy.model != "parametric" && cfg.energy.model != "table")
      fail(Errc::bad_config, "config energy.model must be 'parametric' or 'table'");
  }
  if (doc.contains("source")) {
    const json& s = doc.at("source");
    cfg.source.mean = get_or(s, "mean", cfg.source.mean);
    cfg.source.variance = get_or(s, "variance", cfg.source.variance);
    cfg.source.points = get_or(s, "points", cfg.source.points);
    cfg.source.span_sigmas = get_or(s, "span_sigmas", cfg.source.span_sigmas);
  }
  if (doc.contains("joint")) {
    const json& jj = doc.at("joint");
    cfg.joint.max_rounds = get_or(jj, "max_rounds", cfg.joint.max_rounds);
    cfg.joint.tol = get_or(jj, "tol", cfg.joint.tol);
    cfg.joint.starts = get_or(jj, "starts", cfg.joint.starts);
    cfg.joint.effective_bins = get_or(jj, "effective_bins", cfg.joint.effective_bins);
  }
  if (doc.contains("rd")) {
    const json& r = doc.at("rd");
    cfg.rd.rates = get_or(r, "rates", cfg.rd.rates);
    cfg.rd.quantizer_levels = get_or(r, "quantizer_levels", cfg.rd.quantizer_levels);
    cfg.rd.extra_capacities = get_or(r, "extra_capacities", cfg.rd.extra_capacities);
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::bad_config, "config file not readable: " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    fail(Errc::bad_config, "config parse error in " + path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

nlohmann::json channel_config_json(const ChannelConfig& cfg) {
  json j;
  j["source"] = cfg.source;
  j["v_grid"] = {{"min", cfg.v_min}, {"max", cfg.v_max}, {"count", cfg.v_count}};
  j["r_grid"] = {{"min", cfg.r_min}, {"max", cfg.r_max}, {"cells", cfg.r_cells}};
  if (cfg.source == "csv") {
    j["csv_path"] = cfg.csv_path;
    if (cfg.kde_bandwidth)
      j["kde_bandwidth"] = *cfg.kde_bandwidth;
    else
      j["kde_bandwidth"] = "auto";
  } else {
    const auto& p = cfg.synth;
    j["synth"] = {{"r_set", p.r_set},           {"r_max", p.r_max},
                  {"v_onset", p.v_onset},       {"v_melt", p.v_melt},
                  {"slope1", p.slope1},         {"slope2", p.slope2},
                  {"noise_floor", p.noise_floor}, {"noise_slope", p.noise_slope},
                  {"dip_depth", p.dip_depth}};
  }
  return j;
}

std::string hash_hex(const nlohmann::json& doc) {
  const std::uint64_t h = fnv1a64(doc.dump());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// --------------------------------------------------------------- artifacts

MeasurementSet read_measurements_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::file_not_found, "measurement CSV not readable: " + path.string());

  std::string line;
  if (!std::getline(in, line)) fail(Errc::csv_schema, "CSV line 1: missing header");
  const auto header = split_csv_line(line);
  const std::vector<std::string> expected = {"device_id", "v_wl_volts", "resistance_ohms"};
  if (header.size() != expected.size())
    fail(Errc::csv_schema, "CSV line 1: expected 3 columns, found " + std::to_string(header.size()));
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (header[i] != expected[i])
      fail(Errc::csv_schema, "CSV line 1: column " + std::to_string(i + 1) + " is '" + header[i] +
                                 "', expected '" + expected[i] + "'");
  }

  MeasurementSet set;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 3)
      fail(Errc::csv_schema,
           "CSV line " + std::to_string(line_no) + ": expected 3 fields, found " +
               std::to_string(fields.size()));
    Measurement rec;
    rec.device_id = parse_int(fields[0], line_no, "device_id");
    rec.v_wl = parse_double(fields[1], line_no, "v_wl_volts");
    rec.resistance_ohms = parse_double(fields[2], line_no, "resistance_ohms");
    if (!(rec.resistance_ohms > 0.0))
      fail(Errc::non_positive_resistance,
           "CSV line " + std::to_string(line_no) + ": resistance must be positive");
    set.records.push_back(rec);
  }
  return set;
}

VoltageGrid make_v_grid(const ChannelConfig& cfg) {
  return VoltageGrid::linspace(cfg.v_min, cfg.v_max, cfg.v_count);
}

ResistanceGrid make_r_grid(const ChannelConfig& cfg) {
  return ResistanceGrid::uniform_cells(cfg.r_min, cfg.r_max, cfg.r_cells);
}

ConditionalChannel build_channel(const ChannelConfig& cfg) {
  if (cfg.source == "synthetic") return synth_pcm_channel(cfg.synth, make_v_grid(cfg), make_r_grid(cfg));
  const MeasurementSet set = read_measurements_csv(cfg.csv_path);
  return estimate_kde(set, make_v_grid(cfg), make_r_grid(cfg), cfg.kde_bandwidth);
}

nlohmann::json channel_to_json(const ConditionalChannel& ch, const std::string& config_hash) {
  json j;
  j["kind"] = "channel";
  j["version"] = kVersion;
  j["config_hash"] = config_hash;
  j["v_grid"] = ch.v_grid().levels();
  j["r_grid"] = ch.r_grid().edges();
  json rows = json::array();
  for (std::size_t i = 0; i < ch.rows(); ++i) {
    const auto row = ch.row(i);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  j["matrix"] = std::move(rows);
  return j;
}

ConditionalChannel channel_from_json(const nlohmann::json& doc, std::string* config_hash_out) {
  try {
    if (doc.value("kind", "") != "channel")
      fail(Errc::bad_artifact, "channel artifact: missing kind == 'channel'");
    if (config_hash_out) *config_hash_out = doc.value("config_hash", "");
    auto v = doc.at("v_grid").get<std::vector<double>>();
    auto r = doc.at("r_grid").get<std::vector<double>>();
    const auto& rows = doc.at("matrix");
    std::vector<double> flat;
    flat.reserve(rows.size() * (r.size() - 1));
    for (const auto& row : rows) {
      const auto vals = row.get<std::vector<double>>();
      flat.insert(flat.end(), vals.begin(), vals.end());
    }
    return ConditionalChannel(VoltageGrid(std::move(v)), ResistanceGrid(std::move(r)), std::move(flat));
  } catch (const json::exception& e) {
    fail(Errc::bad_artifact, std::string("channel artifact: ") + e.what());
  }
}

nlohmann::json capacity_result_json(const CapacityResult& ba, double uniform_bits) {
  json j;
  j["capacity_bits"] = ba.capacity_bits;
  j["input_probs"] = ba.input.probs;
  j["support_indices"] = ba.support;
  j["iterations"] = ba.iterations;
  j["converged"] = ba.converged;
  j["support_size"] = ba.support.size();
  j["uniform_capacity_bits"] = uniform_bits;
  return j;
}

nlohmann::json coding_result_json(const SourceModel& src, const ConditionalChannel& ch,
                                  const CodingResult& res) {
  json j;
  j["variant"] = to_string(res.variant);
  j["mse"] = res.mse;
  j["snr_db"] = res.snr_db;
  j["rounds"] = res.rounds;
  j["converged"] = res.converged;
  j["encoder_monotone"] = encoder_is_monotone(res.mapping.encoder);

  std::vector<double> encoder_levels(res.mapping.encoder.size());
  for (std::size_t i = 0; i < encoder_levels.size(); ++i)
    encoder_levels[i] = ch.v_grid()[res.mapping.encoder[i]];
  std::vector<double> read_cells(ch.cols());
  for (std::size_t r = 0; r < read_cells.size(); ++r) read_cells[r] = ch.r_grid().cell_center(r);

  j["mapping"]["source_grid"] = src.grid;
  j["mapping"]["encoder_levels"] = encoder_levels;
  j["mapping"]["encoder_indices"] = res.mapping.encoder;
  j["mapping"]["read_cells"] = read_cells;
  j["mapping"]["decoder_values"] = res.mapping.decoder;
  return j;
}

nlohmann::json efficiency_inputs_json(std::span<const EfficiencyPoint> points) {
  json arr = json::array();
  for (const auto& pt : points) {
    json j;
    j["lagrange_s"] = pt.lagrange_s;
    j["capacity_bits"] = pt.capacity_bits;
    j["avg_energy_nj"] = pt.avg_energy_nj;
    j["input_probs"] = pt.input.probs;
    arr.push_back(std::move(j));
  }
  return arr;
}

// -------------------------------------------------------------------- csv

std::string fmt_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string surface_csv(std::span<const LevelDesign> designs) {
  std::string out = "n_writes,n_reads,capacity_bits,thresholds_json,write_indices_json\n";
  for (const auto& d : designs) {
    out += std::to_string(d.n_writes());
    out += ',';
    out += std::to_string(d.n_reads());
    out += ',';
    out += fmt_g17(d.capacity_bits);
    out += ",\"";
    out += json(d.read_thresholds).dump();
    out += "\",\"";
    out += json(d.write_indices).dump();
    out += "\"\n";
  }
  return out;
}

std::string frontier_csv(std::span<const EfficiencyPoint> points) {
  std::string out = "lagrange_s,capacity_bits,avg_energy_nj,energy_per_bit_nj\n";
  for (const auto& pt : points) {
    out += fmt_g17(pt.lagrange_s);
    out += ',';
    out += fmt_g17(pt.capacity_bits);
    out += ',';
    out += fmt_g17(pt.avg_energy_nj);
    out += ',';
    out += fmt_g17(pt.energy_per_bit_nj);
    out += '\n';
  }
  return out;
}

std::string rd_csv(std::span<const RDPoint> points) {
  std::string out = "label,rate_devices_per_symbol,mse,snr_db\n";
  for (const auto& pt : points) {
    out += pt.label;
    out += ',';
    out += fmt_g17(pt.rate_devices_per_symbol);
    out += ',';
    out += fmt_g17(pt.mse);
    out += ',';
    out += fmt_g17(pt.snr_db);
    out += '\n';
  }
  return out;
}

std::string effective_channel_csv(const EffectiveChannel& eff) {
  std::string out = "# bin_edges";
  for (double e : eff.bin_edges) {
    out += ',';
    out += fmt_g17(e);
  }
  out += '\n';
  for (std::size_t i = 0; i < eff.rows; ++i) {
    for (std::size_t b = 0; b < eff.bins; ++b) {
      if (b) out += ',';
      out += fmt_g17(eff.matrix[i * eff.bins + b]);
    }
    out += '\n';
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::bad_config, "cannot write file: " + path.string());
  out << content;
  if (!out) fail(Errc::bad_config, "failed writing file: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::file_not_found, "cannot read file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace memchan

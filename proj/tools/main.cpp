// memchan: treat analog memory devices as noisy channels. Subcommands build
// the P(R|V) channel artifact and branch the analyses off it.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "memchan/io.hpp"
#include "memchan/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace memchan;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::string channel_path;  // empty = <out>/channel.json
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_channel) {
  cmd->add_option("--config", args.config_path, "run configuration (JSON)")->required();
  cmd->add_option("--out", args.out_dir, "output directory")->required();
  cmd->add_option("--seed", args.seed, "override the config seed");
  if (with_channel)
    cmd->add_option("--channel", args.channel_path, "channel artifact (default <out>/channel.json)");
}

struct Run {
  RunConfig cfg;
  std::string config_text;
  fs::path out;

  std::string config_hash() const { return hash_hex(json(config_text)); }
  std::string channel_hash() const { return hash_hex(channel_config_json(cfg.channel)); }
};

Run begin(const CommonArgs& args) {
  Run run;
  run.config_text = read_text_file(args.config_path);
  try {
    run.cfg = parse_config(json::parse(run.config_text));
  } catch (const json::exception& e) {
    fail(Errc::bad_config, std::string("config parse error: ") + e.what());
  }
  if (args.seed) run.cfg.seed = *args.seed;
  run.out = args.out_dir;
  std::error_code ec;
  fs::create_directories(run.out, ec);
  if (ec) fail(Errc::bad_config, "cannot create output directory: " + run.out.string());
  return run;
}

std::string timestamp_utc() {
  char buf[32];
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const Run& run, const std::string& command) {
  json m;
  m["command"] = command;
  m["config_hash"] = run.config_hash();
  m["channel_config_hash"] = run.channel_hash();
  m["seed"] = run.cfg.seed;
  m["version"] = kVersion;
  m["timestamp"] = timestamp_utc();
  write_text_file(run.out / ("manifest-" + command + ".json"), m.dump(2) + "\n");
}

ConditionalChannel load_channel(const Run& run, const CommonArgs& args) {
  const fs::path path =
      args.channel_path.empty() ? run.out / "channel.json" : fs::path(args.channel_path);
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    fail(Errc::bad_artifact, "channel artifact " + path.string() + ": " + e.what());
  }
  std::string artifact_hash;
  ConditionalChannel ch = channel_from_json(doc, &artifact_hash);
  if (artifact_hash != run.channel_hash())
    fail(Errc::artifact_mismatch,
         "channel artifact " + path.string() + " was built from a different channel config (hash " +
             artifact_hash + ", expected " + run.channel_hash() + "); re-run estimate-channel");
  return ch;
}

void print_channel_summary(const ConditionalChannel& ch) {
  std::vector<std::size_t> support(ch.rows());
  for (std::size_t i = 0; i < ch.rows(); ++i) {
    std::size_t n = 0;
    for (double p : ch.row(i)) n += p > 1e-9;
    support[i] = n;
  }
  auto sorted = support;
  std::sort(sorted.begin(), sorted.end());
  std::printf("channel: %zu write levels x %zu read cells\n", ch.rows(), ch.cols());
  std::printf("effective cells per row (mass > 1e-9): min=%zu median=%zu max=%zu\n", sorted.front(),
              sorted[sorted.size() / 2], sorted.back());
}

int cmd_build_channel(const CommonArgs& args, bool synth_only) {
  Run run = begin(args);
  if (synth_only && run.cfg.channel.source != "synthetic")
    fail(Errc::bad_config, "synth-channel requires channel.source == 'synthetic'");
  const ConditionalChannel ch = build_channel(run.cfg.channel);
  write_text_file(run.out / "channel.json", channel_to_json(ch, run.channel_hash()).dump() + "\n");
  print_channel_summary(ch);
  std::printf("wrote %s\n", (run.out / "channel.json").c_str());
  write_manifest(run, synth_only ? "synth-channel" : "estimate-channel");
  return 0;
}

int cmd_capacity(const CommonArgs& args) {
  Run run = begin(args);
  const ConditionalChannel ch = load_channel(run, args);
  const CapacityResult ba = blahut_arimoto(ch, run.cfg.capacity.tol, run.cfg.capacity.max_iter);
  const double uni = ba.support.empty()
                         ? 0.0
                         : mutual_information(ch, InputDistribution::uniform_on(ch.rows(), ba.support));
  json cap_doc = capacity_result_json(ba, uni);
  cap_doc["channel_config_hash"] = run.channel_hash();
  write_text_file(run.out / "capacity.json", cap_doc.dump(2) + "\n");
  std::printf("capacity: %.6f bits/device (%zu iterations, %s)\n", ba.capacity_bits, ba.iterations,
              ba.converged ? "converged" : "NOT converged");
  std::printf("input support: %zu of %zu write levels (prob > %g)\n", ba.support.size(), ch.rows(),
              kSupportEpsilon);
  std::printf("uniform input on support: %.6f bits/device\n", uni);
  write_manifest(run, "capacity");
  return 0;
}

int cmd_levels(const CommonArgs& args) {
  Run run = begin(args);
  const ConditionalChannel ch = load_channel(run, args);
  AnnealSchedule sched = run.cfg.anneal;
  sched.seed = subseed(run.cfg.seed, "levels");
  const auto surface = capacity_surface(ch, run.cfg.levels.reads, run.cfg.levels.writes, sched);
  write_text_file(run.out / "levels.csv", surface_csv(surface));
  std::printf("wrote %zu designs to %s\n", surface.size(), (run.out / "levels.csv").c_str());
  for (const auto& d : surface)
    std::printf("  n_writes=%2zu n_reads=%3zu capacity=%.4f bits\n", d.n_writes(), d.n_reads(),
                d.capacity_bits);
  write_manifest(run, "levels");
  return 0;
}

EnergyModel make_energy_model(const RunConfig& cfg, const ConditionalChannel& ch) {
  if (cfg.energy.model == "table") {
    EnergyModel em = EnergyModel::table(cfg.energy.table);
    em.validate(ch.rows());
    return em;
  }
  return EnergyModel::parametric(ch.v_grid(), cfg.energy.a, cfg.energy.b, cfg.energy.c);
}

int cmd_energy(const CommonArgs& args) {
  Run run = begin(args);
  const ConditionalChannel ch = load_channel(run, args);
  const EnergyModel em = make_energy_model(run.cfg, ch);
  std::vector<double> s_values = run.cfg.energy.s_values;
  if (s_values.empty())
    s_values = default_s_grid(ch, em, run.cfg.energy.sweep_points, run.cfg.capacity.tol);
  const auto points = energy_sweep(ch, em, s_values, run.cfg.capacity.tol, run.cfg.capacity.max_iter);
  const auto summary = min_energy_per_bit(points);

  write_text_file(run.out / "frontier.csv", frontier_csv(points));
  write_text_file(run.out / "frontier_inputs.json", efficiency_inputs_json(points).dump() + "\n");
  json sj;
  sj["lagrange_s"] = summary.best.lagrange_s;
  sj["capacity_bits"] = summary.best.capacity_bits;
  sj["avg_energy_nj"] = summary.best.avg_energy_nj;
  sj["energy_per_bit_nj"] = summary.best.energy_per_bit_nj;
  sj["saving_vs_unconstrained"] = summary.saving_vs_unconstrained;
  sj["mean_voltage_max_capacity"] = mean_write_voltage(ch.v_grid(), points.front().input);
  sj["mean_voltage_max_efficiency"] = mean_write_voltage(ch.v_grid(), summary.best.input);
  write_text_file(run.out / "energy_summary.json", sj.dump(2) + "\n");

  std::printf("unconstrained: %.4f bits at %.4f nJ (%.4f nJ/bit)\n", points.front().capacity_bits,
              points.front().avg_energy_nj, points.front().energy_per_bit_nj);
  std::printf("max efficiency (s=%.4g): %.4f bits at %.4f nJ (%.4f nJ/bit, %.1f%% saving)\n",
              summary.best.lagrange_s, summary.best.capacity_bits, summary.best.avg_energy_nj,
              summary.best.energy_per_bit_nj, 100.0 * summary.saving_vs_unconstrained);
  write_manifest(run, "energy");
  return 0;
}

int cmd_joint(const CommonArgs& args) {
  Run run = begin(args);
  const ConditionalChannel ch = load_channel(run, args);
  const SourceModel src = SourceModel::gaussian(run.cfg.source.mean, run.cfg.source.variance,
                                                run.cfg.source.points, run.cfg.source.span_sigmas);

  const MappingTable naive = naive_mapping(src, ch);
  const CodingResult naive_res = evaluate(src, ch, naive, CodingVariant::naive);

  MappingTable dec_map = naive;
  dec_map.decoder = optimal_decoder(src, ch, naive.encoder);
  const CodingResult dec_res = evaluate(src, ch, dec_map, CodingVariant::decoder_only);

  MappingTable enc_map = naive;
  enc_map.encoder = optimal_encoder(src, ch, naive.decoder);
  const CodingResult enc_res = evaluate(src, ch, enc_map, CodingVariant::encoder_only);

  const CodingResult joint_res =
      solve_joint_multistart(src, ch, run.cfg.joint.starts, subseed(run.cfg.seed, "joint"),
                             run.cfg.joint.max_rounds, run.cfg.joint.tol);

  json j;
  j["kind"] = "joint";
  j["channel_config_hash"] = run.channel_hash();
  j["results"] =
      json::array({coding_result_json(src, ch, naive_res), coding_result_json(src, ch, enc_res),
                   coding_result_json(src, ch, dec_res), coding_result_json(src, ch, joint_res)});
  write_text_file(run.out / "joint.json", j.dump() + "\n");

  const EffectiveChannel eff =
      effective_channel(src, ch, joint_res.mapping, run.cfg.joint.effective_bins);
  write_text_file(run.out / "effective_channel.csv", effective_channel_csv(eff));

  for (const auto* r : {&naive_res, &enc_res, &dec_res, &joint_res})
    std::printf("%-13s mse=%.6f snr=%+.3f dB%s\n", to_string(r->variant).c_str(), r->mse, r->snr_db,
                encoder_is_monotone(r->mapping.encoder) ? "" : "  (non-monotonic encoder)");
  write_manifest(run, "joint");
  return 0;
}

CodingVariant variant_from_string(const std::string& s) {
  if (s == "naive") return CodingVariant::naive;
  if (s == "encoder_only") return CodingVariant::encoder_only;
  if (s == "decoder_only") return CodingVariant::decoder_only;
  if (s == "joint") return CodingVariant::joint;
  fail(Errc::bad_artifact, "joint artifact: unknown variant '" + s + "'");
}

int cmd_rd(const CommonArgs& args) {
  Run run = begin(args);
  const ConditionalChannel ch = load_channel(run, args);
  const SourceModel src = SourceModel::gaussian(run.cfg.source.mean, run.cfg.source.variance,
                                                run.cfg.source.points, run.cfg.source.span_sigmas);

  const CapacityResult ba = blahut_arimoto(ch, run.cfg.capacity.tol, run.cfg.capacity.max_iter);

  // Joint results are picked up from a previous `joint` run on the same
  // output directory, when present.
  std::vector<CodingResult> joint_results;
  const fs::path joint_path = run.out / "joint.json";
  if (fs::exists(joint_path)) {
    try {
      const json doc = json::parse(read_text_file(joint_path));
      if (doc.value("channel_config_hash", "") != run.channel_hash())
        fail(Errc::artifact_mismatch, "joint.json was produced for a different channel config");
      for (const auto& rj : doc.at("results")) {
        CodingResult r;
        r.variant = variant_from_string(rj.at("variant").get<std::string>());
        r.mse = rj.at("mse").get<double>();
        r.snr_db = rj.at("snr_db").get<double>();
        joint_results.push_back(std::move(r));
      }
    } catch (const json::exception& e) {
      fail(Errc::bad_artifact, std::string("joint artifact: ") + e.what());
    }
  }

  std::vector<double> capacities = {ba.capacity_bits};
  capacities.insert(capacities.end(), run.cfg.rd.extra_capacities.begin(),
                    run.cfg.rd.extra_capacities.end());

  auto points = comparison_report(joint_results, capacities, run.cfg.rd.quantizer_levels, src);
  for (double c : capacities) {
    const auto curve = separate_bound_curve(c, run.cfg.rd.rates, src.variance);
    points.insert(points.end(), curve.begin(), curve.end());
  }
  write_text_file(run.out / "rd.csv", rd_csv(points));
  std::printf("analog capacity: %.4f bits/device\n", ba.capacity_bits);
  for (const auto& pt : points)
    std::printf("  %-24s rate=%.4f mse=%.6f snr=%+.3f dB\n", pt.label.c_str(),
                pt.rate_devices_per_symbol, pt.mse, pt.snr_db);
  write_manifest(run, "rd");
  return 0;
}

int exit_code(ErrorCategory cat) {
  switch (cat) {
    case ErrorCategory::config: return 2;
    case ErrorCategory::data: return 3;
    case ErrorCategory::numerical: return 4;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"analog memory characterization: channel estimation, capacity, level/energy "
               "optimization, joint source-channel mappings, rate-distortion comparisons"};
  app.require_subcommand(1);

  CommonArgs args;
  CLI::App* estimate = app.add_subcommand(
      "estimate-channel", "build P(R|V) from measurements (or the synthetic model)");
  add_common(estimate, args, false);
  CLI::App* synth = app.add_subcommand("synth-channel", "build P(R|V) from the synthetic model");
  add_common(synth, args, false);
  CLI::App* capacity = app.add_subcommand("capacity", "Blahut-Arimoto capacity of the channel");
  add_common(capacity, args, true);
  CLI::App* levels = app.add_subcommand("levels", "optimize discrete read/write level designs");
  add_common(levels, args, true);
  CLI::App* energy = app.add_subcommand("energy", "capacity vs energy frontier");
  add_common(energy, args, true);
  CLI::App* joint = app.add_subcommand("joint", "joint source-channel mappings for a Gaussian source");
  add_common(joint, args, true);
  CLI::App* rd = app.add_subcommand("rd", "rate-distortion comparison table");
  add_common(rd, args, true);

  try {
    app.parse(argc, argv);
    if (estimate->parsed()) return cmd_build_channel(args, false);
    if (synth->parsed()) return cmd_build_channel(args, true);
    if (capacity->parsed()) return cmd_capacity(args);
    if (levels->parsed()) return cmd_levels(args);
    if (energy->parsed()) return cmd_energy(args);
    if (joint->parsed()) return cmd_joint(args);
    if (rd->parsed()) return cmd_rd(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}

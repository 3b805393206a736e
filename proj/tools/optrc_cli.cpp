// optrc: command line front end for the optical reservoir simulator.
//
// Every subcommand writes its outputs plus manifest.json into --out-dir.
// Exit codes: 0 ok, 1 config error, 2 runtime/numerical error, 3 I/O error.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "optrc/config.hpp"
#include "optrc/digest.hpp"
#include "optrc/encoding.hpp"
#include "optrc/error.hpp"
#include "optrc/experiment.hpp"
#include "optrc/rng.hpp"

#ifndef OPTRC_VERSION
#define OPTRC_VERSION "dev"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace optrc;

namespace {

struct CommonOptions {
  std::string config_path;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
};

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Collects outputs and writes manifest.json (via a temp file and rename)
/// once the subcommand has succeeded.
class Run {
 public:
  Run(std::string command, const CommonOptions& opts) : command_(std::move(command)), opts_(opts) {
    started_ = utc_now();
    if (!opts.config_path.empty()) {
      parsed_ = parse_config(opts.config_path, opts.preset);
      config_digest_ = sha256_file(opts.config_path);
    } else {
      parsed_ = config_from_json(json::object(), opts.preset);
    }
    if (opts.seed) {
      parsed_.config.master_seed = *opts.seed;
      parsed_.resolved["seed"] = *opts.seed;
    }
    std::error_code ec;
    fs::create_directories(opts.out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + opts.out_dir + ": " + ec.message());
  }

  ExperimentConfig& config() { return parsed_.config; }
  fs::path path(const std::string& name) const { return fs::path(opts_.out_dir) / name; }
  void output(const std::string& name) { outputs_.push_back(name); }
  json& extra() { return extra_; }

  void finish() {
    json files = json::array();
    for (const std::string& name : outputs_)
      files.push_back({{"file", name}, {"sha256", sha256_file(path(name))}, {"bytes", fs::file_size(path(name))}});
    json manifest{{"tool", "optrc"},
                  {"version", OPTRC_VERSION},
                  {"command", command_},
                  {"config_file", opts_.config_path.empty() ? json(nullptr) : json(opts_.config_path)},
                  {"config_sha256", config_digest_.empty() ? json(nullptr) : json(config_digest_)},
                  {"preset", parsed_.preset},
                  {"config", parsed_.resolved},
                  {"config_hash", parsed_.config.hash()},
                  {"defaults_applied", parsed_.defaults_applied},
                  {"master_seed", parsed_.config.master_seed},
                  {"started", started_},
                  {"finished", utc_now()},
                  {"outputs", files}};
    for (const auto& item : extra_.items()) manifest[item.key()] = item.value();

    const fs::path final_path = path("manifest.json");
    const fs::path tmp = path("manifest.json.tmp");
    {
      std::ofstream os(tmp);
      if (!os) throw IoError("cannot write " + tmp.string());
      os << manifest.dump(2) << '\n';
      if (!os) throw IoError("failed writing " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, final_path, ec);
    if (ec) throw IoError("cannot move manifest into place: " + ec.message());
  }

 private:
  std::string command_;
  CommonOptions opts_;
  ParsedConfig parsed_;
  std::string config_digest_;
  std::string started_;
  std::vector<std::string> outputs_;
  json extra_ = json::object();
};

json seeds_json(const std::vector<RunSeeds>& seeds) {
  json out = json::array();
  for (const RunSeeds& s : seeds) out.push_back(s.to_json());
  return out;
}

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "YAML config file");
  cmd->add_option("--preset", opts.preset, "Preset: slm or dmd-basket (overrides the file's preset)");
  cmd->add_option("--seed", opts.seed, "Master seed (overrides the config)");
  cmd->add_option("--out-dir", opts.out_dir, "Output directory")->capture_default_str();
}

// ---------------------------------------------------------------------------
// Subcommands

void cmd_generate(const CommonOptions& opts, std::size_t length) {
  Run run("generate", opts);
  const ExperimentConfig& cfg = run.config();
  const std::uint64_t seed = derive_seed(cfg.master_seed, "generate");
  const TimeSeries raw = generate(cfg.mackey_glass, length, seed);
  const TimeSeries unit = normalize_to_unit(raw);

  std::ofstream os(run.path("mackey_glass.csv"));
  if (!os) throw IoError("cannot write mackey_glass.csv");
  os << "t,u,u_normalized\n";
  for (std::size_t t = 0; t < raw.size(); ++t) os << t << ',' << fmt(raw[t]) << ',' << fmt(unit[t]) << '\n';
  os.close();
  if (!os) throw IoError("failed writing mackey_glass.csv");
  run.output("mackey_glass.csv");
  run.extra()["series_seed"] = seed;
  run.extra()["normalization"] = {{"scale", unit.normalization->scale}, {"offset", unit.normalization->offset}};
  run.finish();
}

void cmd_run(const CommonOptions& opts) {
  Run run("run", opts);
  const ExperimentResult result = run_experiment(run.config());
  write_nmse_csv(run.path("nmse_curve.csv"), result.curve);
  write_predictions_csv(run.path("predictions.csv"), result.traces, run.config().lyapunov_samples());
  run.output("nmse_curve.csv");
  run.output("predictions.csv");
  run.extra()["run_seeds"] = seeds_json(result.seeds);
  run.finish();
}

void cmd_gridsearch(const CommonOptions& opts, const std::vector<std::string>& grid_args) {
  Run run("gridsearch", opts);
  ExperimentConfig& cfg = run.config();
  for (const std::string& arg : grid_args) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("--grid expects path=v1,v2,..., got '" + arg + "'");
    std::vector<json> values;
    std::string rest = arg.substr(eq + 1);
    std::size_t start = 0;
    while (start <= rest.size()) {
      const std::size_t comma = rest.find(',', start);
      const std::string item = rest.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      json v = json::parse(item, nullptr, false);
      values.push_back(v.is_discarded() ? json(item) : v);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    cfg.grid[arg.substr(0, eq)] = values;
  }
  const std::vector<GridCell> cells = grid_search(cfg);
  write_gridsearch_csv(run.path("gridsearch.csv"), cells);
  run.output("gridsearch.csv");
  json grid = json::object();
  for (const auto& [k, v] : cfg.grid) grid[k] = v;
  run.extra()["grid"] = grid;
  run.extra()["run_seeds"] = seeds_json([&] {
    std::vector<RunSeeds> s;
    for (std::size_t r = 0; r < cfg.averaging_runs; ++r) s.push_back(derive_run_seeds(cfg.master_seed, r));
    return s;
  }());
  run.finish();
}

void cmd_compare(const CommonOptions& opts, const CompareOptions& compare) {
  CommonOptions o = opts;
  if (o.preset.empty() && o.config_path.empty()) o.preset = "dmd-basket";
  Run run("compare", o);
  const std::vector<ComparisonArm> arms = compare_encodings(run.config(), compare);
  const std::array<double, 2> band{1.0, compare.band_lyapunov * run.config().lyapunov_samples()};
  write_comparison_csv(run.path("comparison.csv"), arms, band);
  run.output("comparison.csv");

  std::ofstream os(run.path("comparison_curves.csv"));
  if (!os) throw IoError("cannot write comparison_curves.csv");
  os << "arm,horizon,horizon_lyapunov,nmse,std\n";
  for (const ComparisonArm& arm : arms)
    for (const NMSEPoint& p : arm.curve.points)
      os << arm.name << ',' << p.horizon << ',' << fmt(p.horizon_lyapunov) << ',' << fmt(p.nmse) << ',' << fmt(p.std)
         << '\n';
  os.close();
  if (!os) throw IoError("failed writing comparison_curves.csv");
  run.output("comparison_curves.csv");
  run.finish();
}

void cmd_encode_analysis(const CommonOptions& opts, const std::string& kind, int n_bin, int grid_points) {
  Run run("encode-analysis", opts);
  EncodingSpec spec;
  spec.kind = encoding_kind_from_string(kind);
  spec.n_bin = spec.kind == EncodingKind::phase || spec.kind == EncodingKind::identity ? 1 : n_bin;
  spec.validate();
  if (grid_points < 2) throw ConfigError("--grid-points must be >= 2");
  const Eigen::MatrixXd d = distance_matrix(spec, grid_points);

  std::ofstream os(run.path("distance_matrix.csv"));
  if (!os) throw IoError("cannot write distance_matrix.csv");
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.cols(); ++j) os << (j ? "," : "") << fmt(d(i, j));
    os << '\n';
  }
  os.close();
  if (!os) throw IoError("failed writing distance_matrix.csv");
  run.output("distance_matrix.csv");

  json summary{{"kind", kind},
               {"n_bin", spec.n_bin},
               {"grid_points", grid_points},
               {"locality_violations", locality_violations(d)},
               {"max_adjacent_distance", max_adjacent_distance(d)}};
  if (spec.is_binary()) summary["distinct_codes"] = distinct_code_count(spec);
  std::ofstream js(run.path("encoding_summary.json"));
  js << summary.dump(2) << '\n';
  js.close();
  if (!js) throw IoError("failed writing encoding_summary.json");
  run.output("encoding_summary.json");
  run.finish();
}

void cmd_diagnose(const CommonOptions& opts, std::size_t length) {
  Run run("diagnose", opts);
  const ExperimentConfig& cfg = run.config();
  const RunSeeds seeds = derive_run_seeds(cfg.master_seed, 0);
  ReservoirConfig rc = cfg.reservoir;
  rc.tm_seed = seeds.tm;
  rc.bias_seed = seeds.bias;
  rc.init_seed = seeds.init_train;
  const TimeSeries probe = normalize_to_unit(generate(cfg.mackey_glass, length, seeds.train_series));
  Reservoir reservoir(rc);
  reservoir.calibrate(probe);
  const DiagnosticsReport report = diagnose_dynamics(reservoir, probe, derive_seed(cfg.master_seed, "diagnose"));

  json out = report.to_json();
  out["warmup_discard"] = rc.warmup_discard;
  out["ratio_at_warmup"] = report.convergence[std::min(rc.warmup_discard, report.convergence.size()) - 1];
  std::ofstream os(run.path("diagnostics.json"));
  os << out.dump(2) << '\n';
  os.close();
  if (!os) throw IoError("failed writing diagnostics.json");
  run.output("diagnostics.json");
  run.extra()["run_seeds"] = json::array({seeds.to_json()});
  run.finish();
}

std::string error_type(const Error& e) {
  if (dynamic_cast<const DimensionError*>(&e)) return "DimensionError";
  if (dynamic_cast<const RangeError*>(&e)) return "RangeError";
  if (dynamic_cast<const LayoutError*>(&e)) return "LayoutError";
  if (dynamic_cast<const CapacityError*>(&e)) return "CapacityError";
  if (dynamic_cast<const BatchShapeError*>(&e)) return "BatchShapeError";
  if (dynamic_cast<const DivergenceError*>(&e)) return "DivergenceError";
  if (dynamic_cast<const DegenerateError*>(&e)) return "DegenerateError";
  if (dynamic_cast<const SingularError*>(&e)) return "SingularError";
  if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
  if (dynamic_cast<const NumericalError*>(&e)) return "NumericalError";
  return "IoError";
}

int report(const char* category, const std::string& type, const std::string& message, int code) {
  std::cerr << json{{"error", {{"category", category}, {"type", type}, {"message", message}, {"exit_code", code}}}}.dump()
            << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optical reservoir computing simulator"};
  app.set_version_flag("--version", OPTRC_VERSION);
  app.require_subcommand(1);

  CommonOptions opts;
  std::size_t gen_length = 2000;
  std::vector<std::string> grid_args;
  CompareOptions compare;
  bool no_matched = false;
  std::string enc_kind = "basket";
  int enc_n_bin = 10;
  int enc_grid = 101;
  std::size_t diag_length = 1000;

  auto* gen = app.add_subcommand("generate", "Write a Mackey-Glass series");
  add_common(gen, opts);
  gen->add_option("--length", gen_length, "Number of samples")->capture_default_str();

  auto* run = app.add_subcommand("run", "Train and evaluate one experiment");
  add_common(run, opts);

  auto* grid = app.add_subcommand("gridsearch", "Exhaustive parameter grid");
  add_common(grid, opts);
  grid->add_option("--grid", grid_args, "path=v1,v2,... (repeatable, adds to the config's grid)");

  auto* cmp = app.add_subcommand("compare", "Encoding comparison at matched conditions");
  add_common(cmp, opts);
  cmp->add_option("--n-res", compare.n_res, "Reservoir size of every arm")->capture_default_str();
  cmp->add_option("--n-bin", compare.n_bin, "Bits per encoded value")->capture_default_str();
  cmp->add_option("--runs", compare.runs, "Averaging runs per arm")->capture_default_str();
  cmp->add_option("--band", compare.band_lyapunov, "Scoring band upper end, Lyapunov times")->capture_default_str();
  cmp->add_flag("--no-matched-pixels", no_matched, "Skip the binary ESN with n_res * n_bin nodes");

  auto* enc = app.add_subcommand("encode-analysis", "Distance matrix of an encoder");
  add_common(enc, opts);
  enc->add_option("--kind", enc_kind, "phase, basket, threshold, base2 or identity")->capture_default_str();
  enc->add_option("--n-bin", enc_n_bin, "Bits per value")->capture_default_str();
  enc->add_option("--grid-points", enc_grid, "Grid size on [0,1]")->capture_default_str();

  auto* diag = app.add_subcommand("diagnose", "Echo-state, separation and approximation measurements");
  add_common(diag, opts);
  diag->add_option("--length", diag_length, "Probe series length")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("config", "usage", e.what(), 1);
  }

  try {
    if (*gen) cmd_generate(opts, gen_length);
    if (*run) cmd_run(opts);
    if (*grid) cmd_gridsearch(opts, grid_args);
    if (*cmp) {
      compare.matched_pixels = !no_matched;
      cmd_compare(opts, compare);
    }
    if (*enc) cmd_encode_analysis(opts, enc_kind, enc_n_bin, enc_grid);
    if (*diag) cmd_diagnose(opts, diag_length);
  } catch (const Error& e) {
    const char* category = e.category() == ErrorCategory::config      ? "config"
                           : e.category() == ErrorCategory::numerical ? "numerical"
                                                                       : "io";
    const int code = e.category() == ErrorCategory::config ? 1 : e.category() == ErrorCategory::numerical ? 2 : 3;
    return report(category, error_type(e), e.what(), code);
  } catch (const std::bad_alloc&) {
    return report("numerical", "bad_alloc", "out of memory", 2);
  } catch (const std::exception& e) {
    return report("numerical", "runtime", e.what(), 2);
  }
  return 0;
}

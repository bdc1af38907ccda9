#include "pristream/io.hpp"
#include "pristream/parallel.hpp"
#include "pristream/pipeline.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace pri;

namespace {

struct RunConfig {
  HyperParams hp;
  FitOptions fit;
  DetectorConfig detector;
  std::optional<ScenarioSpec> scenario;
  std::string preset;
  fs::path input;
  int quantize_bins = 0;
  std::string kappa_mode = "fixed";
  double nonideal = 0.0;
  int mc_runs = 1;
  int match_window = 20;
  int workers = 0;
  std::vector<double> thresholds{2, 4, 6, 8, 10, 15, 20, 30};
  std::uint64_t seed = 1;
  fs::path out = ".";

  std::string dataset() const {
    if (!input.empty()) return input.stem().string();
    return preset.empty() ? "custom" : preset;
  }
};

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> preset;
  std::optional<double> nonideal;
  std::optional<double> kappa;
  std::optional<std::string> mode;
  std::optional<int> mc_runs;
};

template <typename T>
void take(const json& j, const char* key, T& v) {
  if (j.contains(key)) v = j.at(key).get<T>();
}

void read_hyper(const json& j, HyperParams& hp) {
  take(j, "alpha_pi", hp.alpha_pi);
  take(j, "alpha_A", hp.alpha_A);
  take(j, "a_0", hp.a_0);
  take(j, "b_0", hp.b_0);
  take(j, "lambda_0", hp.lambda_0);
  take(j, "xi_0", hp.xi_0);
  take(j, "kappa", hp.kappa);
}

void read_fit(const json& j, FitOptions& f) {
  take(j, "truncation", f.truncation);
  take(j, "tolerance", f.tolerance);
  take(j, "max_iterations", f.max_iterations);
  take(j, "dpmm_concentration", f.dpmm_concentration);
  take(j, "dpmm_merges", f.dpmm_merges);
  take(j, "gamma_u", f.gamma_u);
  take(j, "sample_estimate", f.sample_estimate);
  take(j, "birth_sigma", f.birth_sigma);
  take(j, "window_cap", f.window_cap);
  take(j, "scaling_mode", f.scaling_mode);
}

void read_detector(const json& j, DetectorConfig& d) {
  take(j, "b", d.b);
  take(j, "threshold", d.threshold);
  take(j, "gamma_u", d.gamma_u);
  take(j, "init_batch", d.init_batch);
  take(j, "fss_m", d.fss_m);
  take(j, "fss_h", d.fss_h);
  take(j, "k_window", d.k_window);
  if (j.contains("mode")) d.mode = detector_mode_from_string(j.at("mode").get<std::string>());
}

// Detection commands start from the change-detection defaults, estimation
// from the plain library defaults with kappa = 0.5.
RunConfig load_config(const Flags& flags, bool detection, int default_runs = 1) {
  RunConfig rc;
  rc.mc_runs = default_runs;
  if (detection) {
    const auto d = detection_defaults();
    rc.hp = d.hp;
    rc.fit = d.fit;
    rc.detector = d.detector;
  } else {
    rc.hp.kappa = 0.5;
  }

  const json j = flags.config.empty() ? json::object() : read_json_file(flags.config);
  try {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    if (j.contains("hyper")) read_hyper(j.at("hyper"), rc.hp);
    if (j.contains("fit")) read_fit(j.at("fit"), rc.fit);
    if (j.contains("detector")) read_detector(j.at("detector"), rc.detector);
    if (j.contains("scenario")) rc.scenario = scenario_from_json(j.at("scenario"));
    take(j, "preset", rc.preset);
    if (j.contains("input")) rc.input = j.at("input").get<std::string>();
    take(j, "quantize_bins", rc.quantize_bins);
    take(j, "kappa_mode", rc.kappa_mode);
    take(j, "nonideal", rc.nonideal);
    take(j, "mc_runs", rc.mc_runs);
    take(j, "match_window", rc.match_window);
    take(j, "workers", rc.workers);
    take(j, "thresholds", rc.thresholds);
    take(j, "seed", rc.seed);
    if (j.contains("out")) rc.out = j.at("out").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  if (flags.seed) rc.seed = *flags.seed;
  if (flags.out) rc.out = *flags.out;
  if (flags.preset) rc.preset = *flags.preset;
  if (flags.nonideal) rc.nonideal = *flags.nonideal;
  if (flags.kappa) rc.hp.kappa = *flags.kappa;
  if (flags.mode) rc.detector.mode = detector_mode_from_string(*flags.mode);
  if (flags.mc_runs) rc.mc_runs = *flags.mc_runs;

  rc.hp.validate();
  rc.detector.validate(false);
  if (rc.mc_runs < 1) throw ConfigError("mc_runs must be >= 1");
  if (rc.match_window < 0) throw ConfigError("match_window must be >= 0");
  if (!(rc.nonideal >= 0.0 && rc.nonideal < 1.0)) throw ConfigError("nonideal ratio must be in [0, 1)");
  if (rc.kappa_mode != "fixed" && rc.kappa_mode != "dual_branch")
    throw ConfigError("kappa_mode must be fixed or dual_branch");
  if (!rc.input.empty() && !fs::exists(rc.input)) throw DataError("input file not found: " + rc.input.string());
  if (rc.thresholds.empty()) throw ConfigError("thresholds must not be empty");
  return rc;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Replicate r of the configured data source. A CSV input is the same for
// every replicate; scenarios and presets are redrawn from seed + r.
PulseSequence load_sequence(const RunConfig& rc, int r) {
  const std::uint64_t s = rc.seed + static_cast<std::uint64_t>(r);
  if (!rc.input.empty()) {
    PulseSequence seq = read_sequence_csv(rc.input, rc.quantize_bins);
    if (fs::exists(sidecar_path(rc.input))) read_sidecar(sidecar_path(rc.input), seq);
    return seq;
  }
  if (rc.scenario) {
    ScenarioSpec spec = *rc.scenario;
    spec.rng_seed = s;
    if (rc.nonideal > 0.0) spec.nonideal_ratio = rc.nonideal;
    return compose_scenario(spec);
  }
  if (rc.preset.empty()) throw ConfigError("no data source: pass --preset or set input/scenario in --config");
  return compose_scenario(preset(rc.preset, s, rc.nonideal));
}

fs::path run_file(const RunConfig& rc, const std::string& stem, const std::string& ext, int r) {
  if (rc.mc_runs == 1) return rc.out / (stem + ext);
  return rc.out / (stem + "_" + std::to_string(rc.seed + static_cast<std::uint64_t>(r)) + ext);
}

json hyper_json(const HyperParams& hp) {
  return {{"alpha_pi", hp.alpha_pi}, {"alpha_A", hp.alpha_A}, {"a_0", hp.a_0},   {"b_0", hp.b_0},
          {"lambda_0", hp.lambda_0}, {"xi_0", hp.xi_0},       {"kappa", hp.kappa}};
}

json detector_json(const DetectorConfig& d) {
  return {{"mode", to_string(d.mode)}, {"b", d.b},           {"threshold", d.threshold},
          {"gamma_u", d.gamma_u},      {"init_batch", d.init_batch}, {"fss_m", d.fss_m},
          {"fss_h", d.fss_h},          {"k_window", d.k_window}};
}

int cmd_simulate(const RunConfig& rc) {
  std::vector<std::string> names;
  if (rc.preset == "all") names = preset_names();
  else if (!rc.preset.empty() || !rc.scenario) names.push_back(rc.preset.empty() ? "d2" : rc.preset);
  else names.push_back("custom");

  fs::create_directories(rc.out);
  for (const auto& name : names) {
    for (int r = 0; r < rc.mc_runs; ++r) {
      const std::uint64_t s = rc.seed + static_cast<std::uint64_t>(r);
      ScenarioSpec spec;
      if (name == "custom") {
        spec = *rc.scenario;
        spec.rng_seed = s;
        if (rc.nonideal > 0.0) spec.nonideal_ratio = rc.nonideal;
      } else {
        spec = preset(name, s, rc.nonideal);
      }
      const PulseSequence seq = compose_scenario(spec);
      const fs::path csv = run_file(rc, name, ".csv", r);
      write_sequence_csv(csv, seq);
      write_sidecar(sidecar_path(csv), seq, spec);
      std::cout << csv.string() << '\n';
    }
  }
  return 0;
}

int cmd_estimate(const RunConfig& rc) {
  struct Run {
    json report;
    double dk = 0.0;
    double hamming = 0.0;
    bool truth = false;
  };
  auto one = [&](int r) {
    const PulseSequence seq = load_sequence(rc, r);
    const std::uint64_t fs_seed = derive_seed(rc.seed + static_cast<std::uint64_t>(r), 1);
    const FitResult res = rc.kappa_mode == "dual_branch" ? fit_dual_branch(seq, rc.hp, rc.hp.kappa, rc.fit, fs_seed)
                                                         : fit(seq, rc.hp, rc.fit, nullptr, fs_seed);
    Run run;
    run.report = {{"seed", rc.seed + static_cast<std::uint64_t>(r)},
                  {"K_hat", res.estimate.K},
                  {"estimate", estimate_to_json(res.estimate)},
                  {"iterations", res.iterations},
                  {"converged", res.converged}};
    if (seq.has_truth_states()) {
      const int true_k = static_cast<int>(std::set<int>(seq.truth_states.begin(), seq.truth_states.end()).size());
      run.truth = true;
      run.dk = delta_k(res.estimate.K, true_k);
      run.hamming = hamming_munkres(decode_labels(res.posterior, res.estimate), seq.truth_states);
      run.report["true_K"] = true_k;
      run.report["delta_k"] = run.dk;
      run.report["hamming"] = run.hamming;
    }
    write_json_file(run_file(rc, "posterior", ".json", r), posterior_to_json(res.posterior, &res.estimate));
    return run;
  };

  fs::create_directories(rc.out);
  const auto runs = parallel_map(rc.mc_runs, one, rc.workers);
  json report{{"dataset", rc.dataset()},
              {"kappa_mode", rc.kappa_mode},
              {"hyper", hyper_json(rc.hp)},
              {"nonideal", rc.nonideal},
              {"runs", json::array()}};
  double dk = 0.0, abs_dk = 0.0, ham = 0.0;
  int with_truth = 0;
  for (const auto& run : runs) {
    report["runs"].push_back(run.report);
    if (!run.truth) continue;
    ++with_truth;
    dk += run.dk;
    abs_dk += std::abs(run.dk);
    ham += run.hamming;
  }
  if (with_truth > 0)
    report["summary"] = {{"mean_delta_k", dk / with_truth},
                         {"mean_abs_delta_k", abs_dk / with_truth},
                         {"mean_hamming", ham / with_truth}};
  write_json_file(rc.out / "estimate.json", report);
  std::cout << report.value("summary", runs.front().report).dump() << '\n';
  return 0;
}

struct DetectRun {
  DetectionOutcome outcome;
  std::vector<int> restarts;
};

DetectRun detect_once(const RunConfig& rc, const DetectorConfig& cfg, int r, bool write_files) {
  const PulseSequence seq = load_sequence(rc, r);
  const PipelineResult res = run_pipeline(seq, rc.hp, cfg, rc.fit, derive_seed(rc.seed + static_cast<std::uint64_t>(r), 2));
  DetectRun run;
  run.outcome.true_points = seq.change_points;
  run.outcome.alarms = res.alarms;
  run.outcome.horizon = static_cast<int>(seq.size());
  run.outcome.match_window = rc.match_window;
  run.restarts = res.restarts;
  if (write_files) {
    write_trace_jsonl(run_file(rc, "trace", ".jsonl", r), res.trace);
    write_alarm_log(run_file(rc, "alarms", ".csv", r), res.alarms, seq.change_points);
  }
  return run;
}

json run_record(const DetectRun& run, std::uint64_t seed) {
  return {{"seed", seed},
          {"alarms", run.outcome.alarms},
          {"change_points", run.outcome.true_points},
          {"horizon", run.outcome.horizon},
          {"restarts", run.restarts}};
}

int cmd_detect(const RunConfig& rc) {
  fs::create_directories(rc.out);
  const auto runs = parallel_map(rc.mc_runs, [&](int r) { return detect_once(rc, rc.detector, r, true); }, rc.workers);
  std::vector<DetectionOutcome> outcomes;
  json records = json::array();
  for (std::size_t r = 0; r < runs.size(); ++r) {
    outcomes.push_back(runs[r].outcome);
    records.push_back(run_record(runs[r], rc.seed + r));
  }
  json report = metrics_report(rc.dataset(), rc.detector.mode == DetectorMode::Cusum ? "ABHC" : "ABHF",
                               {{"detector", detector_json(rc.detector)}, {"hyper", hyper_json(rc.hp)}},
                               aggregate(outcomes), rc.match_window);
  report["runs"] = records;
  write_json_file(rc.out / "metrics.json", report);
  report.erase("runs");
  std::cout << report.dump() << '\n';
  return 0;
}

int cmd_benchmark(const RunConfig& rc) {
  const bool cusum = rc.detector.mode == DetectorMode::Cusum;
  const int n_thr = static_cast<int>(rc.thresholds.size());
  const auto runs = parallel_map(
      n_thr * rc.mc_runs,
      [&](int i) {
        DetectorConfig cfg = rc.detector;
        (cusum ? cfg.threshold : cfg.fss_h) = rc.thresholds[i / rc.mc_runs];
        return detect_once(rc, cfg, i % rc.mc_runs, false);
      },
      rc.workers);

  json table = json::array();
  json scatter = json::array();
  json overlay = json::array();
  json records = json::array();
  for (int k = 0; k < n_thr; ++k) {
    std::vector<DetectionOutcome> outcomes;
    for (int r = 0; r < rc.mc_runs; ++r) {
      const auto& run = runs[k * rc.mc_runs + r];
      outcomes.push_back(run.outcome);
      json rec = run_record(run, rc.seed + static_cast<std::uint64_t>(r));
      rec["threshold"] = rc.thresholds[k];
      records.push_back(rec);
    }
    const AggregateMetrics m = aggregate(outcomes);
    json row = metrics_report(rc.dataset(), cusum ? "ABHC" : "ABHF", {{"threshold", rc.thresholds[k]}}, m,
                              rc.match_window);
    table.push_back(row);
    scatter.push_back({{"threshold", rc.thresholds[k]}, {"mt2fa", row["mt2fa"]}, {"mdd", row["mdd"]}});
    if (std::isfinite(m.mt2fa) && m.mt2fa > 1.0)
      overlay.push_back({{"mt2fa", m.mt2fa}, {"asymptotic_mdd", asymptotic_mdd(m.mt2fa, rc.detector.b)}});
  }

  fs::create_directories(rc.out);
  const json report{{"dataset", rc.dataset()},
                    {"method", cusum ? "ABHC" : "ABHF"},
                    {"detector", detector_json(rc.detector)},
                    {"hyper", hyper_json(rc.hp)},
                    {"mc_runs", rc.mc_runs},
                    {"seed", rc.seed},
                    {"table", table},
                    {"scatter", scatter},
                    {"overlay", overlay},
                    {"runs", records}};
  write_json_file(rc.out / "benchmark.json", report);
  for (const auto& row : table) std::cout << row.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online work-mode estimation and change detection for pulse-interval streams"};
  app.require_subcommand(1);
  Flags flags;

  auto common = [&](CLI::App* sub, bool detection) {
    sub->add_option("--config", flags.config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "Base RNG seed");
    sub->add_option("--out", flags.out, "Output directory");
    sub->add_option("--preset", flags.preset, "Scenario preset (d1 .. d6, d1_agile, ...)");
    sub->add_option("--nonideal", flags.nonideal, "Missing/spurious pulse ratio");
    sub->add_option("--kappa", flags.kappa, "Agile hyper-parameter");
    sub->add_option("--mc-runs", flags.mc_runs, "Monte Carlo replicates");
    if (detection) sub->add_option("--mode", flags.mode, "Detector")->check(CLI::IsMember({"cusum", "fss"}));
  };
  auto* sim = app.add_subcommand("simulate", "Write scenario CSV and sidecar files");
  auto* est = app.add_subcommand("estimate", "Fit the work-mode model to a batch");
  auto* det = app.add_subcommand("detect", "Run streaming estimation and change detection");
  auto* bench = app.add_subcommand("benchmark", "Sweep detector thresholds over Monte Carlo replicates");
  common(sim, false);
  common(est, false);
  common(det, true);
  common(bench, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(load_config(flags, false));
    if (est->parsed()) return cmd_estimate(load_config(flags, false));
    if (det->parsed()) return cmd_detect(load_config(flags, true));
    return cmd_benchmark(load_config(flags, true, 20));
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const DomainError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  }
}

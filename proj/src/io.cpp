#include "pristream/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace pri {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    cell.erase(0, cell.find_first_not_of(" \t\r"));
    cell.erase(cell.find_last_not_of(" \t\r") + 1);
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return std::nullopt;
  return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

}  // namespace

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_sequence_csv(const std::filesystem::path& path, const PulseSequence& seq) {
  auto out = open_out(path);
  const bool states = seq.has_truth_states();
  const bool flags = seq.has_truth_flags();
  out << "t,value";
  if (states || flags) out << ",truth_state,truth_flag";
  out << '\n';
  for (std::size_t t = 0; t < seq.size(); ++t) {
    out << t << ',' << seq.values[t];
    if (states || flags) {
      out << ',';
      if (states) out << seq.truth_states[t];
      out << ',' << (flags ? to_string(seq.truth_flags[t]) : std::string("true"));
    }
    out << '\n';
  }
}

std::vector<double> quantize_magnitude(const std::vector<std::vector<double>>& rows, int bins) {
  if (bins < 1) throw ConfigError("quantization needs at least one bin");
  std::vector<double> mag;
  mag.reserve(rows.size());
  for (const auto& r : rows) {
    double s = 0.0;
    for (double v : r) s += v * v;
    mag.push_back(std::sqrt(s));
  }
  if (mag.empty()) return mag;
  const auto [lo_it, hi_it] = std::minmax_element(mag.begin(), mag.end());
  const double lo = *lo_it;
  const double width = (*hi_it - lo) / bins;
  std::vector<double> out;
  out.reserve(mag.size());
  for (double m : mag) {
    int b = width > 0.0 ? static_cast<int>((m - lo) / width) : 0;
    out.push_back(static_cast<double>(std::clamp(b, 0, bins - 1) + 1));
  }
  return out;
}

PulseSequence read_sequence_csv(const std::filesystem::path& path, int quantize_bins) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    rows.push_back(split_csv(line));
  }
  if (rows.empty()) throw DataError(path.string() + ": empty file");

  int value_col = 0, state_col = -1, flag_col = -1;
  std::size_t first = 0;
  bool named = false;
  if (!parse_number(rows[0].front())) {
    first = 1;
    const auto& h = rows[0];
    for (std::size_t c = 0; c < h.size(); ++c) {
      if (h[c] == "value") {
        value_col = static_cast<int>(c);
        named = true;
      }
      if (h[c] == "truth_state") state_col = static_cast<int>(c);
      if (h[c] == "truth_flag") flag_col = static_cast<int>(c);
    }
  }
  if (first == rows.size()) throw DataError(path.string() + ": no data rows");

  PulseSequence seq;
  std::vector<std::vector<double>> numeric;
  for (std::size_t r = first; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string where = path.string() + ":" + std::to_string(r + 1);
    if (quantize_bins > 0 && !named) {
      std::vector<double> nums;
      for (const auto& cell : row) {
        const auto v = parse_number(cell);
        if (!v) throw DataError(where + ": non-numeric cell '" + cell + "'");
        nums.push_back(*v);
      }
      numeric.push_back(std::move(nums));
      continue;
    }
    if (static_cast<int>(row.size()) <= value_col) throw DataError(where + ": missing value column");
    const auto v = parse_number(row[value_col]);
    if (!v) throw DataError(where + ": value '" + row[value_col] + "' is not a number");
    seq.values.push_back(*v);
    if (state_col >= 0 && state_col < static_cast<int>(row.size()) && !row[state_col].empty()) {
      const auto s = parse_number(row[state_col]);
      if (!s) throw DataError(where + ": bad truth_state");
      seq.truth_states.push_back(static_cast<int>(*s));
    }
    if (flag_col >= 0 && flag_col < static_cast<int>(row.size()))
      seq.truth_flags.push_back(pulse_flag_from_string(row[flag_col]));
  }
  if (quantize_bins > 0 && !named) seq.values = quantize_magnitude(numeric, quantize_bins);
  if (!seq.truth_states.empty() && seq.truth_states.size() != seq.values.size())
    throw DataError(path.string() + ": truth_state present on some rows only");
  seq.validate();
  return seq;
}

json modulation_to_json(const ModulationSpec& spec) {
  json j{{"kind", to_string(spec.kind)}};
  switch (spec.kind) {
    case ModulationKind::Staggered:
    case ModulationKind::Agile:
      j["levels"] = spec.levels;
      break;
    case ModulationKind::DwellSwitch:
      j["dwell_range"] = {spec.dwell_min, spec.dwell_max};
      [[fallthrough]];
    case ModulationKind::Sliding:
      j["min"] = spec.min;
      j["max"] = spec.max;
      j["level_count"] = spec.level_count;
      break;
    case ModulationKind::Jittered:
      j["mean"] = spec.mean;
      j["variance"] = spec.variance;
      break;
  }
  return j;
}

ModulationSpec modulation_from_json(const json& j) {
  try {
    ModulationSpec s;
    s.kind = modulation_kind_from_string(j.at("kind").get<std::string>());
    switch (s.kind) {
      case ModulationKind::Staggered:
      case ModulationKind::Agile:
        s.levels = j.at("levels").get<std::vector<double>>();
        break;
      case ModulationKind::DwellSwitch:
        if (j.contains("dwell_range")) {
          s.dwell_min = j["dwell_range"].at(0).get<int>();
          s.dwell_max = j["dwell_range"].at(1).get<int>();
        }
        [[fallthrough]];
      case ModulationKind::Sliding:
        s.min = j.at("min").get<double>();
        s.max = j.at("max").get<double>();
        s.level_count = j.at("level_count").get<int>();
        break;
      case ModulationKind::Jittered:
        s.mean = j.at("mean").get<double>();
        s.variance = j.at("variance").get<double>();
        break;
    }
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("modulation spec: ") + e.what());
  }
}

json scenario_to_json(const ScenarioSpec& spec) {
  json segs = json::array();
  for (const auto& [mod, len] : spec.segments) segs.push_back({{"modulation", modulation_to_json(mod)}, {"length", len}});
  return {{"segments", segs},
          {"noise_variance", spec.noise_variance},
          {"nonideal_ratio", spec.nonideal_ratio},
          {"rng_seed", spec.rng_seed}};
}

ScenarioSpec scenario_from_json(const json& j) {
  try {
    ScenarioSpec s;
    for (const auto& seg : j.at("segments"))
      s.segments.push_back({modulation_from_json(seg.at("modulation")), seg.at("length").get<int>()});
    s.noise_variance = j.value("noise_variance", 1.0);
    s.nonideal_ratio = j.value("nonideal_ratio", 0.0);
    s.rng_seed = j.value("rng_seed", std::uint64_t{0});
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario spec: ") + e.what());
  }
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  auto p = csv;
  p.replace_extension(".json");
  return p;
}

void write_sidecar(const std::filesystem::path& path, const PulseSequence& seq,
                   const std::optional<ScenarioSpec>& scenario) {
  json j{{"change_points", seq.change_points}, {"length", seq.size()}};
  if (scenario) j["scenario"] = scenario_to_json(*scenario);
  write_json_file(path, j);
}

void read_sidecar(const std::filesystem::path& path, PulseSequence& seq) {
  const json j = read_json_file(path);
  try {
    seq.change_points = j.value("change_points", std::vector<int>{});
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  seq.validate();
}

namespace {

json sticks_json(const StickPosterior& s) {
  return {{"eta1", std::vector<double>(s.eta1.data(), s.eta1.data() + s.eta1.size())},
          {"eta2", std::vector<double>(s.eta2.data(), s.eta2.data() + s.eta2.size())}};
}

StickPosterior sticks_from_json(const json& j) {
  const auto e1 = j.at("eta1").get<std::vector<double>>();
  const auto e2 = j.at("eta2").get<std::vector<double>>();
  StickPosterior s{Eigen::Map<const Eigen::VectorXd>(e1.data(), static_cast<Eigen::Index>(e1.size())),
                   Eigen::Map<const Eigen::VectorXd>(e2.data(), static_cast<Eigen::Index>(e2.size()))};
  s.validate();
  return s;
}

}  // namespace

json estimate_to_json(const ModelEstimate& est) {
  json comps = json::array();
  for (const auto& c : est.work_mode.components) comps.push_back({{"mean", c.mean}, {"variance", c.variance}});
  json trans = json::array();
  for (Eigen::Index r = 0; r < est.work_mode.transition.rows(); ++r) {
    std::vector<double> row(est.work_mode.transition.cols());
    for (Eigen::Index c = 0; c < est.work_mode.transition.cols(); ++c) row[c] = est.work_mode.transition(r, c);
    trans.push_back(row);
  }
  const auto& init = est.work_mode.initial;
  return {{"K", est.K},
          {"components", comps},
          {"transition", trans},
          {"initial", std::vector<double>(init.data(), init.data() + init.size())},
          {"survivor_map", est.survivor_map},
          {"elbo", number_or_null(est.elbo)}};
}

json posterior_to_json(const VariationalPosterior& vp, const ModelEstimate* estimate) {
  json trans = json::array();
  for (const auto& s : vp.trans_sticks) trans.push_back(sticks_json(s));
  json gg = json::array();
  for (const auto& g : vp.gg) gg.push_back({{"xi", g.xi}, {"lambda", g.lambda}, {"a", g.a}, {"b", g.b}});
  json j{{"truncation", vp.truncation()},
         {"scaling", {{"center", vp.scaling.center}, {"scale", vp.scaling.scale}}},
         {"init_sticks", sticks_json(vp.init_sticks)},
         {"trans_sticks", trans},
         {"gg", gg},
         {"elbo_trace", vp.elbo_trace}};
  if (estimate) j["survivor_map"] = estimate->survivor_map;
  return j;
}

VariationalPosterior posterior_from_json(const json& j) {
  try {
    VariationalPosterior vp;
    vp.scaling.center = j.at("scaling").at("center").get<double>();
    vp.scaling.scale = j.at("scaling").at("scale").get<double>();
    vp.init_sticks = sticks_from_json(j.at("init_sticks"));
    for (const auto& s : j.at("trans_sticks")) vp.trans_sticks.push_back(sticks_from_json(s));
    for (const auto& g : j.at("gg"))
      vp.gg.push_back({g.at("xi").get<double>(), g.at("lambda").get<double>(), g.at("a").get<double>(),
                       g.at("b").get<double>()});
    vp.elbo_trace = j.value("elbo_trace", std::vector<double>{});
    vp.validate();
    return vp;
  } catch (const json::exception& e) {
    throw DataError(std::string("posterior snapshot: ") + e.what());
  }
}

void write_trace_jsonl(const std::filesystem::path& path, const std::vector<TraceRecord>& trace) {
  auto out = open_out(path);
  for (const auto& r : trace) {
    std::vector<double> theta(r.theta.data(), r.theta.data() + r.theta.size());
    json j{{"t", r.t}, {"K_hat", r.k_hat}, {"theta", theta}, {"D", number_or_null(r.D)}, {"alarm", r.alarm}};
    out << j.dump() << '\n';
  }
}

void write_alarm_log(const std::filesystem::path& path, const std::vector<int>& alarms,
                     const std::vector<int>& change_points) {
  auto out = open_out(path);
  out << "index,segment,delay\n";
  for (int a : alarms) {
    int segment = 0;
    int origin = 0;
    for (int cp : change_points) {
      if (cp <= a) {
        ++segment;
        origin = cp;
      }
    }
    out << a << ',' << segment << ',' << (a - origin) << '\n';
  }
}

json metrics_report(const std::string& dataset, const std::string& method, const json& params,
                    const AggregateMetrics& m, int match_window) {
  return {{"dataset", dataset},
          {"method", method},
          {"params", params},
          {"mdd", m.mdd ? json(*m.mdd) : json(nullptr)},
          {"mt2fa", number_or_null(m.mt2fa)},
          {"far", m.far},
          {"mr", m.mr},
          {"f1", m.f1},
          {"n_runs", m.n_runs},
          {"match_window", match_window},
          {"tp", m.tp},
          {"fp", m.fp},
          {"fn", m.fn}};
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace pri

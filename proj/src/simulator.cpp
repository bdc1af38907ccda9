#include "pristream/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace pri {

std::string to_string(ModulationKind kind) {
  switch (kind) {
    case ModulationKind::Staggered:
      return "staggered";
    case ModulationKind::Sliding:
      return "sliding";
    case ModulationKind::Agile:
      return "agile";
    case ModulationKind::Jittered:
      return "jittered";
    case ModulationKind::DwellSwitch:
      return "dwell_switch";
  }
  return "staggered";
}

ModulationKind modulation_kind_from_string(const std::string& s) {
  if (s == "staggered") return ModulationKind::Staggered;
  if (s == "sliding") return ModulationKind::Sliding;
  if (s == "agile") return ModulationKind::Agile;
  if (s == "jittered") return ModulationKind::Jittered;
  if (s == "dwell_switch" || s == "ds") return ModulationKind::DwellSwitch;
  throw ConfigError("unknown modulation kind '" + s + "'");
}

void ModulationSpec::validate() const {
  switch (kind) {
    case ModulationKind::Staggered:
    case ModulationKind::Agile:
      if (levels.empty()) throw ConfigError("modulation needs at least one level");
      for (double l : levels)
        if (!(l > 0.0)) throw ConfigError("PRI levels must be positive");
      break;
    case ModulationKind::Sliding:
    case ModulationKind::DwellSwitch:
      if (!(min > 0.0) || !(min < max)) throw ConfigError("modulation needs 0 < min < max");
      if (level_count < 2) throw ConfigError("modulation needs level_count >= 2");
      if (kind == ModulationKind::DwellSwitch && (dwell_min < 1 || dwell_max < dwell_min))
        throw ConfigError("dwell range must satisfy 1 <= min <= max");
      break;
    case ModulationKind::Jittered:
      if (!(mean > 0.0) || !(variance > 0.0)) throw ConfigError("jittered needs positive mean and variance");
      break;
  }
}

std::vector<double> ModulationSpec::level_values() const {
  switch (kind) {
    case ModulationKind::Staggered:
    case ModulationKind::Agile:
      return levels;
    case ModulationKind::Sliding:
    case ModulationKind::DwellSwitch: {
      std::vector<double> v(level_count);
      for (int i = 0; i < level_count; ++i) v[i] = min + (max - min) * i / (level_count - 1);
      return v;
    }
    case ModulationKind::Jittered:
      return {mean};
  }
  return {};
}

bool ModulationSpec::is_agile() const {
  return kind == ModulationKind::Staggered || kind == ModulationKind::Sliding || kind == ModulationKind::Agile;
}

ModulationSpec ModulationSpec::staggered(std::vector<double> levels) {
  ModulationSpec s;
  s.kind = ModulationKind::Staggered;
  s.levels = std::move(levels);
  return s;
}

ModulationSpec ModulationSpec::agile(std::vector<double> levels) {
  ModulationSpec s;
  s.kind = ModulationKind::Agile;
  s.levels = std::move(levels);
  return s;
}

ModulationSpec ModulationSpec::sliding(double min, double max, int count) {
  ModulationSpec s;
  s.kind = ModulationKind::Sliding;
  s.min = min;
  s.max = max;
  s.level_count = count;
  return s;
}

ModulationSpec ModulationSpec::jittered(double mean, double variance) {
  ModulationSpec s;
  s.kind = ModulationKind::Jittered;
  s.mean = mean;
  s.variance = variance;
  return s;
}

ModulationSpec ModulationSpec::dwell_switch(double min, double max, int count) {
  ModulationSpec s = sliding(min, max, count);
  s.kind = ModulationKind::DwellSwitch;
  return s;
}

void ScenarioSpec::validate() const {
  if (segments.empty()) throw ConfigError("scenario has no segments");
  for (const auto& [spec, len] : segments) {
    spec.validate();
    if (len < 1) throw ConfigError("segment length must be >= 1");
  }
  if (!(noise_variance >= 0.0)) throw ConfigError("noise variance must be non-negative");
  if (!(nonideal_ratio >= 0.0 && nonideal_ratio < 1.0)) throw ConfigError("non-ideal ratio must lie in [0, 1)");
}

int ScenarioSpec::total_length() const {
  int n = 0;
  for (const auto& seg : segments) n += seg.second;
  return n;
}

PulseSequence gen_modulation(const ModulationSpec& spec, int length, std::uint64_t rng_seed) {
  spec.validate();
  if (length < 1) throw ConfigError("length must be >= 1");
  std::mt19937_64 rng(rng_seed);
  const auto levels = spec.level_values();
  const int K = static_cast<int>(levels.size());
  PulseSequence seq;
  seq.values.reserve(length);
  seq.truth_states.reserve(length);

  switch (spec.kind) {
    case ModulationKind::Staggered:
    case ModulationKind::Sliding:
      for (int t = 0; t < length; ++t) seq.truth_states.push_back(t % K);
      break;
    case ModulationKind::Agile: {
      std::uniform_int_distribution<int> pick(0, K - 1);
      for (int t = 0; t < length; ++t) seq.truth_states.push_back(pick(rng));
      break;
    }
    case ModulationKind::Jittered:
      seq.truth_states.assign(length, 0);
      break;
    case ModulationKind::DwellSwitch: {
      std::uniform_int_distribution<int> dwell(spec.dwell_min, spec.dwell_max);
      int level = 0;
      while (static_cast<int>(seq.truth_states.size()) < length) {
        const int d = dwell(rng);
        for (int i = 0; i < d && static_cast<int>(seq.truth_states.size()) < length; ++i)
          seq.truth_states.push_back(level);
        level = (level + 1) % K;
      }
      break;
    }
  }

  if (spec.kind == ModulationKind::Jittered) {
    std::normal_distribution<double> jitter(spec.mean, std::sqrt(spec.variance));
    for (int t = 0; t < length; ++t) {
      double v = jitter(rng);
      while (!(v > 0.0)) v = jitter(rng);
      seq.values.push_back(v);
    }
  } else {
    for (int s : seq.truth_states) seq.values.push_back(levels[s]);
  }
  seq.truth_flags.assign(length, PulseFlag::True);
  return seq;
}

PulseSequence compose_scenario(const ScenarioSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.rng_seed);
  PulseSequence seq;
  int offset = 0;
  for (std::size_t s = 0; s < spec.segments.size(); ++s) {
    const auto& [mod, len] = spec.segments[s];
    if (s > 0) seq.change_points.push_back(static_cast<int>(seq.values.size()));
    const auto part = gen_modulation(mod, len, rng());
    seq.values.insert(seq.values.end(), part.values.begin(), part.values.end());
    for (int st : part.truth_states) seq.truth_states.push_back(st + offset);
    offset += mod.num_states();
  }
  seq.truth_flags.assign(seq.values.size(), PulseFlag::True);

  if (spec.noise_variance > 0.0) {
    std::normal_distribution<double> noise(0.0, std::sqrt(spec.noise_variance));
    for (double& v : seq.values) {
      double w = v + noise(rng);
      while (!(w > 0.0)) w = v + noise(rng);
      v = w;
    }
  }
  if (spec.nonideal_ratio > 0.0) seq = inject_nonideal(seq, spec.nonideal_ratio, rng());
  return seq;
}

namespace {

struct Pulse {
  double toa;
  bool spurious;
  int origin;  // index of the original interval that starts at this pulse
};

}  // namespace

PulseSequence inject_nonideal(const PulseSequence& seq, double ratio, std::uint64_t rng_seed) {
  if (!(ratio >= 0.0 && ratio < 1.0)) throw ConfigError("non-ideal ratio must lie in [0, 1)");
  const int N = static_cast<int>(seq.size());
  const int count = static_cast<int>(std::floor(N * ratio / 2.0));
  if (count == 0) return seq;
  if (N - count < 2) throw DataError("sequence too short for the requested corruption");
  std::mt19937_64 rng(rng_seed);

  const std::vector<int> states =
      seq.has_truth_states() ? seq.truth_states : std::vector<int>(N, 0);
  const std::vector<PulseFlag> flags =
      seq.has_truth_flags() ? seq.truth_flags : std::vector<PulseFlag>(N, PulseFlag::True);

  // Pulse p sits at TOA sum_{i<p} values[i]; interval i spans pulses i and i+1.
  std::vector<Pulse> pulses(N + 1);
  double toa = 0.0;
  for (int p = 0; p <= N; ++p) {
    pulses[p] = {toa, false, p};
    if (p < N) toa += seq.values[p];
  }

  // Deletions: interior pulses, kept non-adjacent while candidates allow it.
  std::vector<bool> deleted(N + 1, false);
  {
    std::vector<int> candidates(N - 1);
    std::iota(candidates.begin(), candidates.end(), 1);
    std::shuffle(candidates.begin(), candidates.end(), rng);
    int done = 0;
    for (int p : candidates) {
      if (done == count) break;
      if (deleted[p - 1] || deleted[p + 1]) continue;
      deleted[p] = true;
      ++done;
    }
    for (int p : candidates) {
      if (done == count) break;
      if (!deleted[p]) {
        deleted[p] = true;
        ++done;
      }
    }
  }
  std::vector<Pulse> kept;
  std::vector<bool> merged;  // per interval starting at kept[i]
  for (int p = 0; p <= N; ++p) {
    if (deleted[p]) {
      merged.back() = true;
      continue;
    }
    kept.push_back(pulses[p]);
    merged.push_back(false);
  }
  merged.pop_back();

  // Insertions: uniform in time over intervals untouched so far.
  std::vector<bool> split(merged.size(), false);
  std::vector<std::pair<std::size_t, double>> inserts;
  for (int done = 0; done < count; ++done) {
    std::vector<double> weights(merged.size(), 0.0);
    for (std::size_t i = 0; i < merged.size(); ++i)
      if (!merged[i] && !split[i]) weights[i] = kept[i + 1].toa - kept[i].toa;
    if (std::all_of(weights.begin(), weights.end(), [](double w) { return w <= 0.0; })) {
      for (std::size_t i = 0; i < merged.size(); ++i) weights[i] = kept[i + 1].toa - kept[i].toa;
    }
    std::discrete_distribution<std::size_t> host(weights.begin(), weights.end());
    std::uniform_real_distribution<double> frac(0.05, 0.95);
    std::size_t i = host(rng);
    double pos = kept[i].toa + frac(rng) * (kept[i + 1].toa - kept[i].toa);
    while (std::any_of(inserts.begin(), inserts.end(), [&](const auto& e) { return e.second == pos; }))
      pos = kept[i].toa + frac(rng) * (kept[i + 1].toa - kept[i].toa);
    split[i] = true;
    inserts.push_back({i, pos});
  }

  // Assemble the corrupted train.
  std::sort(inserts.begin(), inserts.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  std::vector<Pulse> train;
  std::vector<bool> train_merged;
  std::size_t next = 0;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    train.push_back(kept[i]);
    train_merged.push_back(i < merged.size() && merged[i]);
    while (next < inserts.size() && inserts[next].first == i) {
      train.push_back({inserts[next].second, true, kept[i].origin});
      train_merged.push_back(train_merged.back());
      ++next;
    }
  }

  PulseSequence out;
  for (std::size_t i = 0; i + 1 < train.size(); ++i) {
    out.values.push_back(train[i + 1].toa - train[i].toa);
    const int origin = std::min(train[i].origin, N - 1);
    out.truth_states.push_back(states[origin]);
    PulseFlag f = flags[origin];
    if (train[i].spurious || train[i + 1].spurious)
      f = PulseFlag::SpuriousDerived;
    else if (train_merged[i])
      f = PulseFlag::MissingDerived;
    out.truth_flags.push_back(f);
  }
  for (int cp : seq.change_points) {
    for (std::size_t i = 0; i < train.size() - 1; ++i) {
      if (!train[i].spurious && train[i].origin >= cp) {
        if (i > 0 && (out.change_points.empty() || static_cast<int>(i) > out.change_points.back()))
          out.change_points.push_back(static_cast<int>(i));
        break;
      }
    }
  }
  if (!seq.has_truth_states()) out.truth_states.clear();
  return out;
}

ScenarioSpec preset(const std::string& name, std::uint64_t rng_seed, double nonideal_ratio) {
  using M = ModulationSpec;
  ScenarioSpec s;
  s.rng_seed = rng_seed;
  s.noise_variance = 1.0;
  s.nonideal_ratio = nonideal_ratio;
  auto four = [&](M a, M b, M c, M d) { s.segments = {{a, 150}, {b, 150}, {c, 150}, {d, 150}}; };
  if (name == "d1" || name == "d1_staggered") {
    s.segments = {{M::staggered({100, 110, 120, 130, 140}), 1000}};
  } else if (name == "d1_agile") {
    s.segments = {{M::agile({100, 110, 120, 130, 140}), 1000}};
  } else if (name == "d1_sliding") {
    s.segments = {{M::sliding(100, 140, 5), 1000}};
  } else if (name == "d1_jittered") {
    s.segments = {{M::jittered(125, 5), 1000}};
  } else if (name == "d1_ds") {
    s.segments = {{M::dwell_switch(100, 140, 5), 1000}};
  } else if (name == "d2") {
    four(M::staggered({100, 110, 115}), M::staggered({60, 80, 100, 110}), M::staggered({70, 75, 88}),
         M::staggered({20, 30, 80}));
  } else if (name == "d3") {
    four(M::sliding(50, 110, 8), M::sliding(50, 110, 6), M::sliding(50, 80, 4), M::sliding(50, 110, 3));
  } else if (name == "d4") {
    four(M::agile({100, 120, 130}), M::agile({60, 80, 100, 110}), M::agile({30, 75, 100}), M::agile({50, 60, 70}));
  } else if (name == "d5") {
    four(M::jittered(100, 5), M::jittered(150, 5), M::jittered(180, 5), M::jittered(200, 5));
  } else if (name == "d6") {
    four(M::staggered({100, 120, 130, 150, 160}), M::sliding(50, 150, 4), M::agile({100, 120, 130, 150, 160}),
         M::jittered(125, 5));
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  s.validate();
  return s;
}

std::vector<std::string> preset_names() {
  return {"d1", "d1_agile", "d1_staggered", "d1_sliding", "d1_jittered", "d1_ds", "d2", "d3", "d4", "d5", "d6"};
}

}  // namespace pri

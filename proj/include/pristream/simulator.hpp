#pragma once

#include "pristream/model.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace pri {

enum class ModulationKind { Staggered, Sliding, Agile, Jittered, DwellSwitch };

std::string to_string(ModulationKind kind);
ModulationKind modulation_kind_from_string(const std::string& s);

struct ModulationSpec {
  ModulationKind kind = ModulationKind::Staggered;
  std::vector<double> levels;  // staggered, agile
  double min = 0.0;            // sliding, dwell_switch
  double max = 0.0;
  int level_count = 0;
  double mean = 0.0;  // jittered
  double variance = 0.0;
  int dwell_min = 5;
  int dwell_max = 10;

  void validate() const;
  /// Distinct PRI levels visited by the generator (one entry for jittered).
  std::vector<double> level_values() const;
  int num_states() const { return static_cast<int>(level_values().size()); }
  bool is_agile() const;

  static ModulationSpec staggered(std::vector<double> levels);
  static ModulationSpec agile(std::vector<double> levels);
  static ModulationSpec sliding(double min, double max, int count);
  static ModulationSpec jittered(double mean, double variance);
  static ModulationSpec dwell_switch(double min, double max, int count);
};

struct ScenarioSpec {
  std::vector<std::pair<ModulationSpec, int>> segments;
  double noise_variance = 1.0;
  double nonideal_ratio = 0.0;
  std::uint64_t rng_seed = 0;

  void validate() const;
  int total_length() const;
};

/// Noise-free pulse intervals of one work mode (jittered draws include their
/// own variance). truth_states index level_values().
PulseSequence gen_modulation(const ModulationSpec& spec, int length, std::uint64_t rng_seed);

/// Concatenated segments with change points, measurement noise and then
/// missing/spurious corruption. Truth labels are unique across segments.
PulseSequence compose_scenario(const ScenarioSpec& spec);

/// Deletes and inserts floor(N ratio / 2) pulses each in the reconstructed
/// TOA train, then re-differences.
PulseSequence inject_nonideal(const PulseSequence& seq, double ratio, std::uint64_t rng_seed);

/// Named scenarios: d1 (alias of d1_staggered), d1_agile, d1_staggered,
/// d1_sliding, d1_jittered, d1_ds, d2 .. d6.
ScenarioSpec preset(const std::string& name, std::uint64_t rng_seed, double nonideal_ratio = 0.0);
std::vector<std::string> preset_names();

}  // namespace pri

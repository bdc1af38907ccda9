#pragma once

#include "pristream/inference.hpp"
#include "pristream/metrics.hpp"
#include "pristream/pipeline.hpp"
#include "pristream/simulator.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pri {

using nlohmann::json;

/// CSV with header `t,value[,truth_state,truth_flag]`. Reading also accepts
/// header-less numeric files; the first column is the value unless a
/// `value` column is named. Multi-column numeric rows can be reduced with
/// quantize_bins (magnitude, then uniform bins numbered from 1).
void write_sequence_csv(const std::filesystem::path& path, const PulseSequence& seq);
PulseSequence read_sequence_csv(const std::filesystem::path& path, int quantize_bins = 0);

/// Magnitude of each row, uniformly quantized into `bins` levels 1..bins.
std::vector<double> quantize_magnitude(const std::vector<std::vector<double>>& rows, int bins);

json modulation_to_json(const ModulationSpec& spec);
ModulationSpec modulation_from_json(const json& j);
json scenario_to_json(const ScenarioSpec& spec);
ScenarioSpec scenario_from_json(const json& j);

/// Sidecar next to a sequence CSV: change points and, when known, the scenario.
void write_sidecar(const std::filesystem::path& path, const PulseSequence& seq,
                   const std::optional<ScenarioSpec>& scenario);
/// Fills seq.change_points from the sidecar.
void read_sidecar(const std::filesystem::path& path, PulseSequence& seq);
std::filesystem::path sidecar_path(const std::filesystem::path& csv);

json posterior_to_json(const VariationalPosterior& vp, const ModelEstimate* estimate = nullptr);
VariationalPosterior posterior_from_json(const json& j);
json estimate_to_json(const ModelEstimate& est);

void write_trace_jsonl(const std::filesystem::path& path, const std::vector<TraceRecord>& trace);
/// Columns index,segment,delay; delay counts from the last change point at or
/// before the alarm (from 0 when none).
void write_alarm_log(const std::filesystem::path& path, const std::vector<int>& alarms,
                     const std::vector<int>& change_points);

json metrics_report(const std::string& dataset, const std::string& method, const json& params,
                    const AggregateMetrics& m, int match_window);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& j);

/// Infinite or NaN doubles become null.
json number_or_null(double v);

}  // namespace pri

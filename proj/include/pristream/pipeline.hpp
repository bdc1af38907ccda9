#pragma once

#include "pristream/detection.hpp"
#include "pristream/inference.hpp"

#include <cstdint>
#include <vector>

namespace pri {

struct TraceRecord {
  int t = 0;  // 0-based pulse index
  int k_hat = 0;
  Eigen::VectorXd theta;  // aligned to the current theta0
  double D = 0.0;
  bool alarm = false;
};

struct PipelineResult {
  std::vector<int> alarms;  // 0-based pulse indices
  std::vector<ModelEstimate> estimates;
  std::vector<TraceRecord> trace;
  std::vector<int> restarts;  // pulse index where each initial batch starts
};

/// Starting point for change detection runs. Differs from the estimation
/// defaults in a weak mean prior (lambda_0 = 1e-3) so a 20-pulse batch keeps
/// its levels apart, no seeding merges, and a lower birth threshold.
struct PipelineSettings {
  HyperParams hp;
  FitOptions fit;
  DetectorConfig detector;
};
PipelineSettings detection_defaults();

/// Initial-batch fit, per-pulse streaming update, pruning, detector step and
/// cold restart after every alarm. cfg.theta0 is re-estimated from each
/// initial batch. Deterministic per seed.
PipelineResult run_pipeline(const PulseSequence& seq, const HyperParams& hp, const DetectorConfig& cfg,
                            const FitOptions& options, std::uint64_t rng_seed);

/// Parameter vector handed to the detector: the state holding the newest pulse
/// plus every state it has been seen moving to in the window with frequency
/// above gamma_u.
Eigen::VectorXd detector_parameters(const VariationalPosterior& vp, double gamma_u);

/// Pre-change reference: every state with at least one pulse's worth of mass.
Eigen::VectorXd reference_parameters(const VariationalPosterior& vp);

}  // namespace pri

#pragma once

#include "pristream/model.hpp"
#include "pristream/quadrature.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace pri {

int delta_k(int estimated_K, int true_K);

/// Maps predicted labels onto truth labels with an optimal one-to-one
/// assignment that maximizes overlap. Unassigned predicted labels map to -1.
std::vector<int> munkres_relabel(const std::vector<int>& pred, const std::vector<int>& truth);

/// Fraction of positions that disagree after optimal relabeling.
double hamming_munkres(const std::vector<int>& pred, const std::vector<int>& truth);

struct DetectionOutcome {
  std::vector<int> true_points;
  std::vector<int> alarms;
  int horizon = 0;
  int match_window = 20;

  void validate() const;
};

struct AlarmMatching {
  std::vector<std::pair<int, int>> pairs;  // (true point, alarm)
  std::vector<int> false_alarms;
  std::vector<int> missed;
};

/// Closest-first one-to-one matching of alarms to true points within the window.
AlarmMatching match_alarms(const DetectionOutcome& outcome);

double f1(const DetectionOutcome& outcome);

struct TimingMetrics {
  std::optional<double> mdd;
  double mt2fa = 0.0;  // +inf without false alarms
  double far = 0.0;    // false alarms per monitored decision
  double mr = 0.0;
  int tp = 0;
  int fp = 0;
  int fn = 0;
};

TimingMetrics timing_metrics(const DetectionOutcome& outcome);

/// Pools several runs: delays and counts are summed before dividing, F1 is
/// the mean of per-run values.
struct AggregateMetrics {
  std::optional<double> mdd;
  double mt2fa = 0.0;
  double far = 0.0;
  double mr = 0.0;
  double f1 = 0.0;
  int n_runs = 0;
  int tp = 0;
  int fp = 0;
  int fn = 0;
};
AggregateMetrics aggregate(const std::vector<DetectionOutcome>& runs);

/// Log-space decoders under known work-mode parameters. Zero variances are
/// floored so that noise-free data stays decodable.
std::vector<int> decode_viterbi(const PulseSequence& batch, const WorkMode& wm);
std::vector<int> decode_map(const PulseSequence& batch, const WorkMode& wm);

/// Per-class error: mispredicted share of the positions whose truth is `cls`.
double class_error(const std::vector<int>& pred, const std::vector<int>& truth, int cls);

/// Lower bound on the error probability of a true pulse when true and
/// spurious delta-TOA values are N(mu_t, sigma_t^2) and N(mu_s, sigma_s^2).
/// Nested adaptive quadrature with memoized inner integrals.
QuadratureResult error_lower_bound(double mu_t, double sigma_t, double mu_s, double sigma_s);

}  // namespace pri

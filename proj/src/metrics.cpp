#include "pristream/metrics.hpp"

#include "pristream/forward_backward.hpp"
#include "pristream/munkres.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace pri {

int delta_k(int estimated_K, int true_K) {
  if (estimated_K < 1 || true_K < 1) throw DomainError("delta_k: state counts must be >= 1");
  return estimated_K - true_K;
}

namespace {

std::map<int, int> index_labels(const std::vector<int>& labels) {
  std::map<int, int> idx;
  for (int l : labels) idx.emplace(l, 0);
  int i = 0;
  for (auto& [l, v] : idx) v = i++;
  return idx;
}

}  // namespace

std::vector<int> munkres_relabel(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size()) throw DomainError("munkres_relabel: length mismatch");
  if (pred.empty()) return {};
  const auto pi = index_labels(pred);
  const auto ti = index_labels(truth);
  Eigen::MatrixXd overlap = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(pi.size()),
                                                  static_cast<Eigen::Index>(ti.size()));
  for (std::size_t n = 0; n < pred.size(); ++n) overlap(pi.at(pred[n]), ti.at(truth[n])) += 1.0;
  const auto assignment = munkres<double>(Eigen::MatrixXd(-overlap));
  std::vector<int> truth_label(ti.size());
  for (const auto& [l, i] : ti) truth_label[i] = l;
  std::map<int, int> mapping;
  for (const auto& [l, i] : pi) mapping[l] = assignment[i] >= 0 ? truth_label[assignment[i]] : -1;
  std::vector<int> out(pred.size());
  for (std::size_t n = 0; n < pred.size(); ++n) out[n] = mapping[pred[n]];
  return out;
}

double hamming_munkres(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size()) throw DomainError("hamming_munkres: length mismatch");
  if (pred.empty()) return 0.0;
  const auto relabeled = munkres_relabel(pred, truth);
  std::size_t wrong = 0;
  for (std::size_t n = 0; n < pred.size(); ++n) wrong += relabeled[n] != truth[n];
  return static_cast<double>(wrong) / static_cast<double>(pred.size());
}

void DetectionOutcome::validate() const {
  if (match_window < 0) throw ConfigError("match window must be non-negative");
  auto in_range = [&](int i) { return i >= 0 && i < horizon; };
  if (!std::all_of(true_points.begin(), true_points.end(), in_range) ||
      !std::all_of(alarms.begin(), alarms.end(), in_range))
    throw DataError("detection indices outside [0, horizon)");
}

AlarmMatching match_alarms(const DetectionOutcome& outcome) {
  outcome.validate();
  std::vector<std::pair<int, std::pair<std::size_t, std::size_t>>> candidates;
  for (std::size_t i = 0; i < outcome.true_points.size(); ++i)
    for (std::size_t j = 0; j < outcome.alarms.size(); ++j) {
      const int d = std::abs(outcome.alarms[j] - outcome.true_points[i]);
      if (d <= outcome.match_window) candidates.push_back({d, {i, j}});
    }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<bool> truth_used(outcome.true_points.size(), false);
  std::vector<bool> alarm_used(outcome.alarms.size(), false);
  AlarmMatching m;
  for (const auto& [d, ij] : candidates) {
    const auto [i, j] = ij;
    if (truth_used[i] || alarm_used[j]) continue;
    truth_used[i] = alarm_used[j] = true;
    m.pairs.push_back({outcome.true_points[i], outcome.alarms[j]});
  }
  for (std::size_t j = 0; j < outcome.alarms.size(); ++j)
    if (!alarm_used[j]) m.false_alarms.push_back(outcome.alarms[j]);
  for (std::size_t i = 0; i < outcome.true_points.size(); ++i)
    if (!truth_used[i]) m.missed.push_back(outcome.true_points[i]);
  std::sort(m.pairs.begin(), m.pairs.end());
  return m;
}

double f1(const DetectionOutcome& outcome) {
  const auto m = match_alarms(outcome);
  const double tp = static_cast<double>(m.pairs.size());
  const double denom = tp + 0.5 * static_cast<double>(m.false_alarms.size() + m.missed.size());
  return denom > 0.0 ? tp / denom : 1.0;
}

TimingMetrics timing_metrics(const DetectionOutcome& outcome) {
  const auto m = match_alarms(outcome);
  TimingMetrics tm;
  tm.tp = static_cast<int>(m.pairs.size());
  tm.fp = static_cast<int>(m.false_alarms.size());
  tm.fn = static_cast<int>(m.missed.size());
  if (tm.tp > 0) {
    double total = 0.0;
    for (const auto& [truth, alarm] : m.pairs) total += alarm - truth;
    tm.mdd = total / tm.tp;
  }
  tm.mt2fa = tm.fp > 0 ? static_cast<double>(outcome.horizon) / tm.fp : std::numeric_limits<double>::infinity();
  tm.far = outcome.horizon > 0 ? static_cast<double>(tm.fp) / outcome.horizon : 0.0;
  tm.mr = outcome.true_points.empty() ? 0.0 : static_cast<double>(tm.fn) / outcome.true_points.size();
  return tm;
}

AggregateMetrics aggregate(const std::vector<DetectionOutcome>& runs) {
  AggregateMetrics a;
  a.n_runs = static_cast<int>(runs.size());
  double delay = 0.0;
  long horizon = 0;
  long truths = 0;
  for (const auto& r : runs) {
    const auto m = match_alarms(r);
    for (const auto& [truth, alarm] : m.pairs) delay += alarm - truth;
    a.tp += static_cast<int>(m.pairs.size());
    a.fp += static_cast<int>(m.false_alarms.size());
    a.fn += static_cast<int>(m.missed.size());
    a.f1 += f1(r);
    horizon += r.horizon;
    truths += static_cast<long>(r.true_points.size());
  }
  if (a.tp > 0) a.mdd = delay / a.tp;
  a.mt2fa = a.fp > 0 ? static_cast<double>(horizon) / a.fp : std::numeric_limits<double>::infinity();
  a.far = horizon > 0 ? static_cast<double>(a.fp) / static_cast<double>(horizon) : 0.0;
  a.mr = truths > 0 ? static_cast<double>(a.fn) / static_cast<double>(truths) : 0.0;
  if (a.n_runs > 0) a.f1 /= a.n_runs;
  return a;
}

namespace {

struct LogModel {
  Eigen::VectorXd log_initial;
  Eigen::MatrixXd log_transition;
  Eigen::MatrixXd log_emission;
};

LogModel log_model(const PulseSequence& batch, const WorkMode& wm) {
  wm.validate();
  const int K = wm.num_states();
  const auto T = static_cast<Eigen::Index>(batch.size());
  LogModel m;
  m.log_initial = wm.initial.array().log();
  m.log_transition = wm.transition.array().log();
  m.log_emission.resize(T, K);
  for (int k = 0; k < K; ++k) {
    GaussianComponent c = wm.components[k];
    c.variance = std::max(c.variance, 1e-12 * std::max(1.0, c.mean * c.mean));
    for (Eigen::Index t = 0; t < T; ++t) m.log_emission(t, k) = log_emission(batch.values[t], c);
  }
  return m;
}

}  // namespace

std::vector<int> decode_viterbi(const PulseSequence& batch, const WorkMode& wm) {
  const auto m = log_model(batch, wm);
  return viterbi_path<double>(m.log_initial, m.log_transition, m.log_emission);
}

std::vector<int> decode_map(const PulseSequence& batch, const WorkMode& wm) {
  const auto m = log_model(batch, wm);
  const auto fb = forward_backward<double>(m.log_initial, m.log_transition, m.log_emission, false);
  std::vector<int> out(fb.resp.rows());
  for (Eigen::Index t = 0; t < fb.resp.rows(); ++t) {
    Eigen::Index arg = 0;
    fb.resp.row(t).maxCoeff(&arg);
    out[t] = static_cast<int>(arg);
  }
  return out;
}

double class_error(const std::vector<int>& pred, const std::vector<int>& truth, int cls) {
  if (pred.size() != truth.size()) throw DomainError("class_error: length mismatch");
  std::size_t total = 0;
  std::size_t wrong = 0;
  for (std::size_t n = 0; n < truth.size(); ++n) {
    if (truth[n] != cls) continue;
    ++total;
    wrong += pred[n] != cls;
  }
  return total > 0 ? static_cast<double>(wrong) / static_cast<double>(total) : 0.0;
}

}  // namespace pri

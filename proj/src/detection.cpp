#include "pristream/detection.hpp"

#include "pristream/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pri {

std::string to_string(DetectorMode mode) { return mode == DetectorMode::Cusum ? "cusum" : "fss"; }

DetectorMode detector_mode_from_string(const std::string& s) {
  if (s == "cusum") return DetectorMode::Cusum;
  if (s == "fss") return DetectorMode::Fss;
  throw ConfigError("unknown detector mode '" + s + "'");
}

void DetectorConfig::validate(bool require_theta0) const {
  if (!(b > 0.0) || !std::isfinite(b)) throw ConfigError("change amplitude b must be positive");
  if (!std::isfinite(threshold)) throw ConfigError("threshold must be finite");
  if (!(gamma_u >= 0.0 && gamma_u < 1.0)) throw ConfigError("gamma_u must lie in [0, 1)");
  if (init_batch < 2) throw ConfigError("init_batch must be >= 2");
  if (k_window < 1) throw ConfigError("k_window must be >= 1");
  if (mode == DetectorMode::Fss && (fss_m < 1 || !std::isfinite(fss_h)))
    throw ConfigError("fss mode needs fss_m >= 1 and a finite fss_h");
  if (require_theta0 && theta0.size() < 1) throw ConfigError("theta0 is empty");
}

double hypergeom_G(double d, double z) { return std::exp(log_hypergeom_G(d, z)); }

double change_amplitude(const Eigen::VectorXd& theta0, const Eigen::VectorXd& theta1) {
  if (theta0.size() != theta1.size()) throw DomainError("change_amplitude: length mismatch");
  return (theta1 - theta0).norm();
}

double amplitude_floor(double min_shift, int components) {
  if (!(min_shift > 0.0) || components < 1) throw ConfigError("amplitude floor needs a positive shift");
  return min_shift * std::sqrt(static_cast<double>(components));
}

double chi2_stat(const std::vector<Eigen::VectorXd>& stack, const Eigen::VectorXd& theta0, int k, int t) {
  if (k < 1 || k > t || t > static_cast<int>(stack.size())) throw DomainError("chi2_stat: need 1 <= k <= t <= |stack|");
  Eigen::VectorXd s = Eigen::VectorXd::Zero(theta0.size());
  for (int i = k; i <= t; ++i) {
    if (stack[i - 1].size() != theta0.size()) throw DomainError("chi2_stat: dimension mismatch");
    s += stack[i - 1] - theta0;
  }
  return s.squaredNorm();
}

double cusum_D(const std::vector<Eigen::VectorXd>& stack, const Eigen::VectorXd& theta0, double b, int k,
               int t) {
  if (!(b > 0.0)) throw DomainError("cusum_D: b must be positive");
  if (k < 0 || k > t || t > static_cast<int>(stack.size())) throw DomainError("cusum_D: need 0 <= k <= t <= |stack|");
  if (k == t) return 0.0;
  const double n = static_cast<double>(t - k);
  const double half_k = 0.5 * static_cast<double>(theta0.size());
  return -n * b * b / 2.0 + log_hypergeom_G(half_k, b * b * chi2_stat(stack, theta0, k + 1, t) / 4.0);
}

Eigen::VectorXd align_parameters(const Eigen::VectorXd& theta_t, const Eigen::VectorXd& theta0) {
  if (theta_t.size() < 1 || theta0.size() < 1) throw DomainError("align_parameters: empty input");
  const auto n = theta_t.size();
  const auto m = theta0.size();
  std::vector<int> slot_of(n, -1);
  std::vector<bool> slot_used(m, false);
  // Greedy one-to-one matching by smallest distance first; a component only
  // claims its own nearest slot, otherwise it is surplus.
  std::vector<Eigen::Index> nearest(n);
  for (Eigen::Index i = 0; i < n; ++i) (theta0.array() - theta_t(i)).abs().minCoeff(&nearest[i]);
  std::vector<std::pair<double, std::pair<Eigen::Index, Eigen::Index>>> pairs;
  pairs.reserve(n * m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) pairs.push_back({std::abs(theta_t(i) - theta0(j)), {i, j}});
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [d, ij] : pairs) {
    const auto [i, j] = ij;
    if (slot_of[i] < 0 && !slot_used[j] && j == nearest[i]) {
      slot_of[i] = static_cast<int>(j);
      slot_used[j] = true;
    }
  }
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd count = Eigen::VectorXd::Zero(m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index j = slot_of[i] < 0 ? nearest[i] : slot_of[i];
    sum(j) += theta_t(i);
    count(j) += 1.0;
  }
  Eigen::VectorXd out = theta0;
  for (Eigen::Index j = 0; j < m; ++j)
    if (count(j) > 0.0) out(j) = sum(j) / count(j);
  return out;
}

double asymptotic_mdd(double mean_t2fa, double b) {
  if (!(mean_t2fa > 1.0) || !(b > 0.0)) throw DomainError("asymptotic_mdd: need T > 1 and b > 0");
  return 2.0 * std::log(mean_t2fa) / (b * b);
}

bool step_cusum(DetectorState& state, const Eigen::VectorXd& theta_t, const DetectorConfig& cfg) {
  if (theta_t.size() != cfg.theta0.size()) throw DomainError("step_cusum: estimate not aligned to theta0");
  const auto K = cfg.theta0.size();
  if (state.cum_sums.empty()) state.cum_sums.push_back(Eigen::VectorXd::Zero(K));
  state.params_stack.push_back(theta_t);
  ++state.steps;
  state.cum_sums.push_back(state.cum_sums.back() + (theta_t - cfg.theta0));
  while (static_cast<int>(state.cum_sums.size()) > cfg.k_window + 1) state.cum_sums.pop_front();

  const double b2 = cfg.b * cfg.b;
  const double half_k = 0.5 * static_cast<double>(K);
  const Eigen::VectorXd& newest = state.cum_sums.back();
  const auto count = static_cast<int>(state.cum_sums.size());
  double best = -std::numeric_limits<double>::infinity();
  for (int idx = 0; idx + 1 < count; ++idx) {
    const double n = static_cast<double>(count - 1 - idx);
    const double s2 = (newest - state.cum_sums[idx]).squaredNorm();
    best = std::max(best, -n * b2 / 2.0 + log_hypergeom_G(half_k, b2 * s2 / 4.0));
  }
  state.current_D = best;
  const bool alarm = best > cfg.threshold;
  if (alarm) state.alarms.push_back(state.steps);
  return alarm;
}

bool step_fss(DetectorState& state, const Eigen::VectorXd& theta_t, const DetectorConfig& cfg) {
  if (theta_t.size() != cfg.theta0.size()) throw DomainError("step_fss: estimate not aligned to theta0");
  if (state.fss_sum.size() != cfg.theta0.size()) state.fss_sum = Eigen::VectorXd::Zero(cfg.theta0.size());
  state.params_stack.push_back(theta_t);
  ++state.steps;
  state.fss_sum += theta_t - cfg.theta0;
  ++state.fss_count;
  state.current_D = state.fss_sum.norm();
  if (state.fss_count < cfg.fss_m) return false;
  const bool alarm = state.current_D >= cfg.fss_h;
  state.fss_sum.setZero();
  state.fss_count = 0;
  if (alarm) state.alarms.push_back(state.steps);
  return alarm;
}

}  // namespace pri

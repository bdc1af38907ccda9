#pragma once

#include "pristream/special.hpp"

#include <Eigen/Core>

#include <deque>
#include <string>
#include <vector>

namespace pri {

enum class DetectorMode { Cusum, Fss };

std::string to_string(DetectorMode mode);
DetectorMode detector_mode_from_string(const std::string& s);

struct DetectorConfig {
  Eigen::VectorXd theta0;  // pre-change means, microseconds
  double b = 1.0;
  double threshold = 10.0;  // CUSUM threshold lambda
  double gamma_u = 0.1;
  int init_batch = 20;
  DetectorMode mode = DetectorMode::Cusum;
  int fss_m = 10;
  double fss_h = 10.0;
  int k_window = 200;

  /// Throws ConfigError. `theta0` is only required once detection starts.
  void validate(bool require_theta0 = true) const;
};

struct DetectorState {
  std::vector<Eigen::VectorXd> params_stack;  // aligned estimates, one per step
  std::deque<Eigen::VectorXd> cum_sums;       // prefix sums of (Theta_i - theta0), newest last
  double current_D = 0.0;
  std::vector<int> alarms;  // 1-based step indices
  int steps = 0;
  Eigen::VectorXd fss_sum;
  int fss_count = 0;
};

/// G(d, z) = 0F1(; d; z), returned as a logarithm.
inline double log_hypergeom_G(double d, double z) { return log_hypergeometric_0f1(d, z); }
double hypergeom_G(double d, double z);

/// Euclidean distance (unit covariance).
double change_amplitude(const Eigen::VectorXd& theta0, const Eigen::VectorXd& theta1);

/// Smallest amplitude worth detecting when `components` means move by at
/// least `min_shift` each.
double amplitude_floor(double min_shift, int components = 1);

/// ||sum_{i=k}^{t} (Theta_i - theta0)||^2 with 1-based inclusive indices.
double chi2_stat(const std::vector<Eigen::VectorXd>& stack, const Eigen::VectorXd& theta0, int k, int t);

/// D_k^t = -(t-k) b^2/2 + ln G(K/2, b^2 ||S||^2 / 4), S summed over the t-k
/// estimates k+1..t (so (t-k)^2 chi^2 uses the mean shift). D_t^t = 0.
double cusum_D(const std::vector<Eigen::VectorXd>& stack, const Eigen::VectorXd& theta0, double b, int k,
               int t);

/// Maps an estimate with arbitrary size onto the slots of theta0. Both inputs
/// are sorted ascending.
Eigen::VectorXd align_parameters(const Eigen::VectorXd& theta_t, const Eigen::VectorXd& theta0);

/// 2 ln(T) / b^2.
double asymptotic_mdd(double mean_t2fa, double b);

/// One CUSUM step with an aligned estimate; returns true on alarm.
bool step_cusum(DetectorState& state, const Eigen::VectorXd& theta_t, const DetectorConfig& cfg);

/// One fixed-size-sample step; decides only when a window of fss_m closes.
bool step_fss(DetectorState& state, const Eigen::VectorXd& theta_t, const DetectorConfig& cfg);

inline bool step_detector(DetectorState& state, const Eigen::VectorXd& theta_t, const DetectorConfig& cfg) {
  return cfg.mode == DetectorMode::Cusum ? step_cusum(state, theta_t, cfg) : step_fss(state, theta_t, cfg);
}

}  // namespace pri

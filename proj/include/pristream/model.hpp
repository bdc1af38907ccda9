#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pri {

/// Raised when an input violates a mathematical precondition.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised for malformed or inconsistent data (files, sequences).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for invalid user configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PulseFlag : std::uint8_t { True, SpuriousDerived, MissingDerived };

std::string to_string(PulseFlag flag);
PulseFlag pulse_flag_from_string(const std::string& s);

/// Ordered pulse intervals (PRI / delta-TOA, microseconds) with optional
/// ground truth used only for evaluation.
struct PulseSequence {
  std::vector<double> values;
  std::vector<int> truth_states;
  std::vector<PulseFlag> truth_flags;
  std::vector<int> change_points;

  std::size_t size() const { return values.size(); }
  bool has_truth_states() const { return !truth_states.empty(); }
  bool has_truth_flags() const { return !truth_flags.empty(); }

  /// Throws DataError when an invariant is broken.
  void validate() const;

  Eigen::Map<const Eigen::VectorXd> as_vector() const {
    return {values.data(), static_cast<Eigen::Index>(values.size())};
  }
};

struct GaussianComponent {
  double mean = 0.0;
  double variance = 1.0;
};

/// Gaussian-emission HMM describing one radar work mode.
struct WorkMode {
  std::vector<GaussianComponent> components;
  Eigen::MatrixXd transition;
  Eigen::VectorXd initial;

  int num_states() const { return static_cast<int>(components.size()); }
  void validate() const;
};

/// Prior hyper-parameters. Values are expressed in the model's internal
/// (standardized) units; see Scaling in inference.hpp.
struct HyperParams {
  double alpha_pi = 1.0;
  double alpha_A = 1.0;
  double a_0 = 1.0;
  double b_0 = 0.01;
  double lambda_0 = 1.0;
  double xi_0 = 0.0;
  double kappa = 0.0;

  void validate() const;
};

template <typename Scalar>
Scalar log_normal_density(Scalar x, Scalar mean, Scalar variance) {
  const Scalar d = x - mean;
  return Scalar(-0.5) * std::log(Scalar(2) * std::numbers::pi_v<Scalar> * variance) -
         d * d / (Scalar(2) * variance);
}

/// Log density of a pulse value under one work-mode state.
double log_emission(double p, const GaussianComponent& c);

/// Draws a hidden path from (initial, transition) and one value per step.
/// Zero-variance components emit their mean exactly.
PulseSequence sample_work_mode(const WorkMode& wm, int length, std::uint64_t rng_seed);

/// Deterministic cyclic chain over the given levels (a_{k,k+1} = 1).
WorkMode cyclic_work_mode(const std::vector<double>& levels, double variance);

}  // namespace pri

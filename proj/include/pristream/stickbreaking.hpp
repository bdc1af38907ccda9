#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <random>

namespace pri {

/// Beta(eta1[i], eta2[i]) posterior over each stick fraction of a truncated
/// stick-breaking construction. The last stick is degenerate (it takes the
/// whole remainder), so its parameters never enter expectations.
struct StickPosterior {
  Eigen::VectorXd eta1;
  Eigen::VectorXd eta2;

  int size() const { return static_cast<int>(eta1.size()); }
  void validate() const;

  /// Prior Beta(1, alpha + kappa * [i == self_index]) for every stick.
  static StickPosterior prior(int truncation, double alpha, double kappa = 0.0,
                              std::optional<int> self_index = std::nullopt);
};

struct ExpectedLogSticks {
  Eigen::VectorXd log_v;         // E[ln v_i]
  Eigen::VectorXd log_one_minus_v;  // E[ln(1 - v_i)]
};

/// Standard Beta expectations: psi(eta1) - psi(eta1 + eta2) and psi(eta2) - psi(eta1 + eta2).
ExpectedLogSticks expected_log_sticks(const StickPosterior& sp);

/// E_q[ln w_i] of the composed weights, remainder folded into the last slot.
Eigen::VectorXd expected_log_weights(const StickPosterior& sp);

/// E_q[w_i] = E[v_i] prod_{n<i} (1 - E[v_n]); sums to one exactly.
Eigen::VectorXd expected_weights(const StickPosterior& sp);

/// KL(q || p) summed over the non-degenerate sticks.
double stick_kl(const StickPosterior& q, const StickPosterior& p);

/// Draws a weight vector from the (agile) stick-breaking prior:
/// v_i ~ Beta(1, alpha + kappa * [i == self_index]), w_i = v_i prod_{n<i}(1 - v_n).
Eigen::VectorXd sample_sticks(double alpha, double kappa, std::optional<int> self_index,
                              int truncation, std::mt19937_64& rng);
Eigen::VectorXd sample_sticks(double alpha, double kappa, std::optional<int> self_index,
                              int truncation, std::uint64_t rng_seed);

/// Draws weights from a stick posterior (used when sampling a model estimate).
Eigen::VectorXd sample_from_posterior(const StickPosterior& sp, std::mt19937_64& rng);

/// Maps a normalized agility setting in [0, 1] onto the Beta offset kappa.
/// kappa = kappa_norm * scale; the default scale is alpha_A, so kappa_norm = 1
/// doubles the diagonal concentration and kappa_norm = 0 is the vanilla DP.
double kappa_from_normalized(double kappa_norm, double scale);

}  // namespace pri

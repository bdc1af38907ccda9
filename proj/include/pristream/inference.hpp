#pragma once

#include "pristream/model.hpp"
#include "pristream/stickbreaking.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace pri {

/// Affine map between microseconds and the model's standardized units.
/// Hyper-parameters are interpreted in model units, so xi_0 = 0 sits at the
/// batch centre and b_0 is relative to the batch spread.
struct Scaling {
  double center = 0.0;
  double scale = 1.0;

  double to_model(double us) const { return (us - center) / scale; }
  double to_us(double model) const { return model * scale + center; }
  Eigen::VectorXd to_model(std::span<const double> us) const;

  /// Mean and standard deviation of the batch; a zero spread maps to scale 1.
  static Scaling from_batch(std::span<const double> us);
};

/// q(mu | tau) q(tau) = N(mu; xi, 1/(lambda tau)) Gamma(tau; a, b).
struct GaussianGamma {
  double xi = 0.0;
  double lambda = 1.0;
  double a = 1.0;
  double b = 1.0;

  double expected_precision() const { return a / b; }
  double expected_log_precision() const;
  /// E_q[ln N(y; mu, 1/tau)].
  double expected_log_likelihood(double y) const;
  /// E[sigma^2] = b/(a-1) when it exists, otherwise b/a.
  double expected_variance() const { return a > 1.0 ? b / (a - 1.0) : b / a; }
  /// Conjugate update with weighted statistics (count, mean, centred scatter).
  GaussianGamma updated(double count, double mean, double scatter) const;
};

double gaussian_gamma_kl(const GaussianGamma& q, const GaussianGamma& p);

/// Everything the global variational factors are regularized toward. For a
/// fresh fit this is the hyper-prior; during streaming it also carries the
/// frozen statistics of pulses that have left the window.
struct GlobalPrior {
  double alpha_pi = 1.0;
  double alpha_A = 1.0;
  double kappa = 0.0;
  Eigen::VectorXd init_counts;
  Eigen::MatrixXd trans_counts;
  std::vector<GaussianGamma> emission;

  int truncation() const { return static_cast<int>(emission.size()); }
  static GlobalPrior from_hyper(const HyperParams& hp, int truncation);

  StickPosterior init_sticks() const;
  StickPosterior trans_sticks(int row) const;
};

/// Beta parameters implied by counts: eta1 = 1 + c_i, eta2 = alpha + kappa [i == self] + sum_{i'>i} c_i'.
StickPosterior sticks_from_counts(const Eigen::VectorXd& counts, double alpha, double kappa,
                                  std::optional<int> self_index);

struct VariationalPosterior {
  StickPosterior init_sticks;
  std::vector<StickPosterior> trans_sticks;
  std::vector<GaussianGamma> gg;
  Eigen::MatrixXd resp;                   // T x L
  std::vector<Eigen::MatrixXd> pair_resp;  // T-1 matrices, (from, to)
  std::vector<double> elbo_trace;
  Scaling scaling;

  int truncation() const { return static_cast<int>(gg.size()); }
  Eigen::VectorXd occupancy() const { return resp.colwise().sum().transpose(); }
  void validate() const;
};

struct EStepResult {
  Eigen::MatrixXd resp;
  std::vector<Eigen::MatrixXd> pair_resp;
  double log_normalizer = 0.0;
};

/// Expected log emissions (T x L) under the Gaussian-Gamma factors.
Eigen::MatrixXd expected_log_emissions(const Eigen::VectorXd& y, const std::vector<GaussianGamma>& gg);

/// Exact smoothed marginals of q(S) given the current global factors.
/// `y` is in model units.
EStepResult e_step(const Eigen::VectorXd& y, const VariationalPosterior& vp);

/// Optimal global factors given q(S).
VariationalPosterior m_step(const Eigen::VectorXd& y, const Eigen::MatrixXd& resp,
                            const std::vector<Eigen::MatrixXd>& pair_resp, const GlobalPrior& prior);
VariationalPosterior m_step(const Eigen::VectorXd& y, const Eigen::MatrixXd& resp,
                            const std::vector<Eigen::MatrixXd>& pair_resp, const HyperParams& hp);

struct ElboTerms {
  double initial = 0.0;      // E[ln pi_{s_1}]
  double transition = 0.0;   // sum_t E[ln a_{s_t s_t+1}]
  double likelihood = 0.0;   // sum_t E[ln p(y_t | s_t)]
  double entropy = 0.0;      // H[q(S)]
  double kl_initial = 0.0;
  double kl_transition = 0.0;
  double kl_emission = 0.0;

  double total() const {
    return initial + transition + likelihood + entropy - kl_initial - kl_transition - kl_emission;
  }
};

/// Evidence lower bound for arbitrary (resp, pair_resp, globals) held in `vp`.
ElboTerms elbo_terms(const Eigen::VectorXd& y, const VariationalPosterior& vp, const GlobalPrior& prior);
double elbo(const Eigen::VectorXd& y, const VariationalPosterior& vp, const GlobalPrior& prior);
double elbo(const Eigen::VectorXd& y, const VariationalPosterior& vp, const HyperParams& hp);

/// KL of all global factors against the prior.
double global_kl(const VariationalPosterior& vp, const GlobalPrior& prior);

struct ModelEstimate {
  WorkMode work_mode;  // surviving states, ascending mean
  int K = 0;
  std::vector<int> survivor_map;  // original index -> compact index, -1 when pruned
  double elbo = 0.0;

  Eigen::VectorXd means() const;
};

struct FitOptions {
  int truncation = 20;
  double tolerance = 1e-5;
  int max_iterations = 100;
  double dpmm_concentration = 1.0;
  /// Greedy merges of neighbouring mixture components during seeding.
  bool dpmm_merges = true;
  double gamma_u = 0.1;
  bool sample_estimate = false;
  /// Mahalanobis distance beyond which a streamed pulse seeds an unused state.
  double birth_sigma = 5.0;
  int window_cap = 400;
  /// 2: standardize by batch mean and spread, 1: centre only, 0: raw microseconds.
  int scaling_mode = 2;
};

struct FitResult {
  VariationalPosterior posterior;
  ModelEstimate estimate;
  int iterations = 0;
  bool converged = false;
};

/// Truncated stick-breaking Gaussian mixture fitted by coordinate ascent,
/// used to seed the HMM. `y` is in model units.
VariationalPosterior init_dpmm(const Eigen::VectorXd& y, int truncation, double concentration,
                               std::uint64_t rng_seed, const HyperParams& hp = {}, bool merges = true);

/// Coordinate ascent from the global factors already in `vp`. When
/// `start_with_m_step` is set, resp/pair_resp in `vp` are used first.
FitResult coordinate_ascent(const Eigen::VectorXd& y, VariationalPosterior vp, const GlobalPrior& prior,
                            const FitOptions& options, bool start_with_m_step);

/// Batch estimation: DPMM-seeded when `prior` is empty, warm-started otherwise.
FitResult fit(const PulseSequence& batch, const HyperParams& hp, const FitOptions& options,
              const VariationalPosterior* prior, std::uint64_t rng_seed);

/// Runs the kappa = 0 and kappa = kappa_agile branches and keeps the one with
/// the higher final ELBO.
FitResult fit_dual_branch(const PulseSequence& batch, HyperParams hp, double kappa_agile,
                          const FitOptions& options, std::uint64_t rng_seed);

/// Per-state pruning evidence: empirical visiting fraction and the one-step
/// inflow weight sum_i visit_i E[a_ij].
struct StateUsage {
  Eigen::VectorXd visit;
  Eigen::VectorXd inflow;
};
StateUsage state_usage(const VariationalPosterior& vp);

/// Drops states whose visiting fraction and inflow weight are both <= gamma_u.
/// Never returns K = 0.
ModelEstimate prune_states(const VariationalPosterior& vp, double gamma_u);

/// Expected parameters of the `kept` original states, in microseconds.
ModelEstimate expected_estimate(const VariationalPosterior& vp, const std::vector<int>& kept);

/// Draws (pi, A, Theta) from q restricted to the states kept by `estimate`.
ModelEstimate sample_estimate(const VariationalPosterior& vp, const ModelEstimate& estimate,
                              std::mt19937_64& rng);

/// Per-pulse labels in the compact index space of `estimate` (argmax over
/// surviving states).
std::vector<int> decode_labels(const VariationalPosterior& vp, const ModelEstimate& estimate);

}  // namespace pri

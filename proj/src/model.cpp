#include "pristream/model.hpp"

#include <random>

namespace pri {

std::string to_string(PulseFlag flag) {
  switch (flag) {
    case PulseFlag::True:
      return "true";
    case PulseFlag::SpuriousDerived:
      return "spurious";
    case PulseFlag::MissingDerived:
      return "missing";
  }
  return "true";
}

PulseFlag pulse_flag_from_string(const std::string& s) {
  if (s == "true" || s.empty()) return PulseFlag::True;
  if (s == "spurious") return PulseFlag::SpuriousDerived;
  if (s == "missing") return PulseFlag::MissingDerived;
  throw DataError("unknown pulse flag '" + s + "'");
}

void PulseSequence::validate() const {
  if (values.empty()) throw DataError("pulse sequence is empty");
  for (double v : values) {
    if (!std::isfinite(v) || v <= 0.0)
      throw DataError("pulse values must be finite and positive");
  }
  if (!truth_states.empty() && truth_states.size() != values.size())
    throw DataError("truth_states length differs from values");
  if (!truth_flags.empty() && truth_flags.size() != values.size())
    throw DataError("truth_flags length differs from values");
  int prev = 0;
  for (int cp : change_points) {
    if (cp <= prev || cp >= static_cast<int>(values.size()))
      throw DataError("change points must be strictly increasing within [1, length)");
    prev = cp;
  }
}

void WorkMode::validate() const {
  const auto k = static_cast<Eigen::Index>(components.size());
  if (k < 1) throw DomainError("work mode needs at least one state");
  if (transition.rows() != k || transition.cols() != k || initial.size() != k)
    throw DomainError("work mode dimensions disagree");
  for (const auto& c : components) {
    if (!(c.variance >= 0.0)) throw DomainError("component variance must be non-negative");
  }
  if ((transition.array() < 0.0).any() || (initial.array() < 0.0).any())
    throw DomainError("probabilities must be non-negative");
  if (std::abs(initial.sum() - 1.0) > 1e-9) throw DomainError("initial distribution must sum to 1");
  for (Eigen::Index j = 0; j < k; ++j) {
    if (std::abs(transition.row(j).sum() - 1.0) > 1e-9)
      throw DomainError("transition rows must sum to 1");
  }
}

void HyperParams::validate() const {
  if (!(alpha_pi > 0 && alpha_A > 0 && a_0 > 0 && b_0 > 0 && lambda_0 > 0))
    throw ConfigError("concentrations and Gaussian-Gamma hyper-parameters must be positive");
  if (!(kappa >= 0)) throw ConfigError("kappa must be non-negative");
  if (!std::isfinite(xi_0)) throw ConfigError("xi_0 must be finite");
}

double log_emission(double p, const GaussianComponent& c) {
  if (!std::isfinite(p) || !std::isfinite(c.mean))
    throw DomainError("log_emission: non-finite input");
  if (!(c.variance > 0.0)) throw DomainError("log_emission: variance must be positive");
  return log_normal_density(p, c.mean, c.variance);
}

namespace {

int draw_index(const Eigen::VectorXd& probs, std::mt19937_64& rng) {
  std::discrete_distribution<int> dist(probs.data(), probs.data() + probs.size());
  return dist(rng);
}

}  // namespace

PulseSequence sample_work_mode(const WorkMode& wm, int length, std::uint64_t rng_seed) {
  if (length < 1) throw DomainError("sample_work_mode: length must be >= 1");
  wm.validate();
  for (Eigen::Index j = 0; j < wm.transition.rows(); ++j) {
    if (wm.transition.row(j).sum() <= 0.0) throw DomainError("degenerate transition row");
  }
  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> unit(0.0, 1.0);

  PulseSequence seq;
  seq.values.reserve(length);
  seq.truth_states.reserve(length);
  int state = draw_index(wm.initial, rng);
  for (int t = 0; t < length; ++t) {
    if (t > 0) state = draw_index(wm.transition.row(state).transpose(), rng);
    const auto& c = wm.components[state];
    const double noise = c.variance > 0.0 ? std::sqrt(c.variance) * unit(rng) : 0.0;
    seq.values.push_back(c.mean + noise);
    seq.truth_states.push_back(state);
  }
  seq.truth_flags.assign(length, PulseFlag::True);
  return seq;
}

WorkMode cyclic_work_mode(const std::vector<double>& levels, double variance) {
  const auto k = static_cast<Eigen::Index>(levels.size());
  WorkMode wm;
  for (double l : levels) wm.components.push_back({l, variance});
  wm.transition = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index j = 0; j < k; ++j) wm.transition(j, (j + 1) % k) = 1.0;
  wm.initial = Eigen::VectorXd::Zero(k);
  wm.initial(0) = 1.0;
  return wm;
}

}  // namespace pri

#include "pristream/stickbreaking.hpp"

#include "pristream/model.hpp"
#include "pristream/special.hpp"

#include <cmath>

namespace pri {

void StickPosterior::validate() const {
  if (eta1.size() < 1 || eta1.size() != eta2.size())
    throw DomainError("stick posterior: eta vectors must have equal positive length");
  if ((eta1.array() <= 0.0).any() || (eta2.array() <= 0.0).any())
    throw DomainError("stick posterior: eta entries must be positive");
}

StickPosterior StickPosterior::prior(int truncation, double alpha, double kappa,
                                     std::optional<int> self_index) {
  if (truncation < 1) throw DomainError("truncation level must be >= 1");
  StickPosterior sp{Eigen::VectorXd::Ones(truncation), Eigen::VectorXd::Constant(truncation, alpha)};
  if (self_index) sp.eta2(*self_index) += kappa;
  return sp;
}

ExpectedLogSticks expected_log_sticks(const StickPosterior& sp) {
  const int n = sp.size();
  ExpectedLogSticks out{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (int i = 0; i < n; ++i) {
    const double total = digamma(sp.eta1(i) + sp.eta2(i));
    out.log_v(i) = digamma(sp.eta1(i)) - total;
    out.log_one_minus_v(i) = digamma(sp.eta2(i)) - total;
  }
  return out;
}

Eigen::VectorXd expected_log_weights(const StickPosterior& sp) {
  const auto e = expected_log_sticks(sp);
  const int n = sp.size();
  Eigen::VectorXd out(n);
  double carried = 0.0;
  for (int i = 0; i < n - 1; ++i) {
    out(i) = e.log_v(i) + carried;
    carried += e.log_one_minus_v(i);
  }
  out(n - 1) = carried;
  return out;
}

Eigen::VectorXd expected_weights(const StickPosterior& sp) {
  const int n = sp.size();
  Eigen::VectorXd out(n);
  double remaining = 1.0;
  for (int i = 0; i < n - 1; ++i) {
    const double v = sp.eta1(i) / (sp.eta1(i) + sp.eta2(i));
    out(i) = v * remaining;
    remaining *= 1.0 - v;
  }
  out(n - 1) = 0.0;
  out(n - 1) = 1.0 - out.head(n - 1).sum();
  if (out(n - 1) < 0.0) out(n - 1) = 0.0;
  return out;
}

namespace {

double beta_kl(double a1, double b1, double a2, double b2) {
  return log_beta_function(a2, b2) - log_beta_function(a1, b1) + (a1 - a2) * digamma(a1) +
         (b1 - b2) * digamma(b1) + (a2 - a1 + b2 - b1) * digamma(a1 + b1);
}

double draw_beta(double a, double b, std::mt19937_64& rng) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  if (x + y <= 0.0) return a >= b ? 1.0 : 0.0;
  return x / (x + y);
}

Eigen::VectorXd compose(const Eigen::VectorXd& fractions) {
  const auto n = fractions.size();
  Eigen::VectorXd w(n);
  double remaining = 1.0;
  for (Eigen::Index i = 0; i < n - 1; ++i) {
    w(i) = fractions(i) * remaining;
    remaining *= 1.0 - fractions(i);
  }
  w(n - 1) = std::max(0.0, 1.0 - w.head(n - 1).sum());
  return w;
}

}  // namespace

double stick_kl(const StickPosterior& q, const StickPosterior& p) {
  double kl = 0.0;
  for (int i = 0; i < q.size() - 1; ++i) kl += beta_kl(q.eta1(i), q.eta2(i), p.eta1(i), p.eta2(i));
  return kl;
}

Eigen::VectorXd sample_sticks(double alpha, double kappa, std::optional<int> self_index,
                              int truncation, std::mt19937_64& rng) {
  if (truncation < 1) throw DomainError("truncation level must be >= 1");
  if (!(alpha > 0.0) || !(kappa >= 0.0)) throw DomainError("alpha must be > 0 and kappa >= 0");
  if (self_index && (*self_index < 0 || *self_index >= truncation))
    throw DomainError("self_index out of range");
  Eigen::VectorXd fractions(truncation);
  for (int i = 0; i < truncation; ++i) {
    const double conc = alpha + ((self_index && *self_index == i) ? kappa : 0.0);
    fractions(i) = draw_beta(1.0, conc, rng);
  }
  return compose(fractions);
}

Eigen::VectorXd sample_sticks(double alpha, double kappa, std::optional<int> self_index,
                              int truncation, std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  return sample_sticks(alpha, kappa, self_index, truncation, rng);
}

Eigen::VectorXd sample_from_posterior(const StickPosterior& sp, std::mt19937_64& rng) {
  Eigen::VectorXd fractions(sp.size());
  for (int i = 0; i < sp.size(); ++i) fractions(i) = draw_beta(sp.eta1(i), sp.eta2(i), rng);
  return compose(fractions);
}

double kappa_from_normalized(double kappa_norm, double scale) {
  if (!(kappa_norm >= 0.0)) throw ConfigError("normalized kappa must be non-negative");
  return kappa_norm * scale;
}

}  // namespace pri

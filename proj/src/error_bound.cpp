#include "pristream/metrics.hpp"
#include "pristream/special.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pri {

namespace {

// Half-width beyond which exp(-k^2/4) and the normal tails drop below 1e-14
// of their peak.
constexpr double kGaussTail = 11.4;
constexpr double kNormalTail = 8.1;

}  // namespace

QuadratureResult error_lower_bound(double mu_t, double sigma_t, double mu_s, double sigma_s) {
  if (!(sigma_t > 0.0 && sigma_s > 0.0 && mu_t > 0.0 && mu_s > 0.0))
    throw DomainError("error_lower_bound: means and deviations must be positive");
  const double r = sigma_s / sigma_t;
  const double m = mu_t / sigma_t;
  const double c = mu_s / sigma_s;
  const double sqrt2 = std::numbers::sqrt2;
  const double two_sqrt_pi = 2.0 * std::sqrt(std::numbers::pi);
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

  double worst_error = 0.0;

  // The swap integrand is a ratio of normal tails that both underflow once
  // sigma is no longer small, so it is assembled in log space.
  auto swap_term = [&](double x) {
    const double lo = r * x;
    const double log_denom = log_q(lo - m) + log_q(2.0 * lo - m);
    auto g = [&](double k) {
      // Q(u) + Q(v) - 1 = Q(v) - Q(-u), with u below and v above.
      const double lq_v = log_q(sqrt2 * (2.0 * lo - m - k / 2.0));
      const double lq_u = log_q(-sqrt2 * (lo - m - k / 2.0));
      if (lq_v == lq_u) return 0.0;
      const double hi = std::max(lq_v, lq_u);
      const double diff = hi + std::log1p(-std::exp(std::min(lq_v, lq_u) - hi));
      const double mag = std::exp(-k * k / 4.0 - std::log(two_sqrt_pi) - log_denom + diff);
      return lq_v > lq_u ? mag : -mag;
    };
    const double hi = std::max(lo, 0.0) + kGaussTail;
    const auto res = integrate(g, lo, hi, 1e-10);
    worst_error = std::max(worst_error, res.error);
    return res.value;
  };
  auto normal_term = [&](double x) {
    const double lo = -x / 2.0;
    const double norm = q_function(lo);
    auto g = [&](double k) { return inv_sqrt_2pi * std::exp(-k * k / 2.0) / norm; };
    const auto res = integrate(g, std::max(lo, -kNormalTail - 30.0), std::max(lo, 0.0) + kNormalTail, 1e-8);
    return res.value;
  };
  auto outer = [&](double x) {
    const double weight = sigma_s / mu_s * q_function(x - c);
    if (weight == 0.0) return 0.0;
    return swap_term(x) * normal_term(x) * weight;
  };

  const double upper = std::max(c, 0.0) + kNormalTail;
  // Split at the points where the integrand changes character so that the
  // adaptive rule sees smooth pieces.
  std::vector<double> cuts{0.0};
  for (double p : {kGaussTail, c}) {
    if (p > 0.0 && p < upper) cuts.push_back(p);
  }
  cuts.push_back(upper);
  std::sort(cuts.begin(), cuts.end());
  QuadratureResult total;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const auto part = integrate(outer, cuts[i], cuts[i + 1], 1e-8);
    total.value += part.value;
    total.error += part.error;
  }
  total.error += worst_error;
  total.converged = total.error <= 1e-6 * total.value + 1e-15;
  // Past sigma of roughly mu_t / 15 the tail ratio is no longer integrable in
  // double precision; report the clamp rather than a number.
  if (!std::isfinite(total.value) || total.value < 0.0 || total.value > 1.0) total.converged = false;
  total.value = std::isfinite(total.value) ? std::clamp(total.value, 0.0, 1.0) : 1.0;
  return total;
}

}  // namespace pri

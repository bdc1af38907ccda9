#pragma once

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace pri {

// Digamma for x > 0: recurrence up to x >= 6, then the asymptotic series.
template <typename Scalar>
Scalar digamma(Scalar x) {
  if (!(x > Scalar(0))) throw std::domain_error("digamma: argument must be positive");
  Scalar shift = 0;
  while (x < Scalar(6)) {
    shift -= Scalar(1) / x;
    x += Scalar(1);
  }
  const Scalar inv = Scalar(1) / x;
  const Scalar inv2 = inv * inv;
  const Scalar series =
      inv2 * (Scalar(1) / 12 -
              inv2 * (Scalar(1) / 120 -
                      inv2 * (Scalar(1) / 252 -
                              inv2 * (Scalar(1) / 240 - inv2 * (Scalar(1) / 132)))));
  return shift + std::log(x) - Scalar(0.5) * inv - series;
}

template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::DenseBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  const Scalar m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.derived().array() - m).exp().sum());
}

/// Right-tail probability of the standard normal.
template <typename Scalar>
Scalar q_function(Scalar x) {
  return Scalar(0.5) * std::erfc(x / std::numbers::sqrt2_v<Scalar>);
}

/// ln Q(x), switching to the asymptotic tail series where Q underflows.
template <typename Scalar>
Scalar log_q(Scalar x) {
  if (x < Scalar(30)) return std::log(q_function(x));
  const Scalar inv2 = Scalar(1) / (x * x);
  return -x * x / 2 - std::log(x) - Scalar(0.5) * std::log(Scalar(2) * std::numbers::pi_v<Scalar>) +
         std::log1p(-inv2 * (Scalar(1) - inv2 * (Scalar(3) - Scalar(15) * inv2)));
}

template <typename Scalar>
Scalar log_beta_function(Scalar a, Scalar b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

/// ln G(d, z) where G(d, z) = sum_n z^n / ((d)_n n!) is the confluent limit
/// function 0F1(; d; z).
///
/// The series is summed outward from its largest term so that every partial
/// sum stays representable; the result is finite for any finite z >= 0.
template <typename Scalar>
Scalar log_hypergeometric_0f1(Scalar d, Scalar z) {
  if (!(d > Scalar(0))) throw std::domain_error("hypergeometric G: d must be positive");
  if (!(z >= Scalar(0)) || !std::isfinite(z))
    throw std::domain_error("hypergeometric G: z must be finite and non-negative");
  if (z == Scalar(0)) return Scalar(0);

  // Term ratio t_{n+1}/t_n = z / ((d+n)(n+1)) crosses 1 near the peak.
  const Scalar disc = (d - 1) * (d - 1) + 4 * z;
  Scalar peak_real = (-(d + 1) + std::sqrt(disc)) / 2 + 1;
  long peak = peak_real > 0 ? static_cast<long>(std::floor(peak_real)) : 0;
  const Scalar log_z = std::log(z);
  auto log_term = [&](long n) {
    const Scalar nn = static_cast<Scalar>(n);
    return nn * log_z - (std::lgamma(d + nn) - std::lgamma(d)) - std::lgamma(nn + 1);
  };
  const Scalar log_peak = log_term(peak);
  constexpr Scalar tiny = std::numeric_limits<Scalar>::epsilon() * Scalar(1e-3);

  // Relative terms: t_n / t_peak.
  Scalar sum = 1;
  Scalar rel = 1;
  for (long n = peak; n >= 1; --n) {
    // t_{n-1}/t_n = (d+n-1) n / z
    rel *= (d + static_cast<Scalar>(n - 1)) * static_cast<Scalar>(n) / z;
    sum += rel;
    if (rel < tiny * sum) break;
  }
  rel = 1;
  for (long n = peak;; ++n) {
    rel *= z / ((d + static_cast<Scalar>(n)) * static_cast<Scalar>(n + 1));
    sum += rel;
    if (rel < tiny * sum) break;
  }
  return log_peak + std::log(sum);
}

}  // namespace pri

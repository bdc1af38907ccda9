#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>

namespace pri {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  bool converged = true;
};

/// Adaptive Gauss-Kronrod (7/15) integration of f over a finite [a, b].
/// `rel_tol` is relative to the L1 norm of f over the interval; depth is capped
/// so badly conditioned integrands return a flagged estimate instead of stalling.
template <typename F>
QuadratureResult integrate(F f, double a, double b, double rel_tol = 1e-12, unsigned max_depth = 20) {
  if (a == b) return {};
  double error = 0.0, l1 = 0.0;
  const double value =
      boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, max_depth, rel_tol, &error, &l1);
  return {value, error, error <= rel_tol * l1 || error < 1e-300};
}

}  // namespace pri

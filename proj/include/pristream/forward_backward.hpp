#pragma once

#include "pristream/special.hpp"

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace pri {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct SmoothedMarginals {
  MatrixX<Scalar> resp;                    // T x L
  std::vector<MatrixX<Scalar>> pair_resp;  // T-1 matrices, (from, to)
  Scalar log_normalizer = 0;
};

/// Forward-backward over a chain with (possibly unnormalized) log potentials.
///
/// Each step is rescaled by its largest log emission and the forward mass, so
/// the recursion runs on O(1) quantities while the log normalizer accumulates
/// the offsets exactly.
template <typename Scalar>
SmoothedMarginals<Scalar> forward_backward(const VectorX<Scalar>& log_initial,
                                           const MatrixX<Scalar>& log_transition,
                                           const MatrixX<Scalar>& log_emission,
                                           bool want_pairs = true) {
  const Eigen::Index T = log_emission.rows();
  const Eigen::Index L = log_emission.cols();
  if (T < 1 || L < 1 || log_initial.size() != L || log_transition.rows() != L ||
      log_transition.cols() != L)
    throw std::invalid_argument("forward_backward: inconsistent shapes");
  if (!log_emission.allFinite()) throw std::domain_error("forward_backward: non-finite emission");

  const Scalar init_max = log_initial.maxCoeff();
  const VectorX<Scalar> initial = (log_initial.array() - init_max).exp().matrix();
  const MatrixX<Scalar> trans = log_transition.array().exp().matrix();

  MatrixX<Scalar> alpha(T, L);
  MatrixX<Scalar> emis(T, L);
  VectorX<Scalar> scale(T);
  Scalar log_z = init_max;
  for (Eigen::Index t = 0; t < T; ++t) {
    const Scalar m = log_emission.row(t).maxCoeff();
    emis.row(t) = (log_emission.row(t).array() - m).exp();
    VectorX<Scalar> a;
    if (t == 0) {
      a = initial.cwiseProduct(emis.row(0).transpose());
    } else {
      a = (trans.transpose() * alpha.row(t - 1).transpose()).cwiseProduct(emis.row(t).transpose());
    }
    const Scalar c = a.sum();
    if (!(c > 0)) throw std::domain_error("forward_backward: zero forward mass");
    scale(t) = c;
    alpha.row(t) = a.transpose() / c;
    log_z += m + std::log(c);
  }

  MatrixX<Scalar> beta(T, L);
  beta.row(T - 1).setOnes();
  for (Eigen::Index t = T - 2; t >= 0; --t) {
    const VectorX<Scalar> w = emis.row(t + 1).transpose().cwiseProduct(beta.row(t + 1).transpose());
    beta.row(t) = (trans * w).transpose() / scale(t + 1);
  }

  SmoothedMarginals<Scalar> out;
  out.log_normalizer = log_z;
  out.resp = alpha.cwiseProduct(beta);
  for (Eigen::Index t = 0; t < T; ++t) out.resp.row(t) /= out.resp.row(t).sum();

  if (want_pairs && T > 1) {
    out.pair_resp.resize(T - 1);
    for (Eigen::Index t = 0; t + 1 < T; ++t) {
      const VectorX<Scalar> w = emis.row(t + 1).transpose().cwiseProduct(beta.row(t + 1).transpose());
      MatrixX<Scalar> xi = (alpha.row(t).transpose() * w.transpose()).cwiseProduct(trans);
      xi /= xi.sum();
      out.pair_resp[t] = std::move(xi);
    }
  }
  return out;
}

/// Sum over t of the pairwise marginals, computed without storing them.
template <typename Scalar>
MatrixX<Scalar> sum_pairs(const std::vector<MatrixX<Scalar>>& pairs, Eigen::Index L) {
  MatrixX<Scalar> total = MatrixX<Scalar>::Zero(L, L);
  for (const auto& p : pairs) total += p;
  return total;
}

/// Most probable state path under log potentials.
template <typename Scalar>
std::vector<int> viterbi_path(const VectorX<Scalar>& log_initial, const MatrixX<Scalar>& log_transition,
                              const MatrixX<Scalar>& log_emission) {
  const Eigen::Index T = log_emission.rows();
  const Eigen::Index L = log_emission.cols();
  if (T < 1) return {};
  MatrixX<Scalar> delta(T, L);
  Eigen::MatrixXi back(T, L);
  delta.row(0) = log_initial.transpose() + log_emission.row(0);
  for (Eigen::Index t = 1; t < T; ++t) {
    for (Eigen::Index j = 0; j < L; ++j) {
      Eigen::Index arg = 0;
      const Scalar best = (delta.row(t - 1).transpose() + log_transition.col(j)).maxCoeff(&arg);
      delta(t, j) = best + log_emission(t, j);
      back(t, j) = static_cast<int>(arg);
    }
  }
  std::vector<int> path(T);
  Eigen::Index arg = 0;
  delta.row(T - 1).maxCoeff(&arg);
  path[T - 1] = static_cast<int>(arg);
  for (Eigen::Index t = T - 1; t > 0; --t) path[t - 1] = back(t, path[t]);
  return path;
}

}  // namespace pri

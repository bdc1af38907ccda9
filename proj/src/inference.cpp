#include "pristream/inference.hpp"

#include "pristream/forward_backward.hpp"
#include "pristream/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pri {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;
constexpr double kTinyCount = 1e-10;

}  // namespace

Eigen::VectorXd Scaling::to_model(std::span<const double> us) const {
  Eigen::VectorXd y(static_cast<Eigen::Index>(us.size()));
  for (std::size_t i = 0; i < us.size(); ++i) y(static_cast<Eigen::Index>(i)) = to_model(us[i]);
  return y;
}

Scaling Scaling::from_batch(std::span<const double> us) {
  Scaling s;
  if (us.empty()) return s;
  const double n = static_cast<double>(us.size());
  s.center = std::accumulate(us.begin(), us.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : us) ss += (v - s.center) * (v - s.center);
  const double sd = std::sqrt(ss / n);
  s.scale = sd > 1e-9 * std::max(1.0, std::abs(s.center)) ? sd : 1.0;
  return s;
}

double GaussianGamma::expected_log_precision() const { return digamma(a) - std::log(b); }

double GaussianGamma::expected_log_likelihood(double y) const {
  const double d = y - xi;
  return 0.5 * (expected_log_precision() - kLog2Pi - 1.0 / lambda - (a / b) * d * d);
}

GaussianGamma GaussianGamma::updated(double count, double mean, double scatter) const {
  if (!(count > kTinyCount)) return *this;
  GaussianGamma q;
  q.lambda = lambda + count;
  q.xi = (lambda * xi + count * mean) / q.lambda;
  q.a = a + 0.5 * count;
  const double d = mean - xi;
  q.b = b + 0.5 * (std::max(scatter, 0.0) + lambda * count * d * d / q.lambda);
  return q;
}

double gaussian_gamma_kl(const GaussianGamma& q, const GaussianGamma& p) {
  const double kl_gamma = (q.a - p.a) * digamma(q.a) - std::lgamma(q.a) + std::lgamma(p.a) +
                          p.a * (std::log(q.b) - std::log(p.b)) + q.a * (p.b - q.b) / q.b;
  const double ratio = p.lambda / q.lambda;
  const double d = q.xi - p.xi;
  const double kl_mean = 0.5 * (ratio - 1.0 - std::log(ratio) + p.lambda * (q.a / q.b) * d * d);
  return kl_gamma + kl_mean;
}

StickPosterior sticks_from_counts(const Eigen::VectorXd& counts, double alpha, double kappa,
                                  std::optional<int> self_index) {
  const auto L = counts.size();
  StickPosterior sp{Eigen::VectorXd(L), Eigen::VectorXd(L)};
  double tail = 0.0;
  for (Eigen::Index i = L - 1; i >= 0; --i) {
    sp.eta1(i) = 1.0 + counts(i);
    sp.eta2(i) = alpha + tail + ((self_index && *self_index == i) ? kappa : 0.0);
    tail += counts(i);
  }
  return sp;
}

GlobalPrior GlobalPrior::from_hyper(const HyperParams& hp, int truncation) {
  hp.validate();
  if (truncation < 1) throw DomainError("truncation level must be >= 1");
  GlobalPrior g;
  g.alpha_pi = hp.alpha_pi;
  g.alpha_A = hp.alpha_A;
  g.kappa = hp.kappa;
  g.init_counts = Eigen::VectorXd::Zero(truncation);
  g.trans_counts = Eigen::MatrixXd::Zero(truncation, truncation);
  g.emission.assign(truncation, GaussianGamma{hp.xi_0, hp.lambda_0, hp.a_0, hp.b_0});
  return g;
}

StickPosterior GlobalPrior::init_sticks() const {
  return sticks_from_counts(init_counts, alpha_pi, 0.0, std::nullopt);
}

StickPosterior GlobalPrior::trans_sticks(int row) const {
  return sticks_from_counts(trans_counts.row(row).transpose(), alpha_A, kappa, row);
}

void VariationalPosterior::validate() const {
  const int L = truncation();
  if (L < 1) throw DomainError("posterior has no states");
  init_sticks.validate();
  if (init_sticks.size() != L || static_cast<int>(trans_sticks.size()) != L)
    throw DomainError("posterior stick dimensions disagree with truncation");
  for (const auto& row : trans_sticks) {
    row.validate();
    if (row.size() != L) throw DomainError("transition stick row has wrong length");
  }
  for (const auto& g : gg) {
    if (!(g.lambda > 0 && g.a > 0 && g.b > 0) || !std::isfinite(g.xi))
      throw DomainError("Gaussian-Gamma parameters out of range");
  }
  if (resp.size() > 0) {
    if (resp.cols() != L) throw DomainError("responsibility width disagrees with truncation");
    for (Eigen::Index t = 0; t < resp.rows(); ++t) {
      if (std::abs(resp.row(t).sum() - 1.0) > 1e-9) throw DomainError("responsibility row does not sum to 1");
    }
    if (static_cast<Eigen::Index>(pair_resp.size()) != std::max<Eigen::Index>(resp.rows() - 1, 0))
      throw DomainError("pairwise marginals have wrong length");
  }
  for (const auto& p : pair_resp) {
    if ((p.array() < 0.0).any()) throw DomainError("negative pairwise marginal");
  }
}

Eigen::MatrixXd expected_log_emissions(const Eigen::VectorXd& y, const std::vector<GaussianGamma>& gg) {
  const auto T = y.size();
  const auto L = static_cast<Eigen::Index>(gg.size());
  Eigen::MatrixXd out(T, L);
  for (Eigen::Index j = 0; j < L; ++j) {
    const auto& g = gg[j];
    const double base = 0.5 * (g.expected_log_precision() - kLog2Pi - 1.0 / g.lambda);
    const double prec = 0.5 * g.a / g.b;
    out.col(j) = base - prec * (y.array() - g.xi).square();
  }
  if (!out.allFinite()) throw DomainError("non-finite expected log emission");
  return out;
}

namespace {

Eigen::MatrixXd expected_log_transition(const VariationalPosterior& vp) {
  const int L = vp.truncation();
  Eigen::MatrixXd out(L, L);
  for (int j = 0; j < L; ++j) out.row(j) = expected_log_weights(vp.trans_sticks[j]).transpose();
  return out;
}

}  // namespace

EStepResult e_step(const Eigen::VectorXd& y, const VariationalPosterior& vp) {
  if (y.size() < 1) throw DataError("e_step: empty batch");
  const auto fb = forward_backward<double>(expected_log_weights(vp.init_sticks), expected_log_transition(vp),
                                           expected_log_emissions(y, vp.gg));
  return {fb.resp, fb.pair_resp, fb.log_normalizer};
}

VariationalPosterior m_step(const Eigen::VectorXd& y, const Eigen::MatrixXd& resp,
                            const std::vector<Eigen::MatrixXd>& pair_resp, const GlobalPrior& prior) {
  const int L = prior.truncation();
  if (resp.rows() != y.size() || resp.cols() != L)
    throw DomainError("m_step: responsibility shape disagrees with data");
  if (static_cast<Eigen::Index>(pair_resp.size()) != std::max<Eigen::Index>(y.size() - 1, 0))
    throw DomainError("m_step: pairwise marginals have wrong length");

  VariationalPosterior vp;
  const Eigen::VectorXd init_counts = prior.init_counts + resp.row(0).transpose();
  vp.init_sticks = sticks_from_counts(init_counts, prior.alpha_pi, 0.0, std::nullopt);

  const Eigen::MatrixXd trans_counts = prior.trans_counts + sum_pairs<double>(pair_resp, L);
  vp.trans_sticks.reserve(L);
  for (int j = 0; j < L; ++j)
    vp.trans_sticks.push_back(sticks_from_counts(trans_counts.row(j).transpose(), prior.alpha_A, prior.kappa, j));

  const Eigen::VectorXd counts = resp.colwise().sum().transpose();
  const Eigen::VectorXd sums = resp.transpose() * y;
  vp.gg.reserve(L);
  for (int j = 0; j < L; ++j) {
    const double n = counts(j);
    if (!(n > kTinyCount)) {
      vp.gg.push_back(prior.emission[j]);
      continue;
    }
    const double mean = sums(j) / n;
    const double scatter = (resp.col(j).array() * (y.array() - mean).square()).sum();
    vp.gg.push_back(prior.emission[j].updated(n, mean, scatter));
  }
  vp.resp = resp;
  vp.pair_resp = pair_resp;
  return vp;
}

VariationalPosterior m_step(const Eigen::VectorXd& y, const Eigen::MatrixXd& resp,
                            const std::vector<Eigen::MatrixXd>& pair_resp, const HyperParams& hp) {
  return m_step(y, resp, pair_resp, GlobalPrior::from_hyper(hp, static_cast<int>(resp.cols())));
}

double global_kl(const VariationalPosterior& vp, const GlobalPrior& prior) {
  double kl = stick_kl(vp.init_sticks, prior.init_sticks());
  for (int j = 0; j < vp.truncation(); ++j) kl += stick_kl(vp.trans_sticks[j], prior.trans_sticks(j));
  for (int j = 0; j < vp.truncation(); ++j) kl += gaussian_gamma_kl(vp.gg[j], prior.emission[j]);
  return kl;
}

namespace {

double xlogx_sum(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  double s = 0.0;
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const double v = m(r, c);
      if (v > 0.0) s += v * std::log(v);
    }
  return s;
}

}  // namespace

ElboTerms elbo_terms(const Eigen::VectorXd& y, const VariationalPosterior& vp, const GlobalPrior& prior) {
  const int L = vp.truncation();
  const auto T = y.size();
  ElboTerms e;
  e.initial = vp.resp.row(0).dot(expected_log_weights(vp.init_sticks).transpose());
  const Eigen::MatrixXd log_a = expected_log_transition(vp);
  for (const auto& p : vp.pair_resp) e.transition += (p.array() * log_a.array()).sum();
  e.likelihood = (vp.resp.array() * expected_log_emissions(y, vp.gg).array()).sum();

  if (T == 1) {
    e.entropy = -xlogx_sum(vp.resp);
  } else {
    double h = 0.0;
    for (const auto& p : vp.pair_resp) h -= xlogx_sum(p);
    if (T > 2) h += xlogx_sum(vp.resp.middleRows(1, T - 2));
    e.entropy = h;
  }

  e.kl_initial = stick_kl(vp.init_sticks, prior.init_sticks());
  for (int j = 0; j < L; ++j) e.kl_transition += stick_kl(vp.trans_sticks[j], prior.trans_sticks(j));
  for (int j = 0; j < L; ++j) e.kl_emission += gaussian_gamma_kl(vp.gg[j], prior.emission[j]);
  return e;
}

double elbo(const Eigen::VectorXd& y, const VariationalPosterior& vp, const GlobalPrior& prior) {
  return elbo_terms(y, vp, prior).total();
}

double elbo(const Eigen::VectorXd& y, const VariationalPosterior& vp, const HyperParams& hp) {
  return elbo(y, vp, GlobalPrior::from_hyper(hp, vp.truncation()));
}

// ---------------------------------------------------------------------------
// DPMM seeding

namespace {

struct Mixture {
  StickPosterior sticks;
  std::vector<GaussianGamma> gg;
  Eigen::MatrixXd resp;
};

void mixture_m_step(const Eigen::VectorXd& y, Mixture& m, double concentration, const GaussianGamma& base) {
  const auto L = m.resp.cols();
  const Eigen::VectorXd counts = m.resp.colwise().sum().transpose();
  m.sticks = sticks_from_counts(counts, concentration, 0.0, std::nullopt);
  const Eigen::VectorXd sums = m.resp.transpose() * y;
  m.gg.assign(L, base);
  for (Eigen::Index j = 0; j < L; ++j) {
    const double n = counts(j);
    if (!(n > kTinyCount)) continue;
    const double mean = sums(j) / n;
    const double scatter = (m.resp.col(j).array() * (y.array() - mean).square()).sum();
    m.gg[j] = base.updated(n, mean, scatter);
  }
}

// E-step; returns the ELBO evaluated at the new responsibilities.
double mixture_e_step(const Eigen::VectorXd& y, Mixture& m, double concentration, const GaussianGamma& base) {
  const auto L = m.resp.cols();
  Eigen::MatrixXd logp = expected_log_emissions(y, m.gg);
  logp.rowwise() += expected_log_weights(m.sticks).transpose();
  double total = 0.0;
  for (Eigen::Index t = 0; t < logp.rows(); ++t) {
    const double lse = log_sum_exp(logp.row(t));
    total += lse;
    m.resp.row(t) = (logp.row(t).array() - lse).exp();
  }
  total -= stick_kl(m.sticks, StickPosterior::prior(static_cast<int>(L), concentration));
  for (Eigen::Index j = 0; j < L; ++j) total -= gaussian_gamma_kl(m.gg[j], base);
  return total;
}

double mixture_run(const Eigen::VectorXd& y, Mixture& m, double concentration, const GaussianGamma& base,
                   int max_iter, double tol) {
  double prev = -std::numeric_limits<double>::infinity();
  double cur = prev;
  for (int it = 0; it < max_iter; ++it) {
    mixture_m_step(y, m, concentration, base);
    cur = mixture_e_step(y, m, concentration, base);
    if (std::abs(cur - prev) <= tol * std::max(1.0, std::abs(cur))) break;
    prev = cur;
  }
  return cur;
}

// Largest clusters first, so the stick prior's ordering matches the data.
void sort_by_mass(Mixture& m) {
  const auto L = m.resp.cols();
  const Eigen::VectorXd mass = m.resp.colwise().sum().transpose();
  std::vector<Eigen::Index> order(L);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return mass(a) > mass(b); });
  Eigen::MatrixXd r(m.resp.rows(), L);
  for (Eigen::Index j = 0; j < L; ++j) r.col(j) = m.resp.col(order[j]);
  m.resp = std::move(r);
}

std::vector<double> kmeanspp_centers(const Eigen::VectorXd& y, int k, std::mt19937_64& rng) {
  std::vector<double> centers;
  const auto n = y.size();
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  centers.push_back(y(pick(rng)));
  Eigen::VectorXd d2 = (y.array() - centers.back()).square();
  while (static_cast<int>(centers.size()) < k) {
    const double total = d2.sum();
    if (!(total > 0.0)) break;
    std::discrete_distribution<Eigen::Index> dist(d2.data(), d2.data() + n);
    centers.push_back(y(dist(rng)));
    d2 = d2.cwiseMin((y.array() - centers.back()).square().matrix());
  }
  return centers;
}

}  // namespace

VariationalPosterior init_dpmm(const Eigen::VectorXd& y, int truncation, double concentration,
                               std::uint64_t rng_seed, const HyperParams& hp, bool merges) {
  if (truncation < 1) throw DomainError("truncation level must be >= 1");
  if (!(concentration > 0.0)) throw ConfigError("DPMM concentration must be positive");
  if (y.size() < 1) throw DataError("init_dpmm: empty batch");
  hp.validate();
  const auto T = y.size();
  const GaussianGamma base{hp.xi_0, hp.lambda_0, hp.a_0, hp.b_0};
  std::mt19937_64 rng(rng_seed);

  std::vector<double> distinct(y.data(), y.data() + T);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  const int k0 = std::min<int>(truncation, static_cast<int>(distinct.size()));

  Mixture m;
  m.resp = Eigen::MatrixXd::Zero(T, truncation);
  const auto centers = kmeanspp_centers(y, k0, rng);
  for (Eigen::Index t = 0; t < T; ++t) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < centers.size(); ++c)
      if (std::abs(y(t) - centers[c]) < std::abs(y(t) - centers[best])) best = c;
    m.resp(t, static_cast<Eigen::Index>(best)) = 1.0;
  }
  sort_by_mass(m);
  double score = mixture_run(y, m, concentration, base, 200, 1e-9);

  // Greedy merges of neighbouring clusters, accepted when the bound improves.
  for (int round = 0; merges && round < truncation; ++round) {
    sort_by_mass(m);
    mixture_m_step(y, m, concentration, base);
    const Eigen::VectorXd mass = m.resp.colwise().sum().transpose();
    std::vector<int> live;
    for (int j = 0; j < truncation; ++j)
      if (mass(j) > 0.5) live.push_back(j);
    if (live.size() < 2) break;
    std::sort(live.begin(), live.end(), [&](int a, int b) { return m.gg[a].xi < m.gg[b].xi; });
    std::vector<std::pair<double, std::pair<int, int>>> candidates;
    for (std::size_t i = 0; i + 1 < live.size(); ++i) {
      const auto& ga = m.gg[live[i]];
      const auto& gb = m.gg[live[i + 1]];
      const double spread = std::sqrt(ga.expected_variance() + gb.expected_variance());
      candidates.push_back({(gb.xi - ga.xi) / spread, {live[i], live[i + 1]}});
    }
    std::sort(candidates.begin(), candidates.end());
    bool merged = false;
    for (const auto& [gap, pair] : candidates) {
      Mixture trial = m;
      trial.resp.col(pair.first) += trial.resp.col(pair.second);
      trial.resp.col(pair.second).setZero();
      sort_by_mass(trial);
      const double s = mixture_run(y, trial, concentration, base, 50, 1e-9);
      if (s > score + 1e-9 * std::abs(score)) {
        m = std::move(trial);
        score = s;
        merged = true;
        break;
      }
    }
    if (!merged) break;
  }
  sort_by_mass(m);
  mixture_m_step(y, m, concentration, base);

  VariationalPosterior vp;
  const int L = truncation;
  vp.init_sticks = StickPosterior{Eigen::VectorXd::Ones(L), Eigen::VectorXd::Ones(L)};
  vp.trans_sticks.assign(L, vp.init_sticks);
  vp.gg = m.gg;
  vp.resp = m.resp;
  vp.pair_resp.reserve(T > 0 ? T - 1 : 0);
  for (Eigen::Index t = 0; t + 1 < T; ++t)
    vp.pair_resp.push_back(m.resp.row(t).transpose() * m.resp.row(t + 1));
  return vp;
}

// ---------------------------------------------------------------------------
// Coordinate ascent

FitResult coordinate_ascent(const Eigen::VectorXd& y, VariationalPosterior vp, const GlobalPrior& prior,
                            const FitOptions& options, bool start_with_m_step) {
  if (y.size() < 1) throw DataError("fit: empty batch");
  const Scaling scaling = vp.scaling;
  std::vector<double> trace;
  if (start_with_m_step) {
    vp = m_step(y, vp.resp, vp.pair_resp, prior);
    trace.push_back(elbo(y, vp, prior));
  }
  FitResult out;
  double prev = trace.empty() ? -std::numeric_limits<double>::infinity() : trace.back();
  for (int it = 0; it < options.max_iterations; ++it) {
    auto e = e_step(y, vp);
    vp = m_step(y, e.resp, e.pair_resp, prior);
    const double cur = elbo(y, vp, prior);
    trace.push_back(cur);
    out.iterations = it + 1;
    if (std::abs(cur - prev) < options.tolerance * std::abs(cur)) {
      out.converged = true;
      break;
    }
    prev = cur;
  }
  vp.elbo_trace = std::move(trace);
  vp.scaling = scaling;
  out.posterior = std::move(vp);
  return out;
}

namespace {

void finish_estimate(FitResult& r, const FitOptions& options, std::uint64_t rng_seed) {
  r.estimate = prune_states(r.posterior, options.gamma_u);
  if (options.sample_estimate) {
    std::mt19937_64 rng(rng_seed ^ 0x9e3779b97f4a7c15ULL);
    r.estimate = sample_estimate(r.posterior, r.estimate, rng);
  }
  if (!r.posterior.elbo_trace.empty()) r.estimate.elbo = r.posterior.elbo_trace.back();
}

}  // namespace

FitResult fit(const PulseSequence& batch, const HyperParams& hp, const FitOptions& options,
              const VariationalPosterior* prior, std::uint64_t rng_seed) {
  batch.validate();
  hp.validate();
  if (options.truncation < 1) throw ConfigError("truncation level must be >= 1");
  const GlobalPrior g = GlobalPrior::from_hyper(hp, options.truncation);

  FitResult r;
  if (prior == nullptr) {
    Scaling scaling = options.scaling_mode > 0 ? Scaling::from_batch(batch.values) : Scaling{};
    if (options.scaling_mode == 1) scaling.scale = 1.0;
    const Eigen::VectorXd y = scaling.to_model(batch.values);
    VariationalPosterior init = init_dpmm(y, options.truncation, options.dpmm_concentration, rng_seed, hp, options.dpmm_merges);
    init.scaling = scaling;
    r = coordinate_ascent(y, std::move(init), g, options, false);
  } else {
    if (prior->truncation() != options.truncation)
      throw ConfigError("warm-start posterior truncation differs from the requested one");
    const Eigen::VectorXd y = prior->scaling.to_model(batch.values);
    r = coordinate_ascent(y, *prior, g, options, false);
  }
  finish_estimate(r, options, rng_seed);
  return r;
}

FitResult fit_dual_branch(const PulseSequence& batch, HyperParams hp, double kappa_agile,
                          const FitOptions& options, std::uint64_t rng_seed) {
  hp.kappa = 0.0;
  FitResult plain = fit(batch, hp, options, nullptr, rng_seed);
  hp.kappa = kappa_agile;
  FitResult agile = fit(batch, hp, options, nullptr, rng_seed);
  return agile.estimate.elbo > plain.estimate.elbo ? agile : plain;
}

// ---------------------------------------------------------------------------
// Estimates

Eigen::VectorXd ModelEstimate::means() const {
  Eigen::VectorXd m(work_mode.num_states());
  for (int k = 0; k < work_mode.num_states(); ++k) m(k) = work_mode.components[k].mean;
  return m;
}

StateUsage state_usage(const VariationalPosterior& vp) {
  const int L = vp.truncation();
  StateUsage u;
  const double T = static_cast<double>(std::max<Eigen::Index>(vp.resp.rows(), 1));
  u.visit = vp.resp.rows() > 0 ? Eigen::VectorXd(vp.occupancy() / T) : Eigen::VectorXd::Zero(L);
  Eigen::MatrixXd expected_a(L, L);
  for (int j = 0; j < L; ++j) expected_a.row(j) = expected_weights(vp.trans_sticks[j]).transpose();
  u.inflow = expected_a.transpose() * u.visit;
  return u;
}

ModelEstimate expected_estimate(const VariationalPosterior& vp, const std::vector<int>& kept) {
  const int L = vp.truncation();
  std::vector<int> order = kept;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return vp.gg[a].xi < vp.gg[b].xi; });
  const auto K = static_cast<Eigen::Index>(order.size());

  ModelEstimate est;
  est.K = static_cast<int>(K);
  est.survivor_map.assign(L, -1);
  for (Eigen::Index k = 0; k < K; ++k) est.survivor_map[order[k]] = static_cast<int>(k);

  const double s = vp.scaling.scale;
  for (int j : order)
    est.work_mode.components.push_back({vp.scaling.to_us(vp.gg[j].xi), vp.gg[j].expected_variance() * s * s});

  const Eigen::VectorXd w0 = expected_weights(vp.init_sticks);
  est.work_mode.initial.resize(K);
  for (Eigen::Index k = 0; k < K; ++k) est.work_mode.initial(k) = w0(order[k]);
  if (!(est.work_mode.initial.sum() > 0.0)) est.work_mode.initial.setConstant(1.0);
  est.work_mode.initial /= est.work_mode.initial.sum();

  est.work_mode.transition.resize(K, K);
  for (Eigen::Index r = 0; r < K; ++r) {
    const Eigen::VectorXd w = expected_weights(vp.trans_sticks[order[r]]);
    for (Eigen::Index c = 0; c < K; ++c) est.work_mode.transition(r, c) = w(order[c]);
    double row = est.work_mode.transition.row(r).sum();
    if (!(row > 0.0)) {
      est.work_mode.transition.row(r).setConstant(1.0);
      row = static_cast<double>(K);
    }
    est.work_mode.transition.row(r) /= row;
  }
  return est;
}

ModelEstimate prune_states(const VariationalPosterior& vp, double gamma_u) {
  if (!(gamma_u >= 0.0 && gamma_u < 1.0)) throw ConfigError("gamma_u must lie in [0, 1)");
  const auto usage = state_usage(vp);
  std::vector<int> kept;
  for (int j = 0; j < vp.truncation(); ++j) {
    const bool flagged = usage.visit(j) <= gamma_u && usage.inflow(j) <= gamma_u;
    // gamma_u = 0 keeps everything, including never-visited slots with zero mass.
    if (!flagged || gamma_u == 0.0) kept.push_back(j);
  }
  if (kept.empty()) {
    Eigen::Index best = 0;
    usage.visit.maxCoeff(&best);
    kept.push_back(static_cast<int>(best));
  }
  return expected_estimate(vp, kept);
}

ModelEstimate sample_estimate(const VariationalPosterior& vp, const ModelEstimate& estimate,
                              std::mt19937_64& rng) {
  const int L = vp.truncation();
  std::vector<int> order(estimate.K);
  for (int j = 0; j < L; ++j)
    if (estimate.survivor_map[j] >= 0) order[estimate.survivor_map[j]] = j;

  ModelEstimate out = estimate;
  const double s = vp.scaling.scale;
  for (int k = 0; k < estimate.K; ++k) {
    const auto& g = vp.gg[order[k]];
    std::gamma_distribution<double> prec(g.a, 1.0 / g.b);
    const double tau = std::max(prec(rng), 1e-300);
    std::normal_distribution<double> mu(g.xi, 1.0 / std::sqrt(g.lambda * tau));
    out.work_mode.components[k] = {vp.scaling.to_us(mu(rng)), s * s / tau};
  }
  auto restrict = [&](const Eigen::VectorXd& w) {
    Eigen::VectorXd r(estimate.K);
    for (int k = 0; k < estimate.K; ++k) r(k) = w(order[k]);
    if (!(r.sum() > 0.0)) r.setConstant(1.0);
    return Eigen::VectorXd(r / r.sum());
  };
  out.work_mode.initial = restrict(sample_from_posterior(vp.init_sticks, rng));
  for (int k = 0; k < estimate.K; ++k)
    out.work_mode.transition.row(k) = restrict(sample_from_posterior(vp.trans_sticks[order[k]], rng)).transpose();
  return out;
}

std::vector<int> decode_labels(const VariationalPosterior& vp, const ModelEstimate& estimate) {
  std::vector<int> labels(vp.resp.rows(), 0);
  for (Eigen::Index t = 0; t < vp.resp.rows(); ++t) {
    double best = -1.0;
    for (int j = 0; j < vp.truncation(); ++j) {
      const int k = estimate.survivor_map[j];
      if (k >= 0 && vp.resp(t, j) > best) {
        best = vp.resp(t, j);
        labels[t] = k;
      }
    }
  }
  return labels;
}

}  // namespace pri

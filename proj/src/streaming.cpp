#include "pristream/streaming.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <cmath>

namespace pri {

namespace {

Eigen::VectorXd window_vector(const StreamingSession& s) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(s.window.size()));
  for (std::size_t i = 0; i < s.window.size(); ++i)
    y(static_cast<Eigen::Index>(i)) = s.posterior.scaling.to_model(s.window[i]);
  return y;
}

// Folds the oldest pulse of the window into the frozen prior.
void evict_oldest(StreamingSession& s) {
  auto& vp = s.posterior;
  const double y0 = vp.scaling.to_model(s.window.front());
  const int L = vp.truncation();
  for (int j = 0; j < L; ++j) {
    const double r = vp.resp(0, j);
    if (r > 0.0) s.prior.emission[j] = s.prior.emission[j].updated(r, y0, 0.0);
  }
  if (!vp.pair_resp.empty()) {
    s.prior.trans_counts += vp.pair_resp.front();
    vp.pair_resp.erase(vp.pair_resp.begin());
  }
  const auto T = vp.resp.rows();
  vp.resp = Eigen::MatrixXd(vp.resp.bottomRows(T - 1));
  s.window.pop_front();
}

// Mass carried by each state, counting evicted pulses through the prior.
Eigen::VectorXd state_mass(const StreamingSession& s) {
  Eigen::VectorXd mass = s.posterior.occupancy();
  for (int j = 0; j < s.posterior.truncation(); ++j) mass(j) += s.prior.emission[j].lambda - s.hp.lambda_0;
  return mass;
}

}  // namespace

StreamingSession start_stream(const PulseSequence& initial_batch, const HyperParams& hp,
                              const FitOptions& options, std::uint64_t rng_seed) {
  StreamingSession s;
  s.hp = hp;
  s.options = options;
  s.prior = GlobalPrior::from_hyper(hp, options.truncation);
  FitResult r = fit(initial_batch, hp, options, nullptr, rng_seed);
  s.posterior = std::move(r.posterior);
  s.estimate = std::move(r.estimate);
  s.last_iterations = r.iterations;
  s.window.assign(initial_batch.values.begin(), initial_batch.values.end());
  while (s.window_size() > options.window_cap) evict_oldest(s);
  return s;
}

const ModelEstimate& streaming_update(StreamingSession& s, double pulse) {
  if (!std::isfinite(pulse)) throw DataError("streaming_update: non-finite pulse");
  if (s.window_size() >= s.options.window_cap && s.window_size() > 1) evict_oldest(s);

  auto& vp = s.posterior;
  const int L = vp.truncation();
  const double y = vp.scaling.to_model(pulse);
  const Eigen::VectorXd mass = state_mass(s);

  // A pulse is unexplained when every occupied state's posterior predictive
  // puts less tail mass beyond it than a Gaussian does beyond birth_sigma.
  const double tail = boost::math::cdf(boost::math::complement(boost::math::normal(), s.options.birth_sigma));
  bool explained = false;
  int free_slot = -1;
  for (int j = 0; j < L; ++j) {
    if (mass(j) > 0.9) {
      const auto& g = vp.gg[j];
      const double spread = std::sqrt(g.b * (g.lambda + 1.0) / (g.a * g.lambda));
      const boost::math::students_t predictive(2.0 * g.a);
      if (boost::math::cdf(boost::math::complement(predictive, std::abs(y - g.xi) / spread)) >= tail)
        explained = true;
    } else if (mass(j) < 1e-3 && free_slot < 0) {
      free_slot = j;
    }
  }
  s.born_last_step = !explained && free_slot >= 0;

  const auto T = vp.resp.rows();
  Eigen::MatrixXd resp(T + 1, L);
  resp.topRows(T) = vp.resp;
  Eigen::RowVectorXd last = Eigen::RowVectorXd::Constant(L, 1.0 / L);
  if (s.born_last_step) {
    last.setZero();
    last(free_slot) = 1.0;
  }
  resp.row(T) = last;
  vp.pair_resp.push_back(T > 0 ? Eigen::MatrixXd(vp.resp.row(T - 1).transpose() * last)
                               : Eigen::MatrixXd::Zero(L, L));
  vp.resp = std::move(resp);
  s.window.push_back(pulse);

  FitResult r = coordinate_ascent(window_vector(s), std::move(vp), s.prior, s.options, s.born_last_step);
  s.posterior = std::move(r.posterior);
  s.last_iterations = r.iterations;
  s.estimate = prune_states(s.posterior, s.options.gamma_u);
  if (!s.posterior.elbo_trace.empty()) s.estimate.elbo = s.posterior.elbo_trace.back();
  return s.estimate;
}

}  // namespace pri

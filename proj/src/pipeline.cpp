#include "pristream/pipeline.hpp"

#include "pristream/streaming.hpp"

#include <algorithm>

namespace pri {

namespace {

Eigen::VectorXd sorted_means(const VariationalPosterior& vp, const std::vector<int>& states) {
  Eigen::VectorXd m(static_cast<Eigen::Index>(states.size()));
  for (std::size_t i = 0; i < states.size(); ++i)
    m(static_cast<Eigen::Index>(i)) = vp.scaling.to_us(vp.gg[states[i]].xi);
  std::sort(m.data(), m.data() + m.size());
  return m;
}

}  // namespace

PipelineSettings detection_defaults() {
  PipelineSettings s;
  s.hp.kappa = 0.5;
  s.hp.lambda_0 = 1e-3;
  s.fit.dpmm_merges = false;
  s.fit.birth_sigma = 2.75;
  s.detector.b = 3.0;
  s.detector.threshold = 10.0;
  s.detector.fss_h = 10.0;
  return s;
}

Eigen::VectorXd detector_parameters(const VariationalPosterior& vp, double gamma_u) {
  const int L = vp.truncation();
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(L, L);
  for (const auto& p : vp.pair_resp) counts += p;
  const Eigen::VectorXd out_total = counts.rowwise().sum();
  for (int i = 0; i < L; ++i) counts.row(i) /= std::max(out_total(i), 1.0);
  const auto T = vp.resp.rows();
  const Eigen::RowVectorXd last = vp.resp.row(T - 1);
  const Eigen::RowVectorXd next = last * counts;
  Eigen::Index newest = 0;
  last.maxCoeff(&newest);
  std::vector<int> states;
  std::vector<bool> keep(L, false);
  keep[newest] = true;
  for (int j = 0; j < L; ++j)
    if (next(j) > gamma_u) keep[j] = true;
  for (int j = 0; j < L; ++j)
    if (keep[j]) states.push_back(j);
  return sorted_means(vp, states);
}

Eigen::VectorXd reference_parameters(const VariationalPosterior& vp) {
  const Eigen::VectorXd occ = vp.occupancy();
  std::vector<int> states;
  for (int j = 0; j < vp.truncation(); ++j)
    if (occ(j) >= 1.0) states.push_back(j);
  if (states.empty()) {
    Eigen::Index best = 0;
    occ.maxCoeff(&best);
    states.push_back(static_cast<int>(best));
  }
  return sorted_means(vp, states);
}

PipelineResult run_pipeline(const PulseSequence& seq, const HyperParams& hp, const DetectorConfig& cfg_in,
                            const FitOptions& options, std::uint64_t rng_seed) {
  seq.validate();
  cfg_in.validate(false);
  const int n = static_cast<int>(seq.size());
  if (n <= cfg_in.init_batch) throw DataError("sequence is not longer than the initial batch");

  FitOptions opts = options;
  opts.gamma_u = cfg_in.gamma_u;
  PipelineResult out;
  out.estimates.reserve(n);
  out.trace.reserve(n);

  int start = 0;
  int restart_index = 0;
  while (start + cfg_in.init_batch <= n) {
    PulseSequence batch;
    batch.values.assign(seq.values.begin() + start, seq.values.begin() + start + cfg_in.init_batch);
    out.restarts.push_back(start);
    StreamingSession session =
        start_stream(batch, hp, opts, rng_seed + 0x100000001b3ULL * static_cast<std::uint64_t>(restart_index++));
    DetectorConfig cfg = cfg_in;
    cfg.theta0 = reference_parameters(session.posterior);
    DetectorState state;

    for (int t = start; t < start + cfg_in.init_batch; ++t) {
      out.estimates.push_back(session.estimate);
      out.trace.push_back({t, session.estimate.K, cfg.theta0, 0.0, false});
    }

    int t = start + cfg_in.init_batch;
    bool alarmed = false;
    for (; t < n; ++t) {
      const ModelEstimate& est = streaming_update(session, seq.values[t]);
      const Eigen::VectorXd theta = align_parameters(detector_parameters(session.posterior, cfg.gamma_u), cfg.theta0);
      const bool alarm = step_detector(state, theta, cfg);
      out.estimates.push_back(est);
      out.trace.push_back({t, est.K, theta, state.current_D, alarm});
      if (alarm) {
        out.alarms.push_back(t);
        alarmed = true;
        ++t;
        break;
      }
    }
    if (!alarmed) break;
    // Pulses that cannot fill another initial batch are reported without detection.
    if (t + cfg_in.init_batch > n) {
      for (; t < n; ++t) {
        out.estimates.push_back(out.estimates.back());
        out.trace.push_back({t, out.estimates.back().K, Eigen::VectorXd(), 0.0, false});
      }
      break;
    }
    start = t;
  }
  return out;
}

}  // namespace pri

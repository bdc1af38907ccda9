#pragma once

#include "pristream/inference.hpp"

#include <deque>

namespace pri {

/// Online estimation session. The global factors are fitted over a bounded
/// window of recent pulses; statistics of pulses pushed out of the window are
/// frozen into `prior`, so the evicted posterior acts as the prior for the
/// rest of the stream.
struct StreamingSession {
  HyperParams hp;
  FitOptions options;
  GlobalPrior prior;
  VariationalPosterior posterior;
  std::deque<double> window;  // microseconds
  ModelEstimate estimate;
  int last_iterations = 0;
  bool born_last_step = false;

  int window_size() const { return static_cast<int>(window.size()); }
};

/// Cold DPMM-seeded fit on the initial batch.
StreamingSession start_stream(const PulseSequence& initial_batch, const HyperParams& hp,
                              const FitOptions& options, std::uint64_t rng_seed);

/// Appends one pulse and re-runs coordinate ascent from the previous
/// posterior. A pulse that no occupied state explains (beyond
/// options.birth_sigma) is assigned to an unused state before the sweep.
const ModelEstimate& streaming_update(StreamingSession& session, double pulse);

}  // namespace pri

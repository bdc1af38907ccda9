#include "pristream/pipeline.hpp"
#include "pristream/simulator.hpp"

#include <doctest.h>

using namespace pri;

TEST_CASE("a single work mode raises few alarms") {
  const auto s = detection_defaults();
  auto scenario = preset("d1_staggered", 41);
  scenario.segments[0].second = 600;
  const auto seq = compose_scenario(scenario);
  DetectorConfig cfg = s.detector;
  const auto r = run_pipeline(seq, s.hp, cfg, s.fit, 5);
  CHECK(r.alarms.size() <= 1);
  CHECK(r.trace.size() == seq.size());
}

TEST_CASE("pipeline detects a level change and is deterministic") {
  const auto s = detection_defaults();
  ScenarioSpec scenario;
  scenario.segments = {{ModulationSpec::staggered({100, 110, 115}), 150},
                       {ModulationSpec::staggered({60, 80, 100, 110}), 150}};
  scenario.rng_seed = 3;
  const auto seq = compose_scenario(scenario);
  const auto a = run_pipeline(seq, s.hp, s.detector, s.fit, 11);
  const auto b = run_pipeline(seq, s.hp, s.detector, s.fit, 11);
  CHECK(a.alarms == b.alarms);
  REQUIRE_FALSE(a.alarms.empty());
  CHECK(a.alarms.front() >= 150);
  CHECK(a.alarms.front() <= 170);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) CHECK(a.trace[i].D == b.trace[i].D);
}

TEST_CASE("FSS alarms fall on window boundaries after each restart") {
  auto s = detection_defaults();
  s.detector.mode = DetectorMode::Fss;
  const auto seq = compose_scenario(preset("d2", 9));
  const auto r = run_pipeline(seq, s.hp, s.detector, s.fit, 2);
  REQUIRE(r.restarts.size() >= r.alarms.size());
  for (std::size_t i = 0; i < r.alarms.size(); ++i) {
    const int monitored = r.alarms[i] - (r.restarts[i] + s.detector.init_batch) + 1;
    CHECK(monitored % s.detector.fss_m == 0);
  }
}

TEST_CASE("pipeline input checks") {
  const auto s = detection_defaults();
  PulseSequence tiny;
  tiny.values = {100, 110, 115};
  CHECK_THROWS_AS(run_pipeline(tiny, s.hp, s.detector, s.fit, 1), DataError);
}

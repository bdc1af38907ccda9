#include "pristream/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

using namespace pri;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pristream_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("sequence CSV and sidecar round trip") {
  const auto dir = scratch_dir("csv");
  const auto spec = preset("d2", 17, 0.05);
  const auto seq = compose_scenario(spec);
  const auto csv = dir / "d2.csv";
  write_sequence_csv(csv, seq);
  write_sidecar(sidecar_path(csv), seq, spec);

  auto back = read_sequence_csv(csv);
  read_sidecar(sidecar_path(csv), back);
  REQUIRE(back.size() == seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) CHECK(back.values[i] == seq.values[i]);
  CHECK(back.truth_states == seq.truth_states);
  CHECK(back.truth_flags == seq.truth_flags);
  CHECK(back.change_points == seq.change_points);

  const auto side = read_json_file(sidecar_path(csv));
  const auto respec = scenario_from_json(side.at("scenario"));
  CHECK(compose_scenario(respec).values == seq.values);
}

TEST_CASE("header-less and multi-column inputs") {
  const auto dir = scratch_dir("raw");
  {
    std::ofstream f(dir / "plain.csv");
    f << "100.5\n110\n115.25\n";
  }
  const auto plain = read_sequence_csv(dir / "plain.csv");
  CHECK(plain.values == std::vector<double>{100.5, 110, 115.25});
  CHECK_FALSE(plain.has_truth_states());

  {
    std::ofstream f(dir / "bad.csv");
    f << "t,value\n0,100\n1,abc\n";
  }
  CHECK_THROWS_AS(read_sequence_csv(dir / "bad.csv"), DataError);
  CHECK_THROWS_AS(read_sequence_csv(dir / "missing.csv"), DataError);
}

TEST_CASE("magnitude quantization") {
  const std::vector<std::vector<double>> rows{{3, 4}, {0, 0}, {6, 8}, {0, 10}};
  const auto q = quantize_magnitude(rows, 2);
  CHECK(q == std::vector<double>{2, 1, 2, 2});
  const auto q4 = quantize_magnitude(rows, 4);
  CHECK(q4 == std::vector<double>{3, 1, 4, 4});
  CHECK_THROWS_AS(quantize_magnitude(rows, 0), ConfigError);
}

TEST_CASE("posterior JSON round trip") {
  const auto seq = compose_scenario(preset("d1_staggered", 2));
  PulseSequence batch;
  batch.values.assign(seq.values.begin(), seq.values.begin() + 200);
  FitOptions opt;
  opt.truncation = 8;
  const auto r = fit(batch, HyperParams{}, opt, nullptr, 3);
  const json j = posterior_to_json(r.posterior, &r.estimate);
  const auto back = posterior_from_json(json::parse(j.dump()));
  REQUIRE(back.truncation() == r.posterior.truncation());
  CHECK(back.scaling.center == r.posterior.scaling.center);
  CHECK(back.scaling.scale == r.posterior.scaling.scale);
  for (int l = 0; l < back.truncation(); ++l) {
    CHECK(back.gg[l].xi == r.posterior.gg[l].xi);
    CHECK(back.gg[l].b == r.posterior.gg[l].b);
    CHECK(back.trans_sticks[l].eta1 == r.posterior.trans_sticks[l].eta1);
  }
  CHECK(back.init_sticks.eta2 == r.posterior.init_sticks.eta2);
  CHECK_THROWS_AS(posterior_from_json(json::parse("{\"gg\": 3}")), DataError);
}

TEST_CASE("alarm log delays and non-finite numbers") {
  const auto dir = scratch_dir("alarms");
  write_alarm_log(dir / "alarms.csv", {12, 152, 460}, {150, 300, 450});
  std::ifstream f(dir / "alarms.csv");
  std::string header, a, b, c;
  std::getline(f, header);
  std::getline(f, a);
  std::getline(f, b);
  std::getline(f, c);
  CHECK(header == "index,segment,delay");
  CHECK(a == "12,0,12");
  CHECK(b == "152,1,2");
  CHECK(c == "460,3,10");
  CHECK(number_or_null(std::numeric_limits<double>::infinity()).is_null());
  CHECK(number_or_null(2.5) == 2.5);
}

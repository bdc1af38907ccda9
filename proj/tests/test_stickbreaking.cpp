#include "pristream/model.hpp"
#include "pristream/stickbreaking.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

using namespace pri;

namespace {

double mean_first_fraction(double alpha, double kappa, std::optional<int> self, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += sample_sticks(alpha, kappa, self, 10, rng)(0);
  return total / n;
}

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

StickPosterior random_posterior(int L, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.01, 50.0);
  StickPosterior sp{Eigen::VectorXd(L), Eigen::VectorXd(L)};
  for (int i = 0; i < L; ++i) {
    sp.eta1(i) = u(rng);
    sp.eta2(i) = u(rng);
  }
  return sp;
}

}  // namespace

TEST_CASE("expected_log_sticks examples") {
  const auto uniform = StickPosterior::prior(6, 1.0);
  const auto e = expected_log_sticks(uniform);
  for (int i = 0; i < 6; ++i) {
    CHECK(e.log_v(i) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(e.log_one_minus_v(i) == doctest::Approx(-1.0).epsilon(1e-12));
  }
  StickPosterior sp{Eigen::VectorXd::Constant(1, 2.0), Eigen::VectorXd::Constant(1, 1.0)};
  CHECK(expected_log_sticks(sp).log_v(0) == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("expected_log_sticks is non-positive and below the log mean") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto sp = random_posterior(8, rng);
    const auto e = expected_log_sticks(sp);
    for (int i = 0; i < 8; ++i) {
      CHECK(e.log_v(i) <= 0.0);
      CHECK(e.log_one_minus_v(i) <= 0.0);
      CHECK(std::exp(e.log_v(i)) <= sp.eta1(i) / (sp.eta1(i) + sp.eta2(i)) + 1e-15);
    }
  }
}

TEST_CASE("expected_weights examples") {
  const Eigen::VectorXd w = expected_weights(StickPosterior::prior(5, 1.0));
  CHECK(w(0) == doctest::Approx(0.5));
  CHECK(w(1) == doctest::Approx(0.25));
  CHECK(w(2) == doctest::Approx(0.125));
  CHECK(w(3) == doctest::Approx(0.0625));
  CHECK(w(4) == doctest::Approx(0.0625));

  CHECK(expected_weights(StickPosterior::prior(1, 3.0))(0) == 1.0);

  StickPosterior sp = StickPosterior::prior(4, 1.0);
  sp.eta1(0) = 1000.0;
  CHECK(expected_weights(sp)(0) >= 0.999);
}

TEST_CASE("weights sum to one within 1e-12") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    const int L = 1 + trial % 40;
    const auto sp = random_posterior(L, rng);
    const Eigen::VectorXd w = expected_weights(sp);
    CHECK((w.array() >= 0.0).all());
    CHECK(std::abs(w.sum() - 1.0) <= 1e-12);

    const Eigen::VectorXd s = sample_sticks(0.5 + trial % 7, trial % 5, trial % L, L, rng);
    CHECK((s.array() >= 0.0).all());
    CHECK(std::abs(s.sum() - 1.0) <= 1e-12);

    const Eigen::VectorXd p = sample_from_posterior(sp, rng);
    CHECK(std::abs(p.sum() - 1.0) <= 1e-12);
  }
}

TEST_CASE("expected log weights are consistent with Jensen") {
  std::mt19937_64 rng(3);
  const auto sp = random_posterior(12, rng);
  const Eigen::VectorXd lw = expected_log_weights(sp);
  const Eigen::VectorXd w = expected_weights(sp);
  for (int i = 0; i < 12; ++i) CHECK(std::exp(lw(i)) <= w(i) + 1e-15);
}

TEST_CASE("sample_sticks limits and Monte Carlo means") {
  CHECK(sample_sticks(1e-6, 0.0, std::nullopt, 10, 1)(0) > 0.99);
  CHECK(mean_first_fraction(1.0, 0.0, std::nullopt, 10000, 21) == doctest::Approx(0.5).epsilon(0.02));
  CHECK(mean_first_fraction(1.0, 5.0, 0, 10000, 22) == doctest::Approx(1.0 / 7.0).epsilon(0.03));
}

TEST_CASE("kappa = 0 with a self index matches the standard construction") {
  const int n = 10000;
  std::vector<double> with_self, standard;
  std::mt19937_64 a(100), b(200);
  for (int i = 0; i < n; ++i) {
    with_self.push_back(sample_sticks(1.0, 0.0, 0, 10, a)(0));
    standard.push_back(sample_sticks(1.0, 0.0, std::nullopt, 10, b)(0));
  }
  // Critical value at p = 0.01 for equal sample sizes.
  CHECK(ks_statistic(with_self, standard) < 1.628 * std::sqrt(2.0 / n));
}

TEST_CASE("self-transition fraction shrinks as kappa grows") {
  double prev = 1.0;
  for (double kappa : {0.0, 1.0, 5.0, 20.0}) {
    const double m = mean_first_fraction(1.0, kappa, 0, 10000, 40);
    CHECK(m < prev);
    prev = m;
  }
}

TEST_CASE("prior sticks carry kappa on the diagonal only") {
  const auto plain = StickPosterior::prior(6, 1.5);
  const auto agile = StickPosterior::prior(6, 1.5, 0.5, 2);
  CHECK(agile.eta1 == plain.eta1);
  for (int i = 0; i < 6; ++i) CHECK(agile.eta2(i) - plain.eta2(i) == doctest::Approx(i == 2 ? 0.5 : 0.0));
  CHECK(stick_kl(plain, plain) == doctest::Approx(0.0));
}

TEST_CASE("normalized kappa mapping") {
  CHECK(kappa_from_normalized(0.0, 1.0) == 0.0);
  CHECK(kappa_from_normalized(1.0, 2.5) == doctest::Approx(2.5));
  CHECK(kappa_from_normalized(0.5, 1.0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(kappa_from_normalized(-1.0, 1.0), ConfigError);
}

TEST_CASE("invalid stick posteriors are rejected") {
  StickPosterior sp{Eigen::VectorXd::Ones(3), Eigen::VectorXd::Ones(2)};
  CHECK_THROWS_AS(sp.validate(), DomainError);
  CHECK_THROWS_AS(StickPosterior::prior(0, 1.0), DomainError);
  CHECK_THROWS_AS(sample_sticks(1.0, 0.0, 5, 3, 1), DomainError);
}

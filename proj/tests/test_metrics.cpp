#include "pristream/forward_backward.hpp"
#include "pristream/metrics.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

using namespace pri;

namespace {

// Minimum mismatch over every injective relabeling of the predicted labels.
double exhaustive_hamming(const std::vector<int>& pred, const std::vector<int>& truth, int labels) {
  std::vector<int> perm(labels);
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t best = pred.size();
  do {
    std::size_t wrong = 0;
    for (std::size_t n = 0; n < pred.size(); ++n) wrong += perm[pred[n]] != truth[n];
    best = std::min(best, wrong);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / pred.size();
}

DetectionOutcome outcome(std::vector<int> truth, std::vector<int> alarms, int horizon = 600, int window = 20) {
  DetectionOutcome o;
  o.true_points = std::move(truth);
  o.alarms = std::move(alarms);
  o.horizon = horizon;
  o.match_window = window;
  return o;
}

}  // namespace

TEST_CASE("delta_k") {
  CHECK(delta_k(5, 5) == 0);
  CHECK(delta_k(3, 5) == -2);
  CHECK_THROWS_AS(delta_k(0, 5), DomainError);
}

TEST_CASE("hamming examples") {
  const std::vector<int> truth{0, 0, 1, 1, 2, 2, 0, 1, 2, 0};
  CHECK(hamming_munkres(truth, truth) == 0.0);
  std::vector<int> relabeled;
  for (int l : truth) relabeled.push_back((l + 1) % 3 + 7);
  CHECK(hamming_munkres(relabeled, truth) == 0.0);
  auto one_off = truth;
  one_off[4] = 0;
  CHECK(hamming_munkres(one_off, truth) == doctest::Approx(0.1));
  CHECK_THROWS_AS(hamming_munkres({0, 1}, {0}), DomainError);
}

TEST_CASE("hamming agrees with exhaustive relabeling and is permutation invariant") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const int labels = 1 + trial % 4;
    std::uniform_int_distribution<int> pick(0, labels - 1);
    const int n = 5 + trial % 40;
    std::vector<int> pred(n), truth(n);
    for (int i = 0; i < n; ++i) {
      pred[i] = pick(rng);
      truth[i] = pick(rng);
    }
    const double h = hamming_munkres(pred, truth);
    CHECK(h == doctest::Approx(exhaustive_hamming(pred, truth, labels)));

    std::vector<int> perm(labels);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> pp(n), pt(n);
    for (int i = 0; i < n; ++i) {
      pp[i] = perm[pred[i]] + 3;
      pt[i] = perm[truth[i]] * 5;
    }
    CHECK(hamming_munkres(pp, truth) == doctest::Approx(h));
    CHECK(hamming_munkres(pred, pt) == doctest::Approx(h));
    CHECK(h >= 0.0);
    CHECK(h <= 1.0);
  }
}

TEST_CASE("F1 and alarm matching") {
  CHECK(f1(outcome({150, 300, 450}, {150, 300, 450})) == 1.0);
  CHECK(f1(outcome({150, 300}, {})) == 0.0);
  CHECK(f1(outcome({}, {})) == 1.0);
  // One late alarm outside the window: one FN and one FP.
  CHECK(f1(outcome({150, 300}, {151, 330})) == doctest::Approx(1.0 / 2.0));
  // Two alarms near one truth: only one matches.
  const auto m = match_alarms(outcome({150}, {152, 149}));
  REQUIRE(m.pairs.size() == 1);
  CHECK(m.pairs[0].second == 149);
  CHECK(m.false_alarms == std::vector<int>{152});
  CHECK_THROWS_AS(match_alarms(outcome({150}, {700})), DataError);
}

TEST_CASE("F1 equals one exactly when matching is bijective") {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> pos(0, 599);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> truth, alarms;
    for (int i = 0; i < 3; ++i) truth.push_back(pos(rng));
    for (int i = 0; i < 1 + trial % 5; ++i) alarms.push_back(pos(rng));
    const auto o = outcome(truth, alarms, 600, 30);
    const auto m = match_alarms(o);
    const double f = f1(o);
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
    CHECK((f == 1.0) == (m.false_alarms.empty() && m.missed.empty()));
  }
}

TEST_CASE("timing metrics") {
  const auto exact = timing_metrics(outcome({150, 300, 450}, {150, 300, 450}));
  REQUIRE(exact.mdd.has_value());
  CHECK(*exact.mdd == 0.0);
  CHECK(exact.mr == 0.0);
  CHECK(std::isinf(exact.mt2fa));

  const auto one_fa = timing_metrics(outcome({150}, {152, 70}, 150 + 150));
  CHECK(*one_fa.mdd == doctest::Approx(2.0));
  CHECK(one_fa.fp == 1);
  CHECK(one_fa.mt2fa == doctest::Approx(300.0));
  CHECK(one_fa.far == doctest::Approx(1.0 / 300.0));

  const auto none = timing_metrics(outcome({150, 300}, {}));
  CHECK_FALSE(none.mdd.has_value());
  CHECK(none.mr == 1.0);
}

TEST_CASE("aggregation equals recomputation from per-run records") {
  std::vector<DetectionOutcome> runs{outcome({150, 300, 450}, {151, 302, 450}),
                                     outcome({150, 300, 450}, {150, 200, 455}),
                                     outcome({150, 300, 450}, {})};
  const auto a = aggregate(runs);
  CHECK(a.n_runs == 3);
  CHECK(a.tp == 5);
  CHECK(a.fp == 1);
  CHECK(a.fn == 4);
  CHECK(*a.mdd == doctest::Approx((1 + 2 + 0 + 0 + 5) / 5.0));
  CHECK(a.mt2fa == doctest::Approx(1800.0));
  CHECK(a.f1 == doctest::Approx((f1(runs[0]) + f1(runs[1]) + f1(runs[2])) / 3.0));
  CHECK(a.mr == doctest::Approx(4.0 / 9.0));
}

TEST_CASE("Viterbi and MAP decoders") {
  WorkMode wm = cyclic_work_mode({100, 110, 115}, 0.0);
  PulseSequence s;
  std::vector<int> truth;
  for (int t = 0; t < 30; ++t) {
    truth.push_back(t % 3);
    s.values.push_back(wm.components[t % 3].mean);
  }
  CHECK(decode_viterbi(s, wm) == truth);
  CHECK(decode_map(s, wm) == truth);

  // Brute-force best path for small chains.
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 30; ++trial) {
    const int K = 1 + trial % 3;
    const int T = 1 + trial % 8;
    WorkMode w;
    for (int k = 0; k < K; ++k) w.components.push_back({10.0 + 2.0 * k, 1.0 + k});
    w.transition.resize(K, K);
    w.initial.resize(K);
    for (int i = 0; i < K; ++i) {
      w.initial(i) = u(rng);
      for (int j = 0; j < K; ++j) w.transition(i, j) = u(rng);
      w.transition.row(i) /= w.transition.row(i).sum();
    }
    w.initial /= w.initial.sum();
    PulseSequence b;
    for (int t = 0; t < T; ++t) b.values.push_back(11.0 + 2.0 * n01(rng));

    long paths = 1;
    for (int t = 0; t < T; ++t) paths *= K;
    double best = -std::numeric_limits<double>::infinity();
    std::vector<int> arg;
    for (long p = 0; p < paths; ++p) {
      std::vector<int> path(T);
      long c = p;
      for (int t = 0; t < T; ++t) {
        path[t] = static_cast<int>(c % K);
        c /= K;
      }
      double lp = std::log(w.initial(path[0])) + log_emission(b.values[0], w.components[path[0]]);
      for (int t = 1; t < T; ++t)
        lp += std::log(w.transition(path[t - 1], path[t])) + log_emission(b.values[t], w.components[path[t]]);
      if (lp > best) {
        best = lp;
        arg = path;
      }
    }
    CHECK(decode_viterbi(b, w) == arg);
  }
}

TEST_CASE("class error counts the confusion matrix directly") {
  const std::vector<int> truth{0, 0, 0, 1, 1, 0, 1, 0};
  const std::vector<int> pred{0, 1, 0, 1, 0, 0, 1, 1};
  CHECK(class_error(pred, truth, 0) == doctest::Approx(2.0 / 5.0));
  CHECK(class_error(pred, truth, 1) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("error lower bound") {
  // Well separated: the swap term reduces to Q(x / sqrt 2), so the bound is
  // close to sigma_s / (mu_s sqrt(pi)) and vanishes linearly in sigma.
  for (double sigma : {1e-3, 1e-2}) {
    const auto r = error_lower_bound(3.0, sigma, 1.5, sigma);
    CHECK(r.converged);
    CHECK(r.value == doctest::Approx(sigma / (1.5 * std::sqrt(std::acos(-1.0)))).epsilon(1e-3));
  }
  double prev = 0.0;
  for (double sigma : {1e-3, 1e-2, 5e-2, 1e-1, 0.15}) {
    const auto r = error_lower_bound(3.0, sigma, 1.5, sigma);
    CHECK(r.converged);
    CHECK(r.value > prev);
    CHECK(r.value <= 1.0);
    prev = r.value;
  }
  CHECK_FALSE(error_lower_bound(3.0, 1.0, 1.5, 1.0).converged);
  CHECK_THROWS_AS(error_lower_bound(3.0, 0.0, 1.5, 0.1), DomainError);
}

TEST_CASE("quadrature is stable under refinement") {
  auto f = [](double x) { return std::exp(-x * x) * std::cos(3.0 * x); };
  const auto coarse = integrate(f, -6.0, 6.0, 1e-6);
  const auto fine = integrate(f, -6.0, 6.0, 1e-12);
  const double exact = std::sqrt(std::acos(-1.0)) * std::exp(-9.0 / 4.0);
  CHECK(fine.value == doctest::Approx(exact).epsilon(1e-12));
  CHECK(std::abs(coarse.value - fine.value) < 1e-4);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "samtr/rng.hpp"
#include "samtr/sampling.hpp"
#include "testutil.hpp"

using namespace samtr;
using testutil::expect_code;

TEST_CASE("optimal probabilities: hand-derived examples") {
  {
    Vector d(3);
    d << 1.0, 2.0, 3.0;
    const ProbabilityVector pv = optimal_probabilities(d, 1);
    CHECK(pv.b == 1);
    CHECK(pv.pi[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
    CHECK(pv.pi[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(pv.pi[2] == doctest::Approx(1.0 / 2.0).epsilon(1e-14));
    CHECK(pv.pi.sum() == doctest::Approx(1.0).epsilon(1e-14));
  }
  {
    // The large entry saturates at one and the rest split the leftover mass.
    Vector d(3);
    d << 1.0, 1.0, 10.0;
    const ProbabilityVector pv = optimal_probabilities(d, 2);
    CHECK(pv.pi[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(pv.pi[1] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(pv.pi[2] == 1.0);
  }
  {
    // All-zero discrepancies carry no signal: uniform fallback.
    const ProbabilityVector pv = optimal_probabilities(Vector::Zero(5), 2);
    for (int j = 0; j < 5; ++j)
      CHECK(pv.pi[j] == doctest::Approx(0.4).epsilon(1e-15));
  }
  {
    // Zero entries are floored, not dropped: they keep a positive sliver so
    // the importance weights downstream stay finite.
    Vector d(3);
    d << 0.0, 1.0, 1.0;
    const ProbabilityVector pv = optimal_probabilities(d, 1);
    CHECK(pv.pi[0] > 0.0);
    CHECK(pv.pi[0] < 1e-11);
    CHECK(pv.pi[1] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(pv.pi[2] == doctest::Approx(0.5).epsilon(1e-10));
  }
  {
    // b = p pins everything.
    Vector d(4);
    d << 1.0, 2.0, 3.0, 4.0;
    const ProbabilityVector pv = optimal_probabilities(d, 4);
    for (int j = 0; j < 4; ++j) CHECK(pv.pi[j] == 1.0);
  }
}

TEST_CASE("optimal probabilities: input validation") {
  Vector d(3);
  d << 1.0, -0.5, 2.0;
  expect_code([&] { optimal_probabilities(d, 1); },
              ErrorCode::invalid_argument);
  Vector ok = Vector::Ones(3);
  expect_code([&] { optimal_probabilities(ok, 0); }, ErrorCode::invalid_batch);
  expect_code([&] { optimal_probabilities(ok, 4); }, ErrorCode::invalid_batch);
  expect_code([&] { optimal_probabilities(Vector(0), 1); },
              ErrorCode::invalid_argument);
}

TEST_CASE("optimal probabilities: KKT conditions on random instances") {
  std::mt19937_64 eng(101);
  std::uniform_int_distribution<int> psize(2, 10);
  for (int rep = 0; rep < 60; ++rep) {
    const int p = psize(eng);
    const int b = 1 + static_cast<int>(eng() % static_cast<unsigned>(p));
    Vector d = oracle::random_vector(eng, p, 0.0, 3.0);
    if (rep % 5 == 0) d[static_cast<int>(eng() % p)] = 0.0;
    const ProbabilityVector pv = optimal_probabilities(d, b);

    CHECK(pv.pi.sum() == doctest::Approx(double(b)).epsilon(1e-12));
    for (int j = 0; j < p; ++j) {
      CHECK(pv.pi[j] > 0.0);
      CHECK(pv.pi[j] <= 1.0);
    }

    // Stationarity: the floored d_j / pi_j ratio is shared by all interior
    // coordinates, and saturated coordinates dominate it.
    const double dmax = d.maxCoeff();
    const Vector df = d.cwiseMax(std::max(1e-12 * dmax, 1e-300));
    double nu = -1.0;
    for (int j = 0; j < p; ++j)
      if (pv.pi[j] < 1.0) nu = std::max(nu, df[j] / pv.pi[j]);
    for (int j = 0; j < p; ++j) {
      if (pv.pi[j] < 1.0) {
        CHECK(df[j] / pv.pi[j] == doctest::Approx(nu).epsilon(1e-9));
      } else if (nu > 0.0) {
        CHECK(df[j] >= nu * (1.0 - 1e-9));
      }
    }

    // Local optimality of the variance objective V = sum d^2 (1-pi)/pi under
    // mass transfers between two interior coordinates.
    auto variance = [&](const Vector& pi) {
      double v = 0.0;
      for (int j = 0; j < p; ++j) v += df[j] * df[j] * (1.0 - pi[j]) / pi[j];
      return v;
    };
    const double v0 = variance(pv.pi);
    for (int t = 0; t < 10; ++t) {
      const int a = static_cast<int>(eng() % p);
      const int c = static_cast<int>(eng() % p);
      if (a == c) continue;
      const double eps = 1e-4 * std::min({pv.pi[a], pv.pi[c],
                                          1.0 - pv.pi[a], 1.0 - pv.pi[c]});
      if (eps <= 0.0) continue;
      Vector tweak = pv.pi;
      tweak[a] += eps;
      tweak[c] -= eps;
      CHECK(variance(tweak) >= v0 - 1e-10 * (1.0 + std::abs(v0)));
    }
  }
}

TEST_CASE("exact inclusion probabilities match full enumeration") {
  std::mt19937_64 eng(202);
  for (int rep = 0; rep < 40; ++rep) {
    const int p = 1 + static_cast<int>(eng() % 10);
    Vector q = oracle::random_vector(eng, p, 0.0, 1.0);
    int npinned = 0;
    if (rep % 3 == 0 && p >= 2) {
      q[0] = 1.0;  // exactly certain
      npinned = 1;
    }
    if (rep % 4 == 0) q[p - 1] = 0.0;  // exactly impossible
    const int navail =
        static_cast<int>((q.array() > 0.0).count());
    if (navail == 0) continue;
    const int b =
        npinned + static_cast<int>(eng() % static_cast<unsigned>(
                                       navail - npinned + 1));
    const Vector psi = inclusion_probabilities_exact(q, b);
    const auto ref = oracle::cps_enumerate(q, b);
    for (int j = 0; j < p; ++j)
      CHECK(psi[j] == doctest::Approx(ref.inclusion[j]).epsilon(1e-11));
  }
}

TEST_CASE("exact inclusion probabilities: validation") {
  Vector q(3);
  q << 0.5, 1.5, 0.2;
  expect_code([&] { inclusion_probabilities_exact(q, 1); },
              ErrorCode::invalid_argument);
  Vector ok(3);
  ok << 0.5, 0.5, 0.2;
  expect_code([&] { inclusion_probabilities_exact(ok, 4); },
              ErrorCode::invalid_batch);
  Vector pinned(3);
  pinned << 1.0, 1.0, 0.5;
  expect_code([&] { inclusion_probabilities_exact(pinned, 1); },
              ErrorCode::invalid_batch);
}

TEST_CASE("sampler calibration reproduces the target probabilities") {
  std::mt19937_64 eng(303);
  for (int rep = 0; rep < 40; ++rep) {
    const int p = 2 + static_cast<int>(eng() % 9);
    const int b = 1 + static_cast<int>(eng() % static_cast<unsigned>(p - 1));
    const Vector d = oracle::random_vector(eng, p, 0.2, 3.0);
    const ProbabilityVector pv = optimal_probabilities(d, b);
    const CpsSampler sampler(pv);

    // Two independent routes to the realized inclusion probabilities: the
    // library's ESP tables and brute-force enumeration of all size-b sets.
    const Vector psi = inclusion_probabilities_exact(sampler.working(), b);
    const auto ref = oracle::cps_enumerate(sampler.working(), b);
    for (int j = 0; j < p; ++j) {
      CHECK(psi[j] == doctest::Approx(pv.pi[j]).epsilon(1e-10));
      CHECK(ref.inclusion[j] == doctest::Approx(pv.pi[j]).epsilon(1e-10));
    }
  }
}

TEST_CASE("sampler respects pinned and dropped entries") {
  {
    Vector pi(3);
    pi << 1.0, 0.5, 0.5;
    ProbabilityVector pv{pi, 2};
    CpsSampler sampler(pv);
    RngStream rng(11, "pin-check");
    for (int t = 0; t < 200; ++t) {
      const SampleDraw s = sampler.draw(rng);
      REQUIRE(s.indices.size() == 2);
      CHECK(s.contains(0));
      CHECK(std::is_sorted(s.indices.begin(), s.indices.end()));
    }
  }
  {
    // An entry at 1e-16 is numerically never sampled; its mass is noise.
    Vector pi(4);
    pi << 1e-16, 1.0, 0.6, 0.4;
    ProbabilityVector pv{pi, 2};
    CpsSampler sampler(pv);
    RngStream rng(12, "drop-check");
    for (int t = 0; t < 200; ++t) {
      const SampleDraw s = sampler.draw(rng);
      REQUIRE(s.indices.size() == 2);
      CHECK(!s.contains(0));
      CHECK(s.contains(1));
    }
  }
  {
    // b = p: everything pinned, the draw is the full index set.
    ProbabilityVector pv{Vector::Ones(4), 4};
    CpsSampler sampler(pv);
    RngStream rng(13, "all-check");
    const SampleDraw s = sampler.draw(rng);
    REQUIRE(s.indices.size() == 4);
    for (int j = 0; j < 4; ++j) CHECK(s.indices[j] == j);
  }
}

TEST_CASE("draw frequencies match the enumerated subset distribution") {
  Vector d(6);
  d << 0.3, 1.0, 2.2, 0.7, 1.5, 0.4;
  const ProbabilityVector pv = optimal_probabilities(d, 2);
  const CpsSampler sampler(pv);
  const auto ref = oracle::cps_enumerate(sampler.working(), 2);

  std::map<std::pair<int, int>, double> refprob;
  for (std::size_t s = 0; s < ref.sets.size(); ++s)
    refprob[{ref.sets[s][0], ref.sets[s][1]}] = ref.prob[s];

  const int n = 200000;
  std::map<std::pair<int, int>, int> count;
  Vector incl = Vector::Zero(6);
  RngStream rng(99, "freq-check");
  for (int t = 0; t < n; ++t) {
    const SampleDraw s = sampler.draw(rng);
    REQUIRE(s.indices.size() == 2);
    count[{s.indices[0], s.indices[1]}]++;
    for (int j : s.indices) incl[j] += 1.0;
  }
  for (const auto& [key, prob] : refprob) {
    const double freq = count[key] / double(n);
    const double sigma = std::sqrt(prob * (1.0 - prob) / n);
    CHECK(std::abs(freq - prob) <= 4.5 * std::max(sigma, 1e-12));
  }
  for (int j = 0; j < 6; ++j) {
    const double freq = incl[j] / n;
    const double sigma = std::sqrt(pv.pi[j] * (1.0 - pv.pi[j]) / n);
    CHECK(std::abs(freq - pv.pi[j]) <= 4.5 * std::max(sigma, 1e-12));
  }
}

TEST_CASE("sequential and rejection samplers agree in distribution") {
  Vector d(5);
  d << 1.0, 0.5, 2.0, 0.8, 1.2;
  const ProbabilityVector pv = optimal_probabilities(d, 2);
  const CpsSampler sampler(pv);
  const auto ref = oracle::cps_enumerate(sampler.working(), 2);

  std::map<std::pair<int, int>, double> refprob;
  for (std::size_t s = 0; s < ref.sets.size(); ++s)
    refprob[{ref.sets[s][0], ref.sets[s][1]}] = ref.prob[s];

  const int n = 60000;
  RngStream rng(7, "rejection-check");
  std::map<std::pair<int, int>, int> count;
  for (int t = 0; t < n; ++t) {
    const SampleDraw s = sampler.draw_rejection(rng);
    REQUIRE(s.indices.size() == 2);
    count[{s.indices[0], s.indices[1]}]++;
  }
  for (const auto& [key, prob] : refprob) {
    const double freq = count[key] / double(n);
    const double sigma = std::sqrt(prob * (1.0 - prob) / n);
    CHECK(std::abs(freq - prob) <= 5.0 * std::max(sigma, 1e-12));
  }
}

TEST_CASE("convenience wrapper draws like a fresh sampler") {
  Vector d(4);
  d << 1.0, 2.0, 0.5, 1.5;
  const ProbabilityVector pv = optimal_probabilities(d, 2);
  RngStream rng_a(42, "wrapper-check");
  RngStream rng_b(42, "wrapper-check");
  const SampleDraw via_wrapper = conditional_poisson_sample(pv, rng_a);
  const SampleDraw via_sampler = CpsSampler(pv).draw(rng_b);
  CHECK(via_wrapper.indices == via_sampler.indices);
}

TEST_CASE("probability vector validation catches malformed input") {
  expect_code(
      [] {
        ProbabilityVector pv{Vector::Constant(3, 0.5), 2};  // sums to 1.5
        pv.validate();
      },
      ErrorCode::invalid_batch);
  expect_code(
      [] {
        Vector pi(3);
        pi << 0.0, 0.5, 0.5;  // zero entry
        ProbabilityVector pv{pi, 1};
        pv.validate();
      },
      ErrorCode::invalid_batch);
  expect_code(
      [] {
        Vector pi(3);
        pi << 1.2, 0.5, 0.3;  // above one
        ProbabilityVector pv{pi, 2};
        pv.validate();
      },
      ErrorCode::invalid_batch);
  expect_code(
      [] {
        ProbabilityVector pv{Vector::Ones(2), 3};  // b > p
        pv.validate();
      },
      ErrorCode::invalid_batch);
}

TEST_CASE("SampleDraw::contains uses the sorted index list") {
  SampleDraw s;
  s.indices = {1, 4, 7};
  CHECK(s.contains(1));
  CHECK(s.contains(4));
  CHECK(s.contains(7));
  CHECK(!s.contains(0));
  CHECK(!s.contains(5));
}

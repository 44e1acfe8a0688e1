#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "samtr/quadmodel.hpp"
#include "testutil.hpp"

using namespace samtr;

namespace {

// Truth quadratic in global coordinates: q(x) = q0 + gg'x + 0.5 x'HH x.
struct TruthQuadratic {
  double q0 = 0.0;
  Vector gg;
  Matrix hh;

  double operator()(const Vector& x) const {
    return q0 + gg.dot(x) + 0.5 * x.dot(hh * x);
  }
  QuadraticModel as_model_at(const Vector& c) const {
    QuadraticModel m;
    m.center = c;
    m.bias = (*this)(c);
    m.gradient = gg + hh * c;
    m.hessian = hh;
    return m;
  }
};

TruthQuadratic random_truth(std::mt19937_64& eng, int dim) {
  TruthQuadratic t;
  t.q0 = oracle::random_vector(eng, 1, -2.0, 2.0)[0];
  t.gg = oracle::random_vector(eng, dim, -2.0, 2.0);
  t.hh = oracle::random_symmetric(eng, dim, 2.0);
  return t;
}

}  // namespace

TEST_CASE("model evaluation and gradient on a hand example") {
  QuadraticModel m;
  m.center = Vector(2);
  m.center << 1.0, -1.0;
  m.bias = 2.0;
  m.gradient = Vector(2);
  m.gradient << 3.0, 4.0;
  m.hessian = Matrix(2, 2);
  m.hessian << 2.0, 1.0, 1.0, 5.0;

  Vector x(2);
  x << 2.0, 0.0;  // displacement (1, 1)
  CHECK(m.eval(x) == doctest::Approx(13.5).epsilon(1e-15));
  const Vector g = m.grad(x);
  CHECK(g[0] == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(g[1] == doctest::Approx(10.0).epsilon(1e-15));

  const QuadraticModel z = QuadraticModel::zero(m.center);
  CHECK(z.eval(x) == 0.0);
  CHECK(z.grad(x).norm() == 0.0);
}

TEST_CASE("model difference is exact at random points") {
  std::mt19937_64 eng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const int dim = 1 + static_cast<int>(eng() % 5);
    const QuadraticModel a =
        oracle::random_model(eng, dim, oracle::random_vector(eng, dim, -1, 1));
    const QuadraticModel b =
        oracle::random_model(eng, dim, oracle::random_vector(eng, dim, -1, 1));
    const QuadraticModel d = model_difference(a, b);
    for (int t = 0; t < 10; ++t) {
      const Vector x = oracle::random_vector(eng, dim, -2, 2);
      const double want = a.eval(x) - b.eval(x);
      CHECK(d.eval(x) == doctest::Approx(want).epsilon(1e-10));
      CHECK((d.grad(x) - (a.grad(x) - b.grad(x))).norm() <=
            1e-10 * (1.0 + a.grad(x).norm() + b.grad(x).norm()));
    }
  }
}

TEST_CASE("interpolation history stores points bit-exactly") {
  InterpolationHistory h;
  Vector x(2);
  x << 0.25, -0.5;
  h.add(x, 1.0);
  h.add(x, 2.0);  // exact duplicate ignored
  CHECK(h.size() == 1);
  CHECK(h.values[0] == 1.0);

  Vector y = x;
  y[0] += 1e-9;  // distinct double: a separate record
  h.add(y, 3.0);
  CHECK(h.size() == 2);
  CHECK(h.find(x) == 0);
  CHECK(h.find(y) == 1);
  Vector z(2);
  z << 7.0, 7.0;
  CHECK(h.find(z) == -1);
}

TEST_CASE("fresh update spends dim+1 evaluations and fits min-Frobenius") {
  std::mt19937_64 eng(22);
  const int dim = 3;
  const TruthQuadratic truth = random_truth(eng, dim);
  const Vector c0 = oracle::random_vector(eng, dim, -1, 1);

  InterpolationHistory hist;
  int calls = 0;
  const ModelUpdate up = update_model(hist, c0, 0.5, [&](const Vector& x) {
    ++calls;
    return truth(x);
  });
  CHECK(up.n_new_evals == dim + 1);
  CHECK(calls == dim + 1);
  CHECK(hist.size() == static_cast<std::size_t>(dim + 1));
  REQUIRE(up.model.interp_points.size() == static_cast<std::size_t>(dim + 1));
  CHECK((up.model.interp_points[0] - c0).norm() == 0.0);

  // The fit interpolates its active set ...
  for (const Vector& pt : up.model.interp_points)
    CHECK(up.model.eval(pt) ==
          doctest::Approx(truth(pt)).epsilon(1e-9).scale(1.0));

  // ... and matches the dense minimum-Frobenius reference on that set.
  std::vector<Vector> disp;
  Vector vals(static_cast<int>(up.model.interp_points.size()));
  for (std::size_t i = 0; i < up.model.interp_points.size(); ++i) {
    disp.push_back(up.model.interp_points[i] - c0);
    const int at = hist.find(up.model.interp_points[i]);
    REQUIRE(at >= 0);
    vals[static_cast<int>(i)] = hist.values[at];
  }
  const oracle::MinFrobFit ref =
      oracle::min_frobenius_reference(disp, vals, dim);
  CHECK(up.model.bias == doctest::Approx(ref.bias).epsilon(1e-8));
  CHECK((up.model.gradient - ref.gradient).norm() <= 1e-7);
  CHECK((up.model.hessian - ref.hessian).norm() <= 1e-7);
}

TEST_CASE("repeated updates on a quadratic recover it exactly") {
  std::mt19937_64 eng(33);
  for (int dim = 2; dim <= 4; ++dim) {
    const TruthQuadratic truth = random_truth(eng, dim);
    InterpolationHistory hist;
    Vector c = Vector::Zero(dim);
    const double radius = 0.4;
    QuadraticModel model;
    for (int t = 0; t < 10; ++t) {
      const ModelUpdate up =
          update_model(hist, c, radius, [&](const Vector& x) { return truth(x); });
      CHECK(up.n_new_evals <= dim + 1);
      model = up.model;
      Vector step = oracle::random_vector(eng, dim, -1, 1);
      step *= 0.35 / step.norm();
      c += step;
    }
    // Compare against the truth recentered at the final model center.
    const QuadraticModel want = truth.as_model_at(model.center);
    const QuadraticModel diff = model_difference(model, want);
    const double err =
        max_abs_quadratic_on_ball(diff, model.center, radius);
    CHECK(err <= 1e-8 * (1.0 + std::abs(want.bias)));
    CHECK((model.hessian - want.hessian).norm() <= 1e-7);
  }
}

TEST_CASE("a lone far point is admitted when it witnesses curvature") {
  // Stiff quadratic whose y-curvature is only visible from one distant
  // history point plus one fresh axis point: the parabola through the three
  // on-axis values forces the fitted H_yy.
  const auto truth = [](const Vector& x) {
    return x[0] * x[0] + 100.0 * x[1] * x[1];
  };
  InterpolationHistory hist;
  auto put = [&](double a, double b) {
    Vector x(2);
    x << a, b;
    hist.add(x, truth(x));
  };
  put(0.0, 0.0);
  put(0.05, 0.0);
  put(0.12, 0.0);
  put(-0.08, 0.0);
  put(0.15, 0.0);
  put(0.0, 3.0);  // the far witness

  int calls = 0;
  const Vector c0 = Vector::Zero(2);
  const ModelUpdate up = update_model(hist, c0, 0.1, [&](const Vector& x) {
    ++calls;
    return truth(x);
  });
  CHECK(calls == 1);  // only the fresh y-axis completion

  bool kept_far = false;
  for (const Vector& pt : up.model.interp_points)
    if (std::abs(pt[1] - 3.0) < 1e-12) kept_far = true;
  CHECK(kept_far);

  CHECK(up.model.hessian(1, 1) == doctest::Approx(200.0).epsilon(1e-6));
  CHECK(up.model.hessian(0, 0) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(std::abs(up.model.hessian(0, 1)) <= 1e-6);
}

TEST_CASE("microscopic duplicates cannot crowd out informative points") {
  std::mt19937_64 eng(44);
  const TruthQuadratic truth = random_truth(eng, 2);
  InterpolationHistory hist;
  const Vector c0 = Vector::Zero(2);
  hist.add(c0, truth(c0));
  // A cloud of numerically useless near-duplicates of the center ...
  for (int t = 0; t < 40; ++t) {
    Vector u = oracle::random_vector(eng, 2, -1, 1);
    u *= 1e-8 / u.norm();
    hist.add(u, truth(u));
  }
  // ... plus a handful of well-spread points carrying the real geometry.
  const double good[5][2] = {
      {1.0, 0.0}, {0.0, 1.0}, {0.7, 0.7}, {-0.8, 0.3}, {0.4, -0.9}};
  for (const auto& g : good) {
    Vector x(2);
    x << g[0], g[1];
    hist.add(x, truth(x));
  }

  int calls = 0;
  const ModelUpdate up = update_model(hist, c0, 1.0, [&](const Vector& x) {
    ++calls;
    return truth(x);
  });
  CHECK(calls == 0);  // geometry is already covered by history
  for (const Vector& pt : up.model.interp_points) {
    const double r = pt.norm();
    CHECK((r == 0.0 || r >= 0.5));  // no microscopic point selected
  }
  const QuadraticModel want = truth.as_model_at(c0);
  CHECK((up.model.hessian - want.hessian).norm() <= 1e-6);
  CHECK((up.model.gradient - want.gradient).norm() <= 1e-7);
}

TEST_CASE("trust-region solver matches the bisection reference") {
  std::mt19937_64 eng(55);
  for (int rep = 0; rep < 300; ++rep) {
    const int dim = 1 + static_cast<int>(eng() % 6);
    Vector g = oracle::random_vector(eng, dim, -2, 2);
    Matrix h = oracle::random_symmetric(eng, dim, 2.0);
    const double radius = 0.2 + 2.0 * (eng() % 1000) / 1000.0;
    switch (rep % 5) {
      case 1:  // positive definite with an interior solution
        h = h * h.transpose() + Matrix::Identity(dim, dim);
        g *= 0.05;
        break;
      case 2:  // near the hard case: g orthogonal to the bottom eigenvector
      {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
        g -= eig.eigenvectors().col(0).dot(g) * eig.eigenvectors().col(0);
        break;
      }
      case 3:  // pure linear model
        h.setZero();
        break;
      case 4:  // no gradient signal
        g.setZero();
        break;
      default: break;
    }

    const TrSolution sol = solve_tr_subproblem(g, h, radius);
    const oracle::TrReference ref = oracle::tr_reference(g, h, radius);

    CHECK(sol.step.norm() <= radius * (1.0 + 1e-10));
    CHECK(sol.value ==
          doctest::Approx(g.dot(sol.step) + 0.5 * sol.step.dot(h * sol.step))
              .epsilon(1e-10)
              .scale(1.0 + std::abs(sol.value)));
    CHECK(std::abs(sol.value - ref.value) <=
          1e-9 * (1.0 + std::abs(ref.value)));

    // KKT certificate: interior solutions are stationary; boundary solutions
    // satisfy (H + sigma I) s = -g with sigma >= 0.
    const double scale = 1.0 + g.norm() + h.norm();
    if (sol.step.norm() < radius * (1.0 - 1e-7)) {
      CHECK((h * sol.step + g).norm() <= 1e-7 * scale);
    } else if (sol.step.norm() > 0.0) {
      const double sigma =
          -(h * sol.step + g).dot(sol.step) / sol.step.squaredNorm();
      CHECK(sigma >= -1e-8 * scale);
      CHECK((h * sol.step + g + sigma * sol.step).norm() <= 1e-6 * scale);
    }
  }
}

TEST_CASE("trust-region solver: hand-checked interior and hard cases") {
  {
    Matrix h = Matrix::Identity(2, 2);
    Vector g(2);
    g << 0.3, 0.4;
    const TrSolution sol = solve_tr_subproblem(g, h, 1.0);
    CHECK(sol.step[0] == doctest::Approx(-0.3).epsilon(1e-12));
    CHECK(sol.step[1] == doctest::Approx(-0.4).epsilon(1e-12));
    CHECK(sol.value == doctest::Approx(-0.125).epsilon(1e-12));
  }
  {
    // Hard case: the gradient has no component along the bottom eigenvector.
    Matrix h(2, 2);
    h << -2.0, 0.0, 0.0, 1.0;
    Vector g(2);
    g << 0.0, 1.0;
    const TrSolution sol = solve_tr_subproblem(g, h, 1.0);
    CHECK(sol.value == doctest::Approx(-7.0 / 6.0).epsilon(1e-10));
    CHECK(std::abs(sol.step[0]) ==
          doctest::Approx(std::sqrt(8.0) / 3.0).epsilon(1e-8));
    CHECK(sol.step[1] == doctest::Approx(-1.0 / 3.0).epsilon(1e-8));
  }
  {
    // Pure linear: full step against the gradient.
    Vector g(3);
    g << 1.0, 2.0, -2.0;
    const TrSolution sol = solve_tr_subproblem(g, Matrix::Zero(3, 3), 0.5);
    CHECK(sol.value == doctest::Approx(-0.5 * 3.0).epsilon(1e-12));
    CHECK((sol.step + 0.5 * g / 3.0).norm() <= 1e-10);
  }
  {
    // Degenerate everything: stay put.
    const TrSolution sol =
        solve_tr_subproblem(Vector::Zero(2), Matrix::Zero(2, 2), 1.0);
    CHECK(sol.value == 0.0);
    CHECK(sol.step.norm() == 0.0);
  }
}

TEST_CASE("bounded trust-region steps are feasible and descend") {
  std::mt19937_64 eng(66);
  for (int rep = 0; rep < 100; ++rep) {
    const int dim = 1 + static_cast<int>(eng() % 5);
    const Vector g = oracle::random_vector(eng, dim, -2, 2);
    const Matrix h = oracle::random_symmetric(eng, dim, 2.0);
    const double radius = 0.5 + (eng() % 1000) / 1000.0;
    const Vector lo = oracle::random_vector(eng, dim, -radius, -0.01);
    const Vector hi = oracle::random_vector(eng, dim, 0.01, radius);

    const TrSolution sol = solve_tr_subproblem(g, h, radius, lo, hi);
    CHECK(sol.step.norm() <= radius * (1.0 + 1e-10));
    for (int i = 0; i < dim; ++i) {
      CHECK(sol.step[i] >= lo[i] - 1e-12);
      CHECK(sol.step[i] <= hi[i] + 1e-12);
    }
    CHECK(sol.value <= 1e-14);
    CHECK(sol.value ==
          doctest::Approx(g.dot(sol.step) + 0.5 * sol.step.dot(h * sol.step))
              .epsilon(1e-10)
              .scale(1.0 + std::abs(sol.value)));

    // At least as good as the best projected gradient point on a fine grid.
    double best = 0.0;
    for (int t = 1; t <= 400; ++t) {
      Vector s = -g * (t * 0.005 * radius / std::max(g.norm(), 1e-12));
      for (int i = 0; i < dim; ++i) s[i] = std::clamp(s[i], lo[i], hi[i]);
      if (s.norm() > radius) s *= radius / s.norm();
      for (int i = 0; i < dim; ++i) s[i] = std::clamp(s[i], lo[i], hi[i]);
      best = std::min(best, g.dot(s) + 0.5 * s.dot(h * s));
    }
    CHECK(sol.value <= best + 1e-9 * (1.0 + std::abs(best)));

    // The ball optimum bounds any box-constrained value from below.
    const oracle::TrReference ref = oracle::tr_reference(g, h, radius);
    CHECK(sol.value >= ref.value - 1e-9 * (1.0 + std::abs(ref.value)));
  }
}

TEST_CASE("a wide box reduces to the ball solution") {
  std::mt19937_64 eng(77);
  for (int rep = 0; rep < 40; ++rep) {
    const int dim = 1 + static_cast<int>(eng() % 4);
    const Vector g = oracle::random_vector(eng, dim, -2, 2);
    Matrix h = oracle::random_symmetric(eng, dim, 1.5);
    h = h * h.transpose() + 0.5 * Matrix::Identity(dim, dim);  // convex case
    const double radius = 1.0;
    const Vector lo = Vector::Constant(dim, -10.0);
    const Vector hi = Vector::Constant(dim, 10.0);
    const TrSolution box = solve_tr_subproblem(g, h, radius, lo, hi);
    const TrSolution ball = solve_tr_subproblem(g, h, radius);
    CHECK(std::abs(box.value - ball.value) <=
          1e-6 * (1.0 + std::abs(ball.value)));
  }
}

TEST_CASE("ball extrema agree with the trust-region reference") {
  std::mt19937_64 eng(88);
  for (int rep = 0; rep < 100; ++rep) {
    const int dim = 1 + static_cast<int>(eng() % 5);
    const QuadraticModel q =
        oracle::random_model(eng, dim, oracle::random_vector(eng, dim, -1, 1));
    const Vector center = oracle::random_vector(eng, dim, -1, 1);
    const double radius = 0.3 + (eng() % 1000) / 1000.0;

    const double base = q.eval(center);
    const Vector geff = q.grad(center);
    const double vmin =
        base + oracle::tr_reference(geff, q.hessian, radius).value;
    const double vmax =
        base - oracle::tr_reference(-geff, Matrix(-q.hessian), radius).value;

    const BallExtrema ex = quadratic_ball_extrema(q, center, radius);
    const double scale = 1.0 + std::abs(vmin) + std::abs(vmax);
    CHECK(std::abs(ex.min_value - vmin) <= 1e-9 * scale);
    CHECK(std::abs(ex.max_value - vmax) <= 1e-9 * scale);
    CHECK((ex.arg_min - center).norm() <= radius * (1.0 + 1e-9));
    CHECK((ex.arg_max - center).norm() <= radius * (1.0 + 1e-9));
    CHECK(q.eval(ex.arg_min) == doctest::Approx(ex.min_value)
                                    .epsilon(1e-10)
                                    .scale(scale));
    CHECK(q.eval(ex.arg_max) == doctest::Approx(ex.max_value)
                                    .epsilon(1e-10)
                                    .scale(scale));

    const double mabs = max_abs_quadratic_on_ball(q, center, radius);
    CHECK(mabs == doctest::Approx(std::max(std::abs(vmin), std::abs(vmax)))
                      .epsilon(1e-9)
                      .scale(scale));
  }
}

TEST_CASE("ball maximum dominates a dense planar scan") {
  std::mt19937_64 eng(99);
  for (int rep = 0; rep < 5; ++rep) {
    const QuadraticModel q =
        oracle::random_model(eng, 2, oracle::random_vector(eng, 2, -1, 1));
    const Vector center = oracle::random_vector(eng, 2, -1, 1);
    const double radius = 0.8;
    const double mabs = max_abs_quadratic_on_ball(q, center, radius);

    double scan = std::abs(q.eval(center));
    for (int a = 0; a < 4096; ++a) {
      const double th = 2.0 * M_PI * a / 4096;
      for (double r : {0.25 * radius, 0.5 * radius, 0.75 * radius, radius}) {
        Vector x = center;
        x[0] += r * std::cos(th);
        x[1] += r * std::sin(th);
        scan = std::max(scan, std::abs(q.eval(x)));
      }
    }
    CHECK(mabs >= scan - 1e-9);
    CHECK(mabs <= scan + 0.02 * (1.0 + scan));
  }
}

TEST_CASE("model discrepancy over the ball: sum kind is exact") {
  std::mt19937_64 eng(111);
  for (int rep = 0; rep < 30; ++rep) {
    const int dim = 1 + static_cast<int>(eng() % 4);
    const QuadraticModel a =
        oracle::random_model(eng, dim, oracle::random_vector(eng, dim, -1, 1));
    const QuadraticModel b =
        oracle::random_model(eng, dim, oracle::random_vector(eng, dim, -1, 1));
    const Vector center = oracle::random_vector(eng, dim, -1, 1);
    const double radius = 0.5 + (eng() % 1000) / 2000.0;

    const double d = model_discrepancy_ball(a, b, center, radius, HKind::Sum);
    const QuadraticModel diff = model_difference(a, b);
    const double want = max_abs_quadratic_on_ball(diff, center, radius);
    CHECK(d == doctest::Approx(want).epsilon(1e-10).scale(1.0 + want));

    // Exact maximization grows with the ball.
    const double d2 =
        model_discrepancy_ball(a, b, center, 2.0 * radius, HKind::Sum);
    CHECK(d2 >= d - 1e-12 * (1.0 + d));
  }
}

TEST_CASE("model discrepancy over the ball: square kind") {
  std::mt19937_64 eng(122);
  for (int rep = 0; rep < 30; ++rep) {
    const int dim = 1 + static_cast<int>(eng() % 4);
    const Vector center = oracle::random_vector(eng, dim, -1, 1);
    const QuadraticModel a = oracle::random_model(eng, dim, center);
    const QuadraticModel b = oracle::random_model(eng, dim, center);
    const double radius = 0.6;

    const double d =
        model_discrepancy_ball(a, b, center, radius, HKind::SumOfSquares);
    // Sandwich: at least the center value, at most the exact product bound.
    const double at_center =
        std::abs(a.eval(center) * a.eval(center) -
                 b.eval(center) * b.eval(center));
    CHECK(d >= at_center - 1e-10 * (1.0 + at_center));
    const QuadraticModel diff = model_difference(a, b);
    QuadraticModel sum = model_difference(a, b);
    sum.bias = a.eval(a.center) + b.eval(a.center);
    sum.gradient = a.gradient + b.grad(a.center);
    sum.hessian = a.hessian + b.hessian;
    const double bound = max_abs_quadratic_on_ball(diff, center, radius) *
                         max_abs_quadratic_on_ball(sum, center, radius);
    CHECK(d <= bound * (1.0 + 1e-9) + 1e-12);

    // Identical models never disagree.
    CHECK(model_discrepancy_ball(a, a, center, radius, HKind::SumOfSquares) ==
          0.0);
  }
  {
    // Against the zero model the supremum of f^2 is attained where |f| peaks,
    // so the reported value is exactly the squared exact maximum.
    std::mt19937_64 eng2(123);
    for (int rep = 0; rep < 10; ++rep) {
      const QuadraticModel f =
          oracle::random_model(eng2, 3, oracle::random_vector(eng2, 3, -1, 1));
      const Vector center = oracle::random_vector(eng2, 3, -1, 1);
      const QuadraticModel zero = QuadraticModel::zero(center);
      const double d =
          model_discrepancy_ball(f, zero, center, 0.7, HKind::SumOfSquares);
      const double m = max_abs_quadratic_on_ball(f, center, 0.7);
      CHECK(d == doctest::Approx(m * m).epsilon(1e-9).scale(1.0 + m * m));
    }
  }
}

TEST_CASE("model discrepancy on explicit points is a direct maximum") {
  std::mt19937_64 eng(133);
  for (int rep = 0; rep < 20; ++rep) {
    const int dim = 2;
    const QuadraticModel a =
        oracle::random_model(eng, dim, oracle::random_vector(eng, dim, -1, 1));
    const QuadraticModel b =
        oracle::random_model(eng, dim, oracle::random_vector(eng, dim, -1, 1));
    std::vector<Vector> pts;
    for (int t = 0; t < 7; ++t)
      pts.push_back(oracle::random_vector(eng, dim, -2, 2));

    double want_sum = 0.0, want_sq = 0.0;
    for (const Vector& x : pts) {
      const double fa = a.eval(x), fb = b.eval(x);
      want_sum = std::max(want_sum, std::abs(fa - fb));
      want_sq = std::max(want_sq, std::abs(fa * fa - fb * fb));
    }
    CHECK(model_discrepancy_points(a, b, pts, HKind::Sum) ==
          doctest::Approx(want_sum).epsilon(1e-12).scale(1.0 + want_sum));
    CHECK(model_discrepancy_points(a, b, pts, HKind::SumOfSquares) ==
          doctest::Approx(want_sq).epsilon(1e-12).scale(1.0 + want_sq));
  }
}

TEST_CASE("hessian spectral bound") {
  {
    std::mt19937_64 eng(144);
    // Known spectrum under a random rotation.
    Matrix a = oracle::random_symmetric(eng, 3, 1.0);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
    const Matrix q = eig.eigenvectors();
    Vector lam(3);
    lam << 3.0, -7.0, 1.0;
    const Matrix h = q * lam.asDiagonal() * q.transpose();
    CHECK(hessian_spectral_bound(h) == doctest::Approx(7.0).epsilon(1e-10));
  }
  CHECK(hessian_spectral_bound(Matrix::Zero(4, 4)) == 0.0);
  {
    // Non-symmetric input is symmetrized first.
    Matrix h(2, 2);
    h << 0.0, 2.0, 0.0, 0.0;
    CHECK(hessian_spectral_bound(h) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

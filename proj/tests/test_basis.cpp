#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "dlim/basis.hpp"
#include "dlim/error.hpp"
#include "dlim/rng.hpp"

using namespace dlim;

namespace {

// Independent Cox-de Boor oracle: naive recursive definition of one
// B-spline basis function over a knot vector.
double naive_bspline(int i, int deg, double x, const Eigen::VectorXd& kn) {
  if (deg == 0) return (kn[i] <= x && x < kn[i + 1]) ? 1.0 : 0.0;
  double a = 0.0, b = 0.0;
  if (kn[i + deg] > kn[i])
    a = (x - kn[i]) / (kn[i + deg] - kn[i]) * naive_bspline(i, deg - 1, x, kn);
  if (kn[i + deg + 1] > kn[i + 1])
    b = (kn[i + deg + 1] - x) / (kn[i + deg + 1] - kn[i + 1]) *
        naive_bspline(i + 1, deg - 1, x, kn);
  return a + b;
}

// Largest eigenvalue of a symmetric PSD matrix by power iteration.
double power_eig(const Eigen::MatrixXd& S) {
  // start vector with energy in every eigenspace (constants are in the
  // difference-penalty null space, so Ones would converge to zero)
  Eigen::VectorXd v(S.rows());
  for (int i = 0; i < S.rows(); ++i) v[i] = std::cos(1.7 * (i + 1));
  v.normalize();
  double lam = 0.0;
  for (int it = 0; it < 5000; ++it) {
    Eigen::VectorXd w = S * v;
    lam = w.norm();
    if (lam == 0.0) return 0.0;
    w /= lam;
    if ((w - v).norm() < 1e-14) return lam;
    v = w;
  }
  return lam;
}

}  // namespace

TEST_CASE("bspline rows match the recursive Cox-de Boor oracle") {
  Rng rng(41);
  for (int rep = 0; rep < 5; ++rep) {
    BasisSpec spec{BasisKind::BSpline, 6 + rep, 3, {0.0, 2.0},
                   rep % 2 ? BsplineBoundary::Uniform : BsplineBoundary::Clamped};
    Eigen::VectorXd pts(40);
    for (int i = 0; i < 40; ++i) pts[i] = rng.uniform(0.0, 2.0 - 1e-9);
    BasisMatrix bm = bspline_basis(pts, spec);
    for (int i = 0; i < 40; ++i) {
      for (int k = 0; k < spec.size; ++k) {
        double ref = naive_bspline(k, spec.degree, pts[i], bm.knots);
        CHECK(std::abs(bm.values(i, k) - ref) < 1e-12);
      }
    }
  }
}

TEST_CASE("clamped boundary rows are unit vectors") {
  Eigen::VectorXd pts(2);
  pts << 0.0, 1.0;
  BasisSpec spec{BasisKind::BSpline, 7, 3, {0.0, 1.0}, BsplineBoundary::Clamped};
  BasisMatrix bm = bspline_basis(pts, spec);
  CHECK(bm.values(0, 0) == doctest::Approx(1.0));
  CHECK(bm.values.row(0).tail(6).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK(bm.values(1, 6) == doctest::Approx(1.0));
  CHECK(bm.values.row(1).head(6).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("partition of unity at 1000 random points") {
  Rng rng(7);
  Eigen::VectorXd pts(1000);
  for (int i = 0; i < 1000; ++i) pts[i] = rng.uniform(-1.0, 3.0);
  for (auto boundary : {BsplineBoundary::Clamped, BsplineBoundary::Uniform}) {
    BasisSpec spec{BasisKind::BSpline, 9, 3, {-1.0, 3.0}, boundary};
    BasisMatrix bm = bspline_basis(pts, spec);
    Eigen::VectorXd sums = bm.values.rowwise().sum();
    CHECK((sums.array() - 1.0).abs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("point outside the domain is rejected") {
  Eigen::VectorXd pts(1);
  pts << 1.5;
  BasisSpec spec{BasisKind::BSpline, 5, 3, {0.0, 1.0}};
  CHECK_THROWS_AS(bspline_basis(pts, spec), DomainError);
}

TEST_CASE("cr basis is cardinal at its knots") {
  Rng rng(11);
  Eigen::VectorXd pts(200);
  for (int i = 0; i < 200; ++i) pts[i] = rng.uniform(0.0, 5.0);
  BasisSpec spec{BasisKind::CR, 6, 3, {0.0, 5.0}};
  auto [bm, pen] = cr_basis(pts, spec);
  Eigen::MatrixXd at_knots = eval_basis(bm.knots, spec, bm.knots);
  CHECK((at_knots - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() <
        1e-10);
  // interpolation is linear in the coefficients and exact at the knots
  Eigen::VectorXd coef(6);
  coef << 1.0, -2.0, 0.5, 3.0, 0.0, 1.5;
  Eigen::VectorXd vals = at_knots * coef;
  CHECK((vals - coef).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("cr penalty matches numerical quadrature of second derivatives") {
  Rng rng(23);
  Eigen::VectorXd pts(300);
  for (int i = 0; i < 300; ++i) pts[i] = rng.uniform(0.0, 1.0);
  BasisSpec spec{BasisKind::CR, 5, 3, {0.0, 1.0}};
  auto [bm, pen] = cr_basis(pts, spec);

  const int K = 5;
  const double lo = bm.knots[0], hi = bm.knots[K - 1];
  const int G = 20001;
  const double h = (hi - lo) / (G - 1);
  Eigen::VectorXd grid(G);
  for (int g = 0; g < G; ++g) grid[g] = lo + g * h;
  Eigen::MatrixXd vals = eval_basis(grid, spec, bm.knots);

  // second derivatives by central differences, trapezoid integration
  Eigen::MatrixXd d2 = Eigen::MatrixXd::Zero(G, K);
  for (int g = 1; g + 1 < G; ++g)
    d2.row(g) = (vals.row(g - 1) - 2.0 * vals.row(g) + vals.row(g + 1)) / (h * h);
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(K, K);
  for (int g = 1; g + 1 < G; ++g) S += h * d2.row(g).transpose() * d2.row(g);
  S /= power_eig(S);

  CHECK((S - pen.S).cwiseAbs().maxCoeff() < 1e-4);
  CHECK(pen.normalized);
}

TEST_CASE("order-2 difference matrix on 4 coefficients") {
  PenaltyMatrix pen = difference_penalty(4, 2, false);
  Eigen::MatrixXd D(2, 4);
  D << 1, -2, 1, 0, 0, 1, -2, 1;
  CHECK((pen.S - D.transpose() * D).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("difference penalty null space and normalization") {
  for (int nu : {4, 7, 12}) {
    for (int d : {1, 2}) {
      PenaltyMatrix pen = difference_penalty(nu, d, true);
      // polynomials in the coefficient index of degree < d are unpenalized
      for (int p = 0; p < d; ++p) {
        Eigen::VectorXd v(nu);
        for (int i = 0; i < nu; ++i) v[i] = std::pow(i + 1.0, p);
        CHECK((pen.S * v).norm() < 1e-10 * v.norm());
      }
      CHECK(power_eig(pen.S) == doctest::Approx(1.0).epsilon(1e-10));
      Eigen::FullPivLU<Eigen::MatrixXd> lu(pen.S);
      lu.setThreshold(1e-10);
      CHECK(lu.rank() == nu - d);
      CHECK((pen.S - pen.S.transpose()).cwiseAbs().maxCoeff() < 1e-14);
    }
  }
}

TEST_CASE("poly basis columns") {
  Eigen::VectorXd pts(3);
  pts << -1.0, 0.5, 2.0;
  BasisSpec spec{BasisKind::Poly, 3, 2, {-1.0, 2.0}};
  BasisMatrix bm = poly_basis(pts, spec);
  for (int i = 0; i < 3; ++i) {
    CHECK(bm.values(i, 0) == doctest::Approx(1.0));
    CHECK(bm.values(i, 1) == doctest::Approx(pts[i]));
    CHECK(bm.values(i, 2) == doctest::Approx(pts[i] * pts[i]));
  }
}

TEST_CASE("eval_basis reproduces the build-time values") {
  Rng rng(3);
  Eigen::VectorXd pts(50);
  for (int i = 0; i < 50; ++i) pts[i] = rng.uniform(0.0, 1.0);
  BasisSpec spec{BasisKind::BSpline, 8, 3, {0.0, 1.0}, BsplineBoundary::Uniform};
  BasisMatrix bm = bspline_basis(pts, spec);
  Eigen::MatrixXd again = eval_basis(pts, spec, bm.knots);
  CHECK((again - bm.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("basis construction is deterministic") {
  Rng a(99), b(99);
  Eigen::VectorXd p1(100), p2(100);
  for (int i = 0; i < 100; ++i) p1[i] = a.uniform();
  for (int i = 0; i < 100; ++i) p2[i] = b.uniform();
  BasisSpec spec{BasisKind::CR, 7, 3, {0.0, 1.0}};
  auto [m1, s1] = cr_basis(p1, spec);
  auto [m2, s2] = cr_basis(p2, spec);
  CHECK((m1.values - m2.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK((s1.S - s2.S).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("invalid specs are rejected") {
  Eigen::VectorXd pts = Eigen::VectorXd::LinSpaced(10, 0.0, 1.0);
  CHECK_THROWS_AS(
      bspline_basis(pts, BasisSpec{BasisKind::BSpline, 3, 3, {0.0, 1.0}}),
      SpecError);
  CHECK_THROWS_AS(
      bspline_basis(pts, BasisSpec{BasisKind::BSpline, 5, 3, {1.0, 0.0}}),
      SpecError);
  CHECK_THROWS_AS(difference_penalty(4, 4, true), SpecError);
}

#include "dlim/basis.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "dlim/error.hpp"

namespace dlim {

namespace {

// Linearly interpolated empirical quantile (type 7) of a sorted vector.
double quantile_sorted(const std::vector<double>& v, double p) {
  const double h = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Eigen::VectorXd bspline_knots(const BasisSpec& spec) {
  const int nu = spec.size, deg = spec.degree;
  Eigen::VectorXd knots(nu + deg + 1);
  if (spec.boundary == BsplineBoundary::Uniform) {
    const double h = (spec.domain.hi - spec.domain.lo) / (nu - deg);
    for (int i = 0; i < knots.size(); ++i)
      knots[i] = spec.domain.lo + h * (i - deg);
  } else {
    const int n_int = nu - deg - 1;
    const double h = (spec.domain.hi - spec.domain.lo) / (n_int + 1);
    for (int i = 0; i <= deg; ++i) knots[i] = spec.domain.lo;
    for (int i = 0; i < n_int; ++i) knots[deg + 1 + i] = spec.domain.lo + h * (i + 1);
    for (int i = 0; i <= deg; ++i) knots[nu + i] = spec.domain.hi;
  }
  return knots;
}

// One row of B-spline basis values at x (de Boor recursion, all nonzero
// functions in the span of x).
Eigen::RowVectorXd bspline_row(double x, const Eigen::VectorXd& knots, int nu,
                               int deg) {
  Eigen::RowVectorXd row(nu);
  // span k with knots[k] <= x < knots[k+1], clamped to [deg, nu-1]
  int k = deg;
  while (k < nu - 1 && x >= knots[k + 1]) ++k;
  std::vector<double> N(deg + 1, 0.0), left(deg + 1), right(deg + 1);
  N[0] = 1.0;
  for (int r = 1; r <= deg; ++r) {
    left[r] = x - knots[k + 1 - r];
    right[r] = knots[k + r] - x;
    double saved = 0.0;
    for (int i = 0; i < r; ++i) {
      const double temp = N[i] / (right[i + 1] + left[r - i]);
      N[i] = saved + right[i + 1] * temp;
      saved = left[r - i] * temp;
    }
    N[r] = saved;
  }
  row.setZero();
  for (int i = 0; i <= deg; ++i) row[k - deg + i] = N[i];
  return row;
}

// Cardinal natural cubic spline machinery (knots x_1..x_K):
//   D maps knot values to scaled second-difference contrasts,
//   B is the tridiagonal Gram matrix of the second-derivative hat functions,
//   F = B^{-1} D maps knot values to second derivatives at interior knots.
struct CrSystem {
  Eigen::MatrixXd D;  // (K-2) x K
  Eigen::MatrixXd B;  // (K-2) x (K-2)
  Eigen::MatrixXd F;  // (K-2) x K
};

CrSystem cr_system(const Eigen::VectorXd& knots) {
  const int K = static_cast<int>(knots.size());
  Eigen::VectorXd h = knots.tail(K - 1) - knots.head(K - 1);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(K - 2, K);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(K - 2, K - 2);
  for (int j = 0; j < K - 2; ++j) {
    D(j, j) = 1.0 / h[j];
    D(j, j + 1) = -1.0 / h[j] - 1.0 / h[j + 1];
    D(j, j + 2) = 1.0 / h[j + 1];
    B(j, j) = (h[j] + h[j + 1]) / 3.0;
    if (j + 1 < K - 2) {
      B(j, j + 1) = h[j + 1] / 6.0;
      B(j + 1, j) = h[j + 1] / 6.0;
    }
  }
  CrSystem sys;
  sys.F = B.ldlt().solve(D);
  sys.D = std::move(D);
  sys.B = std::move(B);
  return sys;
}

Eigen::MatrixXd cr_values(const Eigen::VectorXd& points, const Eigen::VectorXd& knots) {
  const int K = static_cast<int>(knots.size());
  const CrSystem sys = cr_system(knots);
  const double tol = 1e-9 * (knots[K - 1] - knots[0]);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(points.size(), K);
  for (int i = 0; i < points.size(); ++i) {
    const double x = points[i];
    if (x < knots[0] - tol || x > knots[K - 1] + tol)
      throw DomainError("cr_basis: point " + std::to_string(x) +
                        " outside knot range");
    int j = 0;
    while (j < K - 2 && x > knots[j + 1]) ++j;
    const double hj = knots[j + 1] - knots[j];
    const double am = (knots[j + 1] - x) / hj;
    const double ap = (x - knots[j]) / hj;
    const double cm = (std::pow(knots[j + 1] - x, 3) / hj - hj * (knots[j + 1] - x)) / 6.0;
    const double cp = (std::pow(x - knots[j], 3) / hj - hj * (x - knots[j])) / 6.0;
    out(i, j) += am;
    out(i, j + 1) += ap;
    // second derivatives at interior knots only (natural boundary: zero)
    if (j >= 1) out.row(i) += cm * sys.F.row(j - 1);
    if (j + 1 <= K - 2) out.row(i) += cp * sys.F.row(j);
  }
  return out;
}

void normalize_penalty(Eigen::MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  const double lmax = es.eigenvalues().maxCoeff();
  if (lmax > 0.0) S /= lmax;
}

}  // namespace

void BasisSpec::validate() const {
  if (!(domain.lo < domain.hi))
    throw SpecError("basis domain must satisfy lo < hi");
  switch (kind) {
    case BasisKind::BSpline:
      if (degree < 1) throw SpecError("B-spline degree must be >= 1");
      if (size < degree + 1)
        throw SpecError("B-spline basis needs size >= degree + 1");
      break;
    case BasisKind::CR:
      if (size < 3) throw SpecError("CR basis needs size >= 3");
      break;
    case BasisKind::Poly:
      if (size < 1) throw SpecError("polynomial basis needs size >= 1");
      break;
  }
}

BasisMatrix bspline_basis(const Eigen::VectorXd& points, const BasisSpec& spec) {
  if (spec.kind != BasisKind::BSpline)
    throw SpecError("bspline_basis requires kind = BSpline");
  spec.validate();
  for (int i = 0; i < points.size(); ++i) {
    if (points[i] < spec.domain.lo || points[i] > spec.domain.hi)
      throw DomainError("bspline_basis: point " + std::to_string(points[i]) +
                        " outside domain [" + std::to_string(spec.domain.lo) +
                        ", " + std::to_string(spec.domain.hi) + "]");
  }
  BasisMatrix out;
  out.spec = spec;
  out.points = points;
  out.knots = bspline_knots(spec);
  out.values.resize(points.size(), spec.size);
  for (int i = 0; i < points.size(); ++i)
    out.values.row(i) = bspline_row(points[i], out.knots, spec.size, spec.degree);
  return out;
}

std::pair<BasisMatrix, PenaltyMatrix> cr_basis(const Eigen::VectorXd& points,
                                               const BasisSpec& spec) {
  if (spec.kind != BasisKind::CR) throw SpecError("cr_basis requires kind = CR");
  spec.validate();
  std::vector<double> sorted(points.data(), points.data() + points.size());
  std::sort(sorted.begin(), sorted.end());
  const auto distinct = std::set<double>(sorted.begin(), sorted.end()).size();
  if (static_cast<int>(distinct) < spec.size)
    throw SpecError("cr_basis: fewer distinct points than basis functions");
  Eigen::VectorXd knots(spec.size);
  for (int j = 0; j < spec.size; ++j)
    knots[j] = quantile_sorted(sorted, static_cast<double>(j) / (spec.size - 1));
  for (int j = 1; j < spec.size; ++j)
    if (!(knots[j] > knots[j - 1]))
      throw SpecError("cr_basis: tied quantile knots; reduce basis size");
  BasisMatrix bm;
  bm.spec = spec;
  bm.points = points;
  bm.knots = knots;
  bm.values = cr_values(points, knots);
  return {std::move(bm), cr_penalty(knots)};
}

PenaltyMatrix cr_penalty(const Eigen::VectorXd& knots) {
  const CrSystem sys = cr_system(knots);
  PenaltyMatrix pm;
  pm.S = sys.D.transpose() * sys.F;  // D' B^{-1} D
  pm.S = 0.5 * (pm.S + pm.S.transpose().eval());
  pm.order = PenaltyOrder::Deriv2;
  pm.normalized = true;
  normalize_penalty(pm.S);
  return pm;
}

BasisMatrix poly_basis(const Eigen::VectorXd& points, const BasisSpec& spec) {
  if (spec.kind != BasisKind::Poly)
    throw SpecError("poly_basis requires kind = Poly");
  spec.validate();
  BasisMatrix out;
  out.spec = spec;
  out.points = points;
  out.values.resize(points.size(), spec.size);
  for (int i = 0; i < points.size(); ++i) {
    double v = 1.0;
    for (int j = 0; j < spec.size; ++j) {
      out.values(i, j) = v;
      v *= points[i];
    }
  }
  return out;
}

PenaltyMatrix difference_penalty(int nu, int d, bool normalize) {
  if (d < 1 || nu <= d)
    throw SpecError("difference_penalty requires nu > d >= 1");
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(nu - d, nu);
  // row pattern = d-th forward difference coefficients
  std::vector<double> coef{1.0};
  for (int k = 0; k < d; ++k) {
    std::vector<double> next(coef.size() + 1, 0.0);
    for (std::size_t i = 0; i < coef.size(); ++i) {
      next[i] += coef[i];
      next[i + 1] -= coef[i];
    }
    coef = std::move(next);
  }
  std::reverse(coef.begin(), coef.end());
  for (int r = 0; r < nu - d; ++r)
    for (int j = 0; j <= d; ++j) D(r, r + j) = coef[j];
  PenaltyMatrix pm;
  pm.S = D.transpose() * D;
  pm.order = d == 1 ? PenaltyOrder::Diff1 : PenaltyOrder::Diff2;
  pm.normalized = normalize;
  if (normalize) normalize_penalty(pm.S);
  return pm;
}

Eigen::MatrixXd eval_basis(const Eigen::VectorXd& points, const BasisSpec& spec,
                           const Eigen::VectorXd& knots) {
  switch (spec.kind) {
    case BasisKind::BSpline: {
      for (int i = 0; i < points.size(); ++i)
        if (points[i] < spec.domain.lo || points[i] > spec.domain.hi)
          throw DomainError("eval_basis: point outside B-spline domain");
      Eigen::MatrixXd out(points.size(), spec.size);
      for (int i = 0; i < points.size(); ++i)
        out.row(i) = bspline_row(points[i], knots, spec.size, spec.degree);
      return out;
    }
    case BasisKind::CR:
      return cr_values(points, knots);
    case BasisKind::Poly:
      return poly_basis(points, spec).values;
  }
  throw SpecError("eval_basis: unknown basis kind");
}

}  // namespace dlim

#pragma once

#include <Eigen/Dense>
#include <utility>

namespace dlim {

enum class BasisKind { BSpline, CR, Poly };

/// Boundary-knot convention for B-spline bases. Clamped repeats the boundary
/// knots degree+1 times; Uniform extends equally spaced knots beyond the
/// domain (the P-spline construction, whose difference-penalty null space
/// maps to low-order polynomials in the argument).
enum class BsplineBoundary { Clamped, Uniform };

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

struct BasisSpec {
  BasisKind kind = BasisKind::BSpline;
  int size = 4;  ///< number of basis functions; for Poly, degree + 1
  int degree = 3;
  Interval domain{0.0, 1.0};
  BsplineBoundary boundary = BsplineBoundary::Clamped;

  void validate() const;
};

struct BasisMatrix {
  Eigen::MatrixXd values;  ///< rows = evaluation points, cols = size
  Eigen::VectorXd points;
  BasisSpec spec;
  Eigen::VectorXd knots;
};

enum class PenaltyOrder { Diff1 = 1, Diff2 = 2, Deriv2 };

struct PenaltyMatrix {
  Eigen::MatrixXd S;  ///< symmetric positive semi-definite, size x size
  PenaltyOrder order = PenaltyOrder::Diff2;
  bool normalized = true;
};

/// B-spline basis over the spec domain, evaluated by the de Boor recursion.
/// Knot layout follows spec.boundary. Points must lie inside the domain.
BasisMatrix bspline_basis(const Eigen::VectorXd& points, const BasisSpec& spec);

/// Cardinal natural cubic spline basis (one basis function equals 1 at each
/// knot, 0 at the others) with knots at evenly spaced quantiles of points.
/// The penalty is the integrated squared second derivative, normalized so the
/// largest eigenvalue is 1.
std::pair<BasisMatrix, PenaltyMatrix> cr_basis(const Eigen::VectorXd& points,
                                               const BasisSpec& spec);

/// Columns [1, m, m^2, ...].
BasisMatrix poly_basis(const Eigen::VectorXd& points, const BasisSpec& spec);

/// Order-d difference penalty S = D'D, optionally divided by its largest
/// eigenvalue.
PenaltyMatrix difference_penalty(int nu, int d, bool normalize);

/// Re-evaluate a basis at new points given the knots realized at build time.
Eigen::MatrixXd eval_basis(const Eigen::VectorXd& points, const BasisSpec& spec,
                           const Eigen::VectorXd& knots);

/// CR penalty from an existing knot vector (integrated squared second
/// derivative of the cardinal natural spline interpolant).
PenaltyMatrix cr_penalty(const Eigen::VectorXd& knots);

}  // namespace dlim

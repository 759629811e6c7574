#pragma once

// Internals shared between the fitting machinery and the bootstrap test:
// a model prepared once (design assembled, penalties jointly diagonalized)
// can be refit cheaply against many response vectors.

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "dlim/fit.hpp"

namespace dlim::detail {

struct PreparedModel {
  Family family = Family::Gaussian;
  Eigen::MatrixXd Xt;  ///< [W Z G] * Q, n x p
  Eigen::MatrixXd Q;   ///< orthogonal rotation diagonalizing the penalties
  std::vector<Eigen::VectorXd> pen_diags;  ///< per block, rotated eigenvalues
  std::vector<Eigen::MatrixXd> S_dense;    ///< fallback when diag_ok is false
  bool diag_ok = true;
  int n = 0, p = 0, p_theta = 0, q = 0, n_groups = 0;
  int null_dim = 0;  ///< dimension of the total-penalty null space
  Eigen::MatrixXd A;  ///< Xt' Xt (Gaussian path)
  std::optional<EffectContext> ctx;

  static PreparedModel build(const ModelSpec& spec);

  FittedModel fit(const Eigen::VectorXd& y, const FitOptions& opts = {}) const;

  /// Linear predictor X psi-hat for a model fit from this design.
  Eigen::VectorXd linear_predictor(const FittedModel& fm) const {
    return Xt * (Q.transpose() * fm.coef);
  }
};

}  // namespace dlim::detail

#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "dlim/crossbasis.hpp"

namespace dlim {

enum class Family { Gaussian, Poisson };

struct ModelSpec {
  Family family = Family::Gaussian;
  std::optional<CrossBasis> crossbasis;
  Eigen::MatrixXd Z;  ///< covariates incl. intercept (and m by convention)
  Eigen::VectorXd y;
  std::vector<PenaltyBlock> penalties;  ///< sized p_theta + q
  std::optional<Eigen::VectorXi> groups;  ///< labels 1..N for random intercepts

  int p_theta() const {
    return crossbasis ? static_cast<int>(crossbasis->W.cols()) : 0;
  }
  int q() const { return static_cast<int>(Z.cols()); }
};

struct FitOptions {
  std::optional<Eigen::VectorXd> fixed_lambda;  ///< disables REML selection
  std::optional<Eigen::VectorXd> rho_init;      ///< warm start, skips the grid
  double grad_tol = 2e-5;   ///< on the restricted-likelihood gradient in rho
  int max_opt_iter = 200;
  double irls_tol = 1e-8;
  int irls_max_iter = 100;
  double rho_lo = -8.0, rho_hi = 8.0;
  int grid_points = 5;  ///< per dimension, coarse initialization grid
};

struct FitTraceEntry {
  Eigen::VectorXd rho;
  double criterion;  ///< restricted log-likelihood (or IRLS deviance)
};

/// Transform data carried along so effect estimates can be formed without the
/// original design.
struct EffectContext {
  Eigen::MatrixXd C;  ///< T x nu_time
  BasisSpec mod_spec;
  Eigen::VectorXd mod_knots;
  Eigen::VectorXd modifier;  ///< observed modifier values
};

struct FittedModel {
  Eigen::VectorXd coef;  ///< [theta, gamma, alpha]
  int p_theta = 0, q = 0, n_groups = 0;
  Eigen::VectorXd lambda;  ///< one per penalty block
  Eigen::VectorXd rho;     ///< log lambda
  double phi = 1.0;        ///< scale (sigma^2 for Gaussian, 1 for Poisson)
  Eigen::MatrixXd V;       ///< empirical-Bayes covariance of coef
  double loglik = 0.0;     ///< unpenalized log-likelihood at the fit
  double edf = 0.0;
  double aic = 0.0;  ///< set by fit_unpenalized_aic
  std::vector<FitTraceEntry> trace;
  bool sigma_zero = false;   ///< flagged degenerate sigma^2 = 0 edge
  bool rho_interior = true;  ///< rho-hat strictly inside the search box
  std::optional<EffectContext> ctx;

  Eigen::VectorXd theta() const { return coef.head(p_theta); }
  Eigen::VectorXd gamma() const { return coef.segment(p_theta, q); }
  Eigen::VectorXd alpha() const { return coef.tail(n_groups); }
  Eigen::MatrixXd Vtheta() const { return V.topLeftCorner(p_theta, p_theta); }
};

/// Penalized GLM fit with smoothing parameters selected by restricted
/// marginal likelihood (Gaussian: sigma^2 profiled analytically; Poisson:
/// Laplace approximation around the P-IRLS solution).
FittedModel fit_penalized(const ModelSpec& spec, const FitOptions& opts = {});

struct AicCandidate {
  int nu_time = 4;
  int nu_mod = 4;
};

/// Unpenalized maximum-likelihood fits over a grid of basis dimensions,
/// selecting the AIC minimizer (ties toward fewer coefficients).
FittedModel fit_unpenalized_aic(Family family, const Eigen::MatrixXd& X,
                                const Eigen::VectorXd& m, const Eigen::MatrixXd& Z,
                                const Eigen::VectorXd& y, BasisKind basis_kind,
                                const std::vector<AicCandidate>& df_grid);

/// Random-intercept mixed model: indicator-coded group intercepts with an
/// identity penalty block whose smoothing parameter (phi / sigma_alpha^2) is
/// selected by the same restricted-likelihood machinery.
FittedModel fit_mixed(const ModelSpec& spec, const FitOptions& opts = {});

}  // namespace dlim

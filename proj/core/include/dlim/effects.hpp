#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dlim/fit.hpp"

namespace dlim {

/// Pointwise exposure-time-response estimates beta_t(m) over a (m, t) grid.
struct EffectSurface {
  Eigen::VectorXd m_grid;
  Eigen::MatrixXd estimates;  ///< |m_grid| x T
  Eigen::MatrixXd se;
  double alpha = 0.05;
};

/// Cumulative effect delta(m) = sum_t beta_t(m) over an m grid.
struct CumulativeCurve {
  Eigen::VectorXd m_grid;
  Eigen::VectorXd estimates;
  Eigen::VectorXd se;
  double alpha = 0.05;
};

struct Window {
  double m = 0.0;
  int t_start = 0, t_end = 0;  ///< 1-based inclusive exposure times
  int sign = 0;
};

EffectSurface pointwise_effects(const FittedModel& model,
                                const Eigen::VectorXd& m_grid, double alpha = 0.05);

CumulativeCurve cumulative_effects(const FittedModel& model,
                                   const Eigen::VectorXd& m_grid,
                                   double alpha = 0.05);

/// Maximal consecutive runs of t whose Wald interval excludes 0, per m value.
std::vector<Window> find_windows(const EffectSurface& surface);

/// Default reporting grid: equally spaced points over the central 98% of the
/// observed modifier values.
Eigen::VectorXd default_m_grid(const Eigen::VectorXd& modifier, int points = 25);

/// Standard normal quantile (Acklam's rational approximation refined by one
/// Halley step; |error| < 1e-15).
double normal_quantile(double prob);

}  // namespace dlim

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "dlim/fit.hpp"

namespace dlim {

struct TestResult {
  double observed_stat = 0.0;
  Eigen::VectorXd boot_stats;  ///< length B
  double p_value = 1.0;        ///< #{b : boot_stat_b > observed} / B
  std::string null_label, full_label;
  std::uint64_t seed = 0;
  int dropped = 0;  ///< failed bootstrap replicates

  /// Empirical (1 - alpha) quantile of the bootstrap statistics.
  double critical_value(double alpha) const;
};

/// Bootstrap likelihood-ratio test of a nested model pair. The statistic is
/// 2 * (loglik_full - loglik_null) with unpenalized log-likelihoods evaluated
/// at the penalized fits; smoothing parameters are re-selected within every
/// bootstrap refit. Replicates own RNG streams keyed by (seed, b), so results
/// do not depend on worker count.
TestResult bootstrap_lrt(const ModelSpec& null_spec, const ModelSpec& full_spec,
                         int B, std::uint64_t seed, int workers = 1,
                         const std::string& null_label = "null",
                         const std::string& full_label = "full");

}  // namespace dlim

#include "dlim/modtest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

#include "dlim/error.hpp"
#include "dlim/rng.hpp"
#include "fit_internal.hpp"

namespace dlim {

namespace {

void check_nested(const ModelSpec& null_spec, const ModelSpec& full_spec) {
  if (null_spec.family != full_spec.family)
    throw SpecError("bootstrap_lrt: null and full families differ");
  if (null_spec.y.size() != full_spec.y.size() ||
      (null_spec.y - full_spec.y).lpNorm<Eigen::Infinity>() != 0.0)
    throw SpecError("bootstrap_lrt: null and full responses differ");
  if (null_spec.Z.rows() != full_spec.Z.rows() ||
      null_spec.Z.cols() != full_spec.Z.cols() ||
      (null_spec.Z - full_spec.Z).lpNorm<Eigen::Infinity>() != 0.0)
    throw SpecError("bootstrap_lrt: covariate matrices differ");
  if (full_spec.p_theta() < null_spec.p_theta())
    throw SpecError("bootstrap_lrt: full cross-basis must extend the null's");
}

}  // namespace

double TestResult::critical_value(double alpha) const {
  std::vector<double> v(boot_stats.data(), boot_stats.data() + boot_stats.size());
  std::sort(v.begin(), v.end());
  const double h = (1.0 - alpha) * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

TestResult bootstrap_lrt(const ModelSpec& null_spec, const ModelSpec& full_spec,
                         int B, std::uint64_t seed, int workers,
                         const std::string& null_label,
                         const std::string& full_label) {
  if (B < 100) throw SpecError("bootstrap_lrt requires B >= 100");
  check_nested(null_spec, full_spec);

  const detail::PreparedModel pm_null = detail::PreparedModel::build(null_spec);
  const detail::PreparedModel pm_full = detail::PreparedModel::build(full_spec);

  const FittedModel fit_null = pm_null.fit(null_spec.y);
  const FittedModel fit_full = pm_full.fit(full_spec.y);
  const double observed = 2.0 * (fit_full.loglik - fit_null.loglik);
  if (observed < -1e-6)
    throw NumericError("bootstrap_lrt: negative likelihood-ratio statistic (" +
                       std::to_string(observed) + "); models are not nested");

  const Eigen::VectorXd eta = pm_null.linear_predictor(fit_null);
  const Eigen::VectorXd mu = null_spec.family == Family::Gaussian
                                 ? eta
                                 : eta.array().exp().matrix();
  const Eigen::VectorXd resid = null_spec.y - mu;
  const int n = static_cast<int>(null_spec.y.size());

  // warm starts at the observed optima keep the per-replicate refits cheap;
  // smoothing parameters are still re-selected on every bootstrap sample
  FitOptions warm_null, warm_full;
  if (fit_null.rho.size() > 0) warm_null.rho_init = fit_null.rho;
  if (fit_full.rho.size() > 0) warm_full.rho_init = fit_full.rho;
  warm_null.grad_tol = warm_full.grad_tol = 1e-3;

  Eigen::VectorXd stats(B);
  std::vector<char> failed(B, 0);

  auto run_range = [&](int begin, int step) {
    for (int b = begin; b < B; b += step) {
      Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(b) + 1);
      Eigen::VectorXd ystar(n);
      if (null_spec.family == Family::Gaussian) {
        for (int i = 0; i < n; ++i)
          ystar[i] = mu[i] + resid[static_cast<int>(rng.below(n))];
      } else {
        for (int i = 0; i < n; ++i)
          ystar[i] = static_cast<double>(rng.poisson(std::max(mu[i], 1e-12)));
      }
      try {
        const FittedModel fn = pm_null.fit(ystar, warm_null);
        const FittedModel ff = pm_full.fit(ystar, warm_full);
        stats[b] = 2.0 * (ff.loglik - fn.loglik);
      } catch (const std::exception&) {
        failed[b] = 1;
        stats[b] = 0.0;
      }
    }
  };

  const int nw = std::max(1, std::min(workers, B));
  if (nw == 1) {
    run_range(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nw);
    for (int w = 0; w < nw; ++w) pool.emplace_back(run_range, w, nw);
    for (auto& t : pool) t.join();
  }

  TestResult res;
  res.seed = seed;
  res.null_label = null_label;
  res.full_label = full_label;
  res.observed_stat = observed;
  res.dropped = static_cast<int>(std::count(failed.begin(), failed.end(), 1));
  if (res.dropped > B / 20)
    throw NumericError("bootstrap_lrt: more than 5% of replicates failed (" +
                       std::to_string(res.dropped) + "/" + std::to_string(B) + ")");
  const int kept = B - res.dropped;
  res.boot_stats.resize(kept);
  int j = 0, greater = 0;
  for (int b = 0; b < B; ++b) {
    if (failed[b]) continue;
    res.boot_stats[j++] = stats[b];
    if (stats[b] > observed) ++greater;
  }
  res.p_value = static_cast<double>(greater) / kept;
  return res;
}

}  // namespace dlim

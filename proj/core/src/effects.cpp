#include "dlim/effects.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "dlim/basis.hpp"
#include "dlim/error.hpp"

namespace dlim {

namespace {

const EffectContext& context_of(const FittedModel& model) {
  if (!model.ctx)
    throw SpecError("model carries no cross-basis transform context");
  return *model.ctx;
}

void check_m_domain(const EffectContext& ctx, const Eigen::VectorXd& m_grid) {
  double lo, hi;
  if (ctx.mod_spec.kind == BasisKind::Poly) {
    lo = ctx.modifier.minCoeff();
    hi = ctx.modifier.maxCoeff();
  } else {
    lo = ctx.mod_spec.domain.lo;
    hi = ctx.mod_spec.domain.hi;
  }
  const double slack = 1e-12 * std::max(1.0, std::abs(hi - lo));
  for (int i = 0; i < m_grid.size(); ++i)
    if (m_grid[i] < lo - slack || m_grid[i] > hi + slack)
      throw DomainError("modifier value " + std::to_string(m_grid[i]) +
                        " outside the fitted domain [" + std::to_string(lo) +
                        ", " + std::to_string(hi) + "]; no extrapolation");
}

// M(k,l) = c' Vtheta[block k, block l] c under TIME-FASTEST ordering, i.e. the
// modifier-space covariance of contrasts (e_k (x) c)' theta.
Eigen::MatrixXd contract_time(const Eigen::MatrixXd& Vtheta,
                              const Eigen::VectorXd& c, int nu_time, int nu_mod) {
  Eigen::MatrixXd M(nu_mod, nu_mod);
  for (int k = 0; k < nu_mod; ++k) {
    const Eigen::VectorXd vc = Vtheta.middleCols(k * nu_time, nu_time) * c;
    for (int l = 0; l < nu_mod; ++l) M(l, k) = c.dot(vc.segment(l * nu_time, nu_time));
  }
  return 0.5 * (M + M.transpose().eval());
}

}  // namespace

double normal_quantile(double prob) {
  if (!(prob > 0.0 && prob < 1.0))
    throw SpecError("normal quantile requires probability in (0, 1)");
  // Acklam's rational approximation
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (prob < plow) {
    const double u = std::sqrt(-2.0 * std::log(prob));
    x = (((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
        ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
  } else if (prob > 1.0 - plow) {
    const double u = std::sqrt(-2.0 * std::log(1.0 - prob));
    x = -(((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
        ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
  } else {
    const double u = prob - 0.5, r = u * u;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * u /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  // one Halley refinement against erfc
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - prob;
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  const double u = e / pdf;
  return x - u / (1.0 + 0.5 * x * u);
}

EffectSurface pointwise_effects(const FittedModel& model,
                                const Eigen::VectorXd& m_grid, double alpha) {
  const EffectContext& ctx = context_of(model);
  check_m_domain(ctx, m_grid);
  const int T = static_cast<int>(ctx.C.rows());
  const int nt = static_cast<int>(ctx.C.cols());
  const int nm = ctx.mod_spec.size;

  const Eigen::MatrixXd B = eval_basis(m_grid, ctx.mod_spec, ctx.mod_knots);
  const Eigen::VectorXd theta = model.theta();
  const Eigen::Map<const Eigen::MatrixXd> Theta(theta.data(), nt, nm);
  const Eigen::MatrixXd Vtheta = model.Vtheta();

  EffectSurface out;
  out.m_grid = m_grid;
  out.alpha = alpha;
  out.estimates = B * (ctx.C * Theta).transpose();
  out.se.resize(m_grid.size(), T);
  for (int t = 0; t < T; ++t) {
    const Eigen::MatrixXd Mt = contract_time(Vtheta, ctx.C.row(t).transpose(), nt, nm);
    out.se.col(t) =
        ((B * Mt).cwiseProduct(B)).rowwise().sum().cwiseMax(0.0).cwiseSqrt();
  }
  return out;
}

CumulativeCurve cumulative_effects(const FittedModel& model,
                                   const Eigen::VectorXd& m_grid, double alpha) {
  const EffectContext& ctx = context_of(model);
  check_m_domain(ctx, m_grid);
  const int nt = static_cast<int>(ctx.C.cols());
  const int nm = ctx.mod_spec.size;

  const Eigen::MatrixXd B = eval_basis(m_grid, ctx.mod_spec, ctx.mod_knots);
  const Eigen::VectorXd theta = model.theta();
  const Eigen::Map<const Eigen::MatrixXd> Theta(theta.data(), nt, nm);
  const Eigen::VectorXd csum = ctx.C.colwise().sum();  // w_*(m) = b(m) (x) csum

  CumulativeCurve out;
  out.m_grid = m_grid;
  out.alpha = alpha;
  out.estimates = B * Theta.transpose() * csum;
  const Eigen::MatrixXd Md = contract_time(model.Vtheta(), csum, nt, nm);
  out.se = ((B * Md).cwiseProduct(B)).rowwise().sum().cwiseMax(0.0).cwiseSqrt();
  return out;
}

std::vector<Window> find_windows(const EffectSurface& surface) {
  const double z = normal_quantile(1.0 - surface.alpha / 2.0);
  std::vector<Window> out;
  for (int i = 0; i < surface.m_grid.size(); ++i) {
    int start = -1, sign = 0;
    const int T = static_cast<int>(surface.estimates.cols());
    for (int t = 0; t <= T; ++t) {
      int s = 0;
      if (t < T) {
        const double est = surface.estimates(i, t), hw = z * surface.se(i, t);
        if (est - hw > 0.0) s = 1;
        else if (est + hw < 0.0) s = -1;
      }
      if (s != sign) {
        if (sign != 0)
          out.push_back({surface.m_grid[i], start + 1, t, sign});
        start = t;
        sign = s;
      }
    }
  }
  return out;
}

Eigen::VectorXd default_m_grid(const Eigen::VectorXd& modifier, int points) {
  std::vector<double> v(modifier.data(), modifier.data() + modifier.size());
  std::sort(v.begin(), v.end());
  auto quant = [&](double p) {
    const double h = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  const double lo = quant(0.01), hi = quant(0.99);
  Eigen::VectorXd grid(points);
  for (int i = 0; i < points; ++i)
    grid[i] = points == 1 ? lo : lo + (hi - lo) * i / (points - 1);
  return grid;
}

}  // namespace dlim

#include "dlim/fit.hpp"

#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <set>

#include "dlim/error.hpp"
#include "fit_internal.hpp"

namespace dlim {

namespace detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

Eigen::VectorXi support_indices(const std::vector<Eigen::MatrixXd>& blocks, int p) {
  std::vector<int> idx;
  for (int j = 0; j < p; ++j) {
    for (const auto& S : blocks) {
      if (S(j, j) > 0.0) {
        idx.push_back(j);
        break;
      }
    }
  }
  return Eigen::Map<Eigen::VectorXi>(idx.data(), static_cast<int>(idx.size()));
}

// Maximizes a restricted-likelihood surface over rho = log lambda with a
// coarse grid initialization followed by BFGS with numerical gradients.
struct OptResult {
  Eigen::VectorXd rho;
  std::vector<FitTraceEntry> trace;
  bool interior = true;
};

OptResult maximize_criterion(const std::function<double(const Eigen::VectorXd&)>& lr,
                             int K, const FitOptions& opts) {
  auto f = [&](const Eigen::VectorXd& rho) {
    const double v = lr(rho);
    return std::isfinite(v) ? -v : kInf;
  };
  OptResult res;
  Eigen::VectorXd x(K);

  if (opts.rho_init) {
    if (opts.rho_init->size() != K)
      throw SpecError("rho_init length does not match penalty count");
    x = opts.rho_init->cwiseMax(opts.rho_lo).cwiseMin(opts.rho_hi);
  } else {
    const int G = std::max(2, opts.grid_points);
    Eigen::VectorXd levels(G);
    for (int i = 0; i < G; ++i)
      levels[i] = opts.rho_lo + (opts.rho_hi - opts.rho_lo) * i / (G - 1);
    long combos = 1;
    for (int k = 0; k < K; ++k) combos *= G;
    double best = kInf;
    Eigen::VectorXd cand(K);
    for (long c = 0; c < combos; ++c) {
      long rem = c;
      for (int k = 0; k < K; ++k) {
        cand[k] = levels[rem % G];
        rem /= G;
      }
      const double v = f(cand);
      if (v < best) {
        best = v;
        x = cand;
      }
    }
    if (!std::isfinite(best))
      throw NumericError("restricted likelihood not finite anywhere on the grid");
  }

  const double h = 1e-3;
  auto gradient = [&](const Eigen::VectorXd& at, double& f0) {
    Eigen::VectorXd g(K);
    f0 = f(at);
    Eigen::VectorXd e = at;
    for (int k = 0; k < K; ++k) {
      e[k] = at[k] + h;
      const double fp = f(e);
      e[k] = at[k] - h;
      const double fm = f(e);
      e[k] = at[k];
      g[k] = (fp - fm) / (2 * h);
    }
    return g;
  };

  Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(K, K);
  double fx;
  Eigen::VectorXd g = gradient(x, fx);
  res.trace.push_back({x, -fx});
  for (int it = 0; it < opts.max_opt_iter; ++it) {
    // projected convergence test: ignore components pushing out of the box
    double gmax = 0.0;
    for (int k = 0; k < K; ++k) {
      const bool at_lo = x[k] <= opts.rho_lo + 1e-9;
      const bool at_hi = x[k] >= opts.rho_hi - 1e-9;
      if ((at_lo && g[k] > 0.0) || (at_hi && g[k] < 0.0)) continue;
      gmax = std::max(gmax, std::abs(g[k]));
    }
    if (gmax <= opts.grad_tol) break;

    Eigen::VectorXd dir = -(Hinv * g);
    if (dir.dot(g) >= 0.0) {
      Hinv.setIdentity();
      dir = -g;
    }
    double step = 1.0;
    Eigen::VectorXd xn;
    double fn = kInf;
    bool ok = false;
    for (int ls = 0; ls < 40; ++ls) {
      xn = (x + step * dir).cwiseMax(opts.rho_lo).cwiseMin(opts.rho_hi);
      fn = f(xn);
      if (fn <= fx + 1e-4 * g.dot(xn - x)) {
        ok = true;
        break;
      }
      step *= 0.5;
    }
    if (!ok || (xn - x).lpNorm<Eigen::Infinity>() < 1e-12) break;
    double fnew;
    Eigen::VectorXd gn = gradient(xn, fnew);
    const Eigen::VectorXd s = xn - x, yv = gn - g;
    const double sy = s.dot(yv);
    if (sy > 1e-12) {
      const Eigen::VectorXd Hy = Hinv * yv;
      Hinv += ((sy + yv.dot(Hy)) / (sy * sy)) * (s * s.transpose()) -
              (Hy * s.transpose() + s * Hy.transpose()) / sy;
    }
    x = xn;
    fx = fn;
    g = gn;
    res.trace.push_back({x, -fx});
  }
  res.rho = x;
  res.interior = true;
  for (int k = 0; k < K; ++k)
    if (x[k] <= opts.rho_lo + 1e-6 || x[k] >= opts.rho_hi - 1e-6)
      res.interior = false;
  return res;
}

double gaussian_loglik(double rss, int n) {
  if (rss <= 0.0) return kInf;
  return -0.5 * n * (kLog2Pi + std::log(rss / n) + 1.0);
}

}  // namespace

PreparedModel PreparedModel::build(const ModelSpec& spec) {
  const int n = static_cast<int>(spec.y.size());
  if (n < 10) throw SpecError("fit requires n >= 10 observations");
  if (spec.Z.rows() != n)
    throw SpecError("covariate matrix row count does not match y");
  if (!spec.y.allFinite() || !spec.Z.allFinite())
    throw SpecError("response/covariates contain NaN/Inf");
  if (spec.family == Family::Poisson) {
    for (int i = 0; i < n; ++i)
      if (spec.y[i] < 0.0) throw SpecError("Poisson response must be >= 0");
  }

  PreparedModel pm;
  pm.family = spec.family;
  pm.n = n;
  pm.p_theta = spec.p_theta();
  pm.q = spec.q();
  if (pm.p_theta > 0 && spec.crossbasis->W.rows() != n)
    throw SpecError("cross-basis row count does not match y");

  if (pm.q > 0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(spec.Z);
    qr.setThreshold(1e-10);
    if (qr.rank() < spec.Z.cols())
      throw SpecError("covariate matrix Z is rank deficient");
  }

  // group indicators for random intercepts
  Eigen::MatrixXd G;
  if (spec.groups) {
    const auto& gl = *spec.groups;
    if (gl.size() != n) throw SpecError("group label length does not match y");
    const int N = gl.maxCoeff();
    if (gl.minCoeff() < 1) throw SpecError("group labels must start at 1");
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(N);
    for (int i = 0; i < n; ++i) counts[gl[i] - 1]++;
    if ((counts.array() == 0).any())
      throw SpecError("every group label in 1..N must be nonempty");
    if (N < 2) throw SpecError("random intercepts require >= 2 groups");
    if (counts.maxCoeff() < 2)
      throw SpecError(
          "random-intercept variance unidentifiable: all groups are singletons");
    pm.n_groups = N;
    G = Eigen::MatrixXd::Zero(n, N);
    for (int i = 0; i < n; ++i) G(i, gl[i] - 1) = 1.0;
  }

  pm.p = pm.p_theta + pm.q + pm.n_groups;
  Eigen::MatrixXd X(n, pm.p);
  if (pm.p_theta > 0) X.leftCols(pm.p_theta) = spec.crossbasis->W;
  if (pm.q > 0) X.middleCols(pm.p_theta, pm.q) = spec.Z;
  if (pm.n_groups > 0) X.rightCols(pm.n_groups) = G;

  // embedded dense penalty blocks at full size p
  std::vector<Eigen::MatrixXd> blocks;
  for (const auto& pb : spec.penalties) {
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(pm.p, pm.p);
    S.block(pb.offset, pb.offset, pb.dim, pb.dim) = pb.block();
    blocks.push_back(std::move(S));
  }
  if (pm.n_groups > 0) {
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(pm.p, pm.p);
    S.bottomRightCorner(pm.n_groups, pm.n_groups).setIdentity();
    blocks.push_back(std::move(S));
  }

  pm.Q = Eigen::MatrixXd::Identity(pm.p, pm.p);
  pm.diag_ok = true;
  if (!blocks.empty()) {
    const Eigen::VectorXi sup = support_indices(blocks, pm.p);
    const int ns = static_cast<int>(sup.size());
    // weighted sum with fixed irrational weights; commuting blocks share its
    // eigenbasis except on subspaces where every block acts as a scalar
    Eigen::MatrixXd Csum = Eigen::MatrixXd::Zero(ns, ns);
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      const double w = 0.5 + std::fmod(0.6180339887498949 * (k + 1), 1.0);
      for (int a = 0; a < ns; ++a)
        for (int b = 0; b < ns; ++b) Csum(a, b) += w * blocks[k](sup[a], sup[b]);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Csum);
    const Eigen::MatrixXd& U = es.eigenvectors();
    for (const auto& S : blocks) {
      Eigen::MatrixXd Ssub(ns, ns);
      for (int a = 0; a < ns; ++a)
        for (int b = 0; b < ns; ++b) Ssub(a, b) = S(sup[a], sup[b]);
      Eigen::MatrixXd R = U.transpose() * Ssub * U;
      Eigen::VectorXd d = R.diagonal();
      R.diagonal().setZero();
      const double scale = std::max(1.0, d.maxCoeff());
      if (R.cwiseAbs().maxCoeff() > 1e-8 * scale) {
        pm.diag_ok = false;
        break;
      }
      Eigen::VectorXd full = Eigen::VectorXd::Zero(pm.p);
      const double thresh = 1e-10 * std::max(1.0, d.maxCoeff());
      for (int a = 0; a < ns; ++a) full[sup[a]] = d[a] > thresh ? d[a] : 0.0;
      pm.pen_diags.push_back(std::move(full));
    }
    if (pm.diag_ok) {
      for (int a = 0; a < ns; ++a)
        for (int b = 0; b < ns; ++b) pm.Q(sup[a], sup[b]) = U(a, b);
    } else {
      pm.pen_diags.clear();
      pm.Q.setIdentity();
      pm.S_dense = blocks;
    }
  }

  // total-penalty null space dimension (lambda > 0)
  if (blocks.empty()) {
    pm.null_dim = pm.p;
  } else if (pm.diag_ok) {
    pm.null_dim = 0;
    for (int j = 0; j < pm.p; ++j) {
      bool allzero = true;
      for (const auto& d : pm.pen_diags)
        if (d[j] > 0.0) allzero = false;
      if (allzero) pm.null_dim++;
    }
  } else {
    Eigen::MatrixXd Stot = Eigen::MatrixXd::Zero(pm.p, pm.p);
    for (const auto& S : pm.S_dense) Stot += S;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Stot, Eigen::EigenvaluesOnly);
    const double thr = 1e-10 * std::max(1.0, es.eigenvalues().maxCoeff());
    pm.null_dim = static_cast<int>((es.eigenvalues().array() <= thr).count());
  }

  pm.Xt = X * pm.Q;
  pm.A = pm.Xt.transpose() * pm.Xt;
  if (spec.crossbasis) {
    EffectContext ctx;
    ctx.C = spec.crossbasis->time_basis.values;
    ctx.mod_spec = spec.crossbasis->mod_spec;
    ctx.mod_knots = spec.crossbasis->mod_knots;
    ctx.modifier = spec.crossbasis->modifier;
    pm.ctx = ctx;
  }
  return pm;
}

namespace {

// Penalty at given lambda, in the prepared (rotated) coordinates.
struct PenaltyAt {
  Eigen::VectorXd diag;   // diag path
  Eigen::MatrixXd dense;  // fallback
  bool is_diag = true;
  double logdet_plus = 0.0;  // log pseudo-determinant of S_lambda
};

PenaltyAt penalty_at(const PreparedModel& pm, const Eigen::VectorXd& lambda) {
  PenaltyAt out;
  const int K = static_cast<int>(lambda.size());
  if (pm.diag_ok) {
    out.is_diag = true;
    out.diag = Eigen::VectorXd::Zero(pm.p);
    for (int k = 0; k < K; ++k) out.diag += lambda[k] * pm.pen_diags[k];
    out.logdet_plus = 0.0;
    for (int j = 0; j < pm.p; ++j) {
      bool penalized = false;
      for (const auto& d : pm.pen_diags)
        if (d[j] > 0.0) penalized = true;
      if (penalized && out.diag[j] > 0.0) out.logdet_plus += std::log(out.diag[j]);
    }
  } else {
    out.is_diag = false;
    out.dense = Eigen::MatrixXd::Zero(pm.p, pm.p);
    for (int k = 0; k < K; ++k) out.dense += lambda[k] * pm.S_dense[k];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.dense,
                                                      Eigen::EigenvaluesOnly);
    const double thr = 1e-12 * std::max(1.0, es.eigenvalues().maxCoeff());
    out.logdet_plus = 0.0;
    for (int j = 0; j < pm.p; ++j)
      if (es.eigenvalues()[j] > thr) out.logdet_plus += std::log(es.eigenvalues()[j]);
  }
  return out;
}

Eigen::MatrixXd penalized_hessian(const Eigen::MatrixXd& base, const PenaltyAt& pa) {
  Eigen::MatrixXd H = base;
  if (pa.is_diag)
    H.diagonal() += pa.diag;
  else
    H += pa.dense;
  return H;
}

struct GaussianSolve {
  Eigen::VectorXd psi_t;  // rotated coefficients
  Eigen::LLT<Eigen::MatrixXd> llt;
  double Dp = 0.0;   // penalized RSS
  double rss = 0.0;  // unpenalized RSS
  double logdetH = 0.0;
};

GaussianSolve gaussian_solve(const PreparedModel& pm, const Eigen::VectorXd& b,
                             double yty, const PenaltyAt& pa) {
  GaussianSolve s;
  const Eigen::MatrixXd H = penalized_hessian(pm.A, pa);
  s.llt.compute(H);
  if (s.llt.info() != Eigen::Success)
    throw NumericError("singular penalized normal matrix");
  s.psi_t = s.llt.solve(b);
  // one step of iterative refinement; the normal matrix squares the design's
  // condition number and the plain Cholesky solve can lose ~6 digits
  s.psi_t += s.llt.solve(b - H * s.psi_t);
  s.Dp = std::max(yty - b.dot(s.psi_t), 0.0);
  s.rss = std::max(yty - 2.0 * b.dot(s.psi_t) + s.psi_t.dot(pm.A * s.psi_t), 0.0);
  s.logdetH = 2.0 * s.llt.matrixLLT().diagonal().array().log().sum();
  return s;
}

struct PoissonSolve {
  Eigen::VectorXd psi_t;
  Eigen::VectorXd mu;
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::MatrixXd XtWX;
  double loglik = 0.0;       // unpenalized, with lgamma terms
  double pen_quad = 0.0;     // psi' S psi
  double logdetH = 0.0;
};

double poisson_loglik(const Eigen::VectorXd& y, const Eigen::VectorXd& eta,
                      const Eigen::VectorXd& mu, double lgamma_sum) {
  return (y.array() * eta.array() - mu.array()).sum() - lgamma_sum;
}

PoissonSolve poisson_irls(const PreparedModel& pm, const Eigen::VectorXd& y,
                          const PenaltyAt& pa, const FitOptions& opts,
                          Eigen::VectorXd psi0, double lgamma_sum) {
  const int n = pm.n;
  PoissonSolve s;
  s.psi_t = std::move(psi0);
  const double scale = std::max(1.0, (pm.Xt.transpose() * y).lpNorm<Eigen::Infinity>());
  double prev_pdev = kInf;
  int bad = 0;
  std::vector<FitTraceEntry> trace;
  for (int it = 0; it < opts.irls_max_iter; ++it) {
    Eigen::VectorXd eta = (pm.Xt * s.psi_t).cwiseMax(-30.0).cwiseMin(30.0);
    s.mu = eta.array().exp();
    Eigen::VectorXd grad = pm.Xt.transpose() * (y - s.mu);
    if (pa.is_diag)
      grad -= pa.diag.cwiseProduct(s.psi_t);
    else
      grad -= pa.dense * s.psi_t;
    if (it > 0 && grad.lpNorm<Eigen::Infinity>() <= opts.irls_tol * scale) break;

    const Eigen::MatrixXd XtW = pm.Xt.transpose() * s.mu.asDiagonal();
    s.XtWX = XtW * pm.Xt;
    const Eigen::MatrixXd H = penalized_hessian(s.XtWX, pa);
    s.llt.compute(H);
    if (s.llt.info() != Eigen::Success)
      throw NumericError("singular penalized IRLS system");
    const Eigen::VectorXd z = eta + (y - s.mu).cwiseQuotient(s.mu);
    s.psi_t = s.llt.solve(XtW * z);

    // divergence watch on the penalized deviance
    eta = (pm.Xt * s.psi_t).cwiseMax(-30.0).cwiseMin(30.0);
    const Eigen::VectorXd mu2 = eta.array().exp();
    double dev = 0.0;
    for (int i = 0; i < n; ++i) {
      dev += 2.0 * (mu2[i] - y[i]);
      if (y[i] > 0.0) dev += 2.0 * y[i] * std::log(y[i] / mu2[i]);
    }
    double quad = pa.is_diag ? pa.diag.dot(s.psi_t.cwiseAbs2())
                             : s.psi_t.dot(pa.dense * s.psi_t);
    const double pdev = dev + quad;
    trace.push_back({Eigen::VectorXd(), pdev});
    bad = pdev > prev_pdev + 1e-10 ? bad + 1 : 0;
    if (bad >= 5)
      throw ConvergenceError("IRLS diverged: penalized deviance increased 5 times");
    prev_pdev = pdev;
  }
  const Eigen::VectorXd eta = (pm.Xt * s.psi_t).cwiseMax(-30.0).cwiseMin(30.0);
  s.mu = eta.array().exp();
  const Eigen::MatrixXd XtW = pm.Xt.transpose() * s.mu.asDiagonal();
  s.XtWX = XtW * pm.Xt;
  const Eigen::MatrixXd H = penalized_hessian(s.XtWX, pa);
  s.llt.compute(H);
  if (s.llt.info() != Eigen::Success)
    throw NumericError("singular penalized IRLS system");
  s.loglik = poisson_loglik(y, eta, s.mu, lgamma_sum);
  s.pen_quad = pa.is_diag ? pa.diag.dot(s.psi_t.cwiseAbs2())
                          : s.psi_t.dot(pa.dense * s.psi_t);
  s.logdetH = 2.0 * s.llt.matrixLLT().diagonal().array().log().sum();
  return s;
}

}  // namespace

FittedModel PreparedModel::fit(const Eigen::VectorXd& y, const FitOptions& opts) const {
  if (y.size() != n) throw SpecError("response length does not match design");
  const int K = static_cast<int>(diag_ok ? pen_diags.size() : S_dense.size());
  const int nm = n - null_dim;
  if (K > 0 && nm <= 0)
    throw NumericError("restricted likelihood undefined: n <= penalty null dim");

  FittedModel fm;
  fm.p_theta = p_theta;
  fm.q = q;
  fm.n_groups = n_groups;
  fm.ctx = ctx;

  const Eigen::VectorXd b = Xt.transpose() * y;
  const double yty = y.squaredNorm();

  double lgamma_sum = 0.0;
  if (family == Family::Poisson)
    for (int i = 0; i < n; ++i) lgamma_sum += std::lgamma(y[i] + 1.0);

  // degenerate all-zero Gaussian response
  if (family == Family::Gaussian && yty == 0.0) {
    fm.coef = Eigen::VectorXd::Zero(p);
    fm.lambda = opts.fixed_lambda ? *opts.fixed_lambda : Eigen::VectorXd::Ones(K);
    fm.rho = fm.lambda.array().max(1e-300).log();
    fm.phi = 0.0;
    fm.V = Eigen::MatrixXd::Zero(p, p);
    fm.loglik = kInf;
    fm.edf = 0.0;
    fm.sigma_zero = true;
    return fm;
  }

  Eigen::VectorXd lambda;
  std::vector<FitTraceEntry> trace;
  bool interior = true;

  if (opts.fixed_lambda) {
    if (opts.fixed_lambda->size() != K)
      throw SpecError("fixed_lambda length does not match penalty count");
    lambda = *opts.fixed_lambda;
  } else if (K == 0) {
    lambda.resize(0);
  } else {
    Eigen::VectorXd irls_warm = Eigen::VectorXd::Zero(p);
    auto criterion = [&](const Eigen::VectorXd& rho) -> double {
      const Eigen::VectorXd lam = rho.array().exp();
      const PenaltyAt pa = penalty_at(*this, lam);
      if (family == Family::Gaussian) {
        const GaussianSolve s = gaussian_solve(*this, b, yty, pa);
        const double sig2 = std::max(s.Dp, 1e-300) / nm;
        return -0.5 * nm * (kLog2Pi + std::log(sig2) + 1.0) +
               0.5 * pa.logdet_plus - 0.5 * s.logdetH;
      }
      const PoissonSolve s = poisson_irls(*this, y, pa, opts, irls_warm, lgamma_sum);
      irls_warm = s.psi_t;
      return s.loglik - 0.5 * s.pen_quad + 0.5 * pa.logdet_plus - 0.5 * s.logdetH;
    };
    OptResult r = maximize_criterion(criterion, K, opts);
    lambda = r.rho.array().exp();
    trace = std::move(r.trace);
    interior = r.interior;
  }

  const PenaltyAt pa = penalty_at(*this, lambda);
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::VectorXd psi_t;
  Eigen::MatrixXd info;  // X'WX at the solution
  if (family == Family::Gaussian) {
    GaussianSolve s = gaussian_solve(*this, b, yty, pa);
    psi_t = s.psi_t;
    llt = std::move(s.llt);
    info = A;
    const double sig2 = K > 0 ? s.Dp / nm : s.rss / std::max(1, n - p);
    fm.phi = sig2;
    fm.loglik = gaussian_loglik(s.rss, n);
    fm.sigma_zero = sig2 <= 1e-30 || s.rss / n <= 1e-30;
    if (fm.sigma_zero) fm.loglik = kInf;
  } else {
    PoissonSolve s = poisson_irls(*this, y, pa, opts, Eigen::VectorXd::Zero(p),
                                  lgamma_sum);
    psi_t = s.psi_t;
    llt = std::move(s.llt);
    info = std::move(s.XtWX);
    fm.phi = 1.0;
    fm.loglik = s.loglik;
  }

  fm.coef = Q * psi_t;
  fm.lambda = lambda;
  fm.rho = lambda.size() > 0
               ? Eigen::VectorXd(lambda.array().max(1e-300).log().matrix())
               : Eigen::VectorXd();
  const Eigen::MatrixXd Hinv = llt.solve(Eigen::MatrixXd::Identity(p, p));
  fm.V = Q * (Hinv * fm.phi) * Q.transpose();
  fm.V = 0.5 * (fm.V + fm.V.transpose().eval());
  fm.edf = (Hinv.cwiseProduct(info)).sum();
  fm.trace = std::move(trace);
  fm.rho_interior = interior;
  return fm;
}

}  // namespace detail

FittedModel fit_penalized(const ModelSpec& spec, const FitOptions& opts) {
  return detail::PreparedModel::build(spec).fit(spec.y, opts);
}

FittedModel fit_mixed(const ModelSpec& spec, const FitOptions& opts) {
  if (!spec.groups) throw SpecError("fit_mixed requires group labels");
  return fit_penalized(spec, opts);
}

FittedModel fit_unpenalized_aic(Family family, const Eigen::MatrixXd& X,
                                const Eigen::VectorXd& m, const Eigen::MatrixXd& Z,
                                const Eigen::VectorXd& y, BasisKind basis_kind,
                                const std::vector<AicCandidate>& df_grid) {
  if (df_grid.empty()) throw SpecError("empty degrees-of-freedom grid");
  std::optional<FittedModel> best;
  int best_p = 0;
  for (const auto& cand : df_grid) {
    try {
      BasisSpec ts{basis_kind, cand.nu_time, 3,
                   {1.0, static_cast<double>(X.cols())}};
      BasisSpec ms{basis_kind, cand.nu_mod, 3, {m.minCoeff(), m.maxCoeff()}};
      if (basis_kind == BasisKind::BSpline) {
        ts.boundary = BsplineBoundary::Uniform;
        ms.boundary = BsplineBoundary::Uniform;
      }
      ModelSpec spec;
      spec.family = family;
      spec.crossbasis = build_crossbasis(X, m, ts, ms);
      spec.Z = Z;
      spec.y = y;
      const int p = spec.p_theta() + spec.q();
      Eigen::MatrixXd D(X.rows(), p);
      D << spec.crossbasis->W, Z;
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(D);
      qr.setThreshold(1e-9);
      if (qr.rank() < p) {
        std::cerr << "notice: AIC candidate (" << cand.nu_time << ", "
                  << cand.nu_mod << ") skipped: rank-deficient design\n";
        continue;
      }
      FittedModel fm = fit_penalized(spec);
      fm.aic = -2.0 * fm.loglik + 2.0 * p;
      if (!best || fm.aic < best->aic - 1e-12 ||
          (std::abs(fm.aic - best->aic) <= 1e-12 && p < best_p)) {
        best = std::move(fm);
        best_p = p;
      }
    } catch (const NumericError& e) {
      std::cerr << "notice: AIC candidate (" << cand.nu_time << ", " << cand.nu_mod
                << ") skipped: " << e.what() << "\n";
    }
  }
  if (!best) throw NumericError("all AIC candidates failed or were skipped");
  return *best;
}

}  // namespace dlim

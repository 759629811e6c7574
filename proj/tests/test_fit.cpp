#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "dlim/error.hpp"
#include "dlim/fit.hpp"
#include "dlim/models.hpp"
#include "dlim/rng.hpp"
#include "dlim/simlab.hpp"

using namespace dlim;

namespace {

SimDataset small_data(int scenario_id, int n, std::uint64_t seed, int T = 20,
                      Snr snr = Snr::High) {
  Scenario sc;
  sc.id = scenario_id;
  sc.T = T;
  return simulate_dataset(sc, n, snr, seed);
}

ModelSpec dlm_spec(const SimDataset& ds, int nu_time = 8) {
  ModelConfig cfg;
  cfg.kind = ModelKind::Dlm;
  cfg.nu_time = nu_time;
  return make_model_spec(cfg, ds.X, ds.m, ds.Z, ds.y);
}

// Restricted log-likelihood of a Gaussian single-penalty model at log
// smoothing parameter rho, computed from first principles.
double reml_oracle(const ModelSpec& spec, double rho) {
  Eigen::MatrixXd X(spec.y.size(), spec.p_theta() + spec.q());
  X.leftCols(spec.p_theta()) = spec.crossbasis->W;
  X.rightCols(spec.q()) = spec.Z;
  const Eigen::MatrixXd& S = spec.penalties[0].Smat;
  const int n = static_cast<int>(spec.y.size());
  const int p = static_cast<int>(X.cols());
  const double lambda = std::exp(rho);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  double logdet_S = 0.0;
  int rank = 0;
  for (int i = 0; i < p; ++i) {
    if (es.eigenvalues()[i] > 1e-10 * es.eigenvalues().maxCoeff()) {
      logdet_S += std::log(lambda * es.eigenvalues()[i]);
      ++rank;
    }
  }
  const int M = p - rank;

  Eigen::MatrixXd H = X.transpose() * X + lambda * S;
  Eigen::LLT<Eigen::MatrixXd> llt(H);
  Eigen::VectorXd psi = llt.solve(X.transpose() * spec.y);
  const double Dp = spec.y.squaredNorm() - psi.dot(X.transpose() * spec.y);
  const double sigma2 = Dp / (n - M);
  double logdet_H = 0.0;
  for (int i = 0; i < p; ++i) logdet_H += 2.0 * std::log(llt.matrixL()(i, i));

  return -0.5 * (n - M) * (std::log(2.0 * M_PI * sigma2) + 1.0) +
         0.5 * logdet_S - 0.5 * logdet_H;
}

}  // namespace

TEST_CASE("all-zero gaussian response is flagged, not fatal") {
  SimDataset ds = small_data(1, 80, 3);
  ModelSpec spec = dlm_spec(ds);
  spec.y.setZero();
  FittedModel fm = fit_penalized(spec);
  CHECK(fm.sigma_zero);
  CHECK(fm.coef.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("lambda = 0 reproduces ordinary least squares") {
  SimDataset ds = small_data(2, 150, 11);
  ModelSpec spec = dlm_spec(ds);
  FitOptions opts;
  opts.fixed_lambda = Eigen::VectorXd::Zero(1);
  FittedModel fm = fit_penalized(spec, opts);

  Eigen::MatrixXd X(ds.y.size(), spec.p_theta() + spec.q());
  X.leftCols(spec.p_theta()) = spec.crossbasis->W;
  X.rightCols(spec.q()) = spec.Z;
  Eigen::VectorXd ols = (X.transpose() * X).ldlt().solve(X.transpose() * ds.y);
  CHECK((fm.coef - ols).cwiseAbs().maxCoeff() < 1e-8);

  // empirical-Bayes covariance reduces to phi * (X'X)^-1
  const int p = static_cast<int>(X.cols());
  Eigen::MatrixXd Vref = fm.phi * (X.transpose() * X).ldlt().solve(
                                      Eigen::MatrixXd::Identity(p, p));
  CHECK((fm.V - Vref).cwiseAbs().maxCoeff() < 1e-8 * Vref.cwiseAbs().maxCoeff());
}

TEST_CASE("selected smoothing parameter maximizes the restricted likelihood") {
  for (std::uint64_t seed : {21, 22, 23}) {
    SimDataset ds = small_data(1, 120, seed, 20, Snr::Med);
    ModelSpec spec = dlm_spec(ds);
    FittedModel fm = fit_penalized(spec);
    REQUIRE(fm.rho.size() == 1);

    const int G = 200;
    double best_rho = -8.0, best_val = -1e300;
    for (int g = 0; g < G; ++g) {
      double rho = -8.0 + 16.0 * g / (G - 1);
      double val = reml_oracle(spec, rho);
      if (val > best_val) {
        best_val = val;
        best_rho = rho;
      }
    }
    const double cell = 16.0 / (G - 1);
    CHECK(std::abs(fm.rho[0] - best_rho) <= cell + 1e-12);

    if (fm.rho_interior) {
      const double h = 1e-4;
      double grad =
          (reml_oracle(spec, fm.rho[0] + h) - reml_oracle(spec, fm.rho[0] - h)) /
          (2.0 * h);
      CHECK(std::abs(grad) <= 1e-4);
    }
    // the fit's restricted likelihood is not below the grid's best
    CHECK(reml_oracle(spec, fm.rho[0]) >= best_val - 1e-6);
  }
}

TEST_CASE("penalty roughness shrinks monotonically in lambda") {
  SimDataset ds = small_data(3, 150, 31);
  ModelSpec spec = dlm_spec(ds);
  const Eigen::MatrixXd& S = spec.penalties[0].Smat;
  double prev = 1e300;
  for (double lam : {0.0, 0.1, 10.0, 1000.0, 1e6}) {
    FitOptions opts;
    opts.fixed_lambda = Eigen::VectorXd::Constant(1, lam);
    FittedModel fm = fit_penalized(spec, opts);
    const double rough = fm.coef.dot(S * fm.coef);
    CHECK(rough <= prev + 1e-12);
    prev = rough;
  }
}

TEST_CASE("huge time penalty forces linear lag coefficients") {
  SimDataset ds = small_data(2, 200, 41);
  ModelSpec spec = dlm_spec(ds, 10);
  FitOptions opts;
  opts.fixed_lambda = Eigen::VectorXd::Constant(1, 1e10);
  FittedModel fm = fit_penalized(spec, opts);
  // beta_t = C theta on the integer grid; second differences vanish
  Eigen::VectorXd beta = fm.ctx->C * fm.theta();
  double max_dd = 0.0;
  for (int t = 1; t + 1 < beta.size(); ++t)
    max_dd = std::max(max_dd,
                      std::abs(beta[t - 1] - 2.0 * beta[t] + beta[t + 1]));
  CHECK(max_dd <= 1e-6);
}

TEST_CASE("poisson intercept-only fit recovers the log mean") {
  Rng rng(51);
  const int n = 200;
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = static_cast<double>(rng.poisson(7.0));
  ModelSpec spec;
  spec.family = Family::Poisson;
  spec.Z = Eigen::MatrixXd::Ones(n, 1);
  spec.y = y;
  FittedModel fm = fit_penalized(spec);
  CHECK(fm.coef[0] == doctest::Approx(std::log(y.mean())).epsilon(1e-8));
  CHECK(fm.phi == doctest::Approx(1.0));
  // unpenalized Poisson log-likelihood at the MLE
  double ll = 0.0;
  for (int i = 0; i < n; ++i) {
    ll += y[i] * std::log(y.mean()) - y.mean() - std::lgamma(y[i] + 1.0);
  }
  CHECK(fm.loglik == doctest::Approx(ll).epsilon(1e-8));
}

TEST_CASE("poisson dlim fit recovers a smooth signal") {
  Scenario sc;
  sc.id = 2;
  sc.T = 20;
  sc.family = Family::Poisson;
  SimDataset ds = simulate_dataset(sc, 400, Snr::High, 61);
  ModelConfig cfg;
  cfg.kind = ModelKind::Dlm;
  cfg.nu_time = 8;
  cfg.family = Family::Poisson;
  ModelSpec spec = make_model_spec(cfg, ds.X, ds.m, ds.Z, ds.y);
  FittedModel fm = fit_penalized(spec);
  CHECK(fm.phi == doctest::Approx(1.0));
  CHECK(std::isfinite(fm.loglik));
  CHECK(fm.edf > 1.0);
  CHECK(fm.edf < spec.p_theta() + spec.q());
}

TEST_CASE("aic selection: definition and trivial grid") {
  SimDataset ds = small_data(3, 200, 71);
  FittedModel fm = fit_unpenalized_aic(Family::Gaussian, ds.X, ds.m, ds.Z,
                                       ds.y, BasisKind::BSpline, {{5, 4}});
  const int p = fm.p_theta + fm.q;
  CHECK(fm.aic == doctest::Approx(-2.0 * fm.loglik + 2.0 * p).epsilon(1e-12));
  CHECK(fm.p_theta == 20);
}

TEST_CASE("aic prefers the richer basis under strong modification") {
  int hits = 0;
  for (std::uint64_t rep = 0; rep < 20; ++rep) {
    SimDataset ds = small_data(4, 400, 100 + rep, 30, Snr::High);
    FittedModel fm =
        fit_unpenalized_aic(Family::Gaussian, ds.X, ds.m, ds.Z, ds.y,
                            BasisKind::BSpline, {{4, 4}, {8, 6}});
    if (fm.p_theta == 48) ++hits;
  }
  CHECK(hits >= 16);
}

TEST_CASE("balanced random-intercept model matches the anova shrinkage") {
  Rng rng(81);
  const int G = 12, n0 = 15, n = G * n0;
  Eigen::VectorXd y(n);
  Eigen::VectorXi groups(n);
  for (int g = 0; g < G; ++g) {
    const double ag = 2.0 * rng.normal();
    for (int i = 0; i < n0; ++i) {
      y[g * n0 + i] = 5.0 + ag + 0.7 * rng.normal();
      groups[g * n0 + i] = g + 1;
    }
  }
  ModelSpec spec;
  spec.Z = Eigen::MatrixXd::Ones(n, 1);
  spec.y = y;
  spec.groups = groups;
  FittedModel fm = fit_mixed(spec);

  // closed-form balanced one-way REML (= ANOVA) estimates
  const double ybar = y.mean();
  Eigen::VectorXd gmean(G);
  double ssw = 0.0, ssb = 0.0;
  for (int g = 0; g < G; ++g) {
    gmean[g] = y.segment(g * n0, n0).mean();
    ssw += (y.segment(g * n0, n0).array() - gmean[g]).square().sum();
    ssb += n0 * (gmean[g] - ybar) * (gmean[g] - ybar);
  }
  const double mse = ssw / (n - G);
  const double msb = ssb / (G - 1);
  const double sa2 = (msb - mse) / n0;
  REQUIRE(sa2 > 0.0);
  const double shrink = n0 * sa2 / (mse + n0 * sa2);

  CHECK(fm.gamma()[0] == doctest::Approx(ybar).epsilon(1e-6));
  for (int g = 0; g < G; ++g) {
    CHECK(std::abs(fm.alpha()[g] - shrink * (gmean[g] - ybar)) < 1e-6);
  }
  CHECK(fm.phi == doctest::Approx(mse).epsilon(1e-5));
  // lambda-hat estimates the variance ratio sigma^2 / sigma_alpha^2
  CHECK(fm.lambda[0] == doctest::Approx(mse / sa2).epsilon(1e-4));
}

TEST_CASE("mixed-model preconditions") {
  ModelSpec spec;
  spec.Z = Eigen::MatrixXd::Ones(20, 1);
  spec.y = Eigen::VectorXd::LinSpaced(20, 0.0, 1.0);
  CHECK_THROWS_AS(fit_mixed(spec), SpecError);
  Eigen::VectorXi one_group = Eigen::VectorXi::Ones(20);
  spec.groups = one_group;
  CHECK_THROWS_AS(fit_mixed(spec), SpecError);
}

TEST_CASE("input validation") {
  SimDataset ds = small_data(1, 60, 91);
  ModelSpec spec = dlm_spec(ds);
  spec.y[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(fit_penalized(spec), SpecError);

  ModelSpec spec2 = dlm_spec(ds);
  spec2.family = Family::Poisson;
  spec2.y = ds.y;
  spec2.y[0] = -1.0;
  CHECK_THROWS_AS(fit_penalized(spec2), SpecError);

  ModelSpec spec3 = dlm_spec(ds);
  spec3.Z.conservativeResize(Eigen::NoChange, 6);
  spec3.Z.col(5) = spec3.Z.col(1);  // duplicate column, rank deficient
  CHECK_THROWS_AS(fit_penalized(spec3), SpecError);
}

TEST_CASE("seeded fits are bitwise deterministic") {
  SimDataset ds = small_data(2, 150, 101);
  ModelSpec spec = dlm_spec(ds);
  FittedModel a = fit_penalized(spec);
  FittedModel b = fit_penalized(spec);
  CHECK((a.coef - b.coef).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.rho[0] == b.rho[0]);
  CHECK((a.V - b.V).cwiseAbs().maxCoeff() == 0.0);
}

#include "dlim/simlab.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <thread>

#include "dlim/csv.hpp"
#include "dlim/effects.hpp"
#include "dlim/error.hpp"
#include "dlim/modtest.hpp"
#include "dlim/rng.hpp"

namespace dlim {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double lag_shape(double t, double c) {
  const double u = (t - c) / 5.0;
  return 2.5 * kInvSqrt2Pi * std::exp(-0.5 * u * u);
}

double logistic_center(double m) {
  return 37.0 / (1.0 + std::exp(-20.0 * (m - 0.5)));
}

// Scale applied to the whole linear predictor under the Poisson family so
// that exp(intercept + predictor) stays in a realistic count range. The
// stored truth is scaled accordingly.
constexpr double kPoissonScale = 0.2;
constexpr double kPoissonIntercept = 1.6094379124341003;  // log(5)

}  // namespace

void Scenario::validate() const {
  if (id < 1 || id > 4)
    throw SpecError("scenario id must be 1..4, got " + std::to_string(id));
  if (T < 2) throw SpecError("scenario needs T >= 2 exposure times");
}

double true_beta(const Scenario& sc, int t, double m) {
  sc.validate();
  if (t < 1 || t > sc.T)
    throw SpecError("true_beta: t out of range 1.." + std::to_string(sc.T));
  switch (sc.id) {
    case 1: return lag_shape(t, 20.0);
    case 2: return m * lag_shape(t, 20.0);
    case 3: return lag_shape(t, logistic_center(m));
    default: return m * lag_shape(t, logistic_center(m));
  }
}

double snr_value(Snr snr) {
  switch (snr) {
    case Snr::Low: return 0.5;
    case Snr::Med: return 1.0;
    default: return 10.0;
  }
}

std::string to_string(Snr snr) {
  switch (snr) {
    case Snr::Low: return "low";
    case Snr::Med: return "med";
    default: return "high";
  }
}

namespace {

Eigen::MatrixXd draw_exposures(const ExposureSource& src, int n, int T,
                               Rng& rng) {
  if (src.kind == ExposureSource::Kind::Csv) {
    CsvTable table = read_csv(src.path);
    if (table.values.rows() < n || table.values.cols() < T) {
      throw SpecError("exposure file " + src.path + " has " +
                      std::to_string(table.values.rows()) + " series of length " +
                      std::to_string(table.values.cols()) + ", need " +
                      std::to_string(n) + " x " + std::to_string(T));
    }
    if (!table.values.topLeftCorner(n, T).allFinite())
      throw SpecError("exposure file " + src.path + " has missing values");
    return table.values.topLeftCorner(n, T);
  }

  // Stationary AR(1), then standardize each week across series.
  const double rho = src.rho, sd = src.sd;
  Eigen::MatrixXd X(n, T);
  const double s0 = sd / std::sqrt(1.0 - rho * rho);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = s0 * rng.normal();
    for (int t = 1; t < T; ++t) X(i, t) = rho * X(i, t - 1) + sd * rng.normal();
  }
  for (int t = 0; t < T; ++t) {
    const double mean = X.col(t).mean();
    const double var = (X.col(t).array() - mean).square().sum() / (n - 1);
    X.col(t) = (X.col(t).array() - mean) / std::sqrt(var);
  }
  return X;
}

}  // namespace

SimDataset simulate_dataset(const Scenario& sc, int n, Snr snr,
                            std::uint64_t seed, const ExposureSource& source) {
  sc.validate();
  if (n < 50) throw SpecError("simulate_dataset needs n >= 50");

  Rng rng(seed);
  SimDataset ds;
  ds.seed = seed;
  ds.family = sc.family;
  ds.snr_label = to_string(snr);

  ds.X = draw_exposures(source, n, sc.T, rng);

  ds.m.resize(n);
  for (int i = 0; i < n; ++i) {
    ds.m(i) = sc.modifier_law == ModifierLaw::Uniform01
                  ? rng.uniform()
                  : 0.5 + 0.15 * rng.normal();
  }

  Eigen::MatrixXd covs(n, 3);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 3; ++j) covs(i, j) = rng.normal();
  Eigen::Vector3d gamma;
  for (int j = 0; j < 3; ++j) gamma(j) = rng.normal();

  ds.beta_true.resize(n, sc.T);
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < sc.T; ++t)
      ds.beta_true(i, t) = true_beta(sc, t + 1, ds.m(i));

  Eigen::VectorXd signal = (ds.X.array() * ds.beta_true.array()).rowwise().sum();
  // modifier main effect has coefficient 1, intercept 0
  Eigen::VectorXd predictor = signal + ds.m + covs * gamma;

  ds.Z.resize(n, 5);
  ds.Z.col(0).setOnes();
  ds.Z.col(1) = ds.m;
  ds.Z.rightCols(3) = covs;

  ds.y.resize(n);
  if (sc.family == Family::Gaussian) {
    const double mean = signal.mean();
    const double sd =
        std::sqrt((signal.array() - mean).square().sum() / (n - 1));
    ds.sigma = sd / snr_value(snr);
    for (int i = 0; i < n; ++i) ds.y(i) = predictor(i) + ds.sigma * rng.normal();
  } else {
    ds.beta_true *= kPoissonScale;
    ds.sigma = 0.0;
    for (int i = 0; i < n; ++i) {
      double eta = kPoissonIntercept + kPoissonScale * predictor(i);
      ds.y(i) = static_cast<double>(rng.poisson(std::exp(std::min(eta, 6.0))));
    }
  }
  ds.delta_true = ds.beta_true.rowwise().sum();
  return ds;
}

FitMetrics evaluate_fit(const FittedModel& model, const SimDataset& dataset,
                        double alpha) {
  const int n = static_cast<int>(dataset.m.size());
  const int T = static_cast<int>(dataset.beta_true.cols());
  EffectSurface surf = pointwise_effects(model, dataset.m, alpha);
  CumulativeCurve cum = cumulative_effects(model, dataset.m, alpha);
  if (surf.estimates.rows() != n || surf.estimates.cols() != T)
    throw SpecError("evaluate_fit: effect surface does not match the dataset");

  const double z = normal_quantile(1.0 - alpha / 2.0);
  FitMetrics mtr;

  Eigen::VectorXd cum_err = dataset.delta_true - cum.estimates;
  mtr.cum_rmse = std::sqrt(cum_err.squaredNorm() / n);
  mtr.cum_cov =
      (cum_err.array().abs() <= z * cum.se.array()).cast<double>().mean();

  Eigen::MatrixXd pt_err = dataset.beta_true - surf.estimates;
  mtr.pt_rmse = std::sqrt(pt_err.squaredNorm() / (n * T));
  mtr.pt_cov =
      (pt_err.array().abs() <= z * surf.se.array()).cast<double>().mean();
  return mtr;
}

std::string model_label(const ModelConfig& cfg) {
  if (cfg.kind == ModelKind::Dlim) {
    return "dlim(" + std::to_string(cfg.nu_time) + "," +
           std::to_string(cfg.nu_mod) + ")";
  }
  return to_string(cfg.kind);
}

void StudyConfig::validate() const {
  scenario.validate();
  if (reps < 1) throw SpecError("study needs reps >= 1");
  if (n < 50) throw SpecError("study needs n >= 50");
  if (models.empty()) throw SpecError("study needs at least one model");
  if (!tests.empty() && bootstrap_b < 100)
    throw SpecError("bootstrap B must be at least 100");
  if (alpha <= 0.0 || alpha >= 1.0) throw SpecError("alpha must be in (0, 1)");
  auto has_kind = [&](ModelKind k) {
    for (const auto& mc : models)
      if (mc.kind == k) return true;
    return false;
  };
  for (const auto& tp : tests) {
    if (!has_kind(tp.null_kind) || !has_kind(tp.full_kind))
      throw SpecError("test pair references a model kind not in the study");
    if (tp.null_kind == tp.full_kind)
      throw SpecError("test pair must name two distinct model kinds");
  }
}

namespace {

int find_model(const std::vector<ModelConfig>& models, ModelKind kind) {
  for (size_t i = 0; i < models.size(); ++i)
    if (models[i].kind == kind) return static_cast<int>(i);
  return -1;
}

ReplicateResult run_replicate(const StudyConfig& cfg, int rep) {
  ReplicateResult res;
  try {
    std::uint64_t data_seed =
        Rng::stream(cfg.seed, static_cast<std::uint64_t>(rep) + 1).next_u64();
    SimDataset ds =
        simulate_dataset(cfg.scenario, cfg.n, cfg.snr, data_seed, cfg.exposure);

    std::vector<ModelSpec> specs;
    specs.reserve(cfg.models.size());
    for (const auto& mc : cfg.models) {
      specs.push_back(make_model_spec(mc, ds.X, ds.m, ds.Z, ds.y));
      FittedModel fm = fit_penalized(specs.back());
      res.metrics.push_back(evaluate_fit(fm, ds, cfg.alpha));
    }

    for (size_t p = 0; p < cfg.tests.size(); ++p) {
      const auto& tp = cfg.tests[p];
      int ni = find_model(cfg.models, tp.null_kind);
      int fi = find_model(cfg.models, tp.full_kind);
      std::uint64_t test_seed =
          Rng::stream(cfg.seed, (1ULL << 32) +
                                    static_cast<std::uint64_t>(rep) * 64 + p)
              .next_u64();
      TestResult tr = bootstrap_lrt(specs[ni], specs[fi], cfg.bootstrap_b,
                                    test_seed, 1, to_string(tp.null_kind),
                                    to_string(tp.full_kind));
      res.p_values.push_back(tr.p_value);
    }
    res.ok = true;
  } catch (const std::exception& e) {
    res.ok = false;
    res.error = e.what();
  }
  return res;
}

}  // namespace

int StudyReport::failures() const {
  int f = 0;
  for (const auto& r : replicates)
    if (!r.ok) ++f;
  return f;
}

FitMetrics StudyReport::average_metrics(int model_index) const {
  FitMetrics avg;
  int kept = 0;
  for (const auto& r : replicates) {
    if (!r.ok) continue;
    const FitMetrics& m = r.metrics[model_index];
    avg.cum_rmse += m.cum_rmse;
    avg.cum_cov += m.cum_cov;
    avg.pt_rmse += m.pt_rmse;
    avg.pt_cov += m.pt_cov;
    ++kept;
  }
  if (kept == 0) throw NumericError("no successful replicates to average");
  avg.cum_rmse /= kept;
  avg.cum_cov /= kept;
  avg.pt_rmse /= kept;
  avg.pt_cov /= kept;
  return avg;
}

double StudyReport::rejection_rate(int test_index, double alpha) const {
  int kept = 0, rejected = 0;
  for (const auto& r : replicates) {
    if (!r.ok) continue;
    ++kept;
    if (r.p_values[test_index] < alpha) ++rejected;
  }
  if (kept == 0) throw NumericError("no successful replicates");
  return static_cast<double>(rejected) / kept;
}

StudyReport run_study(const StudyConfig& config) {
  StudyConfig cfg = config;
  for (auto& mc : cfg.models) mc.family = cfg.scenario.family;
  cfg.validate();

  StudyReport report;
  report.config = cfg;
  for (const auto& mc : cfg.models) report.model_labels.push_back(model_label(mc));
  for (const auto& tp : cfg.tests) {
    report.test_labels.push_back(to_string(tp.full_kind) + " vs " +
                                 to_string(tp.null_kind));
  }
  report.replicates.resize(cfg.reps);

  const int workers = std::max(1, cfg.workers);
  if (workers == 1 || cfg.reps == 1) {
    for (int rep = 0; rep < cfg.reps; ++rep)
      report.replicates[rep] = run_replicate(cfg, rep);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w]() {
        for (int rep = w; rep < cfg.reps; rep += workers)
          report.replicates[rep] = run_replicate(cfg, rep);
      });
    }
    for (auto& th : pool) th.join();
  }

  const int failed = report.failures();
  if (failed * 10 >= cfg.reps) {
    std::string first;
    for (const auto& r : report.replicates)
      if (!r.ok) { first = r.error; break; }
    throw NumericError("study failed: " + std::to_string(failed) + "/" +
                       std::to_string(cfg.reps) +
                       " replicates errored (first: " + first + ")");
  }
  return report;
}

namespace {

using nlohmann::json;

json config_json(const StudyConfig& cfg) {
  json models = json::array();
  for (const auto& mc : cfg.models) {
    models.push_back({{"kind", to_string(mc.kind)},
                      {"nu-time", mc.nu_time},
                      {"nu-mod", mc.nu_mod},
                      {"penalty", to_string(mc.penalty)}});
  }
  json tests = json::array();
  for (const auto& tp : cfg.tests) {
    tests.push_back(
        {{"null", to_string(tp.null_kind)}, {"full", to_string(tp.full_kind)}});
  }
  json exposure;
  if (cfg.exposure.kind == ExposureSource::Kind::Ar1) {
    exposure = {{"type", "ar1"}, {"rho", cfg.exposure.rho}, {"sd", cfg.exposure.sd}};
  } else {
    exposure = {{"type", "csv"}, {"path", cfg.exposure.path}};
  }
  return {{"scenario", cfg.scenario.id},
          {"T", cfg.scenario.T},
          {"family", to_string(cfg.scenario.family)},
          {"modifier-law",
           cfg.scenario.modifier_law == ModifierLaw::Uniform01 ? "uniform"
                                                               : "normal"},
          {"snr", to_string(cfg.snr)},
          {"reps", cfg.reps},
          {"n", cfg.n},
          {"models", models},
          {"tests", tests},
          {"bootstrap-b", cfg.bootstrap_b},
          {"alpha", cfg.alpha},
          {"seed", cfg.seed},
          {"exposure", exposure}};
}

}  // namespace

StudyConfig load_study_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open study config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw SpecError("study config " + path + ": " + e.what());
  }

  StudyConfig cfg;
  try {
    cfg.scenario.id = j.at("scenario").get<int>();
    cfg.scenario.T = j.value("T", 37);
    cfg.scenario.family = family_from_string(j.value("family", "gaussian"));
    const std::string law = j.value("modifier-law", "uniform");
    if (law == "uniform") {
      cfg.scenario.modifier_law = ModifierLaw::Uniform01;
    } else if (law == "normal") {
      cfg.scenario.modifier_law = ModifierLaw::Normal;
    } else {
      throw SpecError("modifier-law must be 'uniform' or 'normal'");
    }

    const json snr = j.value("snr", json("high"));
    if (snr.is_string()) {
      const std::string s = snr.get<std::string>();
      if (s == "low") cfg.snr = Snr::Low;
      else if (s == "med") cfg.snr = Snr::Med;
      else if (s == "high") cfg.snr = Snr::High;
      else throw SpecError("snr must be low, med, high, 0.5, 1, or 10");
    } else {
      const double v = snr.get<double>();
      if (v == 0.5) cfg.snr = Snr::Low;
      else if (v == 1.0) cfg.snr = Snr::Med;
      else if (v == 10.0) cfg.snr = Snr::High;
      else throw SpecError("snr must be low, med, high, 0.5, 1, or 10");
    }

    cfg.reps = j.value("reps", 1);
    cfg.n = j.value("n", 1000);
    cfg.bootstrap_b = j.value("bootstrap-b", 200);
    cfg.alpha = j.value("alpha", 0.05);
    cfg.seed = j.value("seed", std::uint64_t{1});
    cfg.workers = j.value("workers", 0);
    if (cfg.workers <= 0)
      cfg.workers = static_cast<int>(std::thread::hardware_concurrency());
    if (cfg.workers <= 0) cfg.workers = 1;

    cfg.models.clear();
    for (const auto& jm : j.at("models")) {
      ModelConfig mc;
      mc.kind = model_kind_from_string(jm.at("kind").get<std::string>());
      mc.nu_time = jm.value("nu-time", 10);
      mc.nu_mod = jm.value("nu-mod", 10);
      if (jm.contains("penalty"))
        mc.penalty = penalty_from_string(jm.at("penalty").get<std::string>());
      cfg.models.push_back(mc);
    }
    if (j.contains("tests")) {
      for (const auto& jt : j.at("tests")) {
        TestPair tp;
        tp.null_kind = model_kind_from_string(jt.at("null").get<std::string>());
        tp.full_kind = model_kind_from_string(jt.at("full").get<std::string>());
        cfg.tests.push_back(tp);
      }
    }
    if (j.contains("exposure")) {
      const auto& je = j.at("exposure");
      const std::string type = je.value("type", "ar1");
      if (type == "ar1") {
        cfg.exposure.kind = ExposureSource::Kind::Ar1;
        cfg.exposure.rho = je.value("rho", 0.9);
        cfg.exposure.sd = je.value("sd", 1.0);
      } else if (type == "csv") {
        cfg.exposure.kind = ExposureSource::Kind::Csv;
        cfg.exposure.path = je.at("path").get<std::string>();
      } else {
        throw SpecError("exposure type must be 'ar1' or 'csv'");
      }
    }
  } catch (const json::exception& e) {
    throw SpecError("study config " + path + ": " + e.what());
  }

  cfg.validate();
  return cfg;
}

void write_report_csv(const std::string& path, const StudyReport& report) {
  std::ofstream out(path);
  if (!out) throw SpecError("cannot open file for writing: " + path);
  out.precision(12);
  out << "label,metric,value\n";
  for (size_t i = 0; i < report.model_labels.size(); ++i) {
    FitMetrics avg = report.average_metrics(static_cast<int>(i));
    out << report.model_labels[i] << ",cum_rmse," << avg.cum_rmse << '\n';
    out << report.model_labels[i] << ",cum_cov," << avg.cum_cov << '\n';
    out << report.model_labels[i] << ",pt_rmse," << avg.pt_rmse << '\n';
    out << report.model_labels[i] << ",pt_cov," << avg.pt_cov << '\n';
  }
  for (size_t p = 0; p < report.test_labels.size(); ++p) {
    out << report.test_labels[p] << ",rejection,"
        << report.rejection_rate(static_cast<int>(p), report.config.alpha)
        << '\n';
  }
  out << "study,replicates," << report.replicates.size() << '\n';
  out << "study,failures," << report.failures() << '\n';
  if (!out) throw SpecError("error writing file: " + path);
}

void write_report_json(const std::string& path, const StudyReport& report) {
  json j;
  j["config"] = config_json(report.config);
  j["failures"] = report.failures();

  json averages = json::object();
  for (size_t i = 0; i < report.model_labels.size(); ++i) {
    FitMetrics avg = report.average_metrics(static_cast<int>(i));
    averages[report.model_labels[i]] = {{"cum_rmse", avg.cum_rmse},
                                        {"cum_cov", avg.cum_cov},
                                        {"pt_rmse", avg.pt_rmse},
                                        {"pt_cov", avg.pt_cov}};
  }
  j["averages"] = averages;

  json rejections = json::object();
  for (size_t p = 0; p < report.test_labels.size(); ++p) {
    rejections[report.test_labels[p]] =
        report.rejection_rate(static_cast<int>(p), report.config.alpha);
  }
  j["rejections"] = rejections;

  json reps = json::array();
  for (const auto& r : report.replicates) {
    json jr;
    jr["ok"] = r.ok;
    if (!r.ok) {
      jr["error"] = r.error;
    } else {
      json metrics = json::object();
      for (size_t i = 0; i < report.model_labels.size(); ++i) {
        metrics[report.model_labels[i]] = {{"cum_rmse", r.metrics[i].cum_rmse},
                                           {"cum_cov", r.metrics[i].cum_cov},
                                           {"pt_rmse", r.metrics[i].pt_rmse},
                                           {"pt_cov", r.metrics[i].pt_cov}};
      }
      jr["metrics"] = metrics;
      json pv = json::object();
      for (size_t p = 0; p < report.test_labels.size(); ++p)
        pv[report.test_labels[p]] = r.p_values[p];
      jr["p_values"] = pv;
    }
    reps.push_back(jr);
  }
  j["replicates"] = reps;

  std::ofstream out(path);
  if (!out) throw SpecError("cannot open file for writing: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw SpecError("error writing file: " + path);
}

}  // namespace dlim

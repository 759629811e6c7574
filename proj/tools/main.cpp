// Command line for fitting distributed lag interaction models on CSV data,
// running simulation studies, and bootstrap tests of effect modification.

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <thread>

#include "dlim/csv.hpp"
#include "dlim/effects.hpp"
#include "dlim/error.hpp"
#include "dlim/models.hpp"
#include "dlim/modtest.hpp"
#include "dlim/simlab.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct AnalysisConfig {
  std::string data;
  std::string response;
  std::string exposure_prefix;
  int T = 0;
  std::string modifier;
  std::vector<std::string> covariates;
  std::string family = "gaussian";
  std::string model = "dlim";
  int nu_time = 10;
  int nu_mod = 10;
  std::string penalty = "ps:2,2";
  double alpha = 0.05;
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  int workers = 0;
};

struct LoadedData {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  Eigen::VectorXd m;
  Eigen::MatrixXd Z;  ///< [intercept, modifier, covariates]
};

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  return hw > 0 ? hw : 1;
}

/// Assembles model inputs from the data file, keeping complete cases only.
LoadedData load_analysis_data(const AnalysisConfig& cfg) {
  if (cfg.T < 2) throw dlim::SpecError("--t must be at least 2");
  dlim::CsvTable table = dlim::read_csv(cfg.data);

  std::vector<int> exposure_cols;
  for (int t = 1; t <= cfg.T; ++t) {
    const std::string name = cfg.exposure_prefix + std::to_string(t);
    int j = table.column_index(name);
    if (j < 0)
      throw dlim::SpecError("no column named '" + name + "' in " + cfg.data);
    exposure_cols.push_back(j);
  }
  auto need = [&](const std::string& name) {
    int j = table.column_index(name);
    if (j < 0)
      throw dlim::SpecError("no column named '" + name + "' in " + cfg.data);
    return j;
  };
  const int y_col = need(cfg.response);
  const int m_col = need(cfg.modifier);
  std::vector<int> cov_cols;
  for (const auto& c : cfg.covariates) cov_cols.push_back(need(c));

  const Eigen::Index n_raw = table.values.rows();
  std::vector<int> keep;
  for (Eigen::Index i = 0; i < n_raw; ++i) {
    bool complete = std::isfinite(table.values(i, y_col)) &&
                    std::isfinite(table.values(i, m_col));
    for (int j : exposure_cols) complete = complete && std::isfinite(table.values(i, j));
    for (int j : cov_cols) complete = complete && std::isfinite(table.values(i, j));
    if (complete) keep.push_back(static_cast<int>(i));
  }
  if (keep.size() < static_cast<size_t>(n_raw)) {
    std::cerr << "note: dropped " << (n_raw - keep.size())
              << " rows with missing values\n";
  }
  const int n = static_cast<int>(keep.size());
  if (n == 0) throw dlim::SpecError("no complete-case rows in " + cfg.data);

  LoadedData d;
  d.y.resize(n);
  d.m.resize(n);
  d.X.resize(n, cfg.T);
  d.Z.resize(n, 2 + static_cast<int>(cov_cols.size()));
  for (int i = 0; i < n; ++i) {
    const int r = keep[i];
    d.y(i) = table.values(r, y_col);
    d.m(i) = table.values(r, m_col);
    for (int t = 0; t < cfg.T; ++t) d.X(i, t) = table.values(r, exposure_cols[t]);
    d.Z(i, 0) = 1.0;
    d.Z(i, 1) = d.m(i);
    for (size_t c = 0; c < cov_cols.size(); ++c)
      d.Z(i, 2 + static_cast<int>(c)) = table.values(r, cov_cols[c]);
  }
  return d;
}

dlim::ModelConfig model_config(const AnalysisConfig& cfg,
                               const std::string& kind) {
  dlim::ModelConfig mc;
  mc.kind = dlim::model_kind_from_string(kind);
  mc.nu_time = cfg.nu_time;
  mc.nu_mod = cfg.nu_mod;
  mc.penalty = dlim::penalty_from_string(cfg.penalty);
  mc.family = dlim::family_from_string(cfg.family);
  return mc;
}

json config_echo(const AnalysisConfig& cfg) {
  return {{"data", cfg.data},
          {"response", cfg.response},
          {"exposure-prefix", cfg.exposure_prefix},
          {"t", cfg.T},
          {"modifier", cfg.modifier},
          {"covariates", cfg.covariates},
          {"family", cfg.family},
          {"model", cfg.model},
          {"nu-time", cfg.nu_time},
          {"nu-mod", cfg.nu_mod},
          {"penalty", cfg.penalty},
          {"alpha", cfg.alpha},
          {"seed", cfg.seed}};
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw dlim::SpecError("cannot open file for writing: " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw dlim::SpecError("error writing file: " + path.string());
}

void cmd_fit(const AnalysisConfig& cfg) {
  LoadedData data = load_analysis_data(cfg);
  dlim::ModelSpec spec = dlim::make_model_spec(model_config(cfg, cfg.model),
                                               data.X, data.m, data.Z, data.y);
  dlim::FittedModel fit = dlim::fit_penalized(spec);

  fs::create_directories(cfg.out_dir);
  const fs::path dir(cfg.out_dir);

  Eigen::VectorXd grid = dlim::default_m_grid(data.m);
  dlim::EffectSurface surf = dlim::pointwise_effects(fit, grid, cfg.alpha);
  dlim::CumulativeCurve cum = dlim::cumulative_effects(fit, grid, cfg.alpha);
  std::vector<dlim::Window> windows = dlim::find_windows(surf);
  const double z = dlim::normal_quantile(1.0 - cfg.alpha / 2.0);

  const int G = static_cast<int>(grid.size());
  Eigen::MatrixXd eff(G * cfg.T, 6);
  for (int g = 0; g < G; ++g) {
    for (int t = 0; t < cfg.T; ++t) {
      const double est = surf.estimates(g, t), se = surf.se(g, t);
      eff.row(g * cfg.T + t) << grid(g), t + 1, est, se, est - z * se, est + z * se;
    }
  }
  dlim::write_csv((dir / "effects.csv").string(),
                  {"m", "t", "estimate", "se", "lo", "hi"}, eff);

  Eigen::MatrixXd cm(G, 5);
  for (int g = 0; g < G; ++g) {
    cm.row(g) << grid(g), cum.estimates(g), cum.se(g),
        cum.estimates(g) - z * cum.se(g), cum.estimates(g) + z * cum.se(g);
  }
  dlim::write_csv((dir / "cumulative.csv").string(),
                  {"m", "estimate", "se", "lo", "hi"}, cm);

  Eigen::MatrixXd wm(static_cast<Eigen::Index>(windows.size()), 4);
  for (size_t w = 0; w < windows.size(); ++w) {
    wm.row(static_cast<Eigen::Index>(w)) << windows[w].m, windows[w].t_start,
        windows[w].t_end, windows[w].sign;
  }
  dlim::write_csv((dir / "windows.csv").string(),
                  {"m", "t_start", "t_end", "sign"}, wm);

  json model_json = {
      {"config", config_echo(cfg)},
      {"coefficients", std::vector<double>(fit.coef.data(),
                                           fit.coef.data() + fit.coef.size())},
      {"lambda", std::vector<double>(fit.lambda.data(),
                                     fit.lambda.data() + fit.lambda.size())},
      {"edf", fit.edf},
      {"loglik", fit.loglik},
      {"phi", fit.phi},
      {"p_theta", fit.p_theta},
      {"q", fit.q},
      {"n", static_cast<int>(data.y.size())}};
  write_json_file(dir / "model.json", model_json);
}

void cmd_simulate(const std::string& config_path, const std::string& out_dir,
                  int workers_override) {
  dlim::StudyConfig cfg = dlim::load_study_config(config_path);
  if (workers_override > 0) cfg.workers = workers_override;
  dlim::StudyReport report = dlim::run_study(cfg);
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  dlim::write_report_csv((dir / "report.csv").string(), report);
  dlim::write_report_json((dir / "report.json").string(), report);
  if (report.failures() > 0) {
    std::cerr << "note: " << report.failures() << " of "
              << report.replicates.size() << " replicates failed\n";
  }
}

void cmd_test(const AnalysisConfig& cfg, const std::string& null_kind,
              const std::string& full_kind, int B) {
  // nesting: dlm within dlim-linear within dlim
  auto rank = [](dlim::ModelKind k) {
    switch (k) {
      case dlim::ModelKind::Dlm: return 0;
      case dlim::ModelKind::DlimLinear: return 1;
      default: return 2;
    }
  };
  const dlim::ModelKind nk = dlim::model_kind_from_string(null_kind);
  const dlim::ModelKind fk = dlim::model_kind_from_string(full_kind);
  if (rank(nk) >= rank(fk)) {
    throw dlim::SpecError("'" + null_kind + "' is not nested within '" +
                          full_kind + "'");
  }
  if (B < 100) throw dlim::SpecError("--b must be at least 100");

  LoadedData data = load_analysis_data(cfg);
  dlim::ModelSpec null_spec = dlim::make_model_spec(
      model_config(cfg, null_kind), data.X, data.m, data.Z, data.y);
  dlim::ModelSpec full_spec = dlim::make_model_spec(
      model_config(cfg, full_kind), data.X, data.m, data.Z, data.y);

  dlim::TestResult result =
      dlim::bootstrap_lrt(null_spec, full_spec, B, cfg.seed,
                          resolve_workers(cfg.workers), null_kind, full_kind);

  fs::create_directories(cfg.out_dir);
  json j = {{"config", config_echo(cfg)},
            {"null", null_kind},
            {"full", full_kind},
            {"observed_stat", result.observed_stat},
            {"p_value", result.p_value},
            {"critical_value", result.critical_value(cfg.alpha)},
            {"B", B},
            {"seed", cfg.seed},
            {"dropped", result.dropped}};
  write_json_file(fs::path(cfg.out_dir) / "test.json", j);
}

void add_analysis_flags(CLI::App* cmd, AnalysisConfig& cfg, bool with_model) {
  cmd->add_option("--data", cfg.data, "CSV data file")->required();
  cmd->add_option("--response", cfg.response, "response column")->required();
  cmd->add_option("--exposure-prefix", cfg.exposure_prefix,
                  "exposure column prefix (columns <prefix>1..<prefix>T)")
      ->required();
  cmd->add_option("--t", cfg.T, "number of exposure times T")->required();
  cmd->add_option("--modifier", cfg.modifier, "modifier column")->required();
  cmd->add_option("--covariates", cfg.covariates, "covariate columns");
  cmd->add_option("--family", cfg.family, "gaussian or poisson");
  if (with_model)
    cmd->add_option("--model", cfg.model, "dlm, dlim-linear, or dlim");
  cmd->add_option("--nu-time", cfg.nu_time, "time basis size");
  cmd->add_option("--nu-mod", cfg.nu_mod, "modifier basis size (dlim)");
  cmd->add_option("--penalty", cfg.penalty, "ps:d,d, cr, or none");
  cmd->add_option("--alpha", cfg.alpha, "confidence level for intervals");
  cmd->add_option("--out-dir", cfg.out_dir, "output directory");
  cmd->add_option("--seed", cfg.seed, "random seed");
  cmd->add_option("--workers", cfg.workers, "worker threads (0 = all cores)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"penalized distributed lag interaction models"};
  app.require_subcommand(1);

  AnalysisConfig fit_cfg, test_cfg;
  std::string study_config, sim_out = ".";
  std::string null_kind = "dlm", full_kind = "dlim";
  int B = 1000, sim_workers = 0;

  CLI::App* fit = app.add_subcommand("fit", "fit a model on CSV data");
  add_analysis_flags(fit, fit_cfg, true);

  CLI::App* sim = app.add_subcommand("simulate", "run a simulation study");
  sim->add_option("--config", study_config, "study configuration (JSON)")
      ->required();
  sim->add_option("--out-dir", sim_out, "output directory");
  sim->add_option("--workers", sim_workers,
                  "worker threads (overrides the config)");

  CLI::App* test =
      app.add_subcommand("test", "bootstrap test of effect modification");
  add_analysis_flags(test, test_cfg, false);
  test->add_option("--null", null_kind, "null model kind");
  test->add_option("--full", full_kind, "full model kind");
  test->add_option("--b", B, "bootstrap replicates (minimum 100)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (fit->parsed()) {
      cmd_fit(fit_cfg);
    } else if (sim->parsed()) {
      cmd_simulate(study_config, sim_out, sim_workers);
    } else {
      cmd_test(test_cfg, null_kind, full_kind, B);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

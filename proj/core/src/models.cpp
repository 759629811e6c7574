#include "dlim/models.hpp"

#include "dlim/error.hpp"

namespace dlim {

ModelSpec make_model_spec(const ModelConfig& cfg, const Eigen::MatrixXd& X,
                          const Eigen::VectorXd& m, const Eigen::MatrixXd& Z,
                          const Eigen::VectorXd& y) {
  const double T = static_cast<double>(X.cols());
  BasisSpec time_spec{BasisKind::BSpline, cfg.nu_time, cfg.bspline_degree,
                      {1.0, T}, BsplineBoundary::Uniform};

  BasisSpec mod_spec;
  PenaltyChoice pen = cfg.penalty;
  switch (cfg.kind) {
    case ModelKind::Dlm:
      mod_spec = {BasisKind::Poly, 1, 0, {m.minCoeff(), m.maxCoeff()}};
      pen = PenaltyChoice::linear_interaction();
      break;
    case ModelKind::DlimLinear:
      mod_spec = {BasisKind::Poly, 2, 1, {m.minCoeff(), m.maxCoeff()}};
      pen = PenaltyChoice::linear_interaction();
      break;
    case ModelKind::Dlim:
      mod_spec = {BasisKind::BSpline, cfg.nu_mod, cfg.bspline_degree,
                  {m.minCoeff(), m.maxCoeff()}, BsplineBoundary::Uniform};
      if (pen.kind == PenaltyKind::CR) {
        time_spec.kind = BasisKind::CR;
        mod_spec.kind = BasisKind::CR;
      }
      break;
  }

  ModelSpec spec;
  spec.family = cfg.family;
  spec.crossbasis = build_crossbasis(X, m, time_spec, mod_spec);
  spec.Z = Z;
  spec.y = y;
  const int p_total = spec.p_theta() + spec.q();
  spec.penalties = assemble_penalties(*spec.crossbasis, pen, p_total, 0);
  return spec;
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "dlm") return ModelKind::Dlm;
  if (s == "dlim-linear") return ModelKind::DlimLinear;
  if (s == "dlim") return ModelKind::Dlim;
  throw SpecError("unknown model kind '" + s + "' (expected dlm, dlim-linear, dlim)");
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Dlm: return "dlm";
    case ModelKind::DlimLinear: return "dlim-linear";
    case ModelKind::Dlim: return "dlim";
  }
  return "?";
}

PenaltyChoice penalty_from_string(const std::string& s) {
  if (s == "cr") return PenaltyChoice::cr();
  if (s == "none") return PenaltyChoice::none();
  if (s == "ps") return PenaltyChoice::ps();
  if (s.rfind("ps:", 0) == 0) {
    const std::string rest = s.substr(3);
    size_t comma = rest.find(',');
    if (comma == std::string::npos)
      throw SpecError("penalty '" + s + "': expected ps:d_time,d_mod");
    try {
      int dt = std::stoi(rest.substr(0, comma));
      int dm = std::stoi(rest.substr(comma + 1));
      return PenaltyChoice::ps(dt, dm);
    } catch (const std::exception&) {
      throw SpecError("penalty '" + s + "': difference orders must be integers");
    }
  }
  throw SpecError("unknown penalty '" + s + "' (expected ps:d,d, cr, or none)");
}

std::string to_string(const PenaltyChoice& pen) {
  switch (pen.kind) {
    case PenaltyKind::PS:
      return "ps:" + std::to_string(pen.d_time) + "," + std::to_string(pen.d_mod);
    case PenaltyKind::CR: return "cr";
    case PenaltyKind::LinearInteraction: return "linear-interaction";
    case PenaltyKind::None: return "none";
  }
  return "?";
}

Family family_from_string(const std::string& s) {
  if (s == "gaussian") return Family::Gaussian;
  if (s == "poisson") return Family::Poisson;
  throw SpecError("unknown family '" + s + "' (expected gaussian or poisson)");
}

std::string to_string(Family family) {
  return family == Family::Gaussian ? "gaussian" : "poisson";
}

}  // namespace dlim

#pragma once

#include <Eigen/Dense>
#include <string>

#include "dlim/fit.hpp"

namespace dlim {

/// The three model families compared throughout: a standard DLM (degree-0
/// polynomial modifier basis, i.e. no modification), a DLM with a linear
/// exposure x modifier interaction, and the full DLIM with penalized
/// B-spline bases in both dimensions.
enum class ModelKind { Dlm, DlimLinear, Dlim };

struct ModelConfig {
  ModelKind kind = ModelKind::Dlim;
  int nu_time = 10;
  int nu_mod = 10;  ///< DLIM only
  PenaltyChoice penalty = PenaltyChoice::ps(2, 2);  ///< DLIM only
  Family family = Family::Gaussian;
  int bspline_degree = 3;
};

/// Assembles cross-basis, covariates, and penalty blocks for one model kind.
/// Z must already include the intercept and the modifier main effect.
ModelSpec make_model_spec(const ModelConfig& cfg, const Eigen::MatrixXd& X,
                          const Eigen::VectorXd& m, const Eigen::MatrixXd& Z,
                          const Eigen::VectorXd& y);

ModelKind model_kind_from_string(const std::string& s);
std::string to_string(ModelKind kind);

/// Parses "ps:dt,dm", "ps", "cr" or "none".
PenaltyChoice penalty_from_string(const std::string& s);
std::string to_string(const PenaltyChoice& pen);

Family family_from_string(const std::string& s);
std::string to_string(Family family);

}  // namespace dlim

#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dlim/basis.hpp"

namespace dlim {

/// Bi-dimensional modifier x exposure-time design. Column ordering is
/// TIME-FASTEST everywhere: column index = k * nu_time + j for time-basis
/// index j and modifier-basis index k, matching the theta vector layout
/// theta = [theta_11, ..., theta_{nu_time,1}, theta_12, ...].
struct CrossBasis {
  Eigen::MatrixXd W;        ///< n x (nu_time * nu_mod), rows w(m_i, x_i)
  BasisMatrix time_basis;   ///< C: T x nu_time evaluated at t = 1..T
  BasisSpec mod_spec;
  Eigen::VectorXd mod_knots;  ///< knots realized for the modifier basis
  Eigen::VectorXd modifier;   ///< m, length n

  int nu_time() const { return static_cast<int>(time_basis.values.cols()); }
  int nu_mod() const { return mod_spec.size; }
  int n() const { return static_cast<int>(W.rows()); }
  int T() const { return static_cast<int>(time_basis.values.rows()); }

  /// Modifier basis rows b(m) for new modifier values.
  Eigen::MatrixXd mod_basis_at(const Eigen::VectorXd& m) const;
};

/// Builds the cross-basis rows w_jk(m_i, x_i) = sum_t x_it b_k(m_i) c_j(t).
/// If modifier values fall outside mod_spec.domain the domain is widened to
/// the data range with a notice on stderr.
CrossBasis build_crossbasis(const Eigen::MatrixXd& X, const Eigen::VectorXd& m,
                            const BasisSpec& time_spec, const BasisSpec& mod_spec);

enum class PenaltyKind { PS, CR, LinearInteraction, None };

struct PenaltyChoice {
  PenaltyKind kind = PenaltyKind::PS;
  int d_time = 2;
  int d_mod = 2;

  static PenaltyChoice ps(int d_time = 2, int d_mod = 2) {
    return {PenaltyKind::PS, d_time, d_mod};
  }
  static PenaltyChoice cr() { return {PenaltyKind::CR, 2, 2}; }
  static PenaltyChoice linear_interaction() {
    return {PenaltyKind::LinearInteraction, 2, 2};
  }
  static PenaltyChoice none() { return {PenaltyKind::None, 2, 2}; }
};

/// One smoothing-parameter block of the total penalty, embedded in the full
/// coefficient vector (nonzero only on the theta columns).
struct PenaltyBlock {
  Eigen::MatrixXd Smat;  ///< p_total x p_total, PSD
  std::string label;
  int offset = 0;  ///< first theta column
  int dim = 0;     ///< theta block size

  Eigen::MatrixXd block() const { return Smat.block(offset, offset, dim, dim); }
};

/// Penalty blocks for the cross-basis coefficients.
///   PS / CR: S_mod (x) I_time and I_mod (x) S_time.
///   LinearInteraction (polynomial modifier basis): one block
///   diag(e_k) (x) S_time per modifier column.
///   None: empty list.
std::vector<PenaltyBlock> assemble_penalties(const CrossBasis& cb,
                                             const PenaltyChoice& pen,
                                             int p_total, int theta_offset);

}  // namespace dlim

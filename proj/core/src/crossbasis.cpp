#include "dlim/crossbasis.hpp"

#include <cmath>
#include <iostream>

#include "dlim/error.hpp"

namespace dlim {

namespace {

Eigen::MatrixXd kron(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  Eigen::MatrixXd out(A.rows() * B.rows(), A.cols() * B.cols());
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < A.cols(); ++j)
      out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return out;
}

struct ModBasisBuild {
  Eigen::MatrixXd values;
  Eigen::VectorXd knots;
  BasisSpec spec;
};

ModBasisBuild build_mod_basis(const Eigen::VectorXd& m, BasisSpec spec) {
  if (spec.kind != BasisKind::Poly) {
    const double lo = m.minCoeff(), hi = m.maxCoeff();
    if (lo < spec.domain.lo || hi > spec.domain.hi) {
      std::cerr << "notice: modifier values outside [" << spec.domain.lo << ", "
                << spec.domain.hi << "]; widening domain to data range ["
                << std::min(lo, spec.domain.lo) << ", "
                << std::max(hi, spec.domain.hi) << "]\n";
      spec.domain.lo = std::min(lo, spec.domain.lo);
      spec.domain.hi = std::max(hi, spec.domain.hi);
    }
  }
  ModBasisBuild out;
  switch (spec.kind) {
    case BasisKind::BSpline: {
      BasisMatrix bm = bspline_basis(m, spec);
      out.values = std::move(bm.values);
      out.knots = std::move(bm.knots);
      break;
    }
    case BasisKind::CR: {
      auto [bm, pen] = cr_basis(m, spec);
      out.values = std::move(bm.values);
      out.knots = std::move(bm.knots);
      break;
    }
    case BasisKind::Poly:
      out.values = poly_basis(m, spec).values;
      break;
  }
  out.spec = spec;
  return out;
}

}  // namespace

Eigen::MatrixXd CrossBasis::mod_basis_at(const Eigen::VectorXd& m) const {
  return eval_basis(m, mod_spec, mod_knots);
}

CrossBasis build_crossbasis(const Eigen::MatrixXd& X, const Eigen::VectorXd& m,
                            const BasisSpec& time_spec, const BasisSpec& mod_spec) {
  if (X.rows() != m.size())
    throw SpecError("build_crossbasis: exposure rows and modifier length differ");
  if (!X.allFinite())
    throw SpecError("build_crossbasis: exposure matrix contains NaN/Inf");
  time_spec.validate();
  mod_spec.validate();

  const int T = static_cast<int>(X.cols());
  Eigen::VectorXd tgrid(T);
  for (int t = 0; t < T; ++t) tgrid[t] = t + 1;

  CrossBasis cb;
  switch (time_spec.kind) {
    case BasisKind::BSpline:
      cb.time_basis = bspline_basis(tgrid, time_spec);
      break;
    case BasisKind::CR:
      cb.time_basis = cr_basis(tgrid, time_spec).first;
      break;
    case BasisKind::Poly:
      cb.time_basis = poly_basis(tgrid, time_spec);
      break;
  }

  ModBasisBuild mb = build_mod_basis(m, mod_spec);
  cb.mod_spec = mb.spec;
  cb.mod_knots = mb.knots;
  cb.modifier = m;

  // w(m_i, x_i) = b(m_i) (x) (C' x_i), time-fastest layout
  const Eigen::MatrixXd XC = X * cb.time_basis.values;  // n x nu_time
  const int nt = cb.nu_time(), nm = cb.nu_mod();
  cb.W.resize(X.rows(), nt * nm);
  for (int k = 0; k < nm; ++k)
    cb.W.middleCols(k * nt, nt) = XC.array().colwise() * mb.values.col(k).array();
  return cb;
}

std::vector<PenaltyBlock> assemble_penalties(const CrossBasis& cb,
                                             const PenaltyChoice& pen,
                                             int p_total, int theta_offset) {
  const int nt = cb.nu_time(), nm = cb.nu_mod();
  const int dim = nt * nm;
  if (theta_offset < 0 || theta_offset + dim > p_total)
    throw SpecError("assemble_penalties: theta block does not fit in p_total");

  auto embed = [&](const Eigen::MatrixXd& S, const std::string& label) {
    PenaltyBlock b;
    b.Smat = Eigen::MatrixXd::Zero(p_total, p_total);
    b.Smat.block(theta_offset, theta_offset, dim, dim) = S;
    b.label = label;
    b.offset = theta_offset;
    b.dim = dim;
    return b;
  };

  std::vector<PenaltyBlock> out;
  switch (pen.kind) {
    case PenaltyKind::None:
      break;
    case PenaltyKind::PS: {
      if (cb.time_basis.spec.kind != BasisKind::BSpline ||
          cb.mod_spec.kind != BasisKind::BSpline)
        throw SpecError("PS penalty requires B-spline bases in both dimensions");
      const Eigen::MatrixXd St = difference_penalty(nt, pen.d_time, true).S;
      const Eigen::MatrixXd Sm = difference_penalty(nm, pen.d_mod, true).S;
      out.push_back(embed(kron(Sm, Eigen::MatrixXd::Identity(nt, nt)), "mod"));
      out.push_back(embed(kron(Eigen::MatrixXd::Identity(nm, nm), St), "time"));
      break;
    }
    case PenaltyKind::CR: {
      if (cb.time_basis.spec.kind != BasisKind::CR ||
          cb.mod_spec.kind != BasisKind::CR)
        throw SpecError("CR penalty requires CR bases in both dimensions");
      const Eigen::MatrixXd St = cr_penalty(cb.time_basis.knots).S;
      const Eigen::MatrixXd Sm = cr_penalty(cb.mod_knots).S;
      out.push_back(embed(kron(Sm, Eigen::MatrixXd::Identity(nt, nt)), "mod"));
      out.push_back(embed(kron(Eigen::MatrixXd::Identity(nm, nm), St), "time"));
      break;
    }
    case PenaltyKind::LinearInteraction: {
      if (cb.mod_spec.kind != BasisKind::Poly)
        throw SpecError(
            "LinearInteraction penalty requires a polynomial modifier basis");
      const Eigen::MatrixXd St = difference_penalty(nt, pen.d_time, true).S;
      for (int k = 0; k < nm; ++k) {
        Eigen::MatrixXd Ek = Eigen::MatrixXd::Zero(nm, nm);
        Ek(k, k) = 1.0;
        out.push_back(embed(kron(Ek, St), "time[" + std::to_string(k) + "]"));
      }
      break;
    }
  }
  return out;
}

}  // namespace dlim

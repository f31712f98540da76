#pragma once

#include <string>

#include "csp_mimo/compression.hpp"
#include "csp_mimo/linalg.hpp"

namespace csp {

// Capon / MVDR weights, one column per angle cell:
//   w_l = R_C^{-1} lambda_l / (lambda_l^H R_C^{-1} lambda_l).
// R_C is diagonally loaded first if its condition number exceeds 1e12.
inline CMatrix capon_weights(const CMatrix& rc, const CMatrix& lambda) {
  if (rc.rows() != rc.cols() || rc.rows() != lambda.rows()) {
    throw InvalidArgument("capon_weights: rc must be M1 x M1 and lambda M1 x L");
  }
  HermitianFactor factor(rc);
  if (!factor.ok()) throw ConfigurationError("capon_weights: R_C is singular after loading");
  CMatrix w = factor.solve(lambda);
  for (Eigen::Index l = 0; l < lambda.cols(); ++l) {
    const double col_norm = lambda.col(l).norm();
    const cplx denom = lambda.col(l).dot(w.col(l));  // lambda^H R^{-1} lambda
    if (col_norm == 0.0 || !(std::abs(denom) > 0.0) || !std::isfinite(std::abs(denom))) {
      throw DegenerateCell(static_cast<std::size_t>(l),
                           "capon_weights: degenerate cell " + std::to_string(l) +
                               " (lambda_l^H R_C^{-1} lambda_l vanishes)");
    }
    // The denominator is real for Hermitian R_C; keep only the real part.
    w.col(l) /= denom.real();
  }
  return w;
}

struct BeamformedModel {
  CMatrix w;      // M1 x L
  CMatrix theta;  // L x L, W^H Lambda
  CMatrix rt;     // L x L, W^H R_C W
  RMatrix phi2;   // M2 x L
  CMatrix a_cov;  // M2 x M2, Phi2 R_T Phi2^T (before loading)
  CVector z;      // M2, empty until a snapshot is applied
  HermitianFactor a_factor;

  // Derived once: compressed dictionary Phi2 Theta, its whitened form
  // A^{-1} Phi2 Theta, and d_t = theta_t^H Phi2^T A^{-1} Phi2 theta_t.
  CMatrix dict;
  CMatrix whitened_dict;
  RVector d;
  // Largest imaginary residue of d_t relative to |d_t| (should be ~0).
  double d_imag_residue = 0.0;

  std::size_t m2() const { return static_cast<std::size_t>(phi2.rows()); }
  std::size_t cells() const { return static_cast<std::size_t>(theta.cols()); }

  // z = Phi2 W^H xbar.
  CVector reduce(const CVector& xbar) const {
    return phi2.cast<cplx>() * (w.adjoint() * xbar);
  }
};

// Scenario-fixed second stage (z left empty).
inline BeamformedModel beamform_model(const CompressedModel& cm, const CMatrix& w, const RMatrix& phi2) {
  if (w.rows() != cm.lambda.rows() || w.cols() != cm.lambda.cols()) {
    throw InvalidArgument("suppress_and_compress: W must be M1 x L");
  }
  if (phi2.cols() != w.cols()) throw InvalidArgument("suppress_and_compress: phi2 must have L columns");
  BeamformedModel bm;
  bm.w = w;
  bm.phi2 = phi2;
  bm.theta = w.adjoint() * cm.lambda;
  bm.rt = hermitian_part(w.adjoint() * cm.rc * w);
  const CMatrix p2 = phi2.cast<cplx>();
  bm.a_cov = hermitian_part(p2 * bm.rt * p2.transpose());
  if (!bm.a_factor.compute(bm.a_cov)) {
    throw ConfigurationError(
        "suppress_and_compress: A = Phi2 R_T Phi2^T is singular even after diagonal loading; "
        "use a smaller M2 (larger cr2)");
  }
  bm.dict = p2 * bm.theta;
  bm.whitened_dict = bm.a_factor.solve(bm.dict);
  bm.d.resize(bm.dict.cols());
  for (Eigen::Index t = 0; t < bm.dict.cols(); ++t) {
    const cplx dt = bm.dict.col(t).dot(bm.whitened_dict.col(t));
    bm.d[t] = dt.real();
    if (std::abs(dt) > 0.0) {
      bm.d_imag_residue = std::max(bm.d_imag_residue, std::abs(dt.imag()) / std::abs(dt));
    }
  }
  return bm;
}

inline BeamformedModel suppress_and_compress(const CompressedModel& cm, const CMatrix& w,
                                             const RMatrix& phi2) {
  BeamformedModel bm = beamform_model(cm, w, phi2);
  if (cm.xbar.size() != cm.lambda.rows()) {
    throw InvalidArgument("suppress_and_compress: xbar must have M1 entries");
  }
  bm.z = bm.reduce(cm.xbar);
  return bm;
}

}  // namespace csp

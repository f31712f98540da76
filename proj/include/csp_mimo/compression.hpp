#pragma once

#include "csp_mimo/linalg.hpp"
#include "csp_mimo/model.hpp"
#include "csp_mimo/random.hpp"

namespace csp {

// i.i.d. N(0, 1) real entries, filled row by row.
inline RMatrix draw_compression_matrix(std::size_t rows, std::size_t cols, RandomStream& rng) {
  if (rows < 1 || cols < 1) throw InvalidArgument("compression matrix must be non-empty");
  if (rows > cols) {
    throw InvalidArgument("compression matrix must not expand: rows > cols");
  }
  RMatrix phi(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < phi.rows(); ++r) {
    for (Eigen::Index c = 0; c < phi.cols(); ++c) phi(r, c) = rng.normal();
  }
  return phi;
}

struct CompressedModel {
  RMatrix phi1;    // M1 x RN
  CMatrix lambda;  // M1 x L, Phi1 Psi
  CMatrix rc;      // M1 x M1, Phi1 R~_N Phi1^T
  CVector xbar;    // M1

  std::size_t m1() const { return static_cast<std::size_t>(phi1.rows()); }
};

inline CVector compress(const RMatrix& phi, const CVector& x) {
  if (phi.cols() != x.size()) throw InvalidArgument("compress: dimension mismatch");
  return phi.cast<cplx>() * x;
}

// Scenario-fixed part of the first stage (xbar left empty).
inline CompressedModel compress_model(const MeasurementModel& model, const RMatrix& phi1) {
  if (static_cast<std::size_t>(phi1.cols()) != model.stacked_size()) {
    throw InvalidArgument("compress_stage1: phi1 must have RN columns");
  }
  CompressedModel cm;
  cm.phi1 = phi1;
  const CMatrix phi = phi1.cast<cplx>();
  cm.lambda = phi * model.psi;
  cm.rc = hermitian_part(phi * model.rn_cov * phi.transpose());
  return cm;
}

inline CompressedModel compress_stage1(const MeasurementModel& model, const CVector& x,
                                       const RMatrix& phi1) {
  if (static_cast<std::size_t>(x.size()) != model.stacked_size()) {
    throw InvalidArgument("compress_stage1: snapshot length must be RN");
  }
  CompressedModel cm = compress_model(model, phi1);
  cm.xbar = compress(phi1, x);
  return cm;
}

}  // namespace csp

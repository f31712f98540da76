#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "csp_mimo/types.hpp"

namespace csp {

inline constexpr double kMaxCondition = 1e12;
inline constexpr double kLoadingFactor = 1e-8;
inline constexpr double kRankTolerance = 1e-10;

// Largest deviation from Hermitian symmetry.
inline double hermitian_residual(const CMatrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline CMatrix hermitian_part(const CMatrix& m) { return 0.5 * (m + m.adjoint()); }

inline RVector hermitian_eigenvalues(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

// Spectral condition number of a Hermitian matrix; +inf when the smallest
// eigenvalue is not positive.
inline double hermitian_condition(const CMatrix& m) {
  const RVector ev = hermitian_eigenvalues(m);
  const double lo = ev.minCoeff();
  const double hi = ev.maxCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

// Cholesky factorization of a Hermitian PSD matrix. When the condition number
// exceeds kMaxCondition the factored matrix is loaded with
// kLoadingFactor * trace / dim on the diagonal.
class HermitianFactor {
 public:
  HermitianFactor() = default;

  explicit HermitianFactor(const CMatrix& m) { compute(m); }

  // Returns false if the (possibly loaded) matrix is still not PD.
  bool compute(const CMatrix& m) {
    if (m.rows() != m.cols() || m.rows() == 0) {
      throw InvalidArgument("HermitianFactor: matrix must be square and non-empty");
    }
    CMatrix h = hermitian_part(m);
    condition_ = hermitian_condition(h);
    loading_ = 0.0;
    if (!(condition_ <= kMaxCondition)) {
      const double dim = static_cast<double>(h.rows());
      loading_ = kLoadingFactor * h.trace().real() / dim;
      h.diagonal().array() += loading_;
    }
    llt_.compute(h);
    ok_ = llt_.info() == Eigen::Success;
    if (ok_) {
      const RVector diag = llt_.matrixL().toDenseMatrix().diagonal().real();
      ok_ = (diag.array() > 0.0).all() && diag.allFinite();
    }
    return ok_;
  }

  bool ok() const { return ok_; }
  bool loaded() const { return loading_ > 0.0; }
  double loading() const { return loading_; }
  double condition() const { return condition_; }
  Eigen::Index dim() const { return llt_.rows(); }

  template <typename Rhs>
  auto solve(const Eigen::MatrixBase<Rhs>& b) const {
    return llt_.solve(b);
  }

  // Lower-triangular factor L with (loaded) matrix = L L^H.
  CMatrix lower() const { return llt_.matrixL(); }

  double log_det() const {
    const auto l = llt_.matrixLLT();
    double acc = 0.0;
    for (Eigen::Index k = 0; k < l.rows(); ++k) acc += std::log(l(k, k).real());
    return 2.0 * acc;
  }

 private:
  Eigen::LLT<CMatrix> llt_;
  double condition_ = 0.0;
  double loading_ = 0.0;
  bool ok_ = false;
};

struct LeastSquaresSolution {
  CVector coefficients;
  Eigen::Index rank = 0;
  bool rank_deficient = false;
};

// Minimum-norm least squares B^+ z, singular values below
// kRankTolerance * sigma_max treated as zero.
inline LeastSquaresSolution least_squares(const CMatrix& b, const CVector& z) {
  Eigen::BDCSVD<CMatrix> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(kRankTolerance);
  LeastSquaresSolution out;
  out.coefficients = svd.solve(z);
  out.rank = svd.rank();
  out.rank_deficient = out.rank < std::min(b.rows(), b.cols());
  return out;
}

}  // namespace csp

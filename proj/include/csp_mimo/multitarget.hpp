#pragma once

#include <algorithm>
#include <vector>

#include "csp_mimo/detector.hpp"
#include "csp_mimo/linalg.hpp"

namespace csp {

struct MultiTargetResult {
  std::vector<std::size_t> cells;  // in order of detection
  CVector amplitudes;              // aligned with cells
  std::size_t count = 0;
  CVector beta_hat;                // length L, nonzero only on cells
  bool stalled = false;            // deflation re-selected an accepted cell
  bool condition_warning = false;  // rank-deficient LS refit
  std::vector<double> residual_norms;  // ||z_r|| after each accepted step
};

// Amplitude refit used by deflation. LeastSquares is the plain projection onto
// Phi2 Theta[A]. Whitened weights the fit by A^{-1}, the same metric the cell
// scan uses, so strong residual clutter is not folded back into the residual.
enum class Refit { LeastSquares, Whitened };

struct DeflationOptions {
  double pfa = 1e-2;
  std::size_t max_iters = 0;  // 0 means L
  // Known-count protocol: skip the threshold test, exclude accepted cells
  // from the argmax, and run exactly max_iters steps.
  bool known_count = false;
  Refit refit = Refit::LeastSquares;
};

namespace detail {

// Joint LS refit over the accepted cells; returns the new residual.
inline CVector refit(const CMatrix& dict, const CVector& z, MultiTargetResult& out) {
  CMatrix sub(dict.rows(), static_cast<Eigen::Index>(out.cells.size()));
  for (std::size_t k = 0; k < out.cells.size(); ++k) {
    sub.col(static_cast<Eigen::Index>(k)) = dict.col(static_cast<Eigen::Index>(out.cells[k]));
  }
  const LeastSquaresSolution ls = least_squares(sub, z);
  out.amplitudes = ls.coefficients;
  out.condition_warning = out.condition_warning || ls.rank_deficient;
  CVector residual = z - sub * out.amplitudes;
  out.residual_norms.push_back(residual.norm());
  return residual;
}

// Generalized LS: minimizes (z - B a)^H A^{-1} (z - B a).
inline CVector whitened_refit(const BeamformedModel& bm, const CVector& z, MultiTargetResult& out) {
  const auto k = static_cast<Eigen::Index>(out.cells.size());
  CMatrix sub(bm.dict.rows(), k), wsub(bm.dict.rows(), k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto c = static_cast<Eigen::Index>(out.cells[static_cast<std::size_t>(j)]);
    sub.col(j) = bm.dict.col(c);
    wsub.col(j) = bm.whitened_dict.col(c);
  }
  const CMatrix gram = hermitian_part(wsub.adjoint() * sub);
  const CVector rhs = wsub.adjoint() * z;
  const LeastSquaresSolution ls = least_squares(gram, rhs);
  out.amplitudes = ls.coefficients;
  out.condition_warning = out.condition_warning || ls.rank_deficient;
  CVector residual = z - sub * out.amplitudes;
  out.residual_norms.push_back(residual.norm());
  return residual;
}

inline void finish(MultiTargetResult& out, std::size_t cells) {
  out.count = out.cells.size();
  out.beta_hat = CVector::Zero(static_cast<Eigen::Index>(cells));
  for (std::size_t k = 0; k < out.count; ++k) {
    out.beta_hat[static_cast<Eigen::Index>(out.cells[k])] = out.amplitudes[static_cast<Eigen::Index>(k)];
  }
}

}  // namespace detail

// Detect-and-subtract loop: single-target GLRT on the residual, accept if the
// statistic clears its threshold, refit all accepted amplitudes jointly by
// least squares on Phi2 Theta[A], recompute the residual.
inline MultiTargetResult deflation_detect(const CVector& z, const BeamformedModel& bm, double sigma_alpha_sq,
                                          const DeflationOptions& opts) {
  if (static_cast<std::size_t>(z.size()) != bm.m2()) throw InvalidArgument("deflation_detect: z must have M2 entries");
  const std::size_t cells = bm.cells();
  const std::size_t max_iters = opts.max_iters == 0 ? cells : opts.max_iters;
  if (!opts.known_count) check_probability(opts.pfa, "pfa");
  if (opts.known_count && max_iters > cells) throw InvalidArgument("deflation_detect: max_iters exceeds L");

  MultiTargetResult out;
  std::vector<bool> accepted(cells, false);
  CVector residual = z;
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    const CellStatistics stats = scan_cells(residual, bm, sigma_alpha_sq);
    std::size_t t_hat;
    if (opts.known_count) {
      t_hat = argmax_cell(stats.log_lrt, &accepted);
    } else {
      const DetectionOutcome det = detect_single(stats, opts.pfa);
      if (!det.detected) break;
      t_hat = det.t_hat;
      if (accepted[t_hat]) {
        out.stalled = true;
        break;
      }
    }
    accepted[t_hat] = true;
    out.cells.push_back(t_hat);
    residual = opts.refit == Refit::Whitened ? detail::whitened_refit(bm, z, out) : detail::refit(bm.dict, z, out);
  }
  detail::finish(out, cells);
  return out;
}

inline MultiTargetResult deflation_detect(const CVector& z, const BeamformedModel& bm, double sigma_alpha_sq,
                                          double pfa, std::size_t max_iters = 0) {
  DeflationOptions opts;
  opts.pfa = pfa;
  opts.max_iters = max_iters;
  return deflation_detect(z, bm, sigma_alpha_sq, opts);
}

// Orthogonal matching pursuit with a known sparsity q. Correlations are
// normalized by column norm.
inline MultiTargetResult omp_baseline(const CVector& z, const CMatrix& dict, std::size_t q) {
  const auto cells = static_cast<std::size_t>(dict.cols());
  if (q < 1 || q > cells) throw InvalidArgument("omp_baseline: need 1 <= q <= L");
  if (dict.rows() != z.size()) throw InvalidArgument("omp_baseline: dictionary rows must match z");
  const RVector norms = dict.colwise().norm().transpose();

  MultiTargetResult out;
  CVector residual = z;
  for (std::size_t iter = 0; iter < q; ++iter) {
    const CVector corr = dict.adjoint() * residual;
    RVector score(corr.size());
    for (Eigen::Index l = 0; l < corr.size(); ++l) {
      score[l] = norms[l] > 0.0 ? std::abs(corr[l]) / norms[l] : 0.0;
    }
    const std::size_t pick = argmax_cell(score);
    if (std::find(out.cells.begin(), out.cells.end(), pick) != out.cells.end()) {
      // Residual is orthogonal to every selected column; nothing left to explain.
      out.stalled = true;
      break;
    }
    out.cells.push_back(pick);
    residual = detail::refit(dict, z, out);
  }
  detail::finish(out, cells);
  return out;
}

}  // namespace csp

#pragma once

#include <cmath>
#include <limits>
#include <utility>

#include "csp_mimo/beamformer.hpp"
#include "csp_mimo/config.hpp"
#include "csp_mimo/model.hpp"

namespace csp {

struct CellStatistics {
  RVector d;        // theta_t^H Phi2^T A^{-1} Phi2 theta_t
  CVector e;        // theta_t^H Phi2^T A^{-1} z
  RVector log_lrt;  // log L(z|t)

  std::size_t cells() const { return static_cast<std::size_t>(d.size()); }
};

struct DetectionOutcome {
  bool detected = false;
  std::size_t t_hat = 0;
  double statistic = 0.0;  // |e_{t_hat}|
  double eta = 0.0;
};

// log L(z|t) = |e|^2 s^2 / (d s^2 + 1) - log(d s^2 + 1).
inline double log_likelihood_ratio(double d, cplx e, double sigma_alpha_sq) {
  const double g = d * sigma_alpha_sq;
  return std::norm(e) * sigma_alpha_sq / (g + 1.0) - std::log1p(g);
}

inline void check_probability(double p, const char* what) {
  if (!(p > 0.0) || !(p <= 1.0)) throw InvalidArgument(std::string(what) + " must lie in (0, 1]");
}

inline CellStatistics scan_cells(const CVector& z, const BeamformedModel& bm, double sigma_alpha_sq) {
  if (static_cast<std::size_t>(z.size()) != bm.m2()) throw InvalidArgument("scan_cells: z must have M2 entries");
  CellStatistics s;
  s.d = bm.d;
  s.e = bm.whitened_dict.adjoint() * z;
  s.log_lrt.resize(s.d.size());
  for (Eigen::Index t = 0; t < s.d.size(); ++t) {
    s.log_lrt[t] = log_likelihood_ratio(s.d[t], s.e[t], sigma_alpha_sq);
  }
  return s;
}

// Detection threshold for |e_t| given d_t: eta^2 = -d_t ln(pfa).
inline double detection_threshold(double d, double pfa) {
  check_probability(pfa, "pfa");
  return std::sqrt(std::max(0.0, -d * std::log(pfa)));
}

// Index of the largest entry; ties go to the lowest index. Cells with
// mask[t] == true are skipped when a mask is supplied.
inline std::size_t argmax_cell(const RVector& score, const std::vector<bool>* mask = nullptr) {
  std::size_t best = score.size();
  double best_v = -std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t < score.size(); ++t) {
    if (mask && (*mask)[static_cast<std::size_t>(t)]) continue;
    if (best == static_cast<std::size_t>(score.size()) || score[t] > best_v) {
      best = static_cast<std::size_t>(t);
      best_v = score[t];
    }
  }
  if (best == static_cast<std::size_t>(score.size())) throw InvalidArgument("argmax_cell: no eligible cell");
  return best;
}

inline DetectionOutcome decide_at(const CellStatistics& stats, std::size_t t, double pfa) {
  DetectionOutcome out;
  out.t_hat = t;
  out.statistic = std::abs(stats.e[static_cast<Eigen::Index>(t)]);
  out.eta = detection_threshold(stats.d[static_cast<Eigen::Index>(t)], pfa);
  out.detected = out.statistic > out.eta;
  return out;
}

// GLRT: t_hat maximizes the full likelihood ratio, then |e_{t_hat}| is
// compared against the threshold computed from d_{t_hat}.
inline DetectionOutcome detect_single(const CellStatistics& stats, double pfa) {
  check_probability(pfa, "pfa");
  return decide_at(stats, argmax_cell(stats.log_lrt), pfa);
}

struct LogDensities {
  double log_f0 = 0.0;  // log f(z | H0)
  double log_f1 = 0.0;  // log f(z | H1, t)
};

// Closed-form log-densities of z under H0 and under H1 at cell t with the
// amplitude marginalized out. Recomputes its own solves against A rather
// than reusing the cached whitened dictionary.
inline LogDensities evaluate_pdfs(const CVector& z, const BeamformedModel& bm, double sigma_alpha_sq,
                                  std::size_t t) {
  if (t >= bm.cells()) throw InvalidArgument("evaluate_pdfs: cell index out of range");
  if (static_cast<std::size_t>(z.size()) != bm.m2()) throw InvalidArgument("evaluate_pdfs: z must have M2 entries");
  const double m2 = static_cast<double>(bm.m2());
  const CVector a_inv_z = bm.a_factor.solve(z);
  const double quad = z.dot(a_inv_z).real();
  LogDensities out;
  out.log_f0 = -m2 * std::log(kPi) - bm.a_factor.log_det() - quad;

  const CVector col = bm.phi2.cast<cplx>() * bm.theta.col(static_cast<Eigen::Index>(t));
  const CVector a_inv_col = bm.a_factor.solve(col);
  const double d = col.dot(a_inv_col).real();
  const cplx e = col.dot(a_inv_z);
  const double g = sigma_alpha_sq * d;
  out.log_f1 = out.log_f0 - std::log1p(g) + std::norm(e) * sigma_alpha_sq / (g + 1.0);
  return out;
}

// Pd = Pfa^(1 / (1 + d sigma_alpha^2)).
inline double theoretical_roc(double d, double sigma_alpha_sq, double pfa) {
  if (!(d >= 0.0)) throw InvalidArgument("theoretical_roc: d must be >= 0");
  if (!(sigma_alpha_sq >= 0.0)) throw InvalidArgument("theoretical_roc: sigma_alpha_sq must be >= 0");
  check_probability(pfa, "pfa");
  return std::pow(pfa, 1.0 / (1.0 + d * sigma_alpha_sq));
}

struct SncrReport {
  double sncr_in = 0.0;
  double sncr_out = 0.0;
  double sncr_out_roc = 0.0;  // +inf when pd == 1
};

inline SncrReport sncr(const RadarConfig& config, const MeasurementModel& model, double d_t, double pfa,
                       double pd) {
  check_probability(pfa, "pfa");
  check_probability(pd, "pd");
  SncrReport r;
  const double rn = static_cast<double>(config.stacked_size());
  r.sncr_in = config.sigma_alpha_sq * rn * config.transmit_power() / model.rn_cov.trace().real();
  r.sncr_out = 2.0 * config.sigma_alpha_sq * d_t;
  if (pd == 1.0) {
    r.sncr_out_roc = std::numeric_limits<double>::infinity();
  } else {
    r.sncr_out_roc = 2.0 * (std::log(pfa) / std::log(pd) - 1.0);
  }
  return r;
}

}  // namespace csp

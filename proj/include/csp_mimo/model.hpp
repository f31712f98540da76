#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "csp_mimo/config.hpp"
#include "csp_mimo/linalg.hpp"
#include "csp_mimo/random.hpp"
#include "csp_mimo/types.hpp"

namespace csp {

// Half-wavelength ULA response toward angle_deg (measured from broadside):
// element k is exp(j*pi*k*sin(angle)).
inline CVector steering_vector(double angle_deg, std::size_t count) {
  if (!std::isfinite(angle_deg)) throw InvalidArgument("steering_vector: non-finite angle");
  if (count < 1) throw InvalidArgument("steering_vector: count must be >= 1");
  const double phase = kPi * std::sin(angle_deg * kPi / 180.0);
  CVector v(static_cast<Eigen::Index>(count));
  for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = std::polar(1.0, phase * static_cast<double>(k));
  return v;
}

// Unit-modulus, uniformly random-phase transmit sequences s_i(n), I x N.
inline CMatrix draw_waveforms(std::size_t transmitters, std::size_t samples, RandomStream& rng) {
  CMatrix s(static_cast<Eigen::Index>(transmitters), static_cast<Eigen::Index>(samples));
  for (Eigen::Index n = 0; n < s.cols(); ++n) {
    for (Eigen::Index i = 0; i < s.rows(); ++i) s(i, n) = rng.unit_phase();
  }
  return s;
}

// Stacked response of a scatterer at angle_deg: block n (R rows) holds
// b(theta) a^H(theta) s(n).
inline CVector stacked_response(double angle_deg, std::size_t receivers, const CMatrix& waveforms) {
  const CVector a = steering_vector(angle_deg, static_cast<std::size_t>(waveforms.rows()));
  const CVector b = steering_vector(angle_deg, receivers);
  const Eigen::Index r = static_cast<Eigen::Index>(receivers);
  // a^H s(n) for every n at once.
  const CVector gain = (a.adjoint() * waveforms).transpose();
  CVector out(r * waveforms.cols());
  for (Eigen::Index n = 0; n < waveforms.cols(); ++n) out.segment(n * r, r) = b * gain[n];
  return out;
}

// R~_N = sigma_c^2 sum_l psi_l psi_l^H + sigma_n^2 I over the clutter cells,
// with sigma_c^2 chosen so that the clutter-to-noise trace ratio equals
// 10^(cnr_db/10).
inline CMatrix clutter_covariance(const RadarConfig& config, const CMatrix& psi, double sigma_n_sq,
                                  double* sigma_c_sq_out = nullptr) {
  if (static_cast<std::size_t>(psi.cols()) != config.cells()) {
    throw InvalidArgument("clutter_covariance: psi must have one column per grid cell");
  }
  const Eigen::Index rn = psi.rows();
  CMatrix clutter(rn, 0);
  {
    std::vector<Eigen::Index> keep;
    for (std::size_t l = 0; l < config.cells(); ++l)
      if (config.clutter_cell(l)) keep.push_back(static_cast<Eigen::Index>(l));
    clutter.resize(rn, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) clutter.col(static_cast<Eigen::Index>(k)) = psi.col(keep[k]);
  }
  const double noise_trace = sigma_n_sq * static_cast<double>(rn);
  const double gram_trace = clutter.squaredNorm();
  double sigma_c_sq = 0.0;
  if (!(std::isinf(config.cnr_db) && config.cnr_db < 0) && gram_trace > 0.0) {
    sigma_c_sq = db_to_linear(config.cnr_db) * noise_trace / gram_trace;
  }
  if (sigma_c_sq_out) *sigma_c_sq_out = sigma_c_sq;
  CMatrix cov = sigma_c_sq * (clutter * clutter.adjoint());
  cov.diagonal().array() += sigma_n_sq;
  return hermitian_part(cov);
}

struct MeasurementModel {
  std::size_t receivers = 0;
  std::vector<double> grid_deg;
  CMatrix psi;        // RN x L
  CMatrix waveforms;  // I x N
  CMatrix rn_cov;     // RN x RN
  double sigma_n_sq = 0.0;
  double sigma_c_sq = 0.0;
  CMatrix noise_factor;  // lower factor G, rn_cov = G G^H

  std::size_t stacked_size() const { return static_cast<std::size_t>(psi.rows()); }
  std::size_t cells() const { return static_cast<std::size_t>(psi.cols()); }
};

// Builds the model around explicitly supplied waveforms.
inline MeasurementModel build_measurement_model(const RadarConfig& config, const CMatrix& waveforms) {
  config.validate();
  if (static_cast<std::size_t>(waveforms.rows()) != config.transmitters ||
      static_cast<std::size_t>(waveforms.cols()) != config.samples) {
    throw InvalidArgument("build_measurement_model: waveforms must be I x N");
  }
  MeasurementModel m;
  m.receivers = config.receivers;
  m.grid_deg = config.grid_deg;
  m.waveforms = waveforms;
  const auto rn = static_cast<Eigen::Index>(config.stacked_size());
  m.psi.resize(rn, static_cast<Eigen::Index>(config.cells()));
  for (std::size_t l = 0; l < config.cells(); ++l) {
    m.psi.col(static_cast<Eigen::Index>(l)) =
        stacked_response(config.grid_deg[l], config.receivers, waveforms);
  }
  m.sigma_n_sq = config.noise_variance();
  m.rn_cov = clutter_covariance(config, m.psi, m.sigma_n_sq, &m.sigma_c_sq);
  if (m.sigma_n_sq == 0.0 && m.sigma_c_sq == 0.0) {
    m.noise_factor = CMatrix::Zero(rn, rn);
  } else {
    Eigen::LLT<CMatrix> llt(m.rn_cov);
    if (llt.info() != Eigen::Success) {
      throw InternalError("build_measurement_model: clutter-plus-noise covariance is not PD");
    }
    m.noise_factor = llt.matrixL();
  }
  return m;
}

// Waveforms are drawn from the scenario seed.
inline MeasurementModel build_measurement_model(const RadarConfig& config) {
  config.validate();
  RandomStream rng(config.seed, "waveforms");
  return build_measurement_model(config, draw_waveforms(config.transmitters, config.samples, rng));
}

// Target echoes only (no clutter or noise). Off-grid targets are evaluated at
// their true angle.
inline CVector noiseless_snapshot(const MeasurementModel& model, std::span<const Target> targets) {
  CVector x = CVector::Zero(model.psi.rows());
  if (targets.empty()) return x;
  const double lo = model.grid_deg.front();
  const double hi = model.grid_deg.back();
  const double step = model.grid_deg[1] - model.grid_deg[0];
  for (const Target& t : targets) {
    if (!std::isfinite(t.angle_deg) || t.angle_deg < lo - step - 1e-9 ||
        t.angle_deg > hi + step + 1e-9) {
      throw InvalidArgument("target angle outside the grid span extended by one step");
    }
    x += t.amplitude * stacked_response(t.angle_deg, model.receivers, model.waveforms);
  }
  return x;
}

// One draw of eps ~ CN(0, R~_N).
inline CVector clutter_noise_draw(const MeasurementModel& model, RandomStream& rng) {
  const CVector g = rng.complex_normal_vector(model.stacked_size());
  return model.noise_factor.triangularView<Eigen::Lower>() * g;
}

inline CVector synthesize_snapshot(const MeasurementModel& model, std::span<const Target> targets,
                                   RandomStream& rng) {
  CVector x = noiseless_snapshot(model, targets);
  x += clutter_noise_draw(model, rng);
  return x;
}

}  // namespace csp

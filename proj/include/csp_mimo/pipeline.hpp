#pragma once

#include <vector>

#include "csp_mimo/beamformer.hpp"
#include "csp_mimo/compression.hpp"
#include "csp_mimo/model.hpp"
#include "csp_mimo/random.hpp"

namespace csp {

// Everything that is fixed for one scenario: the measurement model, both
// compression matrices and the Capon filter bank. Monte Carlo trials share a
// Scenario read-only.
struct Scenario {
  RadarConfig config;
  MeasurementModel model;
  CompressedModel stage1;  // xbar unused
  BeamformedModel stage2;  // z unused

  std::size_t cells() const { return model.cells(); }

  // Full chain x -> xbar -> y -> z.
  CVector reduce(const CVector& x) const { return stage2.reduce(compress(stage1.phi1, x)); }

  CVector observe(std::span<const Target> targets, RandomStream& rng, bool noiseless = false) const {
    return reduce(noiseless ? noiseless_snapshot(model, targets) : synthesize_snapshot(model, targets, rng));
  }
};

// Second-stage matrix for a given M2; identity when m2 == L and identity is
// requested. Drawn from the (seed, "phi2", m2) stream so a sweep over M2 is
// reproducible.
inline RMatrix second_compression(const RadarConfig& config, std::size_t m2, bool identity = false) {
  const std::size_t cells = config.cells();
  if (identity) {
    if (m2 != cells) throw InvalidArgument("identity second compression requires M2 = L");
    return RMatrix::Identity(static_cast<Eigen::Index>(cells), static_cast<Eigen::Index>(cells));
  }
  RandomStream rng(config.seed, "phi2", m2);
  return draw_compression_matrix(m2, cells, rng);
}

// Rebuilds only the second stage with a different Phi2.
inline Scenario with_second_compression(const Scenario& base, const RMatrix& phi2) {
  Scenario s = base;
  s.stage2 = beamform_model(base.stage1, base.stage2.w, phi2);
  return s;
}

inline Scenario build_scenario(const RadarConfig& config, bool identity_phi2 = false) {
  config.validate();
  Scenario s;
  s.config = config;
  s.model = build_measurement_model(config);
  RandomStream phi1_rng(config.seed, "phi1");
  const RMatrix phi1 = draw_compression_matrix(config.m1(), config.stacked_size(), phi1_rng);
  s.stage1 = compress_model(s.model, phi1);
  const CMatrix w = capon_weights(s.stage1.rc, s.stage1.lambda);
  const std::size_t m2 = identity_phi2 ? config.cells() : config.m2();
  s.stage2 = beamform_model(s.stage1, w, second_compression(config, m2, identity_phi2));
  return s;
}

}  // namespace csp

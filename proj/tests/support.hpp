#pragma once

#include <Eigen/QR>

#include "csp_mimo/pipeline.hpp"

namespace csp::test {

// A scenario small enough to run thousands of trials in a unit test.
inline RadarConfig small_config() {
  RadarConfig c;
  c.transmitters = 3;
  c.receivers = 3;
  c.samples = 4;
  c.grid_deg = make_grid(-30.0, 30.0, 10.0);
  c.cr1 = 1.5;
  c.cr2 = 1.4;
  c.snr_db = 10.0;
  c.cnr_db = 10.0;
  c.seed = 7;
  return c;
}

inline CMatrix random_complex(Eigen::Index rows, Eigen::Index cols, RandomStream& rng) {
  CMatrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.complex_normal();
  return m;
}

inline CVector random_vector(Eigen::Index n, RandomStream& rng) {
  return rng.complex_normal_vector(static_cast<std::size_t>(n));
}

// Hermitian PD with a controlled spectrum.
inline CMatrix random_pd(Eigen::Index n, RandomStream& rng) {
  const CMatrix g = random_complex(n, n, rng);
  CMatrix m = g * g.adjoint();
  m.diagonal().array() += 0.5;
  return hermitian_part(m);
}

inline CMatrix random_unitary(Eigen::Index n, RandomStream& rng) {
  Eigen::HouseholderQR<CMatrix> qr(random_complex(n, n, rng));
  return qr.householderQ() * CMatrix::Identity(n, n);
}

inline double rel_err(cplx a, cplx b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace csp::test

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <vector>

#include "csp_mimo/types.hpp"

namespace csp {

// Uniform angle grid [start, stop] with the given step, in degrees.
inline std::vector<double> make_grid(double start_deg, double stop_deg, double step_deg) {
  if (!(step_deg > 0.0) || !std::isfinite(start_deg) || !std::isfinite(stop_deg) ||
      stop_deg < start_deg) {
    throw InvalidArgument("grid range must satisfy start <= stop and step > 0");
  }
  const auto count =
      static_cast<std::size_t>(std::floor((stop_deg - start_deg) / step_deg + 1e-9)) + 1;
  std::vector<double> grid(count);
  for (std::size_t k = 0; k < count; ++k) {
    grid[k] = start_deg + static_cast<double>(k) * step_deg;
  }
  return grid;
}

// Ratio-to-count rounding with ties rounded half-up.
inline std::size_t compressed_size(std::size_t full, double ratio) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(full) / ratio + 0.5));
}

// All scenario parameters. Defaults are the reference simulation setup:
// 10 transmitters, 8 receivers, 20 samples, CR1 = 4, CR2 = 2, SNR 0 dB,
// CNR 30 dB and a -50:2:50 degree grid.
struct RadarConfig {
  std::size_t transmitters = 10;
  std::size_t receivers = 8;
  std::size_t samples = 20;
  std::vector<double> grid_deg = make_grid(-50.0, 50.0, 2.0);
  double cr1 = 4.0;
  double cr2 = 2.0;
  double snr_db = 0.0;
  double cnr_db = 30.0;
  double sigma_alpha_sq = 1.0;
  std::uint64_t seed = 1;
  // Clutter occupies the grid cells inside [clutter_min_deg, clutter_max_deg].
  // The default covers every cell.
  double clutter_min_deg = -std::numeric_limits<double>::infinity();
  double clutter_max_deg = std::numeric_limits<double>::infinity();

  std::size_t stacked_size() const { return receivers * samples; }
  std::size_t cells() const { return grid_deg.size(); }
  std::size_t m1() const { return compressed_size(stacked_size(), cr1); }
  std::size_t m2() const { return compressed_size(cells(), cr2); }

  // Total transmit power P; unit-modulus waveforms give one unit per transmitter.
  double transmit_power() const { return static_cast<double>(transmitters); }

  // SNR = sigma_alpha^2 P / sigma_n^2. snr_db = +inf yields a noiseless model.
  double noise_variance() const {
    if (std::isinf(snr_db) && snr_db > 0) return 0.0;
    return sigma_alpha_sq * transmit_power() / db_to_linear(snr_db);
  }

  bool clutter_cell(std::size_t l) const {
    return grid_deg[l] >= clutter_min_deg && grid_deg[l] <= clutter_max_deg;
  }

  double grid_step() const {
    return grid_deg.size() >= 2 ? grid_deg[1] - grid_deg[0] : 0.0;
  }

  bool operator==(const RadarConfig&) const = default;

  // Throws InvalidArgument quoting the violated invariant.
  void validate() const {
    auto fail = [](const std::string& what) { throw InvalidArgument("invalid config: " + what); };
    if (transmitters < 1) fail("I >= 1");
    if (receivers < 1) fail("R >= 1");
    if (samples < 1) fail("N >= 1");
    if (grid_deg.size() < 2) fail("L >= 2");
    for (std::size_t k = 0; k < grid_deg.size(); ++k) {
      if (!std::isfinite(grid_deg[k])) fail("grid angles finite");
      if (k > 0 && !(grid_deg[k] > grid_deg[k - 1])) fail("grid strictly increasing");
    }
    if (!std::isfinite(cr1) || cr1 < 1.0) fail("cr1 >= 1");
    if (!std::isfinite(cr2) || cr2 < 1.0) fail("cr2 >= 1");
    const std::size_t m1v = m1();
    if (m1v < 1 || m1v > stacked_size()) fail("1 <= M1 = round(RN/cr1) <= RN");
    const std::size_t m2v = m2();
    if (m2v < 1 || m2v > cells()) fail("1 <= M2 = round(L/cr2) <= L");
    if (!(sigma_alpha_sq > 0.0) || !std::isfinite(sigma_alpha_sq)) fail("sigma_alpha_sq > 0");
    if (std::isnan(snr_db) || (std::isinf(snr_db) && snr_db < 0)) fail("snr_db finite or +inf");
    if (std::isnan(cnr_db) || (std::isinf(cnr_db) && cnr_db > 0)) fail("cnr_db finite or -inf");
    if (std::isnan(clutter_min_deg) || std::isnan(clutter_max_deg) || clutter_min_deg > clutter_max_deg) {
      fail("clutter_min_deg <= clutter_max_deg");
    }
    if (std::isfinite(cnr_db)) {
      bool any = false;
      for (std::size_t l = 0; l < cells(); ++l) any = any || clutter_cell(l);
      if (!any) fail("clutter sector contains at least one grid cell");
    }
  }
};

// A point scatterer. angle_deg may be off-grid by up to one grid step
// beyond either end of the grid.
struct Target {
  double angle_deg = 0.0;
  cplx amplitude{1.0, 0.0};
};

}  // namespace csp

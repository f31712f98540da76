#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "csp_mimo/assignment.hpp"
#include "csp_mimo/detector.hpp"
#include "csp_mimo/multitarget.hpp"
#include "csp_mimo/parallel.hpp"
#include "csp_mimo/pipeline.hpp"

namespace csp {

struct RunOptions {
  std::size_t threads = 1;
};

// ---------------------------------------------------------------------------
// Scene drawing

struct Scene {
  std::vector<std::size_t> cells;  // grid cell each target was placed at
  std::vector<Target> targets;
};

// `count` targets on distinct cells at least `min_separation` cells apart,
// uniform over the grid, each offset by mismatch_deg from its cell and with
// amplitude ~ CN(0, sigma_alpha^2).
inline Scene draw_scene(const RadarConfig& config, std::size_t count, double mismatch_deg,
                        std::size_t min_separation, RandomStream& rng) {
  const std::size_t cells = config.cells();
  min_separation = std::max<std::size_t>(1, min_separation);
  Scene scene;
  std::size_t attempts = 0;
  while (scene.cells.size() < count) {
    if (++attempts > 100000) throw InvalidArgument("draw_scene: cannot place targets with the requested separation");
    const std::size_t c = rng.index(cells);
    const bool clear = std::all_of(scene.cells.begin(), scene.cells.end(), [&](std::size_t o) {
      return (c > o ? c - o : o - c) >= min_separation;
    });
    if (clear) scene.cells.push_back(c);
  }
  for (std::size_t c : scene.cells) {
    scene.targets.push_back({config.grid_deg[c] + mismatch_deg, rng.complex_normal(config.sigma_alpha_sq)});
  }
  return scene;
}

inline double binomial_stderr(double p, std::size_t n) {
  return n == 0 ? 0.0 : std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(n));
}

// 20 log-spaced points in [1e-3, 1).
inline std::vector<double> default_pfa_grid(std::size_t points = 20, double lo = 1e-3) {
  std::vector<double> g(points);
  const double span = -std::log10(lo);
  for (std::size_t k = 0; k < points; ++k) {
    g[k] = std::pow(10.0, -span + span * static_cast<double>(k) / static_cast<double>(points));
  }
  return g;
}

// ---------------------------------------------------------------------------
// ROC

struct RocCurve {
  std::vector<double> pfa_grid;
  std::vector<double> pd_empirical;
  std::vector<double> pd_theoretical;
  std::vector<double> pd_stderr;
  std::vector<double> pfa_empirical;  // H0 exceedance rate of the same rule
  std::vector<double> pfa_stderr;
  std::size_t trials = 0;
  bool fixed_cell = true;
};

// Per trial: one H1 draw (uniform on-grid cell, alpha ~ CN(0, sigma^2)) and
// one H0 draw through the full pipeline. With fixed_cell the statistic and
// threshold are taken at the true cell; otherwise at the GLRT argmax.
// The theory curve averages Pd over a uniformly chosen cell.
inline RocCurve run_roc(const Scenario& scenario, const std::vector<double>& pfa_grid, std::size_t trials,
                        bool fixed_cell, const RunOptions& opts = {}) {
  if (trials < 1) throw InvalidArgument("run_roc: trials must be >= 1");
  for (double p : pfa_grid) check_probability(p, "pfa");
  const RadarConfig& cfg = scenario.config;
  const double s2 = cfg.sigma_alpha_sq;

  struct Sample {
    double stat1, d1, stat0, d0;
  };
  std::vector<Sample> samples(trials);
  parallel_for(trials, opts.threads, [&](std::size_t i) {
    RandomStream rng(cfg.seed, "roc-trial", i);
    const Scene scene = draw_scene(cfg, 1, 0.0, 1, rng);
    const std::size_t t = scene.cells.front();
    const CVector z1 = scenario.observe(scene.targets, rng);
    const CVector z0 = scenario.observe({}, rng);
    const CellStatistics st1 = scan_cells(z1, scenario.stage2, s2);
    const CellStatistics st0 = scan_cells(z0, scenario.stage2, s2);
    const std::size_t c1 = fixed_cell ? t : argmax_cell(st1.log_lrt);
    const std::size_t c0 = fixed_cell ? t : argmax_cell(st0.log_lrt);
    samples[i] = {std::abs(st1.e[c1]), st1.d[c1], std::abs(st0.e[c0]), st0.d[c0]};
  });

  RocCurve roc;
  roc.pfa_grid = pfa_grid;
  roc.trials = trials;
  roc.fixed_cell = fixed_cell;
  const RVector& d = scenario.stage2.d;
  for (double pfa : pfa_grid) {
    std::size_t hits1 = 0, hits0 = 0;
    for (const Sample& s : samples) {
      if (s.stat1 > detection_threshold(s.d1, pfa)) ++hits1;
      if (s.stat0 > detection_threshold(s.d0, pfa)) ++hits0;
    }
    const double pd = static_cast<double>(hits1) / static_cast<double>(trials);
    const double pf = static_cast<double>(hits0) / static_cast<double>(trials);
    double theory = 0.0;
    for (Eigen::Index t = 0; t < d.size(); ++t) theory += theoretical_roc(d[t], s2, pfa);
    theory /= static_cast<double>(d.size());
    roc.pd_empirical.push_back(pd);
    roc.pd_stderr.push_back(binomial_stderr(pd, trials));
    roc.pfa_empirical.push_back(pf);
    roc.pfa_stderr.push_back(binomial_stderr(pf, trials));
    roc.pd_theoretical.push_back(theory);
  }
  return roc;
}

inline RocCurve run_roc(const RadarConfig& config, const std::vector<double>& pfa_grid, std::size_t trials,
                        bool fixed_cell, const RunOptions& opts = {}) {
  return run_roc(build_scenario(config), pfa_grid, trials, fixed_cell, opts);
}

// ---------------------------------------------------------------------------
// Angle estimation

enum class Estimator { Csp, Omp };

inline const char* estimator_name(Estimator e) { return e == Estimator::Csp ? "csp" : "omp"; }

struct TargetsSpec {
  std::size_t count = 1;
  double mismatch_deg = 0.0;
  bool noiseless = false;
  Estimator estimator = Estimator::Csp;
  // When set, only detection-positive trials contribute (threshold rule at
  // this Pfa). When unset the number of targets is taken as known.
  std::optional<double> pfa;
  std::size_t min_separation = 1;
  // Deflation amplitude refit for the CSP estimator.
  Refit refit = Refit::Whitened;

  std::string descriptor() const {
    std::string s = std::string(estimator_name(estimator)) + ":Q=" + std::to_string(count);
    if (estimator == Estimator::Csp && refit == Refit::LeastSquares) s += ":ls-refit";
    char buf[64];
    std::snprintf(buf, sizeof buf, ":mismatch=%g", mismatch_deg);
    s += buf;
    if (noiseless) s += ":noiseless";
    if (pfa) {
      std::snprintf(buf, sizeof buf, ":pfa=%g", *pfa);
      s += buf;
    }
    return s;
  }
};

struct EstimationStats {
  double bias_deg = 0.0;
  double std_deg = 0.0;
  std::size_t trials = 0;      // trials run
  std::size_t detections = 0;  // trials that produced at least one estimate
  std::size_t samples = 0;     // angle errors pooled into bias/std
  bool empty = true;           // no detections at all
  std::string scenario;
  double seconds = 0.0;        // wall-clock of the estimation loop
};

// Signed angle errors (estimate - truth) after optimal assignment on |error|.
inline std::vector<double> matched_errors(const std::vector<double>& estimates, const std::vector<double>& truths) {
  std::vector<double> errors;
  if (estimates.empty() || truths.empty()) return errors;
  const bool est_rows = estimates.size() <= truths.size();
  const auto& rows = est_rows ? estimates : truths;
  const auto& cols = est_rows ? truths : estimates;
  std::vector<double> cost(rows.size() * cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) cost[i * cols.size() + j] = std::abs(rows[i] - cols[j]);
  const auto assign = min_cost_assignment(cost, rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double est = est_rows ? rows[i] : cols[assign[i]];
    const double tru = est_rows ? cols[assign[i]] : rows[i];
    errors.push_back(est - tru);
  }
  return errors;
}

// Estimated grid cells for one observation.
inline std::vector<std::size_t> estimate_cells(const Scenario& scenario, const CVector& z, const TargetsSpec& spec) {
  const double s2 = scenario.config.sigma_alpha_sq;
  if (spec.estimator == Estimator::Omp) {
    return omp_baseline(z, scenario.stage2.dict, spec.count).cells;
  }
  if (spec.count == 1) {
    const CellStatistics stats = scan_cells(z, scenario.stage2, s2);
    if (spec.pfa) {
      const DetectionOutcome det = detect_single(stats, *spec.pfa);
      if (!det.detected) return {};
      return {det.t_hat};
    }
    return {argmax_cell(stats.log_lrt)};
  }
  DeflationOptions opts;
  opts.refit = spec.refit;
  if (spec.pfa) {
    opts.pfa = *spec.pfa;
  } else {
    opts.known_count = true;
    opts.max_iters = spec.count;
  }
  return deflation_detect(z, scenario.stage2, s2, opts).cells;
}

inline EstimationStats summarize_errors(const std::vector<std::vector<double>>& per_trial, std::string scenario) {
  EstimationStats st;
  st.trials = per_trial.size();
  st.scenario = std::move(scenario);
  double sum = 0.0;
  for (const auto& errs : per_trial) {
    if (!errs.empty()) ++st.detections;
    for (double e : errs) sum += e;
    st.samples += errs.size();
  }
  st.empty = st.samples == 0;
  if (st.empty) return st;
  st.bias_deg = sum / static_cast<double>(st.samples);
  double ss = 0.0;
  for (const auto& errs : per_trial)
    for (double e : errs) ss += (e - st.bias_deg) * (e - st.bias_deg);
  st.std_deg = st.samples > 1 ? std::sqrt(ss / static_cast<double>(st.samples - 1)) : 0.0;
  return st;
}

inline EstimationStats run_estimation(const Scenario& scenario, const TargetsSpec& spec, std::size_t trials,
                                      const RunOptions& opts = {}) {
  if (trials < 1) throw InvalidArgument("run_estimation: trials must be >= 1");
  if (spec.count < 1 || spec.count > scenario.cells()) throw InvalidArgument("run_estimation: bad target count");
  const RadarConfig& cfg = scenario.config;
  std::vector<std::vector<double>> errors(trials);
  const auto start = std::chrono::steady_clock::now();
  parallel_for(trials, opts.threads, [&](std::size_t i) {
    RandomStream rng(cfg.seed, "estimation-trial", i);
    const Scene scene = draw_scene(cfg, spec.count, spec.mismatch_deg, spec.min_separation, rng);
    const CVector z = scenario.observe(scene.targets, rng, spec.noiseless);
    const std::vector<std::size_t> cells = estimate_cells(scenario, z, spec);
    std::vector<double> est, truth;
    for (std::size_t c : cells) est.push_back(cfg.grid_deg[c]);
    for (const Target& t : scene.targets) truth.push_back(t.angle_deg);
    errors[i] = matched_errors(est, truth);
  });
  EstimationStats st = summarize_errors(errors, spec.descriptor());
  st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return st;
}

inline EstimationStats run_estimation(const RadarConfig& config, const TargetsSpec& spec, std::size_t trials,
                                      const RunOptions& opts = {}) {
  return run_estimation(build_scenario(config), spec, trials, opts);
}

// ---------------------------------------------------------------------------
// Resolvability of two targets

struct ResolvabilityPoint {
  double delta_deg = 0.0;
  double cr1 = 0.0;
  double p_ce = 0.0;
  double stderr_ = 0.0;
  std::size_t trials = 0;
};

// Fraction of trials in which both cells of a two-target scene separated by
// delta are recovered exactly (known count, deflation).
inline std::vector<ResolvabilityPoint> run_resolvability(const Scenario& scenario, const std::vector<double>& delta_grid,
                                                         std::size_t trials, bool noiseless = false,
                                                         const RunOptions& opts = {},
                                                         Refit refit = Refit::Whitened) {
  const RadarConfig& cfg = scenario.config;
  const std::size_t cells = cfg.cells();
  const double step = cfg.grid_step();
  std::vector<ResolvabilityPoint> out;
  for (std::size_t k = 0; k < delta_grid.size(); ++k) {
    const double delta = delta_grid[k];
    const auto sep = static_cast<std::size_t>(std::llround(delta / step));
    if (sep < 1 || sep >= cells) throw InvalidArgument("run_resolvability: delta must be 1..L-1 grid steps");
    std::vector<char> correct(trials, 0);
    parallel_for(trials, opts.threads, [&](std::size_t i) {
      RandomStream rng(cfg.seed, "resolvability-trial", i * 1000003ULL + k);
      const std::size_t first = rng.index(cells - sep);
      Scene scene;
      scene.cells = {first, first + sep};
      for (std::size_t c : scene.cells)
        scene.targets.push_back({cfg.grid_deg[c], rng.complex_normal(cfg.sigma_alpha_sq)});
      const CVector z = scenario.observe(scene.targets, rng, noiseless);
      DeflationOptions dopt;
      dopt.known_count = true;
      dopt.max_iters = 2;
      dopt.refit = refit;
      std::vector<std::size_t> got = deflation_detect(z, scenario.stage2, cfg.sigma_alpha_sq, dopt).cells;
      std::sort(got.begin(), got.end());
      correct[i] = got == scene.cells ? 1 : 0;
    });
    const auto hits = static_cast<double>(std::count(correct.begin(), correct.end(), 1));
    ResolvabilityPoint p;
    p.delta_deg = static_cast<double>(sep) * step;
    p.cr1 = cfg.cr1;
    p.trials = trials;
    p.p_ce = hits / static_cast<double>(trials);
    p.stderr_ = binomial_stderr(p.p_ce, trials);
    out.push_back(p);
  }
  return out;
}

inline std::vector<ResolvabilityPoint> run_resolvability(const RadarConfig& config, const std::vector<double>& delta_grid,
                                                         std::size_t trials, bool noiseless = false,
                                                         const RunOptions& opts = {},
                                                         Refit refit = Refit::Whitened) {
  return run_resolvability(build_scenario(config), delta_grid, trials, noiseless, opts, refit);
}

// ---------------------------------------------------------------------------
// Second-compression budget matching

struct CrMatchPoint {
  double cr1 = 0.0;
  double cr2_matched = 0.0;
  std::size_t m2_matched = 0;
  double baseline_std = 0.0;
  double matched_std = 0.0;
};

struct CrMatchOptions {
  double tolerance = 0.05;  // relative std slack against the baseline
  TargetsSpec targets;      // scene and estimator used for the accuracy metric
};

// For each CR1: baseline is the chain with Phi2 = I; the candidate replaces
// Phi2 by an M2 x L Gaussian matrix. Binary search finds the smallest M2
// (largest CR2 = L / M2) whose estimation std stays within the tolerance.
// All candidates reuse the baseline's trial streams.
inline std::vector<CrMatchPoint> run_cr_match(const RadarConfig& config, const std::vector<double>& cr1_grid,
                                              std::size_t trials, const CrMatchOptions& cm = {},
                                              const RunOptions& opts = {}) {
  std::vector<CrMatchPoint> out;
  for (double cr1 : cr1_grid) {
    RadarConfig cfg = config;
    cfg.cr1 = cr1;
    cfg.cr2 = 1.0;
    const Scenario base = build_scenario(cfg, /*identity_phi2=*/true);
    const double base_std = run_estimation(base, cm.targets, trials, opts).std_deg;
    const double limit = (1.0 + cm.tolerance) * base_std;

    std::map<std::size_t, double> evaluated;
    auto std_at = [&](std::size_t m2) {
      auto it = evaluated.find(m2);
      if (it != evaluated.end()) return it->second;
      const Scenario cand = with_second_compression(base, second_compression(cfg, m2));
      const double s = run_estimation(cand, cm.targets, trials, opts).std_deg;
      evaluated.emplace(m2, s);
      return s;
    };
    std::size_t lo = 1, hi = cfg.cells();
    while (lo < hi) {
      const std::size_t mid = lo + (hi - lo) / 2;
      if (std_at(mid) <= limit) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    CrMatchPoint p;
    p.cr1 = cr1;
    p.m2_matched = hi;
    p.cr2_matched = static_cast<double>(cfg.cells()) / static_cast<double>(hi);
    p.baseline_std = base_std;
    p.matched_std = hi == cfg.cells() && !evaluated.count(hi) ? base_std : std_at(hi);
    out.push_back(p);
  }
  return out;
}

}  // namespace csp

#ifndef PDMP_DRIFT_HPP
#define PDMP_DRIFT_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "pdmp/core.hpp"
#include "pdmp/flow.hpp"
#include "pdmp/kernels.hpp"
#include "pdmp/random.hpp"
#include "pdmp/simulate.hpp"

namespace pdmp {

/// A Lyapunov function with a candidate box B0 and the points to test it on.
struct DriftSpec {
  std::function<double(const State&)> lyapunov;
  std::vector<double> b0_lo;
  std::vector<double> b0_hi;
  std::vector<State> points;
  QuadratureSpec quadrature;
  /// Optional reduction D(x) = int_0^inf W(t, x) e^{-Lambda_x(t)} dt.
  std::function<double(double, const State&)> reduced_integrand;
  /// Relative tolerance for the tail check of the generic quadrature path.
  double tail_tolerance = 1e-4;
  unsigned workers = 1;

  bool in_b0(const State& x) const {
    for (std::size_t i = 0; i < b0_lo.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      if (x[k] < b0_lo[i] || x[k] > b0_hi[i]) return false;
    }
    return true;
  }

  void validate() const {
    if (!lyapunov) throw ConfigError("drift: missing Lyapunov function");
    if (b0_lo.size() != b0_hi.size()) throw ConfigError("drift: B0 bounds differ in length");
    for (std::size_t i = 0; i < b0_lo.size(); ++i)
      if (!(b0_lo[i] <= b0_hi[i])) throw ConfigError("drift: empty B0 box");
  }
};

/// Box B0 = {x in E : max_i |x_i| <= radius}.
inline void set_sup_norm_ball(DriftSpec& spec, int dimension, double radius) {
  spec.b0_lo.assign(static_cast<std::size_t>(dimension), -radius);
  spec.b0_hi.assign(static_cast<std::size_t>(dimension), radius);
}

/// D(x) = int V dK(x, .) - V(x).
inline double drift_at(const PdmpModel& model, const DriftSpec& spec, const State& x) {
  require_in_space(model, x, "drift_at");
  if (spec.reduced_integrand) {
    const SurvivalIntegral r =
        survival_integral(model, x, [&](double t, const State&) { return spec.reduced_integrand(t, x); });
    if (!r.converged) throw TruncationError("drift_at: survival integral did not converge");
    return r.value;
  }
  const double vx = spec.lyapunov(x);
  const KernelExpectation e = kernel_expectation(model, x, spec.lyapunov, spec.quadrature);
  QuadratureSpec wide = spec.quadrature;
  wide.eps = spec.quadrature.eps * spec.quadrature.eps;
  if (wide.s_max) *wide.s_max *= 2.0;
  const KernelExpectation f = kernel_expectation(model, x, spec.lyapunov, wide);
  if (!std::isfinite(f.value) || std::abs(f.value - e.value) > spec.tail_tolerance * std::max(1.0, std::abs(f.value)))
    throw TruncationError("drift_at: V-divergent, E[V(X_1)] changes with the truncation (" +
                          std::to_string(e.value) + " vs " + std::to_string(f.value) + ")");
  return f.value - vx;
}

/// Geometric radial shells times angular samples on the positive quadrant
/// of the plane, plus the origin when `origin` is set.
inline std::vector<State> radial_shell_grid(double r_min, double r_max, int shells, int angles, bool origin = true) {
  if (!(r_min > 0.0) || !(r_max > r_min) || shells < 2 || angles < 1)
    throw GridError("radial_shell_grid: need 0 < r_min < r_max, shells >= 2, angles >= 1");
  std::vector<State> pts;
  if (origin) pts.push_back(make_state({0.0, 0.0}));
  const double ratio = std::pow(r_max / r_min, 1.0 / (shells - 1));
  double r = r_min;
  for (int s = 0; s < shells; ++s, r *= ratio) {
    for (int a = 0; a < angles; ++a) {
      const double phi = angles == 1 ? 0.0 : 0.5 * std::numbers::pi * a / (angles - 1);
      pts.push_back(make_state({std::max(0.0, r * std::cos(phi)), std::max(0.0, r * std::sin(phi))}));
    }
  }
  return pts;
}

struct DriftReport {
  std::vector<State> points;
  std::vector<double> drift;
  std::vector<bool> inside;
  std::vector<double> b0_lo;
  std::vector<double> b0_hi;
  double c1 = 0.0;
  double c2 = 0.0;
  bool verdict = false;
  /// Lower bound c1/c2 on the long-run fraction of steps in B0 (0 without a verdict).
  double occupation_bound = 0.0;
};

/// Evaluates D on every point and fits (c1, c2) from the worst points:
/// c1 = -max_{x not in B0} D(x), c2 = c1 + max(0, max_{x in B0} D(x)).
/// The verdict is a certificate on the evaluated points only.
inline DriftReport verify_drift(const PdmpModel& model, const DriftSpec& spec) {
  spec.validate();
  DriftReport rep;
  rep.points = spec.points;
  rep.b0_lo = spec.b0_lo;
  rep.b0_hi = spec.b0_hi;
  const std::size_t n = spec.points.size();
  bool any_finite = false;
  for (const auto& p : spec.points) any_finite = any_finite || std::isfinite(spec.lyapunov(p));
  if (!any_finite) throw ConfigError("drift: V is infinite on every grid point");
  rep.inside.resize(n);
  std::size_t interior = 0;
  for (std::size_t i = 0; i < n; ++i) {
    rep.inside[i] = spec.in_b0(spec.points[i]);
    if (rep.inside[i]) ++interior;
  }
  if (interior == n) throw GridError("drift: grid too small, no points outside B0");
  if (interior == 0) throw GridError("drift: grid does not cover B0");
  rep.drift.resize(n);
  parallel_for(n, spec.workers, [&](std::size_t i) { rep.drift[i] = drift_at(model, spec, spec.points[i]); });
  double max_out = -kInf, max_in = -kInf;
  for (std::size_t i = 0; i < n; ++i) {
    double& worst = rep.inside[i] ? max_in : max_out;
    worst = std::max(worst, rep.drift[i]);
  }
  rep.c1 = -max_out;
  rep.c2 = rep.c1 + std::max(0.0, max_in);
  bool holds = rep.c1 > 0.0;
  for (std::size_t i = 0; i < n && holds; ++i)
    holds = rep.drift[i] <= -rep.c1 + (rep.inside[i] ? rep.c2 : 0.0) + 1e-12 * std::max(1.0, std::abs(rep.drift[i]));
  rep.verdict = holds;
  rep.occupation_bound = holds ? rep.c1 / rep.c2 : 0.0;
  return rep;
}

struct OccupationResult {
  double fraction = 0.0;
  double bound = 0.0;
  long steps = 0;
  /// fraction >= slack * bound
  bool passes = false;
};

/// Runs `paths` embedded chains of `steps` steps from x0 and returns the
/// average fraction of X_1..X_N that lie in B0.
inline OccupationResult occupation_check(const PdmpModel& model, const DriftSpec& spec, const State& x0,
                                         long steps, std::size_t paths, std::uint64_t seed, double bound,
                                         double slack = 0.8) {
  if (steps < 1 || paths < 1) throw ConfigError("occupation_check: need steps >= 1 and paths >= 1");
  std::vector<long> hits(paths, 0);
  parallel_for(paths, spec.workers, [&](std::size_t p) {
    Rng rng = make_stream(seed, p);
    State x = x0;
    for (long k = 0; k < steps; ++k) {
      x = step_embedded_chain(model, x, rng).state;
      if (spec.in_b0(x)) ++hits[p];
    }
  });
  OccupationResult r;
  r.steps = steps * static_cast<long>(paths);
  long total = 0;
  for (long h : hits) total += h;
  r.fraction = static_cast<double>(total) / static_cast<double>(r.steps);
  r.bound = bound;
  r.passes = r.fraction >= slack * bound;
  return r;
}

}  // namespace pdmp

#endif  // PDMP_DRIFT_HPP

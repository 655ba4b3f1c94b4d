#ifndef PDMP_DENSITY_HPP
#define PDMP_DENSITY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <tuple>
#include <utility>
#include <vector>

#include "pdmp/core.hpp"
#include "pdmp/flow.hpp"
#include "pdmp/grid.hpp"
#include "pdmp/kernels.hpp"
#include "pdmp/random.hpp"
#include "pdmp/simulate.hpp"

namespace pdmp {

struct ChainOptions {
  long steps = 100'000;  ///< N, chain length per path
  long burn_in = -1;     ///< negative: 10% of N
  std::size_t paths = 1;
  std::uint64_t seed = 42;
  unsigned workers = 1;
  JumpTimeMethod method = JumpTimeMethod::HazardInversion;
  /// Explosion is suspected when the second half of the chain spends less
  /// than this fraction of the time the first half took.
  double explosion_ratio = 1e-3;

  long resolved_burn_in() const { return burn_in < 0 ? steps / 10 : burn_in; }

  void validate() const {
    if (steps < 1) throw ConfigError("chain: N must be at least 1");
    if (!(steps > resolved_burn_in())) throw ConfigError("chain: N must exceed the burn-in");
    if (paths < 1) throw ConfigError("chain: need at least one path");
  }
};

namespace detail {

/// Runs one embedded chain of `steps` steps and calls keep(n, X_n, holding)
/// for n > burn_in. Holding is the time spent at X_n before the next jump.
template <class Keep>
void run_chain(const PdmpModel& model, const State& x0, long steps, long burn_in, JumpTimeMethod method,
               double explosion_ratio, Rng& rng, Keep&& keep) {
  State x = x0;
  double first_half = 0.0, second_half = 0.0;
  for (long n = 1; n <= steps; ++n) {
    ChainStep st = step_embedded_chain(model, x, rng, method);
    (n <= steps / 2 ? first_half : second_half) += st.holding;
    x = std::move(st.state);
    if (n > burn_in) keep(n, x);
  }
  if (steps >= 20 && second_half < explosion_ratio * first_half)
    throw ExplosionError(model.name + ": embedded chain time is collapsing (" + std::to_string(second_half) +
                         " vs " + std::to_string(first_half) + "); explosion suspected");
}

}  // namespace detail

/// Histogram of X_{burn_in+1}, ..., X_N of one embedded chain.
inline DensityEstimate estimate_chain_density(const PdmpModel& model, const State& x0, long steps, long burn_in,
                                              const GridSpec& grid, Rng& rng,
                                              JumpTimeMethod method = JumpTimeMethod::HazardInversion) {
  ChainOptions opt;
  opt.steps = steps;
  opt.burn_in = burn_in;
  opt.validate();
  require_in_space(model, x0, "estimate_chain_density");
  Histogram h(grid);
  detail::run_chain(model, x0, steps, opt.resolved_burn_in(), method, opt.explosion_ratio, rng,
                    [&](long, const State& x) { h.add(x); });
  return h.finish(opt.resolved_burn_in());
}

/// Pooled chains on streams (seed, path).
inline DensityEstimate estimate_chain_density(const PdmpModel& model, const State& x0, const GridSpec& grid,
                                              const ChainOptions& opt) {
  opt.validate();
  require_in_space(model, x0, "estimate_chain_density");
  std::vector<Histogram> parts(opt.paths, Histogram(grid));
  parallel_for(opt.paths, opt.workers, [&](std::size_t p) {
    Rng rng = make_stream(opt.seed, p);
    detail::run_chain(model, x0, opt.steps, opt.resolved_burn_in(), opt.method, opt.explosion_ratio, rng,
                      [&](long, const State& x) { parts[p].add(x); });
  });
  for (std::size_t p = 1; p < parts.size(); ++p) parts[0].merge(parts[p]);
  return parts[0].finish(opt.resolved_burn_in());
}

/// Post-burn-in chain states, pooled in path order.
inline std::vector<State> sample_chain(const PdmpModel& model, const State& x0, const ChainOptions& opt) {
  opt.validate();
  require_in_space(model, x0, "sample_chain");
  std::vector<std::vector<State>> parts(opt.paths);
  parallel_for(opt.paths, opt.workers, [&](std::size_t p) {
    Rng rng = make_stream(opt.seed, p);
    parts[p].reserve(static_cast<std::size_t>(opt.steps - opt.resolved_burn_in()));
    detail::run_chain(model, x0, opt.steps, opt.resolved_burn_in(), opt.method, opt.explosion_ratio, rng,
                      [&](long, const State& x) { parts[p].push_back(x); });
  });
  std::vector<State> out;
  for (auto& part : parts) out.insert(out.end(), part.begin(), part.end());
  return out;
}

struct FlowOptions {
  std::size_t paths = 1;
  std::uint64_t seed = 42;
  unsigned workers = 1;
  long max_jumps = 1'000'000;
  JumpTimeMethod method = JumpTimeMethod::HazardInversion;
  /// Fraction of the horizon discarded before averaging.
  double burn_in_fraction = 0.1;
  /// Sub-sampling step; defaults to 0.01 / phi_upper when declared.
  std::optional<double> max_step;
};

namespace detail {

inline double flow_substep(const PdmpModel& model, const State& y, const std::optional<double>& max_step) {
  if (max_step) return *max_step;
  if (model.intensity.upper_bound) return 0.01 / *model.intensity.upper_bound;
  return 0.01 / std::max(model.intensity.bound_along_flow(y).value_or(model.intensity(y)), 1e-12);
}

/// Adds the time spent in [a, b) along the flow from y (at local time 0)
/// by midpoint sub-sampling.
inline void add_segment(const PdmpModel& model, const State& y, double a, double b, double step, Histogram& h) {
  if (!(b > a)) return;
  if (model.flow.stationary) {
    h.add(y, b - a);
    return;
  }
  const long m = std::max(1L, static_cast<long>(std::ceil((b - a) / step)));
  const double dt = (b - a) / static_cast<double>(m);
  for (long j = 0; j < m; ++j) h.add(flow_raw(model, y, a + (static_cast<double>(j) + 0.5) * dt), dt);
}

}  // namespace detail

/// Time-weighted occupation histogram of t -> X(t) on [burn-in, horizon].
inline DensityEstimate estimate_flow_density(const PdmpModel& model, const State& x0, double horizon,
                                             const GridSpec& grid, const FlowOptions& opt = {}) {
  if (!(horizon > 0.0)) throw ConfigError("estimate_flow_density: horizon must be positive");
  if (!(opt.burn_in_fraction >= 0.0 && opt.burn_in_fraction < 1.0))
    throw ConfigError("estimate_flow_density: burn-in fraction must lie in [0, 1)");
  require_in_space(model, x0, "estimate_flow_density");
  SimulationConfig cfg;
  cfg.horizon = horizon;
  cfg.max_jumps = opt.max_jumps;
  cfg.method = opt.method;
  const double t0 = opt.burn_in_fraction * horizon;
  std::vector<Histogram> parts(opt.paths, Histogram(grid));
  parallel_for(opt.paths, opt.workers, [&](std::size_t p) {
    Rng rng = make_stream(opt.seed, p);
    const Trajectory traj = simulate_path(model, x0, cfg, rng);
    if (traj.exploded) throw ExplosionError(model.name + ": explosion suspected before the horizon");
    State y = x0;
    double start = 0.0;
    auto segment = [&](double end) {
      const double a = std::max(start, t0);
      if (end > a) detail::add_segment(model, y, a - start, end - start, detail::flow_substep(model, y, opt.max_step), parts[p]);
    };
    for (const auto& j : traj.jumps) {
      segment(j.time);
      y = j.post_jump;
      start = j.time;
    }
    segment(horizon);
  });
  for (std::size_t p = 1; p < parts.size(); ++p) parts[0].merge(parts[p]);
  DensityEstimate e = parts[0].finish();
  e.burn_in = static_cast<long>(t0);
  return e;
}

/// Flow-invariant density from embedded-chain states: each post-jump state y
/// contributes its expected occupation measure int_0^inf 1_B(pi_t y)
/// e^{-Lambda_y(t)} dt, evaluated on the quadrature nodes of `spec`.
inline DensityEstimate estimate_flow_density_from_chain(const PdmpModel& model, const std::vector<State>& states,
                                                        const GridSpec& grid, const QuadratureSpec& spec = {},
                                                        unsigned workers = 1) {
  if (states.empty()) throw ConfigError("estimate_flow_density_from_chain: no chain states");
  const detail::SRule rule = detail::make_s_rule(model, spec);
  const std::size_t blocks = std::min<std::size_t>(states.size(), std::max(1u, workers) * 4u);
  std::vector<Histogram> parts(blocks, Histogram(grid));
  parallel_for(blocks, workers, [&](std::size_t b) {
    for (std::size_t i = b; i < states.size(); i += blocks) {
      sweep_hazard(model, states[i], rule.s, [&](std::size_t k, double hazard, const State& z) {
        parts[b].add(z, rule.w[k] * std::exp(-hazard));
      });
    }
  });
  for (std::size_t b = 1; b < parts.size(); ++b) parts[0].merge(parts[b]);
  DensityEstimate e = parts[0].finish();
  e.samples = static_cast<long>(states.size());
  return e;
}

namespace detail {

inline std::discrete_distribution<std::size_t> cell_sampler(const DensityEstimate& e) {
  if (!(e.in_box_mass() > 0.0)) throw GridError("estimate has no in-box mass to sample from");
  return std::discrete_distribution<std::size_t>(e.mass.begin(), e.mass.end());
}

}  // namespace detail

/// Pushes the estimate through one embedded-chain step (cells resampled
/// uniformly, `draws` steps) and returns TV(before, after). Mass already
/// out of the box is taken to stay out.
inline double stationarity_residual(const PdmpModel& model, const DensityEstimate& estimate, long draws,
                                    std::uint64_t seed, unsigned workers = 1) {
  if (estimate.samples < 10'000) throw ConfigError("stationarity_residual: estimate needs >= 1e4 samples");
  if (draws < 1) throw ConfigError("stationarity_residual: draws must be positive");
  const std::size_t blocks = std::max(1u, workers) * 4u;
  std::vector<Histogram> parts(blocks, Histogram(estimate.grid));
  parallel_for(blocks, workers, [&](std::size_t b) {
    Rng rng = make_stream(seed, b);
    auto pick = detail::cell_sampler(estimate);
    for (long i = static_cast<long>(b); i < draws; i += static_cast<long>(blocks)) {
      const State x = model.space.project(estimate.grid.sample_in_cell(pick(rng), rng), model.flow.tolerance);
      parts[b].add(step_embedded_chain(model, x, rng).state);
    }
  });
  for (std::size_t b = 1; b < parts.size(); ++b) parts[0].merge(parts[b]);
  DensityEstimate after = parts[0].finish();
  const double in = estimate.in_box_mass();
  for (double& m : after.mass) m *= in;
  after.out_of_box = after.out_of_box * in + estimate.out_of_box;
  return total_variation(estimate, after);
}

struct StabilityCurves {
  std::vector<State> starts;
  std::vector<double> times;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  /// l1[p][k]: L1 distance (2 TV) between the laws of X(times[k]) for pair p.
  std::vector<std::vector<double>> l1;
  /// laws[i][k]: estimated law of X(times[k]) from starts[i].
  std::vector<std::vector<DensityEstimate>> laws;
};

/// Estimates the law of X(t) on the grid from each start and returns the
/// pairwise L1 distances. One path per (start, index) is read at every t.
inline StabilityCurves stability_probe(const PdmpModel& model, const std::vector<State>& starts,
                                       std::vector<double> times, const GridSpec& grid, std::size_t paths,
                                       const SimulationConfig& base) {
  if (starts.size() < 2) throw ConfigError("stability_probe: need at least two initial points");
  if (times.empty() || paths < 1) throw ConfigError("stability_probe: need times and paths");
  std::sort(times.begin(), times.end());
  if (times.front() < 0.0) throw ConfigError("stability_probe: negative time");
  for (const auto& x : starts) require_in_space(model, x, "stability_probe");
  SimulationConfig cfg = base;
  cfg.horizon = std::max(times.back(), 1e-12);
  StabilityCurves out;
  out.starts = starts;
  out.times = times;
  const std::size_t nt = times.size();
  for (std::size_t a = 0; a < starts.size(); ++a) {
    std::vector<std::vector<std::optional<std::size_t>>> cells(paths);
    parallel_for(paths, cfg.workers, [&](std::size_t p) {
      Rng rng = make_stream(cfg.seed, a * paths + p);
      const Trajectory traj = simulate_path(model, starts[a], cfg, rng);
      cells[p].resize(nt);
      for (std::size_t k = 0; k < nt; ++k) cells[p][k] = grid.locate(traj.position_at(model, times[k]));
    });
    std::vector<Histogram> hs(nt, Histogram(grid));
    for (std::size_t p = 0; p < paths; ++p)
      for (std::size_t k = 0; k < nt; ++k) hs[k].add_cell(cells[p][k], 1.0);
    std::vector<DensityEstimate> laws;
    for (auto& h : hs) laws.push_back(h.finish());
    out.laws.push_back(std::move(laws));
  }
  for (std::size_t i = 0; i < starts.size(); ++i) {
    for (std::size_t j = i + 1; j < starts.size(); ++j) {
      out.pairs.emplace_back(i, j);
      std::vector<double> d;
      for (std::size_t k = 0; k < nt; ++k) d.push_back(2.0 * total_variation(out.laws[i][k], out.laws[j][k]));
      out.l1.push_back(std::move(d));
    }
  }
  return out;
}

struct HoldingTimeReport {
  double estimate = 0.0;
  double standard_error = 0.0;
  long samples = 0;
  /// Same estimator with 2M samples on independent streams.
  double doubled_estimate = 0.0;
  double doubled_standard_error = 0.0;
  double shift = 0.0;
  /// |shift| < 3 sqrt(se^2 + se_doubled^2)
  bool stable = false;
};

namespace detail {

inline std::pair<double, double> mean_holding_sample(const PdmpModel& model, const DensityEstimate& estimate,
                                                     long m, std::uint64_t seed, std::uint64_t stream_offset,
                                                     unsigned workers) {
  const std::size_t blocks = std::max(1u, workers) * 4u;
  std::vector<double> sum(blocks, 0.0), sum2(blocks, 0.0);
  parallel_for(blocks, workers, [&](std::size_t b) {
    Rng rng = make_stream(seed, stream_offset + b);
    auto pick = cell_sampler(estimate);
    for (long i = static_cast<long>(b); i < m; i += static_cast<long>(blocks)) {
      const State x = model.space.project(estimate.grid.sample_in_cell(pick(rng), rng), model.flow.tolerance);
      const double t = sample_jump_time(model, x, rng).time;
      sum[b] += t;
      sum2[b] += t * t;
    }
  });
  double s = 0.0, s2 = 0.0;
  for (std::size_t b = 0; b < blocks; ++b) {
    s += sum[b];
    s2 += sum2[b];
  }
  const double n = static_cast<double>(m);
  const double mean = s / n;
  const double var = std::max(0.0, s2 / n - mean * mean) * n / std::max(1.0, n - 1.0);
  return {mean, std::sqrt(var / n)};
}

}  // namespace detail

/// Stationary mean holding time int E_x(t_1) f_*(dx) from M draws of x ~
/// estimate and t_1 | x, with a doubling check. Instability is reported, not raised.
inline HoldingTimeReport check_r0v(const PdmpModel& model, const DensityEstimate& estimate, long m,
                                   std::uint64_t seed, unsigned workers = 1) {
  if (m < 2) throw ConfigError("check_r0v: need at least two holding samples");
  HoldingTimeReport r;
  r.samples = m;
  std::tie(r.estimate, r.standard_error) = detail::mean_holding_sample(model, estimate, m, seed, 0, workers);
  std::tie(r.doubled_estimate, r.doubled_standard_error) =
      detail::mean_holding_sample(model, estimate, 2 * m, seed, 1'000'000, workers);
  r.shift = r.doubled_estimate - r.estimate;
  const double se = std::hypot(r.standard_error, r.doubled_standard_error);
  r.stable = std::isfinite(r.shift) && std::abs(r.shift) < 3.0 * se;
  return r;
}

struct PositivityReport {
  std::size_t qualifying_cells = 0;
  std::size_t empty_cells = 0;
  bool passes = false;
};

/// Every cell whose expected count under `reference` at `samples` draws is
/// at least `min_expected` must be non-empty in `estimate`.
inline PositivityReport positivity_probe(const DensityEstimate& estimate, const DensityEstimate& reference,
                                         double min_expected = 0.5) {
  if (!(estimate.grid == reference.grid)) throw GridError("positivity_probe: grids differ");
  PositivityReport r;
  const double n = static_cast<double>(estimate.samples);
  for (std::size_t c = 0; c < estimate.mass.size(); ++c) {
    if (reference.mass[c] * n < min_expected) continue;
    ++r.qualifying_cells;
    if (estimate.mass[c] <= 0.0) ++r.empty_cells;
  }
  r.passes = r.qualifying_cells > 0 && r.empty_cells == 0;
  return r;
}

}  // namespace pdmp

#endif  // PDMP_DENSITY_HPP

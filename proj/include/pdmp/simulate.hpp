#ifndef PDMP_SIMULATE_HPP
#define PDMP_SIMULATE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pdmp/core.hpp"
#include "pdmp/flow.hpp"
#include "pdmp/random.hpp"

namespace pdmp {

enum class JumpTimeMethod { HazardInversion, Thinning };

struct SimulationConfig {
  double horizon = 100.0;
  long max_jumps = 1'000'000;
  JumpTimeMethod method = JumpTimeMethod::HazardInversion;
  std::uint64_t seed = 42;
  unsigned workers = 1;

  void validate() const {
    if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
    if (max_jumps < 1) throw ConfigError("max_jumps must be at least 1");
  }
};

/// A sampled first jump time and the state just before it. `reached` is
/// false when the time limit came first; `time` is then the limit.
struct JumpTime {
  double time = 0.0;
  State pre_jump;
  bool reached = true;
};

namespace detail {

inline JumpTime thinning_jump_time(const PdmpModel& model, const State& x, Rng& rng, double limit) {
  const auto bound = model.intensity.bound_along_flow(x);
  if (!bound) throw ModelError(model.name + ": thinning needs an intensity bound along flows");
  const double rate_bound = *bound;
  double t = 0.0;
  State y = x;
  const bool incremental = !model.flow.is_closed_form() && !model.flow.stationary;
  auto state_at = [&](double s, double ds) {
    return incremental ? flow_raw(model, y, ds) : flow_raw(model, x, s);
  };
  if (!(rate_bound > 0.0)) {
    if (std::isfinite(limit)) return {limit, state_at(limit, limit), false};
    throw HorizonExhaustedError("thinning bound is zero: no jump will ever occur");
  }
  for (;;) {
    const double dt = standard_exponential(rng) / rate_bound;
    if (t + dt > limit) return {limit, state_at(limit, limit - t), false};
    if (t + dt > kHazardCapTime) throw HorizonExhaustedError("thinning passed the cap time without a jump");
    y = state_at(t + dt, dt);
    t += dt;
    const double rate = model.intensity(y);
    if (rate > rate_bound * (1.0 + 1e-12))
      throw ThinningBoundError(model.name + ": phi = " + std::to_string(rate) + " exceeds thinning bound " +
                               std::to_string(rate_bound));
    if (uniform01(rng) * rate_bound < rate) return {t, y, true};
  }
}

}  // namespace detail

/// Samples tau with P(tau <= t) = 1 - exp(-Lambda_x(t)) and returns pi_tau x.
inline JumpTime sample_jump_time(const PdmpModel& model, const State& x, Rng& rng,
                                 JumpTimeMethod method = JumpTimeMethod::HazardInversion, double limit = kInf) {
  require_in_space(model, x, "sample_jump_time");
  if (method == JumpTimeMethod::Thinning) {
    JumpTime jt = detail::thinning_jump_time(model, x, rng, limit);
    jt.pre_jump = model.space.project(std::move(jt.pre_jump), model.flow.tolerance);
    return jt;
  }
  const double target = standard_exponential(rng);
  HazardCrossing c = invert_hazard(model, x, target, limit);
  return {c.time, model.space.project(std::move(c.state), model.flow.tolerance), c.reached};
}

/// One step of the embedded chain X_n -> X_{n+1}.
struct ChainStep {
  State state;
  State pre_jump;
  Theta theta;
  double holding = 0.0;
};

inline ChainStep step_embedded_chain(const PdmpModel& model, const State& x, Rng& rng,
                                     JumpTimeMethod method = JumpTimeMethod::HazardInversion) {
  JumpTime jt = sample_jump_time(model, x, rng, method);
  JumpDraw jd = jump_from(model, jt.pre_jump, rng);
  return {std::move(jd.state), std::move(jt.pre_jump), std::move(jd.theta), jt.time};
}

struct JumpRecord {
  double holding = 0.0;
  /// Absolute jump time t_k, the running sum of holding times.
  double time = 0.0;
  State pre_jump;
  State post_jump;
  Theta theta;
};

/// A minimal-process path on [0, horizon]. X is right-continuous: at t_k
/// the process sits at the post-jump state.
struct Trajectory {
  State initial;
  std::vector<JumpRecord> jumps;
  double horizon = 0.0;
  bool exploded = false;
  bool cap_hit = false;

  double last_jump_time() const { return jumps.empty() ? 0.0 : jumps.back().time; }

  /// X(t) for t in [0, horizon]. Undefined past a suspected explosion.
  State position_at(const PdmpModel& model, double t) const {
    if (t < 0.0 || t > horizon) throw ModelError("position_at: time outside [0, horizon]");
    if (exploded && t >= last_jump_time())
      throw ExplosionError("X(t) undefined: explosion suspected before t = " + std::to_string(t));
    auto it = std::upper_bound(jumps.begin(), jumps.end(), t,
                               [](double v, const JumpRecord& r) { return v < r.time; });
    if (it == jumps.begin()) return flow_at(model, initial, t);
    const JumpRecord& last = *std::prev(it);
    return flow_at(model, last.post_jump, t - last.time);
  }
};

/// Iterates the embedded chain until the horizon passes or max_jumps jumps
/// occur. Hitting the cap before the horizon flags a suspected explosion.
inline Trajectory simulate_path(const PdmpModel& model, const State& x0, const SimulationConfig& config, Rng& rng) {
  config.validate();
  require_in_space(model, x0, "simulate_path");
  Trajectory traj;
  traj.initial = x0;
  traj.horizon = config.horizon;
  State x = x0;
  double elapsed = 0.0;
  while (static_cast<long>(traj.jumps.size()) < config.max_jumps) {
    JumpTime jt = sample_jump_time(model, x, rng, config.method, config.horizon - elapsed);
    if (!jt.reached) break;
    JumpDraw jd = jump_from(model, jt.pre_jump, rng);
    elapsed += jt.time;
    if (elapsed > config.horizon) break;
    traj.jumps.push_back({jt.time, elapsed, std::move(jt.pre_jump), jd.state, std::move(jd.theta)});
    x = std::move(jd.state);
  }
  if (static_cast<long>(traj.jumps.size()) >= config.max_jumps) {
    traj.cap_hit = true;
    traj.exploded = elapsed < config.horizon;
  }
  return traj;
}

/// `count` independent paths on streams (config.seed, i), ordered by i.
inline std::vector<Trajectory> simulate_paths(const PdmpModel& model, const State& x0,
                                              const SimulationConfig& config, std::size_t count) {
  std::vector<Trajectory> out(count);
  parallel_for(count, config.workers, [&](std::size_t i) {
    Rng rng = make_stream(config.seed, i);
    out[i] = simulate_path(model, x0, config, rng);
  });
  return out;
}

/// X(t) from a fresh path started at x0.
inline State sample_position_at(const PdmpModel& model, const State& x0, double t, const SimulationConfig& config,
                                Rng& rng) {
  if (t < 0.0 || t > config.horizon) throw ConfigError("sample_position_at: t must lie in [0, horizon]");
  if (t == 0.0) return x0;
  SimulationConfig local = config;
  local.horizon = t;
  const Trajectory traj = simulate_path(model, x0, local, rng);
  return traj.position_at(model, t);
}

}  // namespace pdmp

#endif  // PDMP_SIMULATE_HPP

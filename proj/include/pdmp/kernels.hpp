#ifndef PDMP_KERNELS_HPP
#define PDMP_KERNELS_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "pdmp/core.hpp"
#include "pdmp/flow.hpp"
#include "pdmp/grid.hpp"
#include "pdmp/quadrature.hpp"

namespace pdmp {

/// One factor (theta, s) of a composed map.
struct JumpStage {
  Theta theta;
  double s = 0.0;
};

namespace detail {

inline State single_map_raw(const PdmpModel& model, const Theta& theta, double s, const State& x) {
  return model.jumps.transform(theta, flow_raw(model, x, s));
}

}  // namespace detail

/// T_(theta,s)(x) = T_theta(pi_s x).
inline State single_map(const PdmpModel& model, const Theta& theta, double s, const State& x) {
  if (!(s >= 0.0)) throw ModelError("single_map: s must be nonnegative");
  return model.space.project(detail::single_map_raw(model, theta, s, x), model.flow.tolerance);
}

/// k_(theta,s)(x) = p_theta(pi_s x) phi(pi_s x) exp(-Lambda_x(s)).
inline double single_weight(const PdmpModel& model, const Theta& theta, double s, const State& x) {
  if (!(s >= 0.0)) throw ModelError("single_weight: s must be nonnegative");
  const State y = detail::flow_raw(model, x, s);
  return model.jumps.weight(theta, y) * model.intensity(y) * std::exp(-cumulative_hazard(model, x, s));
}

/// T_(theta^n, s^n) and k_(theta^n, s^n), applied right to left: stage 0 acts first.
class ComposedJumpMap {
 public:
  struct Evaluation {
    State point;
    double weight = 1.0;
    /// y_0 = x, y_k = T_(theta^k, s^k)(x).
    std::vector<State> intermediates;
  };

  ComposedJumpMap(const PdmpModel& model, std::vector<JumpStage> stages)
      : model_(&model), stages_(std::move(stages)) {}

  const std::vector<JumpStage>& stages() const { return stages_; }
  std::size_t length() const { return stages_.size(); }
  const PdmpModel& model() const { return *model_; }

  Evaluation apply(const State& x) const {
    Evaluation e;
    e.point = x;
    e.intermediates.push_back(x);
    for (const auto& st : stages_) {
      e.weight *= single_weight(*model_, st.theta, st.s, e.point);
      e.point = detail::single_map_raw(*model_, st.theta, st.s, e.point);
      e.intermediates.push_back(e.point);
    }
    return e;
  }

  State evaluate(const State& x) const {
    State y = x;
    for (const auto& st : stages_) y = detail::single_map_raw(*model_, st.theta, st.s, y);
    return y;
  }

  double weight(const State& x) const { return apply(x).weight; }

  double total_time() const {
    double t = 0.0;
    for (const auto& st : stages_) t += st.s;
    return t;
  }

 private:
  const PdmpModel* model_;
  std::vector<JumpStage> stages_;
};

/// Tensor Gauss-Legendre controls for the kernel quadrature oracles.
struct QuadratureSpec {
  int s_panels = 200;
  int theta_panels = 200;
  /// Tail mass allowed per truncated dimension; sets S_max = -ln(eps)/phi_lower.
  double eps = 1e-6;
  /// Explicit s-truncation; required when the model declares no phi_lower.
  std::optional<double> s_max;

  QuadratureSpec halved() const {
    QuadratureSpec h = *this;
    h.s_panels = std::max(1, s_panels / 2);
    h.theta_panels = std::max(1, theta_panels / 2);
    return h;
  }
};

namespace detail {

struct SRule {
  std::vector<double> s;
  std::vector<double> w;
  double s_max = 0.0;
  /// Known bound on exp(-Lambda(S_max)), if phi_lower is declared.
  std::optional<double> tail_bound;
};

/// With phi_lower > 0 the rule integrates in u = 1 - exp(-phi_lower s),
/// which flattens the survival factor; otherwise plain GL on [0, S_max].
inline SRule make_s_rule(const PdmpModel& model, const QuadratureSpec& spec) {
  SRule r;
  const auto lower = model.intensity.lower_bound;
  if (lower && *lower > 0.0) {
    const double rate = *lower;
    r.s_max = spec.s_max ? *spec.s_max : -std::log(spec.eps) / rate;
    const double u_max = -std::expm1(-rate * r.s_max);
    for (const auto& n : composite_gauss_legendre(0.0, u_max, spec.s_panels)) {
      r.s.push_back(-std::log1p(-n.x) / rate);
      r.w.push_back(n.w / (rate * (1.0 - n.x)));
    }
    r.tail_bound = std::exp(-rate * r.s_max);
  } else {
    if (!spec.s_max)
      throw TruncationError(model.name + ": no intensity lower bound; quadrature needs an explicit s_max");
    r.s_max = *spec.s_max;
    for (const auto& n : composite_gauss_legendre(0.0, r.s_max, spec.s_panels)) {
      r.s.push_back(n.x);
      r.w.push_back(n.w);
    }
  }
  return r;
}

inline void theta_nodes(const PdmpModel& model, const State& z, const QuadratureSpec& spec,
                        const std::function<void(const Theta&, double)>& visit, double& tail) {
  const auto& jumps = model.jumps;
  if (jumps.kind == ThetaKind::Discrete) {
    for (const Theta& th : jumps.support(z)) visit(th, 1.0);
    tail = std::max(tail, jumps.support_tail);
    return;
  }
  if (!jumps.truncation)
    throw TruncationError(model.name + ": unbounded parameter space without a tail bound");
  const ThetaRange range = jumps.truncation(z, spec.eps);
  tail = std::max(tail, range.tail_mass);
  const int k = jumps.theta_dimension;
  std::vector<std::vector<QuadNode>> axes;
  for (int i = 0; i < k; ++i) axes.push_back(composite_gauss_legendre(range.lo[i], range.hi[i], spec.theta_panels));
  std::vector<std::size_t> idx(static_cast<std::size_t>(k), 0);
  Theta th(k);
  for (;;) {
    double w = 1.0;
    for (int i = 0; i < k; ++i) {
      const auto& n = axes[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(i)]];
      th[i] = n.x;
      w *= n.w;
    }
    visit(th, w);
    int i = k - 1;
    for (; i >= 0; --i) {
      auto& j = idx[static_cast<std::size_t>(i)];
      if (++j < axes[static_cast<std::size_t>(i)].size()) break;
      j = 0;
    }
    if (i < 0) break;
  }
}

}  // namespace detail

/// Quadrature nodes of K(y, .): calls visit(T_(theta,s)(y), weight * k_(theta,s)(y) * dnu ds).
/// Returns the truncated mass bound of this stage, scaled by `weight`.
inline double expand_kernel(const PdmpModel& model, const State& y, double weight, const QuadratureSpec& spec,
                            const std::function<void(const State&, double)>& visit) {
  const detail::SRule rule = detail::make_s_rule(model, spec);
  std::vector<double> times = rule.s;
  if (!rule.tail_bound) times.push_back(rule.s_max);
  double theta_tail = 0.0;
  double survival_at_max = 0.0;
  sweep_hazard(model, y, times, [&](std::size_t i, double hazard, const State& z) {
    const double survival = std::exp(-hazard);
    if (i == rule.s.size()) {
      survival_at_max = survival;
      return;
    }
    const double base = weight * rule.w[i] * model.intensity(z) * survival;
    if (base == 0.0) return;
    detail::theta_nodes(model, z, spec, [&](const Theta& th, double w) {
      const double p = model.jumps.weight(th, z);
      if (p > 0.0) visit(model.jumps.transform(th, z), base * w * p);
    }, theta_tail);
  });
  const double s_tail = rule.tail_bound ? *rule.tail_bound : survival_at_max;
  return weight * (s_tail + theta_tail);
}

/// Per-cell masses of K^n(x, .) on a grid.
struct KernelOracleGrid {
  GridSpec grid;
  std::vector<double> cell_mass;
  double out_of_box = 0.0;
  double truncation_bound = 0.0;

  double captured() const {
    double s = out_of_box;
    for (double m : cell_mass) s += m;
    return s;
  }

  /// Oracle as a DensityEstimate; the uncaptured tail is counted out of box.
  DensityEstimate as_estimate() const {
    DensityEstimate e{grid, cell_mass, out_of_box, 0, 0};
    e.out_of_box += std::max(0.0, 1.0 - captured());
    return e;
  }
};

namespace detail {

inline double expand_iterated(const PdmpModel& model, const State& x, int n, const QuadratureSpec& spec,
                              const std::function<void(const State&, double)>& visit) {
  if (n == 1) return expand_kernel(model, x, 1.0, spec, visit);
  double tail = 0.0;
  tail += expand_kernel(model, x, 1.0, spec, [&](const State& y, double w) {
    tail += expand_kernel(model, model.space.project(y, model.flow.tolerance), w, spec, visit);
  });
  return tail;
}

}  // namespace detail

/// K^n(x, cell) for every cell of `grid` by tensorized Gauss-Legendre
/// quadrature (n in {1, 2}).
inline KernelOracleGrid kernel_oracle_grid(const PdmpModel& model, const State& x, const GridSpec& grid, int n,
                                           const QuadratureSpec& spec = {}) {
  if (n < 1 || n > 2) throw ConfigError("kernel oracle supports n = 1 or n = 2");
  require_in_space(model, x, "kernel_oracle");
  grid.validate();
  KernelOracleGrid out{grid, std::vector<double>(grid.cell_count(), 0.0), 0.0, 0.0};
  out.truncation_bound = detail::expand_iterated(model, x, n, spec, [&](const State& y, double w) {
    if (auto idx = grid.locate(y))
      out.cell_mass[*idx] += w;
    else
      out.out_of_box += w;
  });
  return out;
}

/// A union of grid cells.
struct CellSet {
  GridSpec grid;
  std::vector<std::size_t> cells;

  bool contains(const State& y) const {
    auto idx = grid.locate(y);
    return idx && std::binary_search(cells.begin(), cells.end(), *idx);
  }

  static CellSet box(const GridSpec& grid, const std::vector<int>& lo, const std::vector<int>& hi) {
    CellSet s{grid, {}};
    for (std::size_t i = 0; i < grid.cell_count(); ++i) {
      const auto k = grid.unflatten(i);
      bool in = true;
      for (std::size_t a = 0; a < k.size(); ++a) in = in && k[a] >= lo[a] && k[a] <= hi[a];
      if (in) s.cells.push_back(i);
    }
    return s;
  }

  static CellSet all(const GridSpec& grid) {
    CellSet s{grid, {}};
    for (std::size_t i = 0; i < grid.cell_count(); ++i) s.cells.push_back(i);
    return s;
  }
};

struct OracleValue {
  double probability = 0.0;
  double truncation_bound = 0.0;
  /// |Q(spec) - Q(spec halved)|.
  double discretization_estimate = 0.0;

  double error_bound() const { return truncation_bound + discretization_estimate; }
};

/// K^n(x, B) with a truncation bound and an embedded discretization estimate.
inline OracleValue kernel_oracle(const PdmpModel& model, const State& x, const CellSet& cells, int n,
                                 const QuadratureSpec& spec = {}) {
  if (n < 1 || n > 2) throw ConfigError("kernel oracle supports n = 1 or n = 2");
  require_in_space(model, x, "kernel_oracle");
  auto run = [&](const QuadratureSpec& q, double& prob) {
    prob = 0.0;
    return detail::expand_iterated(model, x, n, q, [&](const State& y, double w) {
      if (cells.contains(y)) prob += w;
    });
  };
  OracleValue v;
  double coarse = 0.0;
  v.truncation_bound = run(spec, v.probability);
  run(spec.halved(), coarse);
  v.discretization_estimate = std::abs(v.probability - coarse);
  return v;
}

/// K^2(x, B) by composing two one-step oracles: the first step is binned on
/// `refinement`, each bin is collapsed to its mass-weighted centroid, and
/// K(centroid, B) is evaluated by a second one-step oracle.
inline OracleValue chapman_kolmogorov(const PdmpModel& model, const State& x, const CellSet& cells,
                                      const GridSpec& refinement, const QuadratureSpec& spec = {}) {
  require_in_space(model, x, "chapman_kolmogorov");
  auto compose = [&](const GridSpec& g, double& tail) {
    const std::size_t nc = g.cell_count();
    std::vector<double> mass(nc, 0.0);
    std::vector<State> moment(nc, State::Zero(x.size()));
    double out = 0.0;
    tail = expand_kernel(model, x, 1.0, spec, [&](const State& y, double w) {
      if (auto idx = g.locate(y)) {
        mass[*idx] += w;
        moment[*idx] += w * y;
      } else {
        out += w;
      }
    });
    tail += out;
    double prob = 0.0;
    for (std::size_t c = 0; c < nc; ++c) {
      if (mass[c] <= 0.0) continue;
      State centroid = model.space.project(moment[c] / mass[c], 1e-6);
      double p = 0.0;
      tail += expand_kernel(model, centroid, mass[c], spec, [&](const State& y, double w) {
        if (cells.contains(y)) p += w;
      });
      prob += p;
    }
    return prob;
  };
  OracleValue v;
  double tail_coarse = 0.0;
  v.probability = compose(refinement, v.truncation_bound);
  GridSpec coarser = refinement;
  for (auto& a : coarser.axes)
    if (!a.discrete && a.bins % 2 == 0) a.bins /= 2;
  const double coarse = compose(coarser, tail_coarse);
  v.discretization_estimate = std::abs(v.probability - coarse);
  return v;
}

/// int f d K(x, .) over the truncated quadrature, with the truncated mass.
struct KernelExpectation {
  double value = 0.0;
  double captured_mass = 0.0;
  double truncation_bound = 0.0;
};

inline KernelExpectation kernel_expectation(const PdmpModel& model, const State& x,
                                            const std::function<double(const State&)>& f,
                                            const QuadratureSpec& spec = {}) {
  KernelExpectation e;
  e.truncation_bound = expand_kernel(model, x, 1.0, spec, [&](const State& y, double w) {
    e.value += w * f(y);
    e.captured_mass += w;
  });
  return e;
}

}  // namespace pdmp

#endif  // PDMP_KERNELS_HPP

#ifndef PDMP_CORE_HPP
#define PDMP_CORE_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pdmp/errors.hpp"
#include "pdmp/random.hpp"

namespace pdmp {

inline constexpr int kMaxDim = 8;

/// Point of the state space E. Discrete coordinates (switching modes,
/// lattice sites) are stored as integral doubles.
using State = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
/// Jump parameter theta. Discrete parameter spaces store the index.
using Theta = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class ReferenceMeasure { Lebesgue, LebesgueTimesCounting, Counting };

inline State make_state(std::initializer_list<double> values) {
  State x(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) x[i++] = v;
  return x;
}

inline Theta make_theta(std::initializer_list<double> values) { return make_state(values); }

/// The set E: a box in R^d, some axes of which are integer lattices.
struct StateSpace {
  int dimension = 1;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<bool> discrete;

  static StateSpace box(std::vector<double> lo, std::vector<double> hi, std::vector<bool> disc = {}) {
    StateSpace s;
    s.dimension = static_cast<int>(lo.size());
    if (disc.empty()) disc.assign(lo.size(), false);
    s.lower = std::move(lo);
    s.upper = std::move(hi);
    s.discrete = std::move(disc);
    return s;
  }

  ReferenceMeasure measure() const {
    int nd = 0;
    for (bool b : discrete) nd += b ? 1 : 0;
    if (nd == 0) return ReferenceMeasure::Lebesgue;
    if (nd == dimension) return ReferenceMeasure::Counting;
    return ReferenceMeasure::LebesgueTimesCounting;
  }

  bool is_discrete(int axis) const { return discrete[static_cast<std::size_t>(axis)]; }

  std::vector<int> continuous_axes() const {
    std::vector<int> out;
    for (int i = 0; i < dimension; ++i)
      if (!is_discrete(i)) out.push_back(i);
    return out;
  }

  int continuous_dimension() const { return static_cast<int>(continuous_axes().size()); }

  bool contains(const State& x) const {
    if (x.size() != dimension) return false;
    for (int i = 0; i < dimension; ++i) {
      const auto k = static_cast<std::size_t>(i);
      if (!std::isfinite(x[i]) || x[i] < lower[k] || x[i] > upper[k]) return false;
      if (discrete[k] && x[i] != std::round(x[i])) return false;
    }
    return true;
  }

  /// Clamps coordinates that overshoot the box by at most `tol` (relative to
  /// max(1, |x_i|)); anything further out is a domain exit.
  State project(State x, double tol) const {
    if (x.size() != dimension)
      throw DomainExitError("state has dimension " + std::to_string(x.size()) + ", expected " +
                            std::to_string(dimension));
    for (int i = 0; i < dimension; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const double slack = tol * std::max(1.0, std::abs(x[i]));
      if (!std::isfinite(x[i])) throw DomainExitError("non-finite state coordinate");
      if (x[i] < lower[k]) {
        if (x[i] < lower[k] - slack)
          throw DomainExitError("coordinate " + std::to_string(i) + " = " + std::to_string(x[i]) +
                                " below lower bound " + std::to_string(lower[k]));
        x[i] = lower[k];
      } else if (x[i] > upper[k]) {
        if (x[i] > upper[k] + slack)
          throw DomainExitError("coordinate " + std::to_string(i) + " = " + std::to_string(x[i]) +
                                " above upper bound " + std::to_string(upper[k]));
        x[i] = upper[k];
      }
      if (discrete[k]) x[i] = std::round(x[i]);
    }
    return x;
  }
};

/// The semiflow pi generated by x' = g(x). Closed-form flows are evaluated
/// exactly; otherwise the field is integrated with an adaptive Runge-Kutta
/// scheme at `tolerance`.
struct Semiflow {
  std::function<State(const State&)> field;
  std::function<State(const State&, double)> closed_form;
  /// d(pi_t y)/dy, optional.
  std::function<Matrix(const State&, double)> jacobian;
  /// Dg(y), optional; enables variational integration of d(pi_t y)/dy.
  std::function<Matrix(const State&)> field_jacobian;
  /// g == 0: pure-jump process.
  bool stationary = false;
  double tolerance = 1e-8;

  bool is_closed_form() const { return static_cast<bool>(closed_form); }
};

/// Jump intensity phi with optional bounds. `flow_bound(x)` bounds
/// phi(pi_t x) for all t >= 0 and is what thinning uses.
struct Intensity {
  std::function<double(const State&)> rate;
  std::optional<double> lower_bound;
  std::optional<double> upper_bound;
  std::function<double(const State&)> flow_bound;

  double operator()(const State& x) const { return rate(x); }

  std::optional<double> bound_along_flow(const State& x) const {
    if (flow_bound) return flow_bound(x);
    return upper_bound;
  }
};

enum class ThetaKind { Continuous, Discrete };

/// Box in parameter space carrying all but `tail_mass` of p_.(x).
struct ThetaRange {
  Theta lo;
  Theta hi;
  double tail_mass = 0.0;
};

/// The jump family (Theta, nu, T_theta, p_theta).
struct JumpFamily {
  ThetaKind kind = ThetaKind::Continuous;
  int theta_dimension = 1;
  std::function<State(const Theta&, const State&)> transform;
  std::function<double(const Theta&, const State&)> weight;
  std::function<Theta(const State&, Rng&)> sample;
  /// Discrete families: points of positive weight at x.
  std::function<std::vector<Theta>(const State&)> support;
  /// Declared bound on the weight outside `support` (countable families).
  double support_tail = 0.0;
  /// Continuous families: quadrature box holding all but `eps` of p_.(x).
  std::function<ThetaRange(const State&, double)> truncation;
  /// dT_theta(x)/dx, optional.
  std::function<Matrix(const Theta&, const State&)> state_jacobian;
  /// dT_theta(x)/dtheta, optional (continuous families only).
  std::function<Matrix(const Theta&, const State&)> theta_jacobian;
};

/// Local characteristics (pi, phi, J) on a state space.
struct PdmpModel {
  std::string name;
  StateSpace space;
  Semiflow flow;
  Intensity intensity;
  JumpFamily jumps;

  int dimension() const { return space.dimension; }

  void validate() const {
    if (space.dimension < 1 || space.dimension > kMaxDim)
      throw ModelError(name + ": dimension must be in [1, " + std::to_string(kMaxDim) + "]");
    const auto d = static_cast<std::size_t>(space.dimension);
    if (space.lower.size() != d || space.upper.size() != d || space.discrete.size() != d)
      throw ModelError(name + ": state-space bounds do not match the dimension");
    if (!flow.field && !flow.stationary) throw ModelError(name + ": missing vector field");
    if (!intensity.rate) throw ModelError(name + ": missing intensity");
    if (!jumps.transform || !jumps.weight || !jumps.sample)
      throw ModelError(name + ": jump family needs transform, weight and sampler");
    if (jumps.kind == ThetaKind::Discrete && !jumps.support)
      throw ModelError(name + ": discrete jump family needs a support enumeration");
    if (flow.tolerance <= 0.0) throw ModelError(name + ": tolerance must be positive");
  }
};

inline void require_in_space(const PdmpModel& model, const State& x, const char* where) {
  if (!model.space.contains(x))
    throw DomainExitError(std::string(where) + ": state outside the state space of " + model.name);
}

/// g(x); zero for pure-jump models.
inline State field_at(const PdmpModel& model, const State& x) {
  if (model.flow.stationary || !model.flow.field) return State::Zero(x.size());
  return model.flow.field(x);
}

/// Zeroes rows and columns of discrete coordinates.
inline Matrix mask_discrete(const StateSpace& space, Matrix m, bool rows, bool cols) {
  for (int i = 0; i < space.dimension; ++i) {
    if (!space.is_discrete(i)) continue;
    if (rows && i < m.rows()) m.row(i).setZero();
    if (cols && i < m.cols()) m.col(i).setZero();
  }
  return m;
}

/// Draw from J(x, .): returns (T_theta(x), theta).
struct JumpDraw {
  State state;
  Theta theta;
};

/// Accept/reject helper for user-supplied samplers. Throws after `cap` rejections.
template <class Propose, class Accept>
Theta rejection_sample(Propose&& propose, Accept&& accept, Rng& rng, long cap = 1'000'000) {
  for (long attempt = 0; attempt < cap; ++attempt) {
    Theta candidate = propose(rng);
    if (uniform01(rng) < accept(candidate)) return candidate;
  }
  throw SamplerError("rejection sampler exhausted " + std::to_string(cap) + " attempts");
}

inline JumpDraw jump_from(const PdmpModel& model, const State& x, Rng& rng) {
  require_in_space(model, x, "jump_from");
  Theta theta = model.jumps.sample(x, rng);
  State y = model.space.project(model.jumps.transform(theta, x), model.flow.tolerance);
  return {std::move(y), std::move(theta)};
}

}  // namespace pdmp

#endif  // PDMP_CORE_HPP

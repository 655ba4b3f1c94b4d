#ifndef PDMP_FLOW_HPP
#define PDMP_FLOW_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "pdmp/core.hpp"

namespace pdmp {

namespace detail {

namespace odeint = boost::numeric::odeint;
using OdeState = std::vector<double>;
using Dopri5 = odeint::runge_kutta_dopri5<OdeState>;
using DenseStepper = odeint::result_of::make_dense_output<Dopri5>::type;

inline OdeState to_ode(const State& x) { return OdeState(x.data(), x.data() + x.size()); }

inline State from_ode(const OdeState& y, int d) {
  State x(d);
  for (int i = 0; i < d; ++i) x[i] = y[static_cast<std::size_t>(i)];
  return x;
}

/// pi_t x without domain checks. Used by finite differences, which may
/// perturb states off the boundary of E.
inline State flow_raw(const PdmpModel& model, const State& x, double t) {
  if (t == 0.0 || model.flow.stationary) return x;
  if (model.flow.is_closed_form()) return model.flow.closed_form(x, t);
  const int d = static_cast<int>(x.size());
  OdeState y = to_ode(x);
  const double tol = model.flow.tolerance;
  auto rhs = [&model, d](const OdeState& s, OdeState& ds, double) {
    const State g = model.flow.field(from_ode(s, d));
    for (int i = 0; i < d; ++i) ds[static_cast<std::size_t>(i)] = g[i];
  };
  odeint::integrate_adaptive(odeint::make_controlled(tol * 1e-2, tol, Dopri5()), rhs, y, 0.0, t,
                             std::min(t, 1e-2));
  return from_ode(y, d);
}

}  // namespace detail

/// pi_t x. Closed-form flows are exact; ODE flows are integrated at the
/// model tolerance. Throws DomainExitError if the result leaves E by more
/// than the tolerance.
inline State flow_at(const PdmpModel& model, const State& x, double t) {
  require_in_space(model, x, "flow_at");
  if (t < 0.0) throw ModelError("flow_at: negative time");
  return model.space.project(detail::flow_raw(model, x, t), model.flow.tolerance);
}

/// d(pi_t y)/dy with discrete coordinates masked out.
inline Matrix flow_jacobian(const PdmpModel& model, const State& y, double t) {
  namespace odeint = detail::odeint;
  const int d = static_cast<int>(y.size());
  Matrix jac;
  if (model.flow.stationary || t == 0.0) {
    jac = Matrix::Identity(d, d);
  } else if (model.flow.jacobian) {
    jac = model.flow.jacobian(y, t);
  } else if (model.flow.field_jacobian) {
    // Variational equations: Phi' = Dg(pi_s y) Phi, Phi(0) = I.
    detail::OdeState z(static_cast<std::size_t>(d + d * d), 0.0);
    for (int i = 0; i < d; ++i) {
      z[static_cast<std::size_t>(i)] = y[i];
      z[static_cast<std::size_t>(d + i * d + i)] = 1.0;
    }
    auto rhs = [&model, d](const detail::OdeState& s, detail::OdeState& ds, double) {
      const State x = detail::from_ode(s, d);
      const State g = model.flow.field(x);
      const Matrix dg = model.flow.field_jacobian(x);
      Eigen::Map<const Matrix> phi(s.data() + d, d, d);
      Eigen::Map<Matrix> dphi(ds.data() + d, d, d);
      for (int i = 0; i < d; ++i) ds[static_cast<std::size_t>(i)] = g[i];
      dphi.noalias() = dg * phi;
    };
    const double tol = model.flow.tolerance;
    odeint::integrate_adaptive(odeint::make_controlled(tol * 1e-2, tol, detail::Dopri5()), rhs, z, 0.0, t,
                               std::min(t, 1e-2));
    jac = Eigen::Map<const Matrix>(z.data() + d, d, d);
  } else {
    jac.resize(d, d);
    for (int j = 0; j < d; ++j) {
      const double h = std::max(1e-6, 1e-7 * y.norm());
      State up = y, down = y;
      up[j] += h;
      down[j] -= h;
      jac.col(j) = (detail::flow_raw(model, up, t) - detail::flow_raw(model, down, t)) / (2.0 * h);
    }
  }
  return mask_discrete(model.space, std::move(jac), true, true);
}

/// Adaptive integration of the hazard Lambda_x(t) = int_0^t phi(pi_s x) ds,
/// co-integrated with the flow (ODE models) so both share step control.
/// An optional extra integrand f(t, pi_t x, Lambda) is carried alongside.
class HazardPath {
 public:
  using Extra = std::function<double(double, const State&, double)>;

  HazardPath(const PdmpModel& model, const State& x, Extra extra = {})
      : model_(&model),
        x0_(x),
        ode_(!model.flow.is_closed_form() && !model.flow.stationary),
        d_(static_cast<int>(x.size())),
        extra_(std::move(extra)),
        stepper_(detail::odeint::make_dense_output(quadrature_tolerance(model) * 1e-2, quadrature_tolerance(model),
                                                   detail::Dopri5())) {
    offset_ = ode_ ? d_ : 0;
    detail::OdeState y(static_cast<std::size_t>(offset_ + 2), 0.0);
    for (int i = 0; i < offset_; ++i) y[static_cast<std::size_t>(i)] = x[i];
    const double rate = model.intensity(x);
    const double dt0 = std::clamp(0.1 / std::max(rate, 1e-12), 1e-6, 0.1);
    stepper_.initialize(y, 0.0, dt0);
  }

  HazardPath(const HazardPath&) = delete;
  HazardPath& operator=(const HazardPath&) = delete;

  double time() const { return stepper_.current_time(); }
  double previous_time() const { return stepper_.previous_time(); }
  double hazard() const { return stepper_.current_state()[static_cast<std::size_t>(offset_)]; }
  double extra() const { return stepper_.current_state()[static_cast<std::size_t>(offset_ + 1)]; }

  void advance() { stepper_.do_step(System{this}); }

  /// Lambda at t in [previous_time(), time()] from the dense-output interpolant.
  double hazard_at(double t) const {
    interpolate(t);
    return buffer_[static_cast<std::size_t>(offset_)];
  }

  double extra_at(double t) const {
    interpolate(t);
    return buffer_[static_cast<std::size_t>(offset_ + 1)];
  }

  State state_at(double t) const {
    if (!ode_) return detail::flow_raw(*model_, x0_, t);
    interpolate(t);
    return detail::from_ode(buffer_, d_);
  }

 private:
  // With a closed-form flow only the hazard is integrated, so it can afford a
  // tighter tolerance than the ODE setting.
  static double quadrature_tolerance(const PdmpModel& model) {
    const double tol = model.flow.tolerance;
    return !model.flow.is_closed_form() && !model.flow.stationary ? tol : tol * 1e-2;
  }

  struct System {
    const HazardPath* self;
    void operator()(const detail::OdeState& y, detail::OdeState& dy, double t) const {
      const PdmpModel& m = *self->model_;
      State s;
      if (self->ode_) {
        s = detail::from_ode(y, self->d_);
        const State g = m.flow.field(s);
        for (int i = 0; i < self->d_; ++i) dy[static_cast<std::size_t>(i)] = g[i];
      } else {
        s = detail::flow_raw(m, self->x0_, t);
      }
      const auto k = static_cast<std::size_t>(self->offset_);
      dy[k] = m.intensity(s);
      dy[k + 1] = self->extra_ ? self->extra_(t, s, y[k]) : 0.0;
    }
  };

  void interpolate(double t) const {
    buffer_.resize(static_cast<std::size_t>(offset_ + 2));
    stepper_.calc_state(t, buffer_);
  }

  const PdmpModel* model_;
  State x0_;
  bool ode_;
  int d_;
  int offset_ = 0;
  Extra extra_;
  mutable detail::DenseStepper stepper_;
  mutable detail::OdeState buffer_;
};

/// Lambda_x(t).
inline double cumulative_hazard(const PdmpModel& model, const State& x, double t) {
  if (t < 0.0) throw ModelError("cumulative_hazard: negative time");
  if (t == 0.0) return 0.0;
  if (model.flow.stationary) return model.intensity(x) * t;
  HazardPath path(model, x);
  while (path.time() < t) path.advance();
  return path.hazard_at(t);
}

/// Lambda_x at each of the nondecreasing `times`, with pi_t x.
inline void sweep_hazard(const PdmpModel& model, const State& x, std::span<const double> times,
                         const std::function<void(std::size_t, double, const State&)>& visit) {
  if (model.flow.stationary) {
    const double rate = model.intensity(x);
    for (std::size_t i = 0; i < times.size(); ++i) visit(i, rate * times[i], x);
    return;
  }
  HazardPath path(model, x);
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    if (t <= 0.0) {
      visit(i, 0.0, x);
      continue;
    }
    while (path.time() < t) path.advance();
    visit(i, path.hazard_at(t), path.state_at(t));
  }
}

/// Result of solving Lambda_x(tau) = target.
struct HazardCrossing {
  double time = 0.0;
  State state;
  /// false when `limit` came first; then time == limit.
  bool reached = true;
};

inline constexpr double kHazardCapTime = 1e12;

/// Solves Lambda_x(tau) = target by stepping the augmented ODE until the
/// hazard coordinate crosses the target and bisecting inside the final step
/// to relative accuracy 1e-10. Stops early at `limit`.
inline HazardCrossing invert_hazard(const PdmpModel& model, const State& x, double target,
                                    double limit = kInf, double cap = kHazardCapTime) {
  if (model.flow.stationary) {
    const double rate = model.intensity(x);
    const double tau = rate > 0.0 ? target / rate : kInf;
    if (tau > limit) return {limit, x, false};
    if (!std::isfinite(tau)) throw HorizonExhaustedError("zero intensity on a stationary state");
    return {tau, x, true};
  }
  HazardPath path(model, x);
  while (path.hazard() < target) {
    if (path.time() >= limit) break;
    if (path.time() > cap)
      throw HorizonExhaustedError("hazard target " + std::to_string(target) + " not reached by t = " +
                                  std::to_string(cap));
    path.advance();
  }
  double hi = path.time();
  if (hi >= limit) {
    if (path.hazard_at(limit) < target) return {limit, path.state_at(limit), false};
    hi = limit;
  }
  double lo = path.previous_time();
  if (path.hazard_at(lo) >= target) lo = hi = path.previous_time();
  while (hi - lo > 1e-10 * std::max(hi, 1e-300)) {
    const double mid = 0.5 * (lo + hi);
    if (path.hazard_at(mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  const double tau = 0.5 * (lo + hi);
  return {tau, path.state_at(tau), true};
}

/// int_0^inf f(t, pi_t x) exp(-Lambda_x(t)) dt, integrated until the
/// survival factor drops below `survival_floor`. `converged` is false if
/// the cap time is hit first.
struct SurvivalIntegral {
  double value = 0.0;
  double final_survival = 1.0;
  bool converged = true;
};

inline SurvivalIntegral survival_integral(const PdmpModel& model, const State& x,
                                          const std::function<double(double, const State&)>& f,
                                          double survival_floor = 1e-14, double cap = kHazardCapTime) {
  const double stop = -std::log(survival_floor);
  HazardPath path(model, x, [&f](double t, const State& s, double hazard) {
    return f(t, s) * std::exp(-hazard);
  });
  while (path.hazard() < stop) {
    if (path.time() > cap) return {path.extra(), std::exp(-path.hazard()), false};
    path.advance();
  }
  return {path.extra(), std::exp(-path.hazard()), true};
}

/// E_x(t_1) = int_0^inf exp(-Lambda_x(t)) dt.
inline SurvivalIntegral mean_holding_time(const PdmpModel& model, const State& x) {
  if (model.flow.stationary) {
    const double rate = model.intensity(x);
    return {rate > 0.0 ? 1.0 / rate : kInf, 0.0, rate > 0.0};
  }
  return survival_integral(model, x, [](double, const State&) { return 1.0; });
}

}  // namespace pdmp

#endif  // PDMP_FLOW_HPP

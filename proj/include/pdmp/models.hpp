#ifndef PDMP_MODELS_HPP
#define PDMP_MODELS_HPP

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "pdmp/core.hpp"

namespace pdmp {

// ---------------------------------------------------------------------------
// Two-dimensional gene expression with bursting: x1 = mRNA, x2 = protein.

struct GeneExpressionParams {
  double gamma1 = 2.0;  ///< mRNA degradation rate
  double gamma2 = 1.0;  ///< protein degradation rate
  double beta2 = 1.0;   ///< translation rate
  double b = 1.0;       ///< mean burst size
  double kappa1 = 1.0;
  double kappa2 = 1.0;
  double kappa3 = 1.0;
  double hill_n = 1.0;

  void validate() const {
    if (!(gamma2 > 0.0)) throw ModelError("gene: gamma2 must be positive");
    if (!(gamma1 > gamma2)) throw ModelError("gene: gamma1 must exceed gamma2");
    if (!(beta2 >= 0.0)) throw ModelError("gene: beta2 must be nonnegative");
    if (!(b > 0.0)) throw ModelError("gene: mean burst size b must be positive");
    if (!(kappa1 > 0.0)) throw ModelError("gene: kappa1 must be positive");
    if (!(kappa2 >= 0.0) || !(kappa3 >= 0.0)) throw ModelError("gene: kappa2, kappa3 must be nonnegative");
    if (!(hill_n > 0.0)) throw ModelError("gene: Hill exponent N must be positive");
    if (kappa3 == 0.0) {
      if (hill_n > 1.0) throw ModelError("gene: kappa3 = 0 requires N <= 1");
      if (!(gamma2 > b * beta2 * kappa2 / (gamma1 - gamma2)))
        throw ModelError("gene: kappa3 = 0 requires gamma2 > b beta2 kappa2 / (gamma1 - gamma2)");
    }
  }

  /// vartheta(t) = beta2/(gamma1-gamma2) (e^{-gamma2 t} - e^{-gamma1 t}).
  double vartheta(double t) const {
    return beta2 / (gamma1 - gamma2) * (std::exp(-gamma2 * t) - std::exp(-gamma1 * t));
  }

  double vartheta_max() const {
    const double t = std::log(gamma1 / gamma2) / (gamma1 - gamma2);
    return vartheta(t);
  }

  State flow(const State& x, double t) const {
    State y(2);
    y[0] = x[0] * std::exp(-gamma1 * t);
    y[1] = x[1] * std::exp(-gamma2 * t) + x[0] * vartheta(t);
    return y;
  }

  Matrix flow_jacobian(double t) const {
    Matrix m(2, 2);
    m << std::exp(-gamma1 * t), 0.0, vartheta(t), std::exp(-gamma2 * t);
    return m;
  }

  State field(const State& x) const {
    State g(2);
    g[0] = -gamma1 * x[0];
    g[1] = -gamma2 * x[1] + beta2 * x[0];
    return g;
  }

  /// Hill intensity in the protein level.
  double phi(const State& x) const {
    const double p = std::pow(std::max(x[1], 0.0), hill_n);
    return (kappa1 + kappa2 * p) / (1.0 + kappa3 * p);
  }

  double phi_lower() const { return kappa3 > 0.0 ? std::min(kappa1, kappa2 / kappa3) : kappa1; }

  /// Global sup of phi; infinite when kappa3 = 0 < kappa2.
  double phi_upper() const {
    if (kappa3 > 0.0) return std::max(kappa1, kappa2 / kappa3);
    return kappa2 == 0.0 ? kappa1 : kInf;
  }

  /// Burst density h(theta) = e^{-theta/b}/b.
  double burst_density(double theta) const { return theta > 0.0 ? std::exp(-theta / b) / b : 0.0; }

  /// V(x) = x1 beta2/(gamma1-gamma2) + x2.
  double lyapunov(const State& x) const { return x[0] * beta2 / (gamma1 - gamma2) + x[1]; }

  /// W(t, x) = b beta2/(gamma1-gamma2) phi(pi_t x) - V(x) gamma2 e^{-gamma2 t}.
  double drift_integrand(double t, const State& x) const {
    return b * beta2 / (gamma1 - gamma2) * phi(flow(x, t)) - lyapunov(x) * gamma2 * std::exp(-gamma2 * t);
  }
};

inline PdmpModel build_gene_model(const GeneExpressionParams& p, double tolerance = 1e-8) {
  p.validate();
  PdmpModel m;
  m.name = "gene";
  m.space = StateSpace::box({0.0, 0.0}, {kInf, kInf});
  m.flow.tolerance = tolerance;
  m.flow.field = [p](const State& x) { return p.field(x); };
  m.flow.closed_form = [p](const State& x, double t) { return p.flow(x, t); };
  m.flow.jacobian = [p](const State&, double t) { return p.flow_jacobian(t); };
  m.flow.field_jacobian = [p](const State&) {
    Matrix j(2, 2);
    j << -p.gamma1, 0.0, p.beta2, -p.gamma2;
    return j;
  };

  m.intensity.rate = [p](const State& x) { return p.phi(x); };
  m.intensity.lower_bound = p.phi_lower();
  if (std::isfinite(p.phi_upper())) {
    m.intensity.upper_bound = p.phi_upper();
  } else {
    // phi increases in x2 and x2(t) <= x2 + x1 max vartheta along the flow.
    const double vmax = p.vartheta_max();
    m.intensity.flow_bound = [p, vmax](const State& x) {
      State top(2);
      top[0] = 0.0;
      top[1] = x[1] + x[0] * vmax;
      return p.phi(top);
    };
  }

  m.jumps.kind = ThetaKind::Continuous;
  m.jumps.theta_dimension = 1;
  m.jumps.transform = [](const Theta& th, const State& x) {
    State y = x;
    y[0] += th[0];
    return y;
  };
  m.jumps.weight = [p](const Theta& th, const State&) { return p.burst_density(th[0]); };
  m.jumps.sample = [p](const State&, Rng& rng) {
    Theta th(1);
    th[0] = p.b * standard_exponential(rng);
    return th;
  };
  m.jumps.truncation = [p](const State&, double eps) {
    Theta lo(1), hi(1);
    lo[0] = 0.0;
    hi[0] = -p.b * std::log(eps);
    return ThetaRange{lo, hi, eps};
  };
  m.jumps.state_jacobian = [](const Theta&, const State&) { return Matrix::Identity(2, 2); };
  m.jumps.theta_jacobian = [](const Theta&, const State&) {
    Matrix j(2, 1);
    j << 1.0, 0.0;
    return j;
  };
  m.validate();
  return m;
}

// ---------------------------------------------------------------------------
// Random switching between finitely many vector fields on M, embedded as a
// semiflow on M x I with jumps T_j(x, i) = (x, j).

struct SwitchingSystem {
  int modes = 2;
  std::vector<double> lower;  ///< box bounds of M
  std::vector<double> upper;
  std::vector<std::function<State(const State&)>> fields;
  /// Optional closed-form per-mode flows and their x-Jacobians.
  std::vector<std::function<State(const State&, double)>> flows;
  std::vector<std::function<Matrix(const State&, double)>> flow_jacobians;
  std::vector<std::function<Matrix(const State&)>> field_jacobians;
  /// q_j(x, i), j != i.
  std::function<double(int, const State&, int)> rate;
  std::optional<double> rate_lower_bound;
  std::optional<double> rate_upper_bound;
  double tolerance = 1e-8;

  int dimension() const { return static_cast<int>(lower.size()); }

  void validate() const {
    if (modes < 2) throw ModelError("switching: at least two modes are required");
    if (lower.size() != upper.size() || lower.empty()) throw ModelError("switching: bad bounds for M");
    if (static_cast<int>(fields.size()) != modes) throw ModelError("switching: one field per mode required");
    if (!flows.empty() && static_cast<int>(flows.size()) != modes)
      throw ModelError("switching: closed-form flows must cover every mode");
    if (!rate) throw ModelError("switching: missing switching rates");
  }
};

namespace detail {

inline State x_part(const State& s) { return s.head(s.size() - 1); }

inline State with_mode(const State& x, int mode) {
  State s(x.size() + 1);
  s.head(x.size()) = x;
  s[x.size()] = mode;
  return s;
}

inline int mode_of(const State& s) { return static_cast<int>(std::lround(s[s.size() - 1])); }

}  // namespace detail

inline PdmpModel build_switching_model(const SwitchingSystem& sys, std::string name = "switching") {
  sys.validate();
  const int d = sys.dimension();
  PdmpModel m;
  m.name = std::move(name);
  std::vector<double> lo = sys.lower, hi = sys.upper;
  lo.push_back(0.0);
  hi.push_back(sys.modes - 1);
  std::vector<bool> disc(static_cast<std::size_t>(d), false);
  disc.push_back(true);
  m.space = StateSpace::box(lo, hi, disc);
  m.flow.tolerance = sys.tolerance;
  m.flow.field = [sys](const State& s) {
    const int i = detail::mode_of(s);
    State g = State::Zero(s.size());
    g.head(s.size() - 1) = sys.fields[static_cast<std::size_t>(i)](detail::x_part(s));
    return g;
  };
  if (!sys.flows.empty()) {
    m.flow.closed_form = [sys](const State& s, double t) {
      const int i = detail::mode_of(s);
      return detail::with_mode(sys.flows[static_cast<std::size_t>(i)](detail::x_part(s), t), i);
    };
  }
  if (!sys.flow_jacobians.empty()) {
    m.flow.jacobian = [sys, d](const State& s, double t) {
      Matrix j = Matrix::Zero(d + 1, d + 1);
      j.topLeftCorner(d, d) = sys.flow_jacobians[static_cast<std::size_t>(detail::mode_of(s))](detail::x_part(s), t);
      return j;
    };
  }
  if (!sys.field_jacobians.empty()) {
    m.flow.field_jacobian = [sys, d](const State& s) {
      Matrix j = Matrix::Zero(d + 1, d + 1);
      j.topLeftCorner(d, d) = sys.field_jacobians[static_cast<std::size_t>(detail::mode_of(s))](detail::x_part(s));
      return j;
    };
  }

  auto total_rate = [sys](const State& s) {
    const int i = detail::mode_of(s);
    const State x = detail::x_part(s);
    double total = 0.0;
    for (int j = 0; j < sys.modes; ++j)
      if (j != i) total += sys.rate(j, x, i);
    if (!std::isfinite(total)) throw ModelError("switching: rate sum diverges");
    return total;
  };
  m.intensity.rate = total_rate;
  m.intensity.lower_bound = sys.rate_lower_bound;
  m.intensity.upper_bound = sys.rate_upper_bound;

  auto prob = [sys, total_rate](int j, const State& s) {
    const int i = detail::mode_of(s);
    if (j == i) return 0.0;
    const double total = total_rate(s);
    return total > 0.0 ? sys.rate(j, detail::x_part(s), i) / total : 1.0;
  };
  m.jumps.kind = ThetaKind::Discrete;
  m.jumps.theta_dimension = 1;
  m.jumps.transform = [](const Theta& th, const State& s) {
    State y = s;
    y[s.size() - 1] = th[0];
    return y;
  };
  m.jumps.weight = [prob](const Theta& th, const State& s) { return prob(static_cast<int>(th[0]), s); };
  m.jumps.sample = [sys, prob](const State& s, Rng& rng) {
    const int i = detail::mode_of(s);
    double u = uniform01(rng);
    int last = -1;
    for (int j = 0; j < sys.modes; ++j) {
      if (j == i) continue;
      const double pj = prob(j, s);
      if (pj <= 0.0) continue;
      last = j;
      if (u < pj) break;
      u -= pj;
    }
    if (last < 0) throw SamplerError("switching: no admissible target mode");
    Theta th(1);
    th[0] = last;
    return th;
  };
  m.jumps.support = [sys, prob](const State& s) {
    std::vector<Theta> out;
    for (int j = 0; j < sys.modes; ++j) {
      if (prob(j, s) > 0.0) {
        Theta th(1);
        th[0] = j;
        out.push_back(th);
      }
    }
    return out;
  };
  m.jumps.state_jacobian = [d](const Theta&, const State&) {
    Matrix j = Matrix::Zero(d + 1, d + 1);
    j.topLeftCorner(d, d).setIdentity();
    return j;
  };
  m.validate();
  return m;
}

/// Birth-death switching on modes 0..modes-1: q_{i+1} = birth(i), q_{i-1} =
/// death(i). Each mode relaxes x toward `centers[i]` at unit rate.
inline SwitchingSystem birth_death_system(int modes, std::function<double(int)> birth,
                                          std::function<double(int)> death, std::vector<double> centers = {}) {
  SwitchingSystem sys;
  sys.modes = modes;
  sys.lower = {-kInf};
  sys.upper = {kInf};
  if (centers.empty())
    for (int i = 0; i < modes; ++i) centers.push_back(i);
  for (int i = 0; i < modes; ++i) {
    const double c = centers[static_cast<std::size_t>(i)];
    sys.fields.push_back([c](const State& x) { return State((c - x.array()).matrix()); });
    sys.flows.push_back([c](const State& x, double t) { return State((c + (x.array() - c) * std::exp(-t)).matrix()); });
    sys.flow_jacobians.push_back([](const State&, double t) { return Matrix::Identity(1, 1) * std::exp(-t); });
    sys.field_jacobians.push_back([](const State&) { return Matrix::Identity(1, 1) * -1.0; });
  }
  sys.rate = [modes, birth, death](int j, const State&, int i) {
    if (j == i + 1 && i + 1 < modes) return birth(i);
    if (j == i - 1 && i > 0) return death(i);
    return 0.0;
  };
  double lo = kInf, hi = 0.0;
  for (int i = 0; i < modes; ++i) {
    const double r = (i + 1 < modes ? birth(i) : 0.0) + (i > 0 ? death(i) : 0.0);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  if (lo > 0.0) sys.rate_lower_bound = lo;
  sys.rate_upper_bound = hi;
  return sys;
}

// ---------------------------------------------------------------------------
// Pure-jump shift on the integers with rate phi(k); explosive whenever
// sum 1/phi(k) over the forward orbit is finite.

struct KatoShiftParams {
  std::function<double(long)> rate = [](long k) { return double(k) * double(k) + 1.0; };
  std::optional<double> rate_lower_bound = 1.0;

  void validate() const {
    if (!rate) throw ModelError("kato-shift: missing rate function");
  }
};

inline PdmpModel build_kato_shift(const KatoShiftParams& p = {}) {
  p.validate();
  PdmpModel m;
  m.name = "kato-shift";
  m.space = StateSpace::box({-kInf}, {kInf}, {true});
  m.flow.stationary = true;
  m.intensity.rate = [p](const State& x) {
    const double r = p.rate(std::lround(x[0]));
    if (!(r > 0.0)) throw ModelError("kato-shift: rate must be positive");
    return r;
  };
  m.intensity.lower_bound = p.rate_lower_bound;
  m.intensity.flow_bound = [p](const State& x) { return p.rate(std::lround(x[0])); };
  m.jumps.kind = ThetaKind::Discrete;
  m.jumps.transform = [](const Theta&, const State& x) {
    State y = x;
    y[0] += 1.0;
    return y;
  };
  m.jumps.weight = [](const Theta&, const State&) { return 1.0; };
  m.jumps.sample = [](const State&, Rng&) { return make_theta({0.0}); };
  m.jumps.support = [](const State&) { return std::vector<Theta>{make_theta({0.0})}; };
  m.jumps.state_jacobian = [](const Theta&, const State&) { return Matrix::Zero(1, 1); };
  m.validate();
  return m;
}

// ---------------------------------------------------------------------------
// One-dimensional decay toy on [0, inf): x relaxes toward `level` at rate
// `relax`, jumps at constant rate and multiplies x by a factor that is either
// fixed or Uniform(0, 1).

struct DecayToyParams {
  double relax = 0.0;
  double level = 0.0;
  double rate = 1.0;
  bool uniform_factor = false;
  double factor = 0.5;  ///< used when uniform_factor is false

  void validate() const {
    if (!(relax >= 0.0) || !(level >= 0.0)) throw ModelError("decay-toy: relax and level must be nonnegative");
    if (!(rate > 0.0)) throw ModelError("decay-toy: rate must be positive");
    if (!uniform_factor && !(factor >= 0.0 && factor <= 1.0)) throw ModelError("decay-toy: factor must lie in [0, 1]");
  }
};

inline PdmpModel build_decay_toy(const DecayToyParams& p) {
  p.validate();
  PdmpModel m;
  m.name = "decay-toy";
  m.space = StateSpace::box({0.0}, {kInf});
  if (p.relax == 0.0) {
    m.flow.stationary = true;
  } else {
    m.flow.field = [p](const State& x) { return make_state({p.relax * (p.level - x[0])}); };
    m.flow.closed_form = [p](const State& x, double t) {
      return make_state({p.level + (x[0] - p.level) * std::exp(-p.relax * t)});
    };
    m.flow.jacobian = [p](const State&, double t) { return Matrix::Identity(1, 1) * std::exp(-p.relax * t); };
  }
  m.intensity.rate = [p](const State&) { return p.rate; };
  m.intensity.lower_bound = p.rate;
  m.intensity.upper_bound = p.rate;
  if (p.uniform_factor) {
    m.jumps.kind = ThetaKind::Continuous;
    m.jumps.transform = [](const Theta& th, const State& x) { return make_state({th[0] * x[0]}); };
    m.jumps.weight = [](const Theta& th, const State&) { return th[0] > 0.0 && th[0] < 1.0 ? 1.0 : 0.0; };
    m.jumps.sample = [](const State&, Rng& rng) { return make_theta({uniform01(rng)}); };
    m.jumps.truncation = [](const State&, double) { return ThetaRange{make_theta({0.0}), make_theta({1.0}), 0.0}; };
    m.jumps.state_jacobian = [](const Theta& th, const State&) { return Matrix::Identity(1, 1) * th[0]; };
    m.jumps.theta_jacobian = [](const Theta&, const State& x) { return Matrix::Identity(1, 1) * x[0]; };
  } else {
    const double r = p.factor;
    m.jumps.kind = ThetaKind::Discrete;
    m.jumps.transform = [r](const Theta&, const State& x) { return make_state({r * x[0]}); };
    m.jumps.weight = [](const Theta&, const State&) { return 1.0; };
    m.jumps.sample = [](const State&, Rng&) { return make_theta({0.0}); };
    m.jumps.support = [](const State&) { return std::vector<Theta>{make_theta({0.0})}; };
    m.jumps.state_jacobian = [r](const Theta&, const State&) { return Matrix::Identity(1, 1) * r; };
  }
  m.validate();
  return m;
}

// ---------------------------------------------------------------------------
// Heavy-tailed holding times: x' = 1, phi(x) = 1/(1+x), x -> theta x with
// theta ~ Uniform(0, 1). Lambda diverges logarithmically, so E_x(t_1) = inf.

inline PdmpModel build_heavy_tail_toy() {
  PdmpModel m;
  m.name = "heavy-tail";
  m.space = StateSpace::box({0.0}, {kInf});
  m.flow.field = [](const State& x) { return State::Ones(x.size()); };
  m.flow.closed_form = [](const State& x, double t) { return make_state({x[0] + t}); };
  m.flow.jacobian = [](const State&, double) { return Matrix::Identity(1, 1); };
  m.intensity.rate = [](const State& x) { return 1.0 / (1.0 + x[0]); };
  m.intensity.flow_bound = [](const State& x) { return 1.0 / (1.0 + x[0]); };
  m.jumps.kind = ThetaKind::Continuous;
  m.jumps.transform = [](const Theta& th, const State& x) { return make_state({th[0] * x[0]}); };
  m.jumps.weight = [](const Theta& th, const State&) { return th[0] > 0.0 && th[0] < 1.0 ? 1.0 : 0.0; };
  m.jumps.sample = [](const State&, Rng& rng) { return make_theta({uniform01(rng)}); };
  m.jumps.truncation = [](const State&, double) { return ThetaRange{make_theta({0.0}), make_theta({1.0}), 0.0}; };
  m.validate();
  return m;
}

}  // namespace pdmp

#endif  // PDMP_MODELS_HPP

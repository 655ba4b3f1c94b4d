#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pdmp/flow.hpp"
#include "pdmp/kernels.hpp"
#include "pdmp/models.hpp"

using namespace pdmp;

namespace {

PdmpModel gene() { return build_gene_model(GeneExpressionParams{}); }

/// The gene field without its closed form, so flows go through the ODE path.
PdmpModel gene_ode(const GeneExpressionParams& p, double tol) {
  PdmpModel m = build_gene_model(p, tol);
  m.flow.closed_form = nullptr;
  m.flow.jacobian = nullptr;
  return m;
}

}  // namespace

TEST(Flow, GeneClosedFormValue) {
  const State y = flow_at(gene(), make_state({1.0, 0.0}), 1.0);
  EXPECT_NEAR(y[0], std::exp(-2.0), 1e-15);
  EXPECT_NEAR(y[1], std::exp(-1.0) - std::exp(-2.0), 1e-15);
  EXPECT_NEAR(y[0], 0.13534, 1e-5);
  EXPECT_NEAR(y[1], 0.23254, 1e-5);
}

TEST(Flow, OdeMatchesClosedForm) {
  const auto p = oracle::feedback_params();
  const PdmpModel ode = gene_ode(p, 1e-10);
  for (double t : {0.1, 1.0, 3.7, 12.0}) {
    const State x = make_state({2.5, 0.7});
    const State a = flow_at(ode, x, t);
    const State b = p.flow(x, t);
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-8) << "t=" << t;
  }
}

TEST(Flow, ZeroTimeAndEquilibrium) {
  const PdmpModel m = gene();
  const State x = make_state({0.3, 4.0});
  EXPECT_EQ(flow_at(m, x, 0.0), x);
  EXPECT_EQ(flow_at(m, make_state({0.0, 0.0}), 7.0), make_state({0.0, 0.0}));
  const PdmpModel ode = gene_ode(GeneExpressionParams{}, 1e-8);
  EXPECT_EQ(flow_at(ode, x, 0.0), x);
}

TEST(Flow, SemigroupProperty) {
  Rng rng = make_stream(1, 0);
  for (double tol : {1e-8}) {
    const PdmpModel ode = gene_ode(oracle::feedback_params(), tol);
    const PdmpModel cf = build_gene_model(oracle::feedback_params(), tol);
    for (int i = 0; i < 50; ++i) {
      const State x = make_state({5 * uniform01(rng), 5 * uniform01(rng)});
      const double t = 3 * uniform01(rng), s = 3 * uniform01(rng);
      for (const PdmpModel* m : {&ode, &cf}) {
        const State a = flow_at(*m, x, t + s);
        const State b = flow_at(*m, flow_at(*m, x, s), t);
        EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 10 * tol * std::max(1.0, a.cwiseAbs().maxCoeff()));
      }
    }
  }
}

TEST(Flow, ForwardInvariance) {
  Rng rng = make_stream(2, 0);
  const PdmpModel m = gene();
  for (int i = 0; i < 200; ++i) {
    const State x = make_state({10 * uniform01(rng), 10 * uniform01(rng)});
    const double t = 100 * uniform01(rng);
    EXPECT_TRUE(m.space.contains(flow_at(m, x, t)));
  }
}

TEST(Flow, DomainExitRaises) {
  PdmpModel m = build_decay_toy(DecayToyParams{});
  m.flow.stationary = false;
  m.flow.field = [](const State&) { return make_state({-1.0}); };
  EXPECT_THROW(flow_at(m, make_state({0.5}), 2.0), DomainExitError);
  EXPECT_NO_THROW(flow_at(m, make_state({0.5}), 0.25));
}

TEST(Hazard, ConstantIntensity) {
  DecayToyParams p;
  p.rate = 2.5;
  p.relax = 1.0;
  p.level = 1.0;
  const PdmpModel m = build_decay_toy(p);
  for (double t : {0.0, 0.3, 4.0}) EXPECT_NEAR(cumulative_hazard(m, make_state({0.2}), t), 2.5 * t, 1e-12);
  EXPECT_NEAR(cumulative_hazard(gene(), make_state({0.0, 0.0}), 3.0), 3.0, 1e-12);
}

TEST(Hazard, GeneMatchesQuadratureOracle) {
  const auto p = oracle::feedback_params();
  const PdmpModel m = build_gene_model(p);
  for (auto x : {make_state({1.0, 1.0}), make_state({3.0, 0.2}), make_state({0.0, 2.0})}) {
    for (double t : {0.5, 1.0, 4.0}) {
      EXPECT_NEAR(cumulative_hazard(m, x, t), oracle::gene_hazard(p, x, t), 1e-8) << x.transpose() << " t=" << t;
    }
  }
  const GeneExpressionParams q;
  EXPECT_NEAR(cumulative_hazard(build_gene_model(q), make_state({1.0, 1.0}), 1.0),
              oracle::gene_hazard(q, make_state({1.0, 1.0}), 1.0), 1e-8);
}

TEST(Hazard, OdeFlowMatchesOracle) {
  const auto p = oracle::feedback_params();
  const PdmpModel m = gene_ode(p, 1e-10);
  const State x = make_state({1.0, 1.0});
  EXPECT_NEAR(cumulative_hazard(m, x, 2.0), oracle::gene_hazard(p, x, 2.0), 1e-8);
}

TEST(Hazard, Monotone) {
  const PdmpModel m = build_gene_model(oracle::feedback_params());
  const State x = make_state({2.0, 0.5});
  double prev = 0.0;
  for (double t = 0.05; t < 10.0; t += 0.05) {
    const double h = cumulative_hazard(m, x, t);
    EXPECT_GT(h, prev);
    prev = h;
  }
}

TEST(Jumps, GeneTransformAndBurstMean) {
  const PdmpModel m = gene();
  Rng rng = make_stream(3, 0);
  const State x = make_state({0.4, 2.0});
  double sum = 0.0;
  const int n = 100000;
  std::vector<double> thetas;
  for (int i = 0; i < n; ++i) {
    const JumpDraw d = jump_from(m, x, rng);
    EXPECT_DOUBLE_EQ(d.state[0], d.theta[0] + 0.4);
    EXPECT_DOUBLE_EQ(d.state[1], 2.0);
    sum += d.theta[0];
    thetas.push_back(d.theta[0]);
  }
  EXPECT_NEAR(sum / n, 1.0, 0.02);
  EXPECT_LT(oracle::ks_statistic(thetas, [](double t) { return -std::expm1(-t); }), 0.01);
}

TEST(Jumps, SwitchingTransform) {
  const PdmpModel m = build_switching_model(birth_death_system(5, [](int) { return 1.0; }, [](int) { return 2.0; }));
  Rng rng = make_stream(4, 0);
  const State s = make_state({0.7, 2.0});
  for (int i = 0; i < 100; ++i) {
    const JumpDraw d = jump_from(m, s, rng);
    EXPECT_DOUBLE_EQ(d.state[0], 0.7);
    EXPECT_TRUE(d.state[1] == 1.0 || d.state[1] == 3.0);
    EXPECT_DOUBLE_EQ(d.state[1], d.theta[0]);
  }
}

TEST(Jumps, KernelNormalizationOnTestPoints) {
  Rng rng = make_stream(5, 0);
  const PdmpModel g = build_gene_model(oracle::feedback_params());
  const PdmpModel bd = build_switching_model(birth_death_system(6, [](int) { return 1.0; }, [](int) { return 2.0; }));
  DecayToyParams up;
  up.uniform_factor = true;
  const PdmpModel dt = build_decay_toy(up);
  for (int i = 0; i < 20; ++i) {
    const State x = make_state({5 * uniform01(rng), 5 * uniform01(rng)});
    const ThetaRange r = g.jumps.truncation(x, 1e-12);
    const double mass = oracle::integrate([&](double t) { return g.jumps.weight(make_theta({t}), x); }, 0.0, r.hi[0]);
    EXPECT_NEAR(mass + r.tail_mass, 1.0, 1e-6);

    const State s = make_state({uniform01(rng), double(i % 6)});
    double total = 0.0;
    for (const auto& th : bd.jumps.support(s)) total += bd.jumps.weight(th, s);
    EXPECT_NEAR(total, 1.0, 1e-12);

    const State y = make_state({uniform01(rng)});
    EXPECT_NEAR(oracle::integrate([&](double t) { return dt.jumps.weight(make_theta({t}), y); }, 0.0, 1.0), 1.0, 1e-6);
  }
}

TEST(Jumps, RejectionSamplerCap) {
  Rng rng = make_stream(6, 0);
  auto propose = [](Rng& r) { return make_theta({uniform01(r)}); };
  auto never = [](const Theta&) { return 0.0; };
  EXPECT_THROW(rejection_sample(propose, never, rng, 1000), SamplerError);
}

TEST(Model, ValidationRejectsBadParameters) {
  GeneExpressionParams p;
  p.gamma1 = 1.0;
  EXPECT_THROW(build_gene_model(p), ModelError);
  p = GeneExpressionParams{};
  p.kappa3 = 0.0;
  p.hill_n = 2.0;
  EXPECT_THROW(build_gene_model(p), ModelError);
  p.hill_n = 1.0;
  p.kappa2 = 5.0;  // gamma2 = 1 is not > b beta2 kappa2 / (gamma1 - gamma2) = 5
  EXPECT_THROW(build_gene_model(p), ModelError);
  p.kappa2 = 0.5;
  EXPECT_NO_THROW(build_gene_model(p));
}

TEST(Model, StateSpaceProjection) {
  const StateSpace s = StateSpace::box({0.0, 0.0}, {kInf, kInf});
  EXPECT_DOUBLE_EQ(s.project(make_state({-1e-10, 1.0}), 1e-8)[0], 0.0);
  EXPECT_THROW(s.project(make_state({-1e-3, 1.0}), 1e-8), DomainExitError);
  const StateSpace d = StateSpace::box({0.0, 0.0}, {1.0, 3.0}, {false, true});
  EXPECT_DOUBLE_EQ(d.project(make_state({0.5, 2.0000000001}), 1e-8)[1], 2.0);
  EXPECT_FALSE(d.contains(make_state({0.5, 1.5})));
}

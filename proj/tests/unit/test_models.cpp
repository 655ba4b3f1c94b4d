#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pdmp/kernels.hpp"
#include "pdmp/models.hpp"
#include "pdmp/simulate.hpp"

using namespace pdmp;

TEST(Gene, VarthetaLimits) {
  const GeneExpressionParams p;
  EXPECT_EQ(p.vartheta(0.0), 0.0);
  for (double t : {1e-6, 0.1, 1.0, 10.0}) EXPECT_GT(p.vartheta(t), 0.0);
  EXPECT_LT(p.vartheta(60.0), 1e-20);
  EXPECT_NEAR(p.vartheta_max(), 0.25, 1e-15);  // t* = ln 2, e^{-t*} - e^{-2t*} = 1/4
}

TEST(Gene, HillBounds) {
  Rng rng = make_stream(10, 0);
  for (int k = 0; k < 20; ++k) {
    GeneExpressionParams p;
    p.kappa1 = 0.1 + 3 * uniform01(rng);
    p.kappa2 = 3 * uniform01(rng);
    p.kappa3 = 0.1 + 2 * uniform01(rng);
    p.hill_n = 0.5 + 3 * uniform01(rng);
    const double lo = std::min(p.kappa1, p.kappa2 / p.kappa3), hi = std::max(p.kappa1, p.kappa2 / p.kappa3);
    EXPECT_DOUBLE_EQ(p.phi_lower(), lo);
    EXPECT_DOUBLE_EQ(p.phi_upper(), hi);
    for (int i = 0; i < 100; ++i) {
      const double v = p.phi(make_state({0.0, 50 * uniform01(rng) * uniform01(rng)}));
      EXPECT_GE(v, lo * (1 - 1e-12));
      EXPECT_LE(v, hi * (1 + 1e-12));
    }
  }
}

TEST(Gene, NoHillSaturationUsesFlowBound) {
  GeneExpressionParams p;
  p.kappa3 = 0.0;
  p.kappa2 = 0.5;
  const PdmpModel m = build_gene_model(p);
  EXPECT_FALSE(m.intensity.upper_bound.has_value());
  ASSERT_TRUE(m.intensity.flow_bound);
  const State x = make_state({3.0, 1.0});
  const double bound = *m.intensity.bound_along_flow(x);
  for (double t = 0.0; t < 20.0; t += 0.01) EXPECT_LE(p.phi(p.flow(x, t)), bound * (1 + 1e-12));
}

TEST(Gene, SingleMapMatchesDisplay) {
  Rng rng = make_stream(11, 0);
  for (int i = 0; i < 50; ++i) {
    GeneExpressionParams p;
    p.gamma2 = 0.2 + uniform01(rng);
    p.gamma1 = p.gamma2 + 0.1 + 2 * uniform01(rng);
    p.beta2 = 0.1 + 2 * uniform01(rng);
    const PdmpModel m = build_gene_model(p);
    const double x1 = 5 * uniform01(rng), x2 = 5 * uniform01(rng), th = 3 * uniform01(rng), s = 4 * uniform01(rng);
    const double theta_s = p.beta2 / (p.gamma1 - p.gamma2) * (std::exp(-p.gamma2 * s) - std::exp(-p.gamma1 * s));
    const State y = single_map(m, make_theta({th}), s, make_state({x1, x2}));
    EXPECT_NEAR(y[0], th + x1 * std::exp(-p.gamma1 * s), 1e-12);
    EXPECT_NEAR(y[1], x2 * std::exp(-p.gamma2 * s) + x1 * theta_s, 1e-12);
  }
}

TEST(Switching, RejectsSingleMode) {
  SwitchingSystem sys = birth_death_system(2, [](int) { return 1.0; }, [](int) { return 1.0; });
  sys.modes = 1;
  sys.fields.resize(1);
  sys.flows.resize(1);
  EXPECT_THROW(build_switching_model(sys), ModelError);
}

TEST(Switching, RatesAndProbabilities) {
  const PdmpModel m = build_switching_model(birth_death_system(5, [](int) { return 1.0; }, [](int) { return 2.0; }));
  EXPECT_DOUBLE_EQ(m.intensity(make_state({0.3, 2.0})), 3.0);
  EXPECT_DOUBLE_EQ(m.intensity(make_state({0.3, 0.0})), 1.0);
  EXPECT_DOUBLE_EQ(m.intensity(make_state({0.3, 4.0})), 2.0);
  EXPECT_DOUBLE_EQ(m.jumps.weight(make_theta({3.0}), make_state({0.3, 2.0})), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.jumps.weight(make_theta({1.0}), make_state({0.3, 2.0})), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.jumps.weight(make_theta({2.0}), make_state({0.3, 2.0})), 0.0);
  EXPECT_EQ(m.space.measure(), ReferenceMeasure::LebesgueTimesCounting);
}

TEST(Switching, SingleWeightMatchesEmbeddingFormula) {
  // k_(j,s)(x, i) = q_j(pi^i_s x, i) exp(-int_0^s phi(pi^i_r x, i) dr)
  SwitchingSystem sys = birth_death_system(4, [](int i) { return 1.0 + 0.5 * i; }, [](int i) { return 0.7 * i; });
  sys.rate = [](int j, const State& x, int i) {
    if (j == i + 1 && i < 3) return 1.0 + 0.5 * i + x[0] * x[0];
    if (j == i - 1 && i > 0) return 0.7 * i;
    return 0.0;
  };
  sys.rate_lower_bound.reset();
  sys.rate_upper_bound.reset();
  const PdmpModel m = build_switching_model(sys);
  for (double s : {0.1, 0.8, 2.0}) {
    const double x0 = 0.3;
    const int i = 1;
    const double c = static_cast<double>(i);
    auto xs = [&](double r) { return c + (x0 - c) * std::exp(-r); };
    const double hazard =
        oracle::integrate([&](double r) { return 1.0 + 0.5 * i + xs(r) * xs(r) + 0.7 * i; }, 0.0, s);
    const double expected = (1.0 + 0.5 * i + xs(s) * xs(s)) * std::exp(-hazard);
    EXPECT_NEAR(single_weight(m, make_theta({2.0}), s, make_state({x0, 1.0})), expected, 1e-8 * expected);
    const State y = single_map(m, make_theta({2.0}), s, make_state({x0, 1.0}));
    EXPECT_NEAR(y[0], xs(s), 1e-14);
    EXPECT_EQ(y[1], 2.0);
  }
}

TEST(Kato, HoldingTimeIsExponential) {
  const PdmpModel m = build_kato_shift();
  Rng rng = make_stream(12, 0);
  std::vector<double> t;
  for (int i = 0; i < 20000; ++i) t.push_back(sample_jump_time(m, make_state({2.0}), rng).time);
  EXPECT_LT(oracle::ks_statistic(t, [](double v) { return -std::expm1(-5.0 * v); }), 0.015);
  EXPECT_EQ(jump_from(m, make_state({2.0}), rng).state[0], 3.0);
}

TEST(Kato, MeanExplosionTimeMatchesSeries) {
  const PdmpModel m = build_kato_shift();
  double series = 0.0;
  for (long k = 1; k <= 10000; ++k) series += 1.0 / (double(k) * k + 1.0);
  EXPECT_NEAR(series, 1.07657, 1e-4);
  SimulationConfig cfg;
  cfg.horizon = 1e6;
  cfg.max_jumps = 10000;
  std::vector<double> t;
  for (std::size_t i = 0; i < 1000; ++i) {
    Rng rng = make_stream(13, i);
    t.push_back(simulate_path(m, make_state({1.0}), cfg, rng).last_jump_time());
  }
  const auto ms = oracle::mean_se(t);
  EXPECT_LT(std::abs(ms.mean - series), 3 * ms.se);
}

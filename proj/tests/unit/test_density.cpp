#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pdmp/density.hpp"
#include "pdmp/models.hpp"

using namespace pdmp;

namespace {

DensityEstimate from_masses(const GridSpec& g, const std::vector<double>& mass, long samples) {
  DensityEstimate e{g, mass, 0.0, samples, 0};
  return e;
}

}  // namespace

TEST(Histogram, RefinementNestsExactly) {
  const GridSpec coarse = GridSpec::box({0.0, 0.0}, {4.0, 2.0}, {8, 4});
  const GridSpec fine = coarse.refined(4);
  Histogram a(coarse), b(fine);
  Rng rng = make_stream(70, 0);
  for (int i = 0; i < 5000; ++i) {
    const State x = make_state({5 * uniform01(rng), 2.5 * uniform01(rng)});
    a.add(x);
    b.add(x);
  }
  const DensityEstimate ca = a.finish(), cb = coarsen(b.finish(), 4);
  ASSERT_TRUE(ca.grid == cb.grid);
  for (std::size_t i = 0; i < ca.mass.size(); ++i) EXPECT_DOUBLE_EQ(ca.mass[i], cb.mass[i]);
  EXPECT_DOUBLE_EQ(ca.out_of_box, cb.out_of_box);
  EXPECT_NEAR(ca.in_box_mass() + ca.out_of_box, 1.0, 1e-12);
}

TEST(ChainDensity, SingleSampleIsOneCell) {
  const PdmpModel m = build_gene_model(GeneExpressionParams{});
  const GridSpec g = GridSpec::box({0.0, 0.0}, {50.0, 50.0}, {5, 5});
  Rng rng = make_stream(71, 0);
  const DensityEstimate e = estimate_chain_density(m, make_state({1.0, 1.0}), 11, 10, g, rng);
  int nonzero = 0;
  for (double v : e.mass) nonzero += v > 0.0;
  EXPECT_EQ(nonzero, 1);
  EXPECT_DOUBLE_EQ(e.in_box_mass(), 1.0);
  EXPECT_EQ(e.samples, 1);
}

TEST(ChainDensity, RejectsBurnInPastLength) {
  const PdmpModel m = build_gene_model(GeneExpressionParams{});
  const GridSpec g = GridSpec::box({0.0, 0.0}, {5.0, 5.0}, {5, 5});
  Rng rng = make_stream(72, 0);
  EXPECT_THROW(estimate_chain_density(m, make_state({1.0, 1.0}), 10, 10, g, rng), ConfigError);
}

TEST(ChainDensity, DecayToyMatchesPowerIteration) {
  const PdmpModel m = build_decay_toy(oracle::decay_oracle_params());
  const auto pi = oracle::aggregate(oracle::decay_stationary(2000), 40);
  const GridSpec g = GridSpec::box({0.0}, {1.0}, {50});
  ChainOptions opt;
  opt.steps = 110'000;
  opt.burn_in = 10'000;
  const DensityEstimate e = estimate_chain_density(m, make_state({0.5}), g, opt);
  EXPECT_DOUBLE_EQ(e.out_of_box, 0.0);
  EXPECT_LT(total_variation(e.mass, pi), 0.03);
}

TEST(ChainDensity, ExplosionAborts) {
  const PdmpModel m = build_kato_shift();
  ChainOptions opt;
  opt.steps = 5000;
  EXPECT_THROW(estimate_chain_density(m, make_state({1.0}), GridSpec({Axis::integers(0, 100)}), opt), ExplosionError);
  FlowOptions fo;
  EXPECT_THROW(estimate_flow_density(m, make_state({1.0}), 100.0, GridSpec({Axis::integers(0, 100)}), fo),
               ExplosionError);
}

TEST(FlowDensity, TimeAverageMatchesHoldingWeightedChain) {
  const PdmpModel m = build_gene_model(oracle::feedback_params());
  const GridSpec g = GridSpec::box({0.0, 0.0}, {6.0, 5.0}, {12, 10});
  FlowOptions fo;
  fo.paths = 4;
  const DensityEstimate flow = estimate_flow_density(m, make_state({1.0, 1.0}), 20000.0, g, fo);
  ChainOptions co;
  co.steps = 40000;
  const DensityEstimate rb = estimate_flow_density_from_chain(m, sample_chain(m, make_state({1.0, 1.0}), co), g);
  EXPECT_LT(total_variation(flow, rb), 0.05);
}

TEST(FlowDensity, ShortHorizonStaysNearStart) {
  const PdmpModel m = build_gene_model(oracle::feedback_params());
  const GridSpec g = GridSpec::box({0.0, 0.0}, {6.0, 5.0}, {12, 10});
  FlowOptions fo;
  fo.paths = 200;
  fo.burn_in_fraction = 0.0;
  const DensityEstimate e = estimate_flow_density(m, make_state({2.2, 2.2}), 1e-3, g, fo);
  EXPECT_GT(e.mass[*g.locate(make_state({2.2, 2.2}))], 0.99);
}

TEST(FlowDensity, BirthDeathModeMarginalIsGeometric) {
  const int modes = 30;
  const PdmpModel m = build_switching_model(birth_death_system(modes, [](int) { return 1.0; }, [](int) { return 2.0; }));
  const GridSpec g({Axis::continuous(0.0, double(modes), 10), Axis::integers(0, modes - 1)});
  FlowOptions fo;
  fo.paths = 2;
  const DensityEstimate e = estimate_flow_density(m, make_state({0.0, 0.0}), 5000.0, g, fo);
  const auto mode = marginal(e, 1);
  std::vector<double> geo(static_cast<std::size_t>(modes));
  const double z = 1.0 - std::pow(0.5, modes);
  for (int i = 0; i < modes; ++i) geo[static_cast<std::size_t>(i)] = 0.5 * std::pow(0.5, i) / z;
  EXPECT_LT(total_variation(mode, geo), 0.02);
}

TEST(Stationarity, PointMassIsFarFromInvariant) {
  const PdmpModel m = build_gene_model(oracle::feedback_params());
  const GridSpec g = GridSpec::box({0.0, 0.0}, {6.0, 5.0}, {12, 10});
  std::vector<double> mass(g.cell_count(), 0.0);
  mass[*g.locate(make_state({1.1, 1.1}))] = 1.0;
  EXPECT_GT(stationarity_residual(m, from_masses(g, mass, 100000), 20000, 5), 0.3);
  EXPECT_THROW(stationarity_residual(m, from_masses(g, mass, 10), 20000, 5), ConfigError);
}

TEST(Stationarity, DecayOracleDensityIsInvariant) {
  const PdmpModel m = build_decay_toy(oracle::decay_oracle_params());
  const GridSpec g = GridSpec::box({0.0}, {1.0}, {50});
  const auto pi = oracle::aggregate(oracle::decay_stationary(2000), 40);
  EXPECT_LT(stationarity_residual(m, from_masses(g, pi, 100000), 200000, 6), 0.02);
}

TEST(Stationarity, GeneChainEstimateIsInvariant) {
  const PdmpModel m = build_gene_model(oracle::feedback_params());
  const GridSpec g = GridSpec::box({0.0, 0.0}, {6.0, 5.0}, {12, 10});
  ChainOptions opt;
  opt.steps = 100'000;
  const DensityEstimate e = estimate_chain_density(m, make_state({0.1, 0.1}), g, opt);
  EXPECT_LT(stationarity_residual(m, e, 100000, 7), 0.05);
}

TEST(Stability, IdenticalStartsAgreeAndKatoAborts) {
  const PdmpModel m = build_gene_model(oracle::feedback_params());
  const GridSpec g = GridSpec::box({0.0, 0.0}, {6.0, 5.0}, {6, 5});
  SimulationConfig cfg;
  const auto c = stability_probe(m, {make_state({1.0, 1.0}), make_state({1.0, 1.0})}, {2.0}, g, 100000, cfg);
  ASSERT_EQ(c.l1.size(), 1u);
  EXPECT_LT(c.l1[0][0], 0.03);

  const PdmpModel kato = build_kato_shift();
  SimulationConfig kc;
  kc.max_jumps = 10000;
  EXPECT_THROW(stability_probe(kato, {make_state({1.0}), make_state({5.0})}, {1.0, 3.0},
                               GridSpec({Axis::integers(0, 100)}), 200, kc),
               ExplosionError);
}

TEST(HoldingTime, ConstantIntensityGivesInverseRate) {
  DecayToyParams p = oracle::decay_oracle_params();
  p.rate = 2.5;
  const PdmpModel m = build_decay_toy(p);
  const GridSpec g = GridSpec::box({0.0}, {1.0}, {20});
  std::vector<double> mass(20, 0.05);
  const HoldingTimeReport r = check_r0v(m, from_masses(g, mass, 100000), 50000, 8);
  EXPECT_LT(std::abs(r.estimate - 0.4), 3 * r.standard_error);
  EXPECT_TRUE(r.stable);
}

TEST(HoldingTime, GeneWithinIntensityBounds) {
  const auto p = oracle::feedback_params();
  const PdmpModel m = build_gene_model(p);
  const GridSpec g = GridSpec::box({0.0, 0.0}, {6.0, 5.0}, {12, 10});
  ChainOptions opt;
  opt.steps = 50'000;
  const HoldingTimeReport r = check_r0v(m, estimate_chain_density(m, make_state({1.0, 1.0}), g, opt), 50000, 9);
  EXPECT_TRUE(std::isfinite(r.estimate));
  EXPECT_GE(r.estimate, 1.0 / p.phi_upper());
  EXPECT_LE(r.estimate, 1.0 / p.phi_lower());
  EXPECT_TRUE(r.stable);
}

TEST(HoldingTime, HeavyTailIsReportedNotRaised) {
  const PdmpModel m = build_heavy_tail_toy();
  const GridSpec g = GridSpec::box({0.0}, {20.0}, {20});
  std::vector<double> mass(20, 0.05);
  HoldingTimeReport r;
  EXPECT_NO_THROW(r = check_r0v(m, from_masses(g, mass, 100000), 20000, 10));
  EXPECT_GE(r.estimate, 0.0);
}

TEST(Positivity, EmptyQualifyingCellFails) {
  const GridSpec g = GridSpec::box({0.0}, {1.0}, {4});
  const DensityEstimate ref = from_masses(g, {0.25, 0.25, 0.25, 0.25}, 1000);
  EXPECT_TRUE(positivity_probe(from_masses(g, {0.1, 0.4, 0.3, 0.2}, 1000), ref).passes);
  EXPECT_FALSE(positivity_probe(from_masses(g, {0.0, 0.5, 0.3, 0.2}, 1000), ref).passes);
  // a cell the reference expects fewer than 0.5 hits in does not count
  const DensityEstimate sparse = from_masses(g, {0.0001, 0.3333, 0.3333, 0.3333}, 1000);
  EXPECT_TRUE(positivity_probe(from_masses(g, {0.0, 0.4, 0.3, 0.3}, 1000), sparse).passes);
}

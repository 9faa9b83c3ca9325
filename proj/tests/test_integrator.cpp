#include <gtest/gtest.h>

#include <cmath>

#include "dualvp/integrator.hpp"
#include "test_util.hpp"

using namespace dualvp;
using dualvp::testing::vec;

TEST(Grid, Construction) {
  EXPECT_THROW(Grid(0.0, 1.0, 2), ConfigError);
  EXPECT_THROW(Grid(1.0, 1.0, 5), ConfigError);
  const Grid g = Grid::with_step(0.0, 1.0, 1e-3);
  EXPECT_EQ(g.n_nodes, 1001);
  EXPECT_NEAR(g.h(), 1e-3, 1e-15);
  EXPECT_DOUBLE_EQ(g.t(g.n_nodes - 1), 1.0);
}

TEST(TrajectoryGrid, HermiteIsExactForCubics) {
  const Grid g(0.0, 2.0, 5);
  TrajectoryGrid tr(g, {"y"});
  tr.values().resize(1, 5);
  tr.derivatives().resize(1, 5);
  auto f = [](double t) { return 1.0 - 2.0 * t + 0.5 * t * t * t; };
  auto df = [](double t) { return -2.0 + 1.5 * t * t; };
  for (int i = 0; i < 5; ++i) {
    tr.values()(0, i) = f(g.t(i));
    tr.derivatives()(0, i) = df(g.t(i));
  }
  for (double t : {0.0, 0.13, 0.77, 1.5, 1.999, 2.0}) {
    EXPECT_NEAR(tr.at(t)(0), f(t), 1e-13);
    EXPECT_NEAR(tr.rate_at(t)(0), df(t), 1e-12);
  }
  EXPECT_THROW(tr.at(-0.1), ConfigError);
  EXPECT_THROW(tr.at(2.1), ConfigError);
}

TEST(TrajectoryGrid, CsvUsesShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(IntegrateIvp, StepBound) {
  EXPECT_THROW(integrate_ivp(lorenz_spec(10, 28, 8.0 / 3.0, vec({1, 1, 1})), 1.0, 0.2),
               ConfigError);
}

TEST(IntegrateIvp, Rk4OrderOnLorenz) {
  const SystemSpec s = lorenz_spec(10, 28, 8.0 / 3.0, vec({1, 1, 1}));
  const double T = 1.0;
  // steps in the asymptotic range for this chaotic flow
  const Vec ref = integrate_ivp(s, T, 1e-5).values().rightCols(1);
  const double e1 = (integrate_ivp(s, T, 1.25e-3).values().rightCols(1) - ref).norm();
  const double e2 = (integrate_ivp(s, T, 6.25e-4).values().rightCols(1) - ref).norm();
  EXPECT_GE(e1 / e2, 12.0);
  EXPECT_LE(e1 / e2, 20.0);
}

TEST(IntegrateIvp, ShortHorizonLimit) {
  const SystemSpec s = lorenz_spec(10, 28, 8.0 / 3.0, vec({1, 1, 1}));
  const TrajectoryGrid tr = integrate_ivp(s, 1e-3, 1e-4);
  EXPECT_LT((tr.values().rightCols(1) - s.x0).norm(), 0.05);
}

TEST(IntegrateIvp, ParsThirdCoordinateIsLinear) {
  const SystemSpec s = pars_spec(ForceLaw::gauss, vec({0, 0, 0}), vec({1, 0, 1}));
  const TrajectoryGrid tr = integrate_ivp(s, 1.0, 1e-3);
  EXPECT_NEAR(tr.values()(2, tr.n_nodes() - 1), 1.0, 1e-13);
  for (int i = 0; i < tr.n_nodes(); ++i) EXPECT_NEAR(tr.values()(2, i), tr.t(i), 1e-13);
}

TEST(IntegrateIvp, BlowUpRaisesDivergence) {
  // x' = x^2 from x = 1 blows up at t = 1
  const SystemSpec s = poly_ode_spec(1, {{0, 1.0, {2}}}, vec({1}));
  try {
    integrate_ivp(s, 2.0, 1e-3);
    FAIL() << "expected a divergence";
  } catch (const DivergenceError& e) {
    EXPECT_GT(e.last_good_time(), 0.9);
    EXPECT_LT(e.last_good_time(), 1.01);
  }
}

TEST(IntegrateIvp, FreeQIsUnsupported) {
  const SystemSpec s = gen_pars_spec(Mat::Zero(2, 2), vec({1, -1}), ForceLaw::free_Q,
                                     PowerLaw::none, vec({0, 0}), vec({1, 1}));
  EXPECT_THROW(integrate_ivp(s, 1.0, 1e-2), UnsupportedError);
}

TEST(MonitorInvariants, GaussPars) {
  const SystemSpec s = pars_spec(ForceLaw::gauss, vec({0, 0, 1}), vec({1, 1, 1}));
  const TrajectoryGrid tr = integrate_ivp(s, 1.0, 1e-3);
  const InvariantReport r = monitor_invariants(s, tr);
  EXPECT_LE(r.max_constraint_residual, 1e-9);
  EXPECT_LE(r.max_power, 1e-9);
  EXPECT_LE(r.max_K_deviation, 1e-8);
}

TEST(MonitorInvariants, DampedParsLosesEnergy) {
  const SystemSpec s = pars_spec(ForceLaw::vortical_damped, vec({0, 0, 1}), vec({1, 1, 1}), 1.0,
                                 PowerLaw::nonneg_slack);
  const TrajectoryGrid tr = integrate_ivp(s, 1.0, 1e-3);
  const InvariantReport r = monitor_invariants(s, tr);
  EXPECT_LE(r.max_constraint_residual, 1e-9);
  EXPECT_LE(r.max_K_increase, 0.0);
  EXPECT_LE(r.max_W_residual, 1e-9);
  EXPECT_LT(r.K.back(), r.K.front());
}

TEST(MonitorInvariants, VorticalPreservesConstraint) {
  const SystemSpec s = pars_spec(ForceLaw::vortical_damped, vec({0, 0, 1}), vec({1, 1, 1}), 0.0);
  const InvariantReport r = monitor_invariants(s, integrate_ivp(s, 1.0, 1e-3));
  EXPECT_LE(r.max_constraint_residual, 1e-9);
}

TEST(MonitorInvariants, HamiltonianLinearKeepsConstraint) {
  SystemSpec s = pars_spec(ForceLaw::hamiltonian_linear, vec({0, 0, 1}), vec({1, 1, 1}));
  s.q0 = vec({0.3});
  const InvariantReport r = monitor_invariants(s, integrate_ivp(s, 1.0, 1e-3));
  EXPECT_LE(r.max_constraint_residual, 1e-9);
}

TEST(IntegrateOde, HarmonicClosesAfterOnePeriod) {
  const OdeSystem sys = make_ode(harmonic_spec(vec({1, 0})));
  const TrajectoryGrid tr = integrate_ode(sys, vec({1, 0}), Grid(0.0, 2 * M_PI, 2001));
  EXPECT_LT((tr.values().rightCols(1) - vec({1, 0})).norm(), 1e-10);
}

#include <gtest/gtest.h>

#include "dualvp/dual_action.hpp"
#include "dualvp/integrator.hpp"
#include "test_util.hpp"

using namespace dualvp;
using namespace dualvp::testing;

TEST(DualAction, GradientMatchesCentralDifferences) {
  std::mt19937 rng(21);
  for (const auto& [name, a] : builtin_assemblies()) {
    for (int k = 0; k < 4; ++k) {
      const DualTrajectory d = smooth_random_dual(rng, a, 0.5);
      EXPECT_LT(gradient_mismatch(a, d), 1e-6) << name << " sample " << k;
    }
  }
}

TEST(DualAction, PeriodicGradientMatchesCentralDifferences) {
  std::mt19937 rng(22);
  auto m = make_dual_model(harmonic_spec(vec({1, 0})));
  ActionAssembly a = ActionAssembly::make(
      m, HParams::uniform(2, 5.0, BaseState::constant(vec({0.2, -0.1}))), Grid(0.0, 2 * M_PI, 13));
  a.periodic = true;
  for (int k = 0; k < 3; ++k) EXPECT_LT(gradient_mismatch(a, smooth_random_dual(rng, a, 0.5)), 1e-6);
}

TEST(DualAction, LorenzFormulaMatchesGenericPipeline) {
  std::mt19937 rng(23);
  auto m = make_dual_model(lorenz_spec(10, 28, 8.0 / 3.0, vec({1, 1, 1})));
  const Vec x0 = vec({1, 1, 1});
  const TrajectoryGrid ref = integrate_ivp(lorenz_spec(10, 28, 8.0 / 3.0, x0), 0.5, 5e-3);
  const ActionAssembly a =
      ActionAssembly::make(m, HParams::uniform(3, 80.0, BaseState::from_grid(ref)), ref.grid());
  for (int k = 0; k < 5; ++k) {
    const DualTrajectory d = smooth_random_dual(rng, a, 1.0);
    const double s1 = assemble_action(a, d);
    const double s2 = lorenz_dual_action_formula(a, d);
    EXPECT_NEAR(s1, s2, 1e-10 * std::max(1.0, std::abs(s1)));
  }
}

TEST(DualAction, ReducedParsFormulaMatchesGenericPipeline) {
  std::mt19937 rng(24);
  const Vec x0 = vec({0, 0, 0.5}), v0 = vec({1, 0.5, 1});
  auto m = std::make_shared<ParsReducedModel>(x0, v0);
  const ActionAssembly a = ActionAssembly::make(
      m, HParams::uniform(2, 1.0, BaseState::constant(Vec::Zero(2))), Grid(0.0, 1.0, 101));
  for (int k = 0; k < 5; ++k) {
    const DualTrajectory d = smooth_random_dual(rng, a, 1.0);
    EXPECT_NEAR(assemble_action(a, d), pars_reduced_action_formula(a, d, x0, v0), 1e-10);
  }
}

TEST(DualAction, ZeroDualIsNearCriticalForOracleBase) {
  const SystemSpec s = lorenz_spec(10, 28, 8.0 / 3.0, vec({1, 1, 1}));
  auto m = make_dual_model(s);
  double prev = 0.0;
  for (double h : {1e-3, 5e-4}) {
    const TrajectoryGrid ref = integrate_ivp(s, 1.0, h);
    const ActionAssembly a =
        ActionAssembly::make(m, HParams::uniform(3, 100.0, BaseState::from_grid(ref)), ref.grid());
    const ElResidual r = el_residual(a, a.zero_dual());
    EXPECT_LE(r.max_raw, 1e-4 * (h / 1e-3) * (h / 1e-3) * 1.01);
    EXPECT_LT(r.ic_residual.norm(), 1e-14);
    if (prev > 0.0) {
      EXPECT_NEAR(prev / r.max_raw, 4.0, 0.5);
    }
    prev = r.max_raw;
  }
}

TEST(DualAction, PackUnpackRoundTrip) {
  std::mt19937 rng(25);
  for (const auto& [name, a] : builtin_assemblies()) {
    const DualTrajectory d = smooth_random_dual(rng, a, 1.0);
    const Vec z = pack_free(a, d);
    EXPECT_EQ(z.size(), free_count(a)) << name;
    EXPECT_EQ(static_cast<int>(free_nodes(a).size()), free_count(a)) << name;
    DualTrajectory w = a.zero_dual();
    unpack_free(a, z, w);
    EXPECT_EQ(max_abs(w.D - d.D), 0.0) << name;
    EXPECT_EQ(max_abs(w.M - d.M), 0.0) << name;
  }
}

TEST(DualAction, BoundaryValuesAreNotUnknowns) {
  auto m = make_dual_model(lorenz_spec(10, 28, 8.0 / 3.0, vec({1, 1, 1})));
  ActionAssembly a = ActionAssembly::make(
      m, HParams::uniform(3, 10.0, BaseState::constant(Vec::Zero(3))), Grid(0.0, 1.0, 11));
  a.terminal = vec({0.1, 0.2, 0.3});
  EXPECT_EQ(free_count(a), 3 * 10);
  const DualTrajectory d = a.zero_dual();
  EXPECT_TRUE(d.D.col(10).isApprox(a.terminal));
  a.periodic = true;
  EXPECT_EQ(a.nodes(), 10);
  EXPECT_EQ(free_count(a), 3 * 10);
  for (int i = 0; i < a.nodes(); ++i) EXPECT_DOUBLE_EQ(a.weight(i), a.grid.h());
}

TEST(DualAction, TrapezoidWeightsSumToHorizon) {
  auto m = make_dual_model(harmonic_spec(vec({1, 0})));
  const ActionAssembly a = ActionAssembly::make(
      m, HParams::uniform(2, 1.0, BaseState::constant(Vec::Zero(2))), Grid(0.0, 2.0, 21));
  double s = 0.0;
  for (int i = 0; i < a.nodes(); ++i) s += a.weight(i);
  EXPECT_NEAR(s, 2.0, 1e-14);
}

TEST(DualAction, DualRatesExactForLinearFields) {
  auto m = make_dual_model(harmonic_spec(vec({1, 0})));
  const ActionAssembly a = ActionAssembly::make(
      m, HParams::uniform(2, 1.0, BaseState::constant(Vec::Zero(2))), Grid(0.0, 1.0, 11));
  Mat D(2, 11);
  for (int i = 0; i < 11; ++i) D.col(i) = vec({2.0 * a.t(i) - 1.0, -a.t(i)});
  const Mat R = dual_rates(a, D);
  for (int i = 0; i < 11; ++i) EXPECT_LT((R.col(i) - vec({2.0, -1.0})).norm(), 1e-12);
}

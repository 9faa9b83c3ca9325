#include <gtest/gtest.h>

#include "dualvp/config.hpp"
#include "dualvp/hamiltonian.hpp"
#include "test_util.hpp"

using namespace dualvp;
using dualvp::testing::random_dual;
using dualvp::testing::random_vec;
using dualvp::testing::vec;

namespace {

const LorenzModel& lorenz() {
  static const LorenzModel m(10, 28, 8.0 / 3.0, vec({1, 1, 1}));
  return m;
}

DualState state_of(const ExtendedDual& e) { return DualState{e.D, e.M}; }

ActionAssembly conservation_assembly(double h, const std::string& base = "zero") {
  const SystemConfig s = parse_system(Json::parse(
      R"({"kind": "lorenz", "params": {"A": 10, "R": 0.5, "B": 2.6666666666666665},
          "initial": {"x0": [1, 1, 1]}})"));
  Json d = {{"c", 1.0}, {"base", base}};
  return build_assembly(s, parse_dual(d, *model_for(s)), 1.0, h);
}

}  // namespace

TEST(Legendre, LorenzClosedFormsMatchGeneric) {
  std::mt19937 rng(31);
  const double c = 40.0;
  for (int k = 0; k < 50; ++k) {
    const Vec ubar = random_vec(rng, 3, 2.0);
    const HParams hp = HParams::uniform(3, c, BaseState::constant(ubar));
    const ExtendedDual e = random_dual(rng, lorenz(), 1.0);
    EXPECT_NEAR(reduced_lagrangian(lorenz(), hp, e, 0.0), lorenz_reduced_lagrangian(lorenz(), c, ubar, e),
                1e-9);
    const Vec P = momentum_map(lorenz(), hp, e, 0.0);
    const Vec R = lorenz_rate_recovery(lorenz(), c, ubar, state_of(e), P);
    EXPECT_LT((R - e.Ddot).lpNorm<Eigen::Infinity>(), 1e-9);
    EXPECT_NEAR(hamiltonian_value(lorenz(), hp, state_of(e), P, 0.0),
                lorenz_hamiltonian(lorenz(), c, ubar, state_of(e), P), 1e-8);
  }
}

TEST(Legendre, RateRecoveryInvertsMomentumMap) {
  std::mt19937 rng(32);
  const Vec x0 = vec({0, 0, 1}), v0 = vec({1, 1, 1});
  std::vector<std::shared_ptr<const DualModel>> models = {
      make_dual_model(lorenz_spec(10, 28, 8.0 / 3.0, vec({1, 1, 1}))),
      make_dual_model(pars_spec(ForceLaw::gauss, x0, v0)),
      make_dual_model(harmonic_spec(vec({1, 0}))),
      std::make_shared<ParsReducedModel>(x0, v0)};
  for (const auto& m : models) {
    const int n = m->primal_dim();
    const HParams hp = HParams::uniform(n, 30.0, BaseState::constant(random_vec(rng, n)));
    for (int k = 0; k < 20; ++k) {
      const ExtendedDual e = random_dual(rng, *m, 0.5);
      const Vec P = momentum_map(*m, hp, e, 0.0);
      const Vec R = rate_recovery(*m, hp, state_of(e), P, 0.0);
      EXPECT_LT((R - e.Ddot).lpNorm<Eigen::Infinity>(), 1e-8) << m->name();
      const LegendrePoint lp = legendre_point(*m, hp, state_of(e), P, 0.0);
      EXPECT_NEAR(lp.H_value, P.dot(e.Ddot) - reduced_lagrangian(*m, hp, e, 0.0), 1e-8) << m->name();
    }
  }
}

TEST(Legendre, MomentumJacobianMatchesDifferences) {
  std::mt19937 rng(33);
  const HParams hp = HParams::uniform(3, 25.0, BaseState::constant(vec({0.5, -1, 2})));
  for (int k = 0; k < 10; ++k) {
    const ExtendedDual e = random_dual(rng, lorenz(), 1.0);
    const Mat J = momentum_jacobian(lorenz(), hp, e, 0.0);
    for (int j = 0; j < 3; ++j) {
      ExtendedDual ep = e, em = e;
      ep.Ddot(j) += 1e-6;
      em.Ddot(j) -= 1e-6;
      const Vec fd = (momentum_map(lorenz(), hp, ep, 0.0) - momentum_map(lorenz(), hp, em, 0.0)) / 2e-6;
      EXPECT_LT((fd - J.col(j)).lpNorm<Eigen::Infinity>(), 1e-6);
    }
  }
}

TEST(Legendre, HamiltonPartialInPIsRate) {
  std::mt19937 rng(34);
  const double c = 30.0;
  const Vec ubar = vec({0.1, 0.2, -0.3});
  const HParams hp = HParams::uniform(3, c, BaseState::constant(ubar));
  const ExtendedDual e = random_dual(rng, lorenz(), 1.0);
  const DualState D = state_of(e);
  const Vec P = momentum_map(lorenz(), hp, e, 0.0);
  const Vec R = rate_recovery(lorenz(), hp, D, P, 0.0);
  for (int j = 0; j < 3; ++j) {
    Vec pp = P, pm = P;
    pp(j) += 1e-6;
    pm(j) -= 1e-6;
    const double d = (lorenz_hamiltonian(lorenz(), c, ubar, D, pp) -
                      lorenz_hamiltonian(lorenz(), c, ubar, D, pm)) / 2e-6;
    EXPECT_NEAR(d, R(j), 1e-6);
  }
}

TEST(Conservation, DriftIsSecondOrder) {
  double prev = 0.0;
  for (double h : {1e-3, 5e-4}) {
    const ActionAssembly a = conservation_assembly(h);
    const SolveResult r = solve_dual_bvp(a, SolveConfig{});
    ASSERT_TRUE(r.converged);
    const ConservationReport rep = check_conservation(a, r.dual, r.converged);
    EXPECT_TRUE(rep.valid);
    EXPECT_TRUE(rep.pass) << "drift " << rep.drift << " bound " << rep.bound;
    EXPECT_EQ(rep.H.size(), static_cast<std::size_t>(a.nodes()));
    if (prev > 0.0) {
      EXPECT_NEAR(prev / rep.drift, 4.0, 0.5);
    }
    prev = rep.drift;
  }
}

TEST(Conservation, TimeVaryingBaseIsUnsupported) {
  const SystemConfig s = parse_system(Json::parse(
      R"({"kind": "lorenz", "params": {"A": 10, "R": 0.5, "B": 2.6666666666666665},
          "initial": {"x0": [1, 1, 1]}})"));
  Json d = {{"c", 1.0}, {"base", "oracle"}};
  const ActionAssembly a = build_assembly(s, parse_dual(d, *model_for(s)), 1.0, 1e-2);
  EXPECT_THROW(check_conservation(a, a.zero_dual(), true), UnsupportedError);
}

TEST(Conservation, UnconvergedTrajectoryIsNotValid) {
  const ActionAssembly a = conservation_assembly(1e-2);
  SolveConfig cfg;
  cfg.max_iter = 1;
  cfg.tol_newton = 1e-15;
  const SolveResult r = solve_dual_bvp(a, cfg);
  ASSERT_FALSE(r.converged);
  const ConservationReport rep = check_conservation(a, r.dual, r.converged);
  EXPECT_FALSE(rep.valid);
  EXPECT_FALSE(rep.pass);
  EXPECT_FALSE(rep.note.empty());
}

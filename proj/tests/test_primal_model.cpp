#include <gtest/gtest.h>

#include "dualvp/integrator.hpp"
#include "dualvp/primal_model.hpp"
#include "test_util.hpp"

using namespace dualvp;
using dualvp::testing::vec;

namespace {

SystemSpec pars(ForceLaw law, Vec x, Vec v, double nu = 0.0,
                PowerLaw power = PowerLaw::none) {
  return pars_spec(law, x, v, nu, power);
}

}  // namespace

TEST(GaussForce, ParsMultiplierAndForce) {
  const Vec x = vec({0, 0, 0}), v = vec({1, 0, 2});
  const auto r = gauss_force(pars(ForceLaw::gauss, x, v), x, v, 0.0);
  EXPECT_DOUBLE_EQ(r.multiplier(0), 2.0);
  EXPECT_TRUE(r.f_c.isApprox(vec({0, -2, 0})));
}

TEST(GaussForce, ZeroNumeratorGivesZeroForce) {
  const Vec x = vec({0.3, -1, 0.7}), v = vec({0, 0.7, 1.5});
  const auto r = gauss_force(pars(ForceLaw::gauss, x, v), x, v, 0.0);
  EXPECT_EQ(r.multiplier(0), 0.0);
  EXPECT_EQ(r.f_c.norm(), 0.0);
}

TEST(GaussForce, MatchesClosedFormMultiplier) {
  std::mt19937 rng(3);
  for (int k = 0; k < 50; ++k) {
    Vec x = dualvp::testing::random_vec(rng, 3, 2.0);
    Vec v = dualvp::testing::random_vec(rng, 3, 2.0);
    const auto r = gauss_force(pars(ForceLaw::gauss, x, v), x, v, 0.0);
    EXPECT_NEAR(r.multiplier(0), v(2) * v(0) / (1 + x(2) * x(2)), 1e-14);
  }
}

TEST(GaussForce, SingularNormalThrows) {
  // n = b + L x vanishes for b = 0, L = 0
  const SystemSpec s = gen_pars_spec(Mat::Zero(2, 2), Vec::Zero(2), ForceLaw::gauss,
                                     PowerLaw::none, vec({0, 0}), vec({0, 0}));
  EXPECT_THROW(gauss_force(s, vec({0, 0}), vec({1, 1}), 0.0), SingularityError);
}

TEST(VorticalMultiplier, DampedExample) {
  const Vec x = vec({0, 0, 1}), v = vec({1, 1, 1});
  EXPECT_DOUBLE_EQ(vortical_multiplier(pars(ForceLaw::vortical_damped, x, v, 2.0), x, v, 2.0), 0.5);
}

TEST(ParsReducedRhs, Examples) {
  auto r = pars_reduced_rhs(vec({0, 0, 0}), vec({1.5, 0, 2}));
  EXPECT_DOUBLE_EQ(r.vdot(0), 0.0);
  EXPECT_DOUBLE_EQ(r.vdot(1), 3.0);
  EXPECT_DOUBLE_EQ(r.vdot(2), 0.0);

  r = pars_reduced_rhs(vec({0, 0, 1}), vec({2, 2, 3}));
  EXPECT_DOUBLE_EQ(r.vdot(0), -3.0);
  EXPECT_DOUBLE_EQ(r.vdot(1), 3.0);

  r = pars_reduced_rhs(vec({1, 2, 3}), vec({0, 0, 5}));
  EXPECT_EQ(r.vdot.norm(), 0.0);
}

TEST(ParsReducedRhs, AgreesWithGaussLaw) {
  std::mt19937 rng(5);
  for (int k = 0; k < 20; ++k) {
    const Vec x = dualvp::testing::random_vec(rng, 3);
    Vec v = dualvp::testing::random_vec(rng, 3);
    v(1) = x(2) * v(0);
    const SystemSpec s = pars(ForceLaw::gauss, x, v);
    const auto a = eval_rhs(s, {x, v, {}, {}, 0.0}, 0.0);
    const auto b = pars_reduced_rhs(x, v);
    EXPECT_LT((a.vdot - b.vdot).lpNorm<Eigen::Infinity>(), 1e-14);
  }
}

TEST(ParsVorticalRhs, UndampedExample) {
  // n = (x3, -1, 0) = (0, -1, 0), lambda = v1 v3 = 2, n x v = (-2, 0, 1)
  const auto r = pars_vortical_rhs(vec({0, 0, 0}), vec({1, 0, 2}), 0.0);
  EXPECT_TRUE(r.vdot.isApprox(vec({2, 2, -1})));
}

TEST(ParsVorticalRhs, RestIsFixed) {
  for (double nu : {0.0, 0.5, 3.0})
    EXPECT_EQ(pars_vortical_rhs(vec({1, 2, 3}), vec({0, 0, 0}), nu).vdot.norm(), 0.0);
}

TEST(ParsVorticalRhs, ThirdComponentFormula) {
  // x3'' = -x3 v2 - v1 at nu = 0
  const Vec x = vec({0.2, 0.1, 0.6}), v = vec({0.8, 0.48, -0.3});
  EXPECT_NEAR(pars_vortical_rhs(x, v, 0.0).vdot(2), -x(2) * v(1) - v(0), 1e-15);
}

TEST(ParsVorticalRhs, NegativeDampingRejected) {
  EXPECT_THROW(pars_vortical_rhs(vec({0, 0, 0}), vec({1, 0, 0}), -1.0), ConfigError);
}

TEST(ParsVorticalRhs, PreservesConstraintRate) {
  // d/dt (x3 v1 - v2) = v3 v1 + x3 v1' - v2' = 0 on the constraint
  std::mt19937 rng(11);
  for (double nu : {0.0, 1.0}) {
    for (int k = 0; k < 20; ++k) {
      const Vec x = dualvp::testing::random_vec(rng, 3);
      Vec v = dualvp::testing::random_vec(rng, 3);
      v(1) = x(2) * v(0);
      const Vec a = pars_vortical_rhs(x, v, nu).vdot;
      EXPECT_NEAR(v(2) * v(0) + x(2) * a(0) - a(1), 0.0, 1e-14);
    }
  }
}

TEST(EvalW, Examples) {
  const SystemSpec s = pars(ForceLaw::gauss, vec({0, 0, 0}), vec({0, 0, 0}), 0.0,
                            PowerLaw::nonneg_slack);
  PrimalState st;
  st.x = vec({0, 0, 0});
  st.v = vec({3, 0, 0});
  st.Q = vec({1, 0, 0});
  st.s = 2.0;
  EXPECT_DOUBLE_EQ(eval_W(s, st, 0.0), 1.0);
  st.Q = vec({0, 0, 0});
  st.s = 0.0;
  EXPECT_EQ(eval_W(s, st, 0.0), 0.0);
}

TEST(EvalW, RequiresSlackLaw) {
  const SystemSpec s = pars(ForceLaw::gauss, vec({0, 0, 0}), vec({0, 0, 0}));
  PrimalState st{vec({0, 0, 0}), vec({0, 0, 0}), vec({0, 0, 0}), {}, 0.0};
  EXPECT_THROW(eval_W(s, st, 0.0), UnsupportedError);
}

TEST(EvalW, DampedSlackIdentity) {
  // on the constraint, Q = f_c of the damped law gives Q . v = nu v . v
  const double nu = 0.7;
  const Vec x = vec({0.1, 0.2, 0.4});
  Vec v = vec({0.9, 0.0, -0.5});
  v(1) = x(2) * v(0);
  const Vec Q = -pars_vortical_rhs(x, v, nu).vdot;
  EXPECT_NEAR(Q.dot(v), nu * v.dot(v), 1e-14);
}

TEST(PowerResidual, UnitMasses) {
  EXPECT_DOUBLE_EQ(power_residual(vec({1, 0, 0}), vec({3, 0, 0}), vec({1}), 1.0), 2.0);
  EXPECT_DOUBLE_EQ(power_residual(vec({1, 2, 1, 1}), vec({1, 1, 2, 2}), vec({1, 2}), 0.0), 11.0);
}

TEST(CovForce, ConstantCovectorFormsAgree) {
  const CovectorField f = CovectorField::affine(Mat::Zero(3, 3), vec({1, 2, -1}));
  const Vec q = vec({0.3, 0.1, 0.2}), qd = vec({1, -1, 2});
  const Vec a = cov_force(f, 0.7, 1.3, q, qd, CovForm::variational);
  const Vec b = cov_force(f, 0.7, 1.3, q, qd, CovForm::dalembert);
  EXPECT_TRUE(a.isApprox(b));
  EXPECT_TRUE(a.isApprox(-1.3 * vec({1, 2, -1})));
}

TEST(CovForce, ParsCurlTerm) {
  Mat L = Mat::Zero(3, 3);
  L(0, 2) = 1.0;
  const CovectorField f = CovectorField::affine(L, vec({0, -1, 0}));
  const Vec r = cov_force(f, 1.0, 0.0, vec({0, 0, 0}), vec({1, 0, 0}));
  EXPECT_TRUE(r.isApprox(vec({0, 0, 1})));
}

TEST(CovForce, CurlTermMatchesFiniteDifferences) {
  Mat L = Mat::Zero(3, 3);
  L(0, 2) = 1.0;
  L(1, 0) = 0.5;
  const Vec b = vec({0.2, -1, 0.3});
  const CovectorField f = CovectorField::affine(L, b);
  const Vec q = vec({0.4, -0.2, 0.9}), qd = vec({0.3, 1.1, -0.6});
  Mat da(3, 3);
  for (int j = 0; j < 3; ++j) {
    Vec e = Vec::Zero(3);
    e(j) = 1e-6;
    da.col(j) = (f.a(q + e) - f.a(q - e)) / 2e-6;
  }
  const Vec expect = -0.8 * (da - da.transpose()) * qd;
  EXPECT_LT((cov_force(f, 0.8, 0.0, q, qd) - expect).norm(), 1e-9);
}

TEST(CovForce, ZeroMultiplier) {
  const CovectorField f = CovectorField::affine(Mat::Identity(3, 3), vec({1, 1, 1}));
  EXPECT_EQ(cov_force(f, 0.0, 0.0, vec({1, 2, 3}), vec({3, 2, 1})).norm(), 0.0);
}

TEST(Validate, RejectsBadConfigurations) {
  EXPECT_THROW(force_law_from_string("magnetic"), ConfigError);
  EXPECT_THROW(system_kind_from_string("pendulum"), ConfigError);
  EXPECT_THROW(validate(pars(ForceLaw::gauss, vec({0, 0, 1}), vec({1, 0, 1}))), ConfigError);
  EXPECT_THROW(validate(pars(ForceLaw::vortical_damped, vec({0, 0, 1}), vec({1, 1, 1}), -0.1)),
               ConfigError);
  EXPECT_THROW(validate(lorenz_spec(10, 28, 8.0 / 3.0, vec({1, 1}))), DimensionError);
  const SystemSpec v2 = gen_pars_spec(Mat::Zero(2, 2), vec({1, -1}), ForceLaw::vortical_damped,
                                      PowerLaw::none, vec({0, 0}), vec({1, 1}));
  EXPECT_THROW(validate(v2), ConfigError);
  EXPECT_NO_THROW(validate(pars(ForceLaw::gauss, vec({0, 0, 1}), vec({1, 1, 1}))));
}

TEST(Validate, MissingParameter) {
  SystemSpec s = lorenz_spec(10, 28, 8.0 / 3.0, vec({1, 1, 1}));
  s.params.erase("R");
  EXPECT_THROW(validate(s), ConfigError);
}

TEST(EvalRhs, StateDimensionsChecked) {
  const SystemSpec s = lorenz_spec(10, 28, 8.0 / 3.0, vec({1, 1, 1}));
  EXPECT_THROW(eval_rhs(s, {vec({1, 1}), {}, {}, {}, 0.0}, 0.0), DimensionError);
}

TEST(EvalRhs, LorenzField) {
  const SystemSpec s = lorenz_spec(10, 28, 8.0 / 3.0, vec({1, 1, 1}));
  const auto r = eval_rhs(s, {vec({1, 2, 3}), {}, {}, {}, 0.0}, 0.0);
  EXPECT_TRUE(r.xdot.isApprox(vec({10, 23, 2 - 8.0})));
}

TEST(EvalRhs, FreeQ) {
  const SystemSpec s = gen_pars_spec(Mat::Zero(2, 2), vec({1, -1}), ForceLaw::free_Q,
                                     PowerLaw::none, vec({0, 0}), vec({1, 1}));
  PrimalState st{vec({0, 0}), vec({1, 1}), vec({0.5, -0.25}), vec({1, 2}), 0.0};
  const auto r = eval_rhs(s, st, 0.0);
  EXPECT_TRUE(r.vdot.isApprox(vec({-0.5, 0.25})));
  EXPECT_TRUE(r.Qdot.isApprox(vec({1, 2})));
}

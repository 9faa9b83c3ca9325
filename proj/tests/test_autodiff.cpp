#include <gtest/gtest.h>

#include <cmath>

#include "dualvp/autodiff.hpp"

using namespace dualvp;

namespace {

template <class S>
S f(const S& x, const S& y) {
  return x * y / (1.0 + x * x) + sqrt(y) - 2.0 * x + 3.0 / y;
}

}  // namespace

TEST(Jet, GradientAndHessianMatchFiniteDifferences) {
  const double x0 = 0.7, y0 = 1.9;
  const Jet r = f(Jet::variable(x0, 2, 0), Jet::variable(y0, 2, 1));
  EXPECT_NEAR(r.v, f(x0, y0), 1e-15);
  const double e = 1e-5;
  const double gx = (f(x0 + e, y0) - f(x0 - e, y0)) / (2 * e);
  const double gy = (f(x0, y0 + e) - f(x0, y0 - e)) / (2 * e);
  EXPECT_NEAR(r.g(0), gx, 1e-9);
  EXPECT_NEAR(r.g(1), gy, 1e-9);
  const double e2 = 1e-4;
  const double hxx = (f(x0 + e2, y0) - 2 * f(x0, y0) + f(x0 - e2, y0)) / (e2 * e2);
  const double hxy = (f(x0 + e2, y0 + e2) - f(x0 + e2, y0 - e2) - f(x0 - e2, y0 + e2) +
                      f(x0 - e2, y0 - e2)) / (4 * e2 * e2);
  EXPECT_NEAR(r.H(0, 0), hxx, 1e-5);
  EXPECT_NEAR(r.H(0, 1), hxy, 1e-5);
  EXPECT_DOUBLE_EQ(r.H(0, 1), r.H(1, 0));
}

TEST(Jet, ConstantsCarryNoDerivatives) {
  const Jet c = Jet::constant(2.5, 3);
  const Jet x = Jet::variable(1.0, 3, 1);
  const Jet r = c * x * x;
  EXPECT_DOUBLE_EQ(r.g(1), 5.0);
  EXPECT_DOUBLE_EQ(r.H(1, 1), 5.0);
  EXPECT_EQ(r.g(0), 0.0);
  EXPECT_EQ(value_of(r), 2.5);
  EXPECT_EQ(constant_like(r, 4.0).g.norm(), 0.0);
}

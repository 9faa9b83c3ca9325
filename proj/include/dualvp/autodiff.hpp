#pragma once

// Second-order forward-mode automatic differentiation.
//
// A Jet carries a value together with its gradient and Hessian with respect
// to a small number of seeded variables. Storage is fixed-capacity so that
// arithmetic never touches the heap.

#include <Eigen/Core>
#include <cmath>

namespace dualvp {

inline constexpr int kMaxJetVars = 16;

struct Jet {
  using Grad = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxJetVars, 1>;
  using Hess = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0,
                             kMaxJetVars, kMaxJetVars>;

  double v = 0.0;
  Grad g;
  Hess H;

  Jet() = default;
  Jet(double value, int n) : v(value), g(Grad::Zero(n)), H(Hess::Zero(n, n)) {}

  static Jet variable(double value, int n, int index) {
    Jet j(value, n);
    j.g(index) = 1.0;
    return j;
  }
  static Jet constant(double value, int n) { return Jet(value, n); }

  int size() const { return static_cast<int>(g.size()); }
};

inline Jet operator-(const Jet& a) {
  Jet r;
  r.v = -a.v;
  r.g = -a.g;
  r.H = -a.H;
  return r;
}

inline Jet operator+(const Jet& a, const Jet& b) {
  Jet r;
  r.v = a.v + b.v;
  r.g = a.g + b.g;
  r.H = a.H + b.H;
  return r;
}

inline Jet operator-(const Jet& a, const Jet& b) {
  Jet r;
  r.v = a.v - b.v;
  r.g = a.g - b.g;
  r.H = a.H - b.H;
  return r;
}

inline Jet operator*(const Jet& a, const Jet& b) {
  Jet r;
  r.v = a.v * b.v;
  r.g = a.v * b.g + b.v * a.g;
  r.H = a.v * b.H + b.v * a.H + a.g * b.g.transpose() + b.g * a.g.transpose();
  return r;
}

inline Jet reciprocal(const Jet& a) {
  const double inv = 1.0 / a.v;
  Jet r;
  r.v = inv;
  r.g = -inv * inv * a.g;
  r.H = -inv * inv * a.H + 2.0 * inv * inv * inv * (a.g * a.g.transpose());
  return r;
}

inline Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }

inline Jet operator+(const Jet& a, double s) {
  Jet r = a;
  r.v += s;
  return r;
}
inline Jet operator+(double s, const Jet& a) { return a + s; }
inline Jet operator-(const Jet& a, double s) { return a + (-s); }
inline Jet operator-(double s, const Jet& a) { return (-a) + s; }

inline Jet operator*(const Jet& a, double s) {
  Jet r;
  r.v = a.v * s;
  r.g = a.g * s;
  r.H = a.H * s;
  return r;
}
inline Jet operator*(double s, const Jet& a) { return a * s; }
inline Jet operator/(const Jet& a, double s) { return a * (1.0 / s); }
inline Jet operator/(double s, const Jet& a) { return s * reciprocal(a); }

inline Jet& operator+=(Jet& a, const Jet& b) { return a = a + b; }
inline Jet& operator-=(Jet& a, const Jet& b) { return a = a - b; }
inline Jet& operator*=(Jet& a, const Jet& b) { return a = a * b; }

inline Jet sqrt(const Jet& a) {
  const double s = std::sqrt(a.v);
  Jet r;
  r.v = s;
  r.g = a.g / (2.0 * s);
  r.H = a.H / (2.0 * s) - (a.g * a.g.transpose()) / (4.0 * s * a.v);
  return r;
}

/// Value extraction usable from code templated on the scalar type.
inline double value_of(double x) { return x; }
inline double value_of(const Jet& x) { return x.v; }

/// Build a constant of the same "shape" as a reference scalar.
inline double constant_like(double, double c) { return c; }
inline Jet constant_like(const Jet& ref, double c) { return Jet(c, ref.size()); }

}  // namespace dualvp

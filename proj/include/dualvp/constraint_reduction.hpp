#pragma once

// Constraint elimination: split v = (v_r, v_s) so that g(x, v_r, v_s, t) = 0
// can be solved for v_s, integrate (x, v_r) with the applied force only, and
// recover the minimal constraint force F^c_r = 0, F^c_s = d/dt v_s - F_s.

#include <memory>
#include <string>
#include <vector>

#include "dualvp/autodiff.hpp"
#include "dualvp/primal_model.hpp"
#include "dualvp/trajectory.hpp"

namespace dualvp {

class ConstrainedSystem {
 public:
  virtual ~ConstrainedSystem() = default;
  virtual int dof() const = 0;
  virtual int n_constraints() const = 0;
  virtual void g(const double* x, const double* v, double t, double* out) const = 0;
  virtual void g(const Jet* x, const Jet* v, const Jet& t, Jet* out) const = 0;
  /// Applied force per unit mass.
  virtual Vec applied_force(const Vec& x, const Vec& v, double t) const {
    (void)v;
    (void)t;
    return Vec::Zero(x.size());
  }

  Vec g(const Vec& x, const Vec& v, double t) const;
  /// Jacobians of g with respect to x, v and t at a point.
  void jacobians(const Vec& x, const Vec& v, double t, Mat& gx, Mat& gv, Vec& gt) const;
};

template <class Derived>
class ConstrainedSystemT : public ConstrainedSystem {
 public:
  void g(const double* x, const double* v, double t, double* out) const override {
    static_cast<const Derived*>(this)->template eval<double>(x, v, t, out);
  }
  void g(const Jet* x, const Jet* v, const Jet& t, Jet* out) const override {
    static_cast<const Derived*>(this)->template eval<Jet>(x, v, t, out);
  }
  using ConstrainedSystem::g;
};

/// (b + L x) . v = 0 with no applied force.
class LinearVelocityConstraint : public ConstrainedSystemT<LinearVelocityConstraint> {
 public:
  LinearVelocityConstraint(Mat L, Vec b) : L_(std::move(L)), b_(std::move(b)) {}
  int dof() const override { return static_cast<int>(b_.size()); }
  int n_constraints() const override { return 1; }
  template <class S>
  void eval(const S* x, const S* v, const S&, S* out) const {
    S n[kParsMaxDim];
    pars_covector(L_, b_, x, n);
    S acc = v[0] * 0.0;
    for (int i = 0; i < dof(); ++i) acc = acc + n[i] * v[i];
    out[0] = acc;
  }

 private:
  Mat L_;
  Vec b_;
};

/// Rows A v = 0 of constant linear constraints.
class ConstantLinearConstraints : public ConstrainedSystemT<ConstantLinearConstraints> {
 public:
  explicit ConstantLinearConstraints(Mat A) : A_(std::move(A)) {}
  int dof() const override { return static_cast<int>(A_.cols()); }
  int n_constraints() const override { return static_cast<int>(A_.rows()); }
  template <class S>
  void eval(const S*, const S* v, const S&, S* out) const {
    for (int r = 0; r < A_.rows(); ++r) {
      S acc = v[0] * 0.0;
      for (int c = 0; c < A_.cols(); ++c) acc = acc + A_(r, c) * v[c];
      out[r] = acc;
    }
  }

 private:
  Mat A_;
};

/// |v|^2 - 1 = 0 in three dimensions with the gyroscopic force omega e3 x v,
/// which turns the velocity and so moves the best pivot around.
class SpeedConstraint : public ConstrainedSystemT<SpeedConstraint> {
 public:
  explicit SpeedConstraint(double omega) : omega_(omega) {}
  int dof() const override { return 3; }
  int n_constraints() const override { return 1; }
  template <class S>
  void eval(const S*, const S* v, const S&, S* out) const {
    out[0] = v[0] * v[0] + v[1] * v[1] + v[2] * v[2] - 1.0;
  }
  Vec applied_force(const Vec& x, const Vec& v, double t) const override;

 private:
  double omega_;
};

/// Forward-mode first derivative along one direction; lets a holonomic
/// constraint phi(x, t) be turned into its rate form d/dt phi generically.
template <class S>
struct Fwd {
  S v, d;
};
template <class S> Fwd<S> operator+(const Fwd<S>& a, const Fwd<S>& b) { return {a.v + b.v, a.d + b.d}; }
template <class S> Fwd<S> operator-(const Fwd<S>& a, const Fwd<S>& b) { return {a.v - b.v, a.d - b.d}; }
template <class S> Fwd<S> operator-(const Fwd<S>& a) { return {-a.v, -a.d}; }
template <class S> Fwd<S> operator*(const Fwd<S>& a, const Fwd<S>& b) {
  return {a.v * b.v, a.d * b.v + a.v * b.d};
}
template <class S> Fwd<S> operator*(double s, const Fwd<S>& a) { return {s * a.v, s * a.d}; }
template <class S> Fwd<S> operator*(const Fwd<S>& a, double s) { return {a.v * s, a.d * s}; }
template <class S> Fwd<S> operator+(const Fwd<S>& a, double s) { return {a.v + s, a.d}; }
template <class S> Fwd<S> operator-(const Fwd<S>& a, double s) { return {a.v - s, a.d}; }

/// Rate form phi_x v + phi_t of holonomic constraints phi(x, t) = 0, where
/// Phi supplies `template <class T> void operator()(const T* x, const T& t, T* out)`
/// and `int count`.
template <class Phi>
class HolonomicRateForm : public ConstrainedSystemT<HolonomicRateForm<Phi>> {
 public:
  HolonomicRateForm(Phi phi, int dof) : phi_(std::move(phi)), dof_(dof) {}
  int dof() const override { return dof_; }
  int n_constraints() const override { return phi_.count; }
  template <class S>
  void eval(const S* x, const S* v, const S& t, S* out) const {
    std::vector<Fwd<S>> xf(dof_), of(phi_.count);
    for (int i = 0; i < dof_; ++i) xf[i] = {x[i], v[i]};
    const Fwd<S> tf{t, t * 0.0 + 1.0};
    phi_(xf.data(), tf, of.data());
    for (int a = 0; a < phi_.count; ++a) out[a] = of[a].d;
  }
  /// The holonomic residual itself, for monitoring drift.
  Vec phi(const Vec& x, double t) const {
    Vec out(phi_.count);
    phi_(x.data(), t, out.data());
    return out;
  }

 private:
  Phi phi_;
  int dof_;
};

/// phi = (|x|^2 - 1) / 2: motion on the unit sphere.
struct UnitSpherePhi {
  int count = 1;
  template <class T>
  void operator()(const T* x, const T&, T* out) const {
    out[0] = 0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) - 0.5;
  }
};

struct VelocitySplit {
  std::vector<int> indices_s;  ///< eliminated components
  std::vector<int> indices_r;  ///< retained components
  int K = 0;
  Vec center_x, center_v;
  double center_t = 0.0;
  double sigma_min = 0.0;  ///< smallest singular value of the dg/dv_s block at split time
};

inline constexpr double kEpsRank = 1e-10;
inline constexpr double kEpsConstraint = 1e-9;

/// Column-pivoted split of dg/dv. A non-empty `prefer` names the eliminated
/// components to use whenever their sub-block has full numerical rank; the
/// choice fixes which velocities carry the constraint force.
VelocitySplit split_velocities(const ConstrainedSystem& sys, const Vec& x, const Vec& v, double t,
                               double eps_rank = kEpsRank, const std::vector<int>& prefer = {});

/// Smallest singular value of dg/dv restricted to the eliminated columns.
double split_sigma(const ConstrainedSystem& sys, const VelocitySplit& split, const Vec& x,
                   const Vec& v, double t);

/// v_s with g(x, v_r, v_s, t) = 0 by Newton (Gauss-Newton for redundant
/// constraints), started from `guess`. Throws ConvergenceError on failure,
/// which callers treat as leaving the split's domain.
Vec solve_vs(const ConstrainedSystem& sys, const VelocitySplit& split, const Vec& x,
             const Vec& v_r, double t, const Vec& guess);

struct SplitEvent {
  double t = 0.0;
  std::vector<int> indices_s;
  std::vector<int> indices_r;
  double sigma = 0.0;
};

struct ReductionResult {
  TrajectoryGrid traj;  ///< x, v per node
  Mat forces;           ///< recovered constraint force per node (dof x nodes)
  std::vector<SplitEvent> events;
  double max_constraint = 0.0;
};

/// d/dt v_s along the reduced flow by implicit differentiation of g = 0.
Vec vs_rate(const ConstrainedSystem& sys, const VelocitySplit& split, const Vec& x, const Vec& v,
            double t);

ReductionResult integrate_reduced(const ConstrainedSystem& sys, const Vec& x0, const Vec& v0,
                                  double T, double h, const std::vector<int>& eliminate = {});

/// The constraint of a gen_pars / pars SystemSpec.
std::unique_ptr<ConstrainedSystem> constrained_system(const SystemSpec& spec);

void write_reduction_csv(const std::string& path, const ReductionResult& r);

}  // namespace dualvp

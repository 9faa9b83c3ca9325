#pragma once

// Primal systems in the form consumed by the dual machinery:
//
//   d/dt Y_k(U) = F_k(U, t)   one per evolution slot, dual field D_k
//   G_a(U, t)   = 0           one per algebraic relation, multiplier M_a
//
// with Y_k(U) = U[slot.state_index]. The dual Lagrangian is
//
//   L_H = -Ddot . Y(U) - D . F(U, t) + M . G(U, t) + H(U, t),
//   H   = 1/2 sum_j c_j (U_j - Ubar_j(t))^2.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dualvp/autodiff.hpp"
#include "dualvp/primal_model.hpp"
#include "dualvp/trajectory.hpp"

namespace dualvp {

struct EvolutionSlot {
  int state_index = 0;
  bool has_initial_condition = true;
  double initial_value = 0.0;
  std::string name;
};

/// Dual fields at one instant: D per evolution slot, M per algebraic relation.
struct DualState {
  Vec D;
  Vec M;
};

/// DualState together with the nodal rates of D.
struct ExtendedDual {
  Vec Ddot;
  Vec D;
  Vec M;

  static ExtendedDual zero(int slots, int algebraic) {
    return {Vec::Zero(slots), Vec::Zero(slots), Vec::Zero(algebraic)};
  }
};

/// Ubar(t): a constant vector, a sampled trajectory, or an explicit function.
class BaseState {
 public:
  BaseState() = default;
  static BaseState constant(Vec value);
  static BaseState from_grid(TrajectoryGrid traj);
  static BaseState from_function(int dim, std::function<Vec(double)> f);

  Vec at(double t) const;
  bool is_constant() const { return kind_ == Kind::constant; }
  int dim() const { return dim_; }

 private:
  enum class Kind { constant, grid, function };
  Kind kind_ = Kind::constant;
  int dim_ = 0;
  Vec value_;
  std::shared_ptr<const TrajectoryGrid> grid_;
  std::function<Vec(double)> fn_;
};

struct HParams {
  Vec c;  ///< one positive coefficient per primal component
  BaseState base;

  static HParams uniform(int dim, double c, BaseState base);
  void check(int primal_dim) const;
  double value(const Vec& U, double t) const;
};

class DualModel {
 public:
  virtual ~DualModel() = default;

  virtual std::string name() const = 0;
  virtual int primal_dim() const = 0;
  virtual int algebraic_dim() const { return 0; }
  const std::vector<EvolutionSlot>& slots() const { return slots_; }
  int slot_count() const { return static_cast<int>(slots_.size()); }
  const std::vector<std::string>& primal_names() const { return names_; }
  virtual bool autonomous() const { return true; }

  /// F (slot_count entries) and G (algebraic_dim entries) at (U, t).
  virtual void eval(const double* U, double t, double* F, double* G) const = 0;
  virtual void eval(const Jet* U, double t, Jet* F, Jet* G) const = 0;

  /// Exact DtP map when the model and H admit one.
  virtual std::optional<Vec> closed_form_dtp(const ExtendedDual&, const HParams&,
                                             double) const {
    return std::nullopt;
  }

  Vec F(const Vec& U, double t) const;
  Vec G(const Vec& U, double t) const;
  /// Y(U) in slot order.
  Vec Y(const Vec& U) const;
  /// Primal initial data Y^0 for the slots that carry one.
  Vec initial_values() const;

 protected:
  std::vector<EvolutionSlot> slots_;
  std::vector<std::string> names_;
};

/// Implements both eval overloads from a member template `evaluate<S>`.
template <class Derived>
class DualModelT : public DualModel {
 public:
  void eval(const double* U, double t, double* F, double* G) const override {
    static_cast<const Derived*>(this)->template evaluate<double>(U, t, F, G);
  }
  void eval(const Jet* U, double t, Jet* F, Jet* G) const override {
    static_cast<const Derived*>(this)->template evaluate<Jet>(U, t, F, G);
  }
};

class LorenzModel : public DualModelT<LorenzModel> {
 public:
  LorenzModel(double A, double R, double B, const Vec& x0);
  std::string name() const override { return "lorenz"; }
  int primal_dim() const override { return 3; }
  std::optional<Vec> closed_form_dtp(const ExtendedDual& e, const HParams& hp,
                                     double t) const override;

  template <class S>
  void evaluate(const S* U, double, S* F, S*) const {
    lorenz_field(A_, R_, B_, U, F);
  }
  double A() const { return A_; }
  double R() const { return R_; }
  double B() const { return B_; }

 private:
  double A_, R_, B_;
};

/// x' = v, v' = -Q, (b + L x) . v = 0 and, with slack, Q . v - s^2/2 = 0.
/// U = (x, v, Q[, s]).
class GenParsModel : public DualModelT<GenParsModel> {
 public:
  GenParsModel(const Mat& L, const Vec& b, bool slack, const Vec& x0, const Vec& v0);
  std::string name() const override { return "gen_pars"; }
  int primal_dim() const override { return 3 * M_ + (slack_ ? 1 : 0); }
  int algebraic_dim() const override { return slack_ ? 2 : 1; }
  std::optional<Vec> closed_form_dtp(const ExtendedDual& e, const HParams& hp,
                                     double t) const override;

  template <class S>
  void evaluate(const S* U, double, S* F, S* G) const {
    const S* x = U;
    const S* v = U + M_;
    const S* Q = U + 2 * M_;
    for (int i = 0; i < M_; ++i) {
      F[i] = v[i];
      F[M_ + i] = -Q[i];
    }
    S n[kParsMaxDim];
    pars_covector(L_, b_, x, n);
    S g = U[0] * 0.0, qv = U[0] * 0.0;
    for (int i = 0; i < M_; ++i) {
      g = g + n[i] * v[i];
      qv = qv + Q[i] * v[i];
    }
    G[0] = g;
    if (slack_) G[1] = qv - 0.5 * U[3 * M_] * U[3 * M_];
  }

  int M() const { return M_; }
  bool slack() const { return slack_; }
  const Mat& L() const { return L_; }
  const Vec& b() const { return b_; }

 private:
  Mat L_;
  Vec b_;
  bool slack_;
  int M_;
};

/// The Pars family written as a second-order ODE with the gauss or vortical
/// force eliminated: U = (x, v).
class ParsForceModel : public DualModelT<ParsForceModel> {
 public:
  explicit ParsForceModel(const SystemSpec& spec);
  std::string name() const override { return "pars_force"; }
  int primal_dim() const override { return 2 * M_; }

  template <class S>
  void evaluate(const S* U, double, S* F, S*) const {
    for (int i = 0; i < M_; ++i) F[i] = U[M_ + i];
    pars_family_accel(L_, b_, cross_, nu_, U, U + M_, F + M_);
  }

 private:
  Mat L_;
  Vec b_;
  bool cross_;
  double nu_;
  int M_;
};

/// Polynomial first-order ODE x' = P(x).
class FirstOrderModel : public DualModelT<FirstOrderModel> {
 public:
  explicit FirstOrderModel(const SystemSpec& spec);
  std::string name() const override { return "poly_ode"; }
  int primal_dim() const override { return dim_; }

  template <class S>
  void evaluate(const S* U, double, S* F, S*) const {
    poly_field(terms_, dim_, U, F);
  }

 private:
  std::vector<PolyTerm> terms_;
  int dim_;
};

/// Velocity equations of the Pars system under Gauss's law once x3 is known
/// in closed form, z(t) = v3^0 t + x3^0:
///   v1' = -v1 z k,  v2' = v1 k,  k = v3^0 / (1 + z^2).
/// U = (v1, v2).
class ParsReducedModel : public DualModelT<ParsReducedModel> {
 public:
  ParsReducedModel(const Vec& x0, const Vec& v0);
  std::string name() const override { return "pars_reduced"; }
  int primal_dim() const override { return 2; }
  bool autonomous() const override { return false; }

  double z(double t) const { return v30_ * t + x30_; }
  double k(double t) const { return v30_ / (1.0 + z(t) * z(t)); }

  template <class S>
  void evaluate(const S* U, double t, S* F, S*) const {
    const double kk = k(t), zz = z(t);
    F[0] = -(zz * kk) * U[0];
    F[1] = kk * U[0];
  }

 private:
  double x30_, v30_;
};

/// F scaled by a constant factor P, for the time-rescaled periodic problem.
class ScaledModel : public DualModel {
 public:
  ScaledModel(std::shared_ptr<const DualModel> inner, double P);
  std::string name() const override { return inner_->name() + "_scaled"; }
  int primal_dim() const override { return inner_->primal_dim(); }
  int algebraic_dim() const override { return inner_->algebraic_dim(); }
  bool autonomous() const override { return inner_->autonomous(); }
  void eval(const double* U, double t, double* F, double* G) const override;
  void eval(const Jet* U, double t, Jet* F, Jet* G) const override;
  double P() const { return P_; }

 private:
  std::shared_ptr<const DualModel> inner_;
  double P_;
};

/// The dual model matching a SystemSpec: lorenz, poly_ode, gen_pars/pars with
/// free_Q (GenParsModel) or with gauss / dalembert / vortical_damped
/// (ParsForceModel).
std::shared_ptr<const DualModel> make_dual_model(const SystemSpec& spec);

}  // namespace dualvp

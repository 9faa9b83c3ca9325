#pragma once

// Primal systems: the Newtonian/ODE equations the dual machinery is built on,
// with the competing constraint-force prescriptions.

#include <Eigen/Core>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "dualvp/errors.hpp"

namespace dualvp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class SystemKind { lorenz, pars, gen_pars, poly_ode };

/// How the constraint force entering v' = f_a - f_c is determined.
enum class ForceLaw {
  none,                ///< unconstrained or first-order system
  free_Q,              ///< f_c = Q, no assumption on its form
  dalembert,           ///< f_c along the constraint covector a(x)
  gauss,               ///< least constraint: f_c = lambda* n
  hamiltonian_linear,  ///< f_c = -mu' a - mu (da - da^T) v, mu carried as Q
  vortical_damped,     ///< f_c = lambda* a + a x v + nu v
};

enum class PowerLaw { none, nonneg_slack };

std::string_view to_string(SystemKind k);
std::string_view to_string(ForceLaw f);
std::string_view to_string(PowerLaw p);
SystemKind system_kind_from_string(std::string_view s);
ForceLaw force_law_from_string(std::string_view s);
PowerLaw power_law_from_string(std::string_view s);

struct Dims {
  int d = 0;          ///< spatial dimension per particle
  int N = 1;          ///< particle count
  int m = 0;          ///< number of constraints
  int gamma_bar = 0;  ///< number of constraint parameters Q
  int dof() const { return d * N; }
};

/// One monomial c * prod_j x_j^{p_j} contributing to equation `equation`.
struct PolyTerm {
  int equation = 0;
  double coefficient = 0.0;
  std::vector<int> powers;
};

struct SystemSpec {
  SystemKind kind = SystemKind::lorenz;
  Dims dims;
  std::map<std::string, double> params;
  Mat L;  ///< constraint matrix: (b + L x) . v = 0
  Vec b;
  std::vector<PolyTerm> poly;
  ForceLaw force_law = ForceLaw::none;
  PowerLaw power_law = PowerLaw::none;
  Vec x0;
  Vec v0;
  Vec q0;  ///< initial constraint parameters (hamiltonian_linear only)

  double param(const std::string& name) const;
  double param_or(const std::string& name, double fallback) const;
  bool first_order() const {
    return kind == SystemKind::lorenz || kind == SystemKind::poly_ode;
  }
  bool has_constraint() const { return kind == SystemKind::pars || kind == SystemKind::gen_pars; }
};

struct PrimalState {
  Vec x;
  Vec v;
  Vec Q;
  Vec R;
  double s = 0.0;
};

struct PrimalRates {
  Vec xdot;
  Vec vdot;
  Vec Qdot;
};

struct ConstraintForceResult {
  Vec f_c;         ///< constraint force per unit mass
  Vec multiplier;  ///< lambda* (or the Q values used)
  double power = 0.0;
};

inline constexpr double kEpsSingular = 1e-12;
inline constexpr int kParsMaxDim = 8;
inline constexpr double kEpsInitialConsistency = 1e-9;

// ---------------------------------------------------------------------------
// Built-in system constructors.

SystemSpec lorenz_spec(double A, double R, double B, const Vec& x0);
/// The single-particle nonholonomic example x3 x1' - x2' = 0.
SystemSpec pars_spec(ForceLaw law, const Vec& x0, const Vec& v0, double nu = 0.0,
                     PowerLaw power = PowerLaw::none);
SystemSpec gen_pars_spec(const Mat& L, const Vec& b, ForceLaw law, PowerLaw power,
                         const Vec& x0, const Vec& v0);
SystemSpec poly_ode_spec(int dim, std::vector<PolyTerm> terms, const Vec& x0);
/// x' = y, y' = -x as a polynomial ODE.
SystemSpec harmonic_spec(const Vec& x0);

/// Checks dimensions, parameter ranges and initial constraint consistency.
void validate(const SystemSpec& spec, double eps_ic = kEpsInitialConsistency);

/// Constraint residual g(x, v) = (b + L x) . v for the Pars family.
double constraint_residual(const SystemSpec& spec, const Vec& x, const Vec& v);

// ---------------------------------------------------------------------------
// Right-hand sides.

PrimalRates eval_rhs(const SystemSpec& spec, const PrimalState& state, double t);

ConstraintForceResult gauss_force(const SystemSpec& spec, const Vec& x, const Vec& v,
                                  double t);

/// Pars reduced equations under Gauss's law.
PrimalRates pars_reduced_rhs(const Vec& x, const Vec& v);
/// Pars with the vortical (and for nu > 0 damped) constraint force.
PrimalRates pars_vortical_rhs(const Vec& x, const Vec& v, double nu);

/// lambda*(x, v; nu) for the vortical-damped force on the Pars family.
double vortical_multiplier(const SystemSpec& spec, const Vec& x, const Vec& v, double nu);

/// Power constraint residual. Pars family: Q . v - s^2 / 2.
double eval_W(const SystemSpec& spec, const PrimalState& state, double t);
/// General slack form: sum_A m_A f_c . v - s^2.
double power_residual(const Vec& f_c, const Vec& v, const Vec& masses, double s);

// ---------------------------------------------------------------------------
// Covector-field constraint forces a(q) . q' = 0.

struct CovectorField {
  std::function<Vec(const Vec&)> a;       ///< a_alpha(q)
  std::function<Mat(const Vec&)> jacobian;  ///< (da)_{alpha beta} = d a_alpha / d q_beta

  static CovectorField affine(const Mat& L, const Vec& b);
};

enum class CovForm { variational, dalembert };

/// Constraint force from the calculus-of-variations treatment, or (with
/// CovForm::dalembert) the d'Alembert form -mu' a.
Vec cov_force(const CovectorField& field, double mu, double mudot, const Vec& q,
              const Vec& qdot, CovForm form = CovForm::variational);

// ---------------------------------------------------------------------------
// Scalar-generic kernels shared with the dual models and automatic
// differentiation.

template <class S>
void lorenz_field(double A, double R, double B, const S* u, S* f) {
  f[0] = A * (u[1] - u[0]);
  f[1] = u[0] * (R - u[2]) - u[1];
  f[2] = u[0] * u[1] - B * u[2];
}

template <class S>
void poly_field(const std::vector<PolyTerm>& terms, int dim, const S* x, S* f) {
  for (int i = 0; i < dim; ++i) f[i] = x[0] * 0.0;
  for (const auto& term : terms) {
    S mono = x[0] * 0.0 + term.coefficient;
    for (int j = 0; j < dim; ++j)
      for (int p = 0; p < term.powers[j]; ++p) mono = mono * x[j];
    f[term.equation] = f[term.equation] + mono;
  }
}

/// a(x) = b + L x evaluated into `n`.
template <class S>
void pars_covector(const Mat& L, const Vec& b, const S* x, S* n) {
  const int M = static_cast<int>(b.size());
  for (int i = 0; i < M; ++i) {
    S acc = x[0] * 0.0 + b(i);
    for (int j = 0; j < M; ++j)
      if (L(i, j) != 0.0) acc = acc + L(i, j) * x[j];
    n[i] = acc;
  }
}

/// Acceleration of the Pars family under gauss (cross = false, nu = 0) or
/// vortical_damped (cross = true) laws: v' = -lambda n - [n x v] - nu v.
template <class S>
void pars_family_accel(const Mat& L, const Vec& b, bool cross, double nu, const S* x,
                       const S* v, S* vdot) {
  const int M = static_cast<int>(b.size());
  S n[kParsMaxDim];
  pars_covector(L, b, x, n);
  S nn = x[0] * 0.0, nv = x[0] * 0.0, w = x[0] * 0.0;
  for (int i = 0; i < M; ++i) {
    nn = nn + n[i] * n[i];
    nv = nv + n[i] * v[i];
    for (int j = 0; j < M; ++j)
      if (L(i, j) != 0.0) w = w + L(i, j) * v[i] * v[j];
  }
  const S lambda = (w - nu * nv) / nn;
  for (int i = 0; i < M; ++i) vdot[i] = -(lambda * n[i]) - nu * v[i];
  if (cross) {
    vdot[0] = vdot[0] - (n[1] * v[2] - n[2] * v[1]);
    vdot[1] = vdot[1] - (n[2] * v[0] - n[0] * v[2]);
    vdot[2] = vdot[2] - (n[0] * v[1] - n[1] * v[0]);
  }
}

}  // namespace dualvp

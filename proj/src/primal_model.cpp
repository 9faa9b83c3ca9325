#include "dualvp/primal_model.hpp"

#include <cmath>
#include <sstream>

namespace dualvp {

namespace {

template <class Enum, std::size_t N>
Enum parse_enum(std::string_view s, const std::pair<std::string_view, Enum> (&table)[N],
                const char* what) {
  for (const auto& [name, value] : table)
    if (name == s) return value;
  throw ConfigError(std::string("unknown ") + what + ": '" + std::string(s) + "'");
}

constexpr std::pair<std::string_view, SystemKind> kKinds[] = {
    {"lorenz", SystemKind::lorenz},
    {"pars", SystemKind::pars},
    {"gen_pars", SystemKind::gen_pars},
    {"poly_ode", SystemKind::poly_ode},
};
constexpr std::pair<std::string_view, ForceLaw> kLaws[] = {
    {"none", ForceLaw::none},
    {"free_Q", ForceLaw::free_Q},
    {"dalembert", ForceLaw::dalembert},
    {"gauss", ForceLaw::gauss},
    {"hamiltonian_linear", ForceLaw::hamiltonian_linear},
    {"vortical_damped", ForceLaw::vortical_damped},
};
constexpr std::pair<std::string_view, PowerLaw> kPowers[] = {
    {"none", PowerLaw::none},
    {"nonneg_slack", PowerLaw::nonneg_slack},
};

void check_state_dims(const SystemSpec& spec, const PrimalState& s) {
  const int n = spec.dims.dof();
  std::ostringstream os;
  if (s.x.size() != n) {
    os << "state.x has " << s.x.size() << " entries, system expects " << n;
    throw DimensionError(os.str());
  }
  if (!spec.first_order() && s.v.size() != n) {
    os << "state.v has " << s.v.size() << " entries, system expects " << n;
    throw DimensionError(os.str());
  }
  if (spec.force_law == ForceLaw::free_Q || spec.force_law == ForceLaw::hamiltonian_linear) {
    if (s.Q.size() != spec.dims.gamma_bar) {
      os << "state.Q has " << s.Q.size() << " entries, system expects "
         << spec.dims.gamma_bar;
      throw DimensionError(os.str());
    }
  }
}

}  // namespace

std::string_view to_string(SystemKind k) {
  for (const auto& [name, value] : kKinds)
    if (value == k) return name;
  return "?";
}
std::string_view to_string(ForceLaw f) {
  for (const auto& [name, value] : kLaws)
    if (value == f) return name;
  return "?";
}
std::string_view to_string(PowerLaw p) {
  for (const auto& [name, value] : kPowers)
    if (value == p) return name;
  return "?";
}
SystemKind system_kind_from_string(std::string_view s) {
  return parse_enum(s, kKinds, "system");
}
ForceLaw force_law_from_string(std::string_view s) {
  return parse_enum(s, kLaws, "force_law");
}
PowerLaw power_law_from_string(std::string_view s) {
  return parse_enum(s, kPowers, "power_law");
}

double SystemSpec::param(const std::string& name) const {
  auto it = params.find(name);
  if (it == params.end()) throw ConfigError("missing parameter '" + name + "'");
  return it->second;
}

double SystemSpec::param_or(const std::string& name, double fallback) const {
  auto it = params.find(name);
  return it == params.end() ? fallback : it->second;
}

SystemSpec lorenz_spec(double A, double R, double B, const Vec& x0) {
  SystemSpec s;
  s.kind = SystemKind::lorenz;
  s.dims = {3, 1, 0, 0};
  s.params = {{"A", A}, {"R", R}, {"B", B}};
  s.x0 = x0;
  return s;
}

SystemSpec gen_pars_spec(const Mat& L, const Vec& b, ForceLaw law, PowerLaw power,
                         const Vec& x0, const Vec& v0) {
  SystemSpec s;
  s.kind = SystemKind::gen_pars;
  const int M = static_cast<int>(b.size());
  s.dims = {M, 1, 1, law == ForceLaw::hamiltonian_linear ? 1 : M};
  s.L = L;
  s.b = b;
  s.force_law = law;
  s.power_law = power;
  s.x0 = x0;
  s.v0 = v0;
  if (law == ForceLaw::hamiltonian_linear) s.q0 = Vec::Zero(1);
  return s;
}

SystemSpec pars_spec(ForceLaw law, const Vec& x0, const Vec& v0, double nu, PowerLaw power) {
  Mat L = Mat::Zero(3, 3);
  L(0, 2) = 1.0;
  Vec b = Vec::Zero(3);
  b(1) = -1.0;
  SystemSpec s = gen_pars_spec(L, b, law, power, x0, v0);
  s.kind = SystemKind::pars;
  s.params["nu"] = nu;
  return s;
}

SystemSpec poly_ode_spec(int dim, std::vector<PolyTerm> terms, const Vec& x0) {
  SystemSpec s;
  s.kind = SystemKind::poly_ode;
  s.dims = {dim, 1, 0, 0};
  s.poly = std::move(terms);
  s.x0 = x0;
  return s;
}

SystemSpec harmonic_spec(const Vec& x0) {
  return poly_ode_spec(2, {{0, 1.0, {0, 1}}, {1, -1.0, {1, 0}}}, x0);
}

void validate(const SystemSpec& spec, double eps_ic) {
  const int n = spec.dims.dof();
  if (n <= 0) throw ConfigError("system has no degrees of freedom");
  require_dim(spec.x0.size() == n, "initial x0 has " + std::to_string(spec.x0.size()) +
                                       " entries, expected " + std::to_string(n));
  switch (spec.kind) {
    case SystemKind::lorenz:
      for (const char* p : {"A", "R", "B"}) (void)spec.param(p);
      if (n != 3) throw DimensionError("lorenz system is three-dimensional");
      break;
    case SystemKind::poly_ode:
      for (const auto& term : spec.poly) {
        if (term.equation < 0 || term.equation >= n)
          throw ConfigError("poly_ode term targets equation " + std::to_string(term.equation));
        require_dim(static_cast<int>(term.powers.size()) == n,
                    "poly_ode term has wrong number of powers");
        for (int p : term.powers)
          if (p < 0) throw ConfigError("poly_ode powers must be non-negative");
      }
      break;
    case SystemKind::pars:
    case SystemKind::gen_pars: {
      if (n > kParsMaxDim) throw ConfigError("gen_pars dimension too large");
      require_dim(spec.v0.size() == n, "initial v0 must match x0");
      require_dim(spec.L.rows() == n && spec.L.cols() == n, "L must be square of size dof");
      require_dim(spec.b.size() == n, "b must have size dof");
      if (spec.force_law == ForceLaw::none)
        throw ConfigError("a constrained system needs a force_law");
      const double nu = spec.param_or("nu", 0.0);
      if (nu < 0.0) throw ConfigError("nu must be non-negative");
      if (spec.force_law == ForceLaw::vortical_damped && n != 3)
        throw ConfigError("vortical_damped requires three velocity components");
      if (spec.force_law == ForceLaw::hamiltonian_linear)
        require_dim(spec.q0.size() == 1, "hamiltonian_linear carries one multiplier in Q");
      if (!(spec.dims.m < n && spec.dims.m <= spec.dims.gamma_bar && spec.dims.gamma_bar <= n))
        throw ConfigError("constraint counts violate m < dN and m <= Gamma <= dN");
      const double g0 = constraint_residual(spec, spec.x0, spec.v0);
      if (std::abs(g0) > eps_ic) {
        std::ostringstream os;
        os << "initial data violates the constraint: g(x0, v0) = " << g0;
        throw ConfigError(os.str());
      }
      break;
    }
  }
  if (spec.first_order() && spec.force_law != ForceLaw::none &&
      spec.force_law != ForceLaw::free_Q)
    throw ConfigError("first-order systems carry no constraint force law");
}

double constraint_residual(const SystemSpec& spec, const Vec& x, const Vec& v) {
  return (spec.b + spec.L * x).dot(v);
}

ConstraintForceResult gauss_force(const SystemSpec& spec, const Vec& x, const Vec& v, double) {
  if (!spec.has_constraint()) throw UnsupportedError("gauss_force needs a constrained system");
  require_dim(x.size() == spec.b.size() && v.size() == spec.b.size(),
              "gauss_force: x and v must have size dof");
  const Vec n = spec.b + spec.L * x;
  const double nn = n.squaredNorm();
  if (nn <= kEpsSingular) throw SingularityError("gauss_force: constraint normal vanishes");
  const double w = v.dot(spec.L * v);
  // no applied force in the Pars family: n . f = 0
  const double lambda = w / nn;
  ConstraintForceResult r;
  r.f_c = lambda * n;
  r.multiplier = Vec::Constant(1, lambda);
  r.power = r.f_c.dot(v);
  return r;
}

double vortical_multiplier(const SystemSpec& spec, const Vec& x, const Vec& v, double nu) {
  const Vec n = spec.b + spec.L * x;
  const double nn = n.squaredNorm();
  if (nn <= kEpsSingular) throw SingularityError("constraint normal vanishes");
  return (v.dot(spec.L * v) - nu * n.dot(v)) / nn;
}

PrimalRates eval_rhs(const SystemSpec& spec, const PrimalState& state, double) {
  check_state_dims(spec, state);
  PrimalRates r;
  const int n = spec.dims.dof();
  switch (spec.kind) {
    case SystemKind::lorenz:
      r.xdot.resize(3);
      lorenz_field(spec.param("A"), spec.param("R"), spec.param("B"), state.x.data(),
                   r.xdot.data());
      return r;
    case SystemKind::poly_ode:
      r.xdot.resize(n);
      poly_field(spec.poly, n, state.x.data(), r.xdot.data());
      return r;
    case SystemKind::pars:
    case SystemKind::gen_pars:
      break;
  }
  r.xdot = state.v;
  r.vdot.resize(n);
  const double nu = spec.param_or("nu", 0.0);
  switch (spec.force_law) {
    case ForceLaw::free_Q:
      r.vdot = -state.Q;
      r.Qdot = state.R.size() == state.Q.size() ? state.R : Vec::Zero(state.Q.size());
      break;
    case ForceLaw::dalembert:
    case ForceLaw::gauss:
      // for a homogeneous linear constraint the d'Alembert multiplier coincides with
      // the least-constraint one
      pars_family_accel(spec.L, spec.b, false, 0.0, state.x.data(), state.v.data(),
                        r.vdot.data());
      break;
    case ForceLaw::vortical_damped:
      pars_family_accel(spec.L, spec.b, true, nu, state.x.data(), state.v.data(),
                        r.vdot.data());
      break;
    case ForceLaw::hamiltonian_linear: {
      const CovectorField field = CovectorField::affine(spec.L, spec.b);
      const Vec a = field.a(state.x);
      const Mat da = field.jacobian(state.x);
      const double mu = state.Q(0);
      const Vec curl_v = (da - da.transpose()) * state.v;
      const double aa = a.squaredNorm();
      if (aa <= kEpsSingular) throw SingularityError("constraint covector vanishes");
      // d/dt (a . v) = v . da v + a . v' = 0 with v' = mu' a + mu (da - da^T) v
      const double mudot = -(mu * a.dot(curl_v) + state.v.dot(da * state.v)) / aa;
      r.vdot = -cov_force(field, mu, mudot, state.x, state.v);
      r.Qdot = Vec::Constant(1, mudot);
      break;
    }
    case ForceLaw::none:
      throw ConfigError("constrained system without force law");
  }
  return r;
}

PrimalRates pars_reduced_rhs(const Vec& x, const Vec& v) {
  require_dim(x.size() == 3 && v.size() == 3, "Pars state is three-dimensional");
  PrimalRates r;
  r.xdot = v;
  r.vdot.resize(3);
  const double den = 1.0 + x(2) * x(2);
  r.vdot(0) = -v(0) * x(2) * v(2) / den;
  r.vdot(1) = v(0) * v(2) / den;
  r.vdot(2) = 0.0;
  return r;
}

PrimalRates pars_vortical_rhs(const Vec& x, const Vec& v, double nu) {
  if (nu < 0.0) throw ConfigError("nu must be non-negative");
  const SystemSpec spec = pars_spec(ForceLaw::vortical_damped, x, v, nu);
  require_dim(x.size() == 3 && v.size() == 3, "Pars state is three-dimensional");
  PrimalRates r;
  r.xdot = v;
  r.vdot.resize(3);
  pars_family_accel(spec.L, spec.b, true, nu, x.data(), v.data(), r.vdot.data());
  return r;
}

double eval_W(const SystemSpec& spec, const PrimalState& state, double) {
  if (spec.power_law != PowerLaw::nonneg_slack)
    throw UnsupportedError("eval_W requires power_law = nonneg_slack");
  require_dim(state.Q.size() == state.v.size(), "eval_W: Q and v must have equal size");
  return state.Q.dot(state.v) - 0.5 * state.s * state.s;
}

double power_residual(const Vec& f_c, const Vec& v, const Vec& masses, double s) {
  require_dim(f_c.size() == v.size(), "power_residual: f_c and v differ in size");
  const int N = static_cast<int>(masses.size());
  require_dim(N > 0 && v.size() % N == 0, "power_residual: masses do not divide dof");
  const int d = static_cast<int>(v.size()) / N;
  double p = 0.0;
  for (int A = 0; A < N; ++A)
    p += masses(A) * f_c.segment(A * d, d).dot(v.segment(A * d, d));
  return p - s * s;
}

CovectorField CovectorField::affine(const Mat& L, const Vec& b) {
  CovectorField f;
  f.a = [L, b](const Vec& q) -> Vec { return b + L * q; };
  f.jacobian = [L](const Vec&) -> Mat { return L; };
  return f;
}

Vec cov_force(const CovectorField& field, double mu, double mudot, const Vec& q,
              const Vec& qdot, CovForm form) {
  const Vec a = field.a(q);
  require_dim(a.size() == q.size() && qdot.size() == q.size(),
              "cov_force: covector, q and qdot must have equal size");
  Vec f = -mudot * a;
  if (form == CovForm::variational) {
    const Mat da = field.jacobian(q);  // da(alpha, beta) = d_beta a_alpha
    f -= mu * (da - da.transpose()) * qdot;
  }
  return f;
}

}  // namespace dualvp

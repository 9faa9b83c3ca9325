#include "dualvp/dual_model.hpp"

#include "dualvp/dtp_map.hpp"

namespace dualvp {

namespace {

bool block_uniform(const Vec& c, int first, int count, double& value) {
  value = c(first);
  for (int i = first; i < first + count; ++i)
    if (c(i) != value) return false;
  return true;
}

std::vector<std::string> indexed(const std::string& stem, int n) {
  std::vector<std::string> out;
  for (int i = 1; i <= n; ++i) out.push_back(stem + std::to_string(i));
  return out;
}

}  // namespace

BaseState BaseState::constant(Vec value) {
  BaseState b;
  b.kind_ = Kind::constant;
  b.dim_ = static_cast<int>(value.size());
  b.value_ = std::move(value);
  return b;
}

BaseState BaseState::from_grid(TrajectoryGrid traj) {
  BaseState b;
  b.kind_ = Kind::grid;
  b.dim_ = traj.dim();
  b.grid_ = std::make_shared<const TrajectoryGrid>(std::move(traj));
  return b;
}

BaseState BaseState::from_function(int dim, std::function<Vec(double)> f) {
  BaseState b;
  b.kind_ = Kind::function;
  b.dim_ = dim;
  b.fn_ = std::move(f);
  return b;
}

Vec BaseState::at(double t) const {
  switch (kind_) {
    case Kind::constant:
      return value_;
    case Kind::grid:
      return grid_->at(t);
    case Kind::function:
      return fn_(t);
  }
  return value_;
}

HParams HParams::uniform(int dim, double c, BaseState base) {
  return {Vec::Constant(dim, c), std::move(base)};
}

void HParams::check(int primal_dim) const {
  require_dim(c.size() == primal_dim, "H coefficients do not match the primal dimension");
  require_dim(base.dim() == primal_dim, "base state does not match the primal dimension");
  for (int i = 0; i < c.size(); ++i)
    if (!(c(i) > 0.0)) throw ConfigError("H coefficients must be positive");
}

double HParams::value(const Vec& U, double t) const {
  const Vec d = U - base.at(t);
  return 0.5 * d.dot(c.cwiseProduct(d));
}

Vec DualModel::F(const Vec& U, double t) const {
  Vec f(slot_count()), g(algebraic_dim());
  eval(U.data(), t, f.data(), g.data());
  return f;
}

Vec DualModel::G(const Vec& U, double t) const {
  Vec f(slot_count()), g(algebraic_dim());
  eval(U.data(), t, f.data(), g.data());
  return g;
}

Vec DualModel::Y(const Vec& U) const {
  Vec y(slot_count());
  for (int k = 0; k < slot_count(); ++k) y(k) = U(slots_[k].state_index);
  return y;
}

Vec DualModel::initial_values() const {
  Vec y(slot_count());
  for (int k = 0; k < slot_count(); ++k) y(k) = slots_[k].initial_value;
  return y;
}

LorenzModel::LorenzModel(double A, double R, double B, const Vec& x0) : A_(A), R_(R), B_(B) {
  require_dim(x0.size() == 3, "Lorenz initial state is three-dimensional");
  names_ = {"x", "y", "z"};
  const char* duals[] = {"lambda", "mu", "gamma"};
  for (int i = 0; i < 3; ++i) slots_.push_back({i, true, x0(i), duals[i]});
}

std::optional<Vec> LorenzModel::closed_form_dtp(const ExtendedDual& e, const HParams& hp,
                                                double t) const {
  double c;
  if (!block_uniform(hp.c, 0, 3, c)) return std::nullopt;
  return dtp_lorenz(e, c, hp.base.at(t), A_, R_, B_);
}

GenParsModel::GenParsModel(const Mat& L, const Vec& b, bool slack, const Vec& x0, const Vec& v0)
    : L_(L), b_(b), slack_(slack), M_(static_cast<int>(b.size())) {
  require_dim(L.rows() == M_ && L.cols() == M_, "L must be M x M");
  require_dim(x0.size() == M_ && v0.size() == M_, "initial data must have M entries");
  if (3 * M_ + 1 > kMaxJetVars) throw UnsupportedError("generalized Pars dimension too large");
  names_ = indexed("x", M_);
  for (auto& s : indexed("v", M_)) names_.push_back(s);
  for (auto& s : indexed("Q", M_)) names_.push_back(s);
  if (slack_) names_.push_back("s");
  for (int i = 0; i < M_; ++i) slots_.push_back({i, true, x0(i), "rho" + std::to_string(i + 1)});
  for (int i = 0; i < M_; ++i)
    slots_.push_back({M_ + i, true, v0(i), "lambda" + std::to_string(i + 1)});
}

std::optional<Vec> GenParsModel::closed_form_dtp(const ExtendedDual& e, const HParams& hp,
                                                 double t) const {
  GenParsCoefficients c{};
  if (!block_uniform(hp.c, 0, M_, c.cx) || !block_uniform(hp.c, M_, M_, c.cv) ||
      !block_uniform(hp.c, 2 * M_, M_, c.cQ))
    return std::nullopt;
  c.cs = slack_ ? hp.c(3 * M_) : 1.0;
  return dtp_genpars(e, c, hp.base.at(t), L_, b_, slack_);
}

ParsForceModel::ParsForceModel(const SystemSpec& spec)
    : L_(spec.L), b_(spec.b), M_(spec.dims.dof()) {
  switch (spec.force_law) {
    case ForceLaw::gauss:
    case ForceLaw::dalembert:
      cross_ = false;
      nu_ = 0.0;
      break;
    case ForceLaw::vortical_damped:
      cross_ = true;
      nu_ = spec.param_or("nu", 0.0);
      break;
    default:
      throw UnsupportedError("ParsForceModel needs a gauss, dalembert or vortical_damped law");
  }
  names_ = indexed("x", M_);
  for (auto& s : indexed("v", M_)) names_.push_back(s);
  for (int i = 0; i < M_; ++i)
    slots_.push_back({i, true, spec.x0(i), "rho" + std::to_string(i + 1)});
  for (int i = 0; i < M_; ++i)
    slots_.push_back({M_ + i, true, spec.v0(i), "lambda" + std::to_string(i + 1)});
}

FirstOrderModel::FirstOrderModel(const SystemSpec& spec)
    : terms_(spec.poly), dim_(spec.dims.dof()) {
  names_ = indexed("x", dim_);
  for (int i = 0; i < dim_; ++i)
    slots_.push_back({i, true, spec.x0(i), "lambda" + std::to_string(i + 1)});
}

ParsReducedModel::ParsReducedModel(const Vec& x0, const Vec& v0) {
  require_dim(x0.size() == 3 && v0.size() == 3, "Pars initial data is three-dimensional");
  x30_ = x0(2);
  v30_ = v0(2);
  names_ = {"v1", "v2"};
  slots_.push_back({0, true, v0(0), "lambda1"});
  slots_.push_back({1, true, v0(1), "lambda2"});
}

ScaledModel::ScaledModel(std::shared_ptr<const DualModel> inner, double P)
    : inner_(std::move(inner)), P_(P) {
  slots_ = inner_->slots();
  names_ = inner_->primal_names();
}

void ScaledModel::eval(const double* U, double t, double* F, double* G) const {
  inner_->eval(U, t, F, G);
  for (int k = 0; k < slot_count(); ++k) F[k] *= P_;
}

void ScaledModel::eval(const Jet* U, double t, Jet* F, Jet* G) const {
  inner_->eval(U, t, F, G);
  for (int k = 0; k < slot_count(); ++k) F[k] = F[k] * P_;
}

std::shared_ptr<const DualModel> make_dual_model(const SystemSpec& spec) {
  validate(spec);
  switch (spec.kind) {
    case SystemKind::lorenz:
      return std::make_shared<LorenzModel>(spec.param("A"), spec.param("R"), spec.param("B"),
                                           spec.x0);
    case SystemKind::poly_ode:
      return std::make_shared<FirstOrderModel>(spec);
    case SystemKind::pars:
    case SystemKind::gen_pars:
      if (spec.force_law == ForceLaw::free_Q)
        return std::make_shared<GenParsModel>(spec.L, spec.b,
                                              spec.power_law == PowerLaw::nonneg_slack,
                                              spec.x0, spec.v0);
      if (spec.force_law == ForceLaw::hamiltonian_linear)
        throw UnsupportedError("no dual model for hamiltonian_linear");
      return std::make_shared<ParsForceModel>(spec);
  }
  throw ConfigError("unknown system");
}

}  // namespace dualvp

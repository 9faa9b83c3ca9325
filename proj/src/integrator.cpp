#include "dualvp/integrator.hpp"

#include <cmath>

namespace dualvp {

namespace {

std::vector<std::string> indexed(const std::string& stem, int n) {
  std::vector<std::string> out;
  for (int i = 1; i <= n; ++i) out.push_back(stem + std::to_string(i));
  return out;
}

}  // namespace

TrajectoryGrid integrate_ode(const OdeSystem& sys, const Vec& y0, const Grid& grid) {
  require_dim(y0.size() == sys.dim, "initial state has wrong size");
  TrajectoryGrid traj(grid, sys.names);
  auto& Y = traj.values();
  auto& dY = traj.derivatives();
  dY.resize(sys.dim, grid.n_nodes);
  const double h = grid.h();
  Vec y = y0, k1(sys.dim), k2(sys.dim), k3(sys.dim), k4(sys.dim);
  for (int i = 0; i < grid.n_nodes; ++i) {
    const double t = grid.t(i);
    if (!y.allFinite())
      throw DivergenceError("non-finite state during integration", grid.t(std::max(0, i - 1)));
    Y.col(i) = y;
    sys.rhs(t, y, k1);
    dY.col(i) = k1;
    if (i + 1 == grid.n_nodes) break;
    sys.rhs(t + 0.5 * h, y + 0.5 * h * k1, k2);
    sys.rhs(t + 0.5 * h, y + 0.5 * h * k2, k3);
    sys.rhs(t + h, y + h * k3, k4);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return traj;
}

PrimalLayout primal_layout(const SystemSpec& spec) {
  PrimalLayout l;
  l.n = spec.dims.dof();
  l.second_order = !spec.first_order();
  if (l.second_order) l.nq = spec.force_law == ForceLaw::hamiltonian_linear ? 1 : l.n;
  return l;
}

OdeSystem make_ode(const SystemSpec& spec) {
  validate(spec);
  OdeSystem sys;
  const int n = spec.dims.dof();
  if (spec.first_order()) {
    sys.dim = n;
    sys.names = spec.kind == SystemKind::lorenz ? std::vector<std::string>{"x", "y", "z"}
                                                : indexed("x", n);
    sys.rhs = [spec](double t, const Vec& y, Vec& dy) {
      PrimalState s;
      s.x = y;
      dy = eval_rhs(spec, s, t).xdot;
    };
    return sys;
  }
  if (spec.force_law == ForceLaw::free_Q)
    throw UnsupportedError("free_Q leaves Q undetermined; it has no forward integration");
  const bool carries_mu = spec.force_law == ForceLaw::hamiltonian_linear;
  sys.dim = 2 * n + (carries_mu ? 1 : 0);
  sys.names = indexed("x", n);
  for (auto& s : indexed("v", n)) sys.names.push_back(s);
  if (carries_mu) sys.names.push_back("mu");
  sys.rhs = [spec, n, carries_mu](double t, const Vec& y, Vec& dy) {
    PrimalState s;
    s.x = y.head(n);
    s.v = y.segment(n, n);
    if (carries_mu) s.Q = y.tail(1);
    const PrimalRates r = eval_rhs(spec, s, t);
    dy.resize(y.size());
    dy.head(n) = r.xdot;
    dy.segment(n, n) = r.vdot;
    if (carries_mu) dy.tail(1) = r.Qdot;
  };
  return sys;
}

Vec initial_ode_state(const SystemSpec& spec) {
  if (spec.first_order()) return spec.x0;
  const int n = spec.dims.dof();
  const bool carries_mu = spec.force_law == ForceLaw::hamiltonian_linear;
  Vec y(2 * n + (carries_mu ? 1 : 0));
  y.head(n) = spec.x0;
  y.segment(n, n) = spec.v0;
  if (carries_mu) y(2 * n) = spec.q0(0);
  return y;
}

TrajectoryGrid integrate_ivp(const SystemSpec& spec, double T, double h) {
  if (!(h > 0.0) || h > T / 10.0) throw ConfigError("integrate_ivp requires 0 < h <= T/10");
  const OdeSystem sys = make_ode(spec);
  const Grid grid = Grid::with_step(0.0, T, h);
  const TrajectoryGrid raw = integrate_ode(sys, initial_ode_state(spec), grid);
  if (spec.first_order()) return raw;

  const PrimalLayout lay = primal_layout(spec);
  const int n = lay.n;
  std::vector<std::string> names = indexed("x", n);
  for (auto& s : indexed("v", n)) names.push_back(s);
  for (auto& s : indexed("Q", lay.nq)) names.push_back(s);
  names.push_back("s");
  TrajectoryGrid out(grid, names);
  auto& Y = out.values();
  auto& dY = out.derivatives();
  dY = Eigen::MatrixXd::Zero(lay.total(), grid.n_nodes);
  const bool slack = spec.power_law == PowerLaw::nonneg_slack;
  for (int i = 0; i < grid.n_nodes; ++i) {
    Y.col(i).head(2 * n) = raw.values().col(i).head(2 * n);
    dY.col(i).head(2 * n) = raw.derivatives().col(i).head(2 * n);
    if (spec.force_law == ForceLaw::hamiltonian_linear) {
      Y(lay.q(), i) = raw.values()(2 * n, i);
      dY(lay.q(), i) = raw.derivatives()(2 * n, i);
      continue;
    }
    // v' = -Q with no applied force
    const Vec Q = -raw.derivatives().col(i).segment(n, n);
    Y.col(i).segment(lay.q(), n) = Q;
    if (slack) Y(lay.s(), i) = std::sqrt(std::max(0.0, 2.0 * Q.dot(Y.col(i).segment(n, n))));
  }
  return out;
}

InvariantReport monitor_invariants(const SystemSpec& spec, const TrajectoryGrid& traj) {
  InvariantReport rep;
  const PrimalLayout lay = primal_layout(spec);
  if (!lay.second_order) return rep;
  const int n = lay.n;
  const bool q_is_force = spec.force_law != ForceLaw::hamiltonian_linear;
  const bool slack = spec.power_law == PowerLaw::nonneg_slack;
  for (int i = 0; i < traj.n_nodes(); ++i) {
    const Vec y = traj.node(i);
    const Vec x = y.head(n), v = y.segment(n, n);
    rep.max_constraint_residual =
        std::max(rep.max_constraint_residual, std::abs(constraint_residual(spec, x, v)));
    rep.K.push_back(0.5 * v.squaredNorm());
    if (q_is_force) {
      const double qv = y.segment(lay.q(), n).dot(v);
      rep.max_power = std::max(rep.max_power, std::abs(qv));
      if (slack) {
        const double s = y(lay.s());
        rep.max_W_residual = std::max(rep.max_W_residual, std::abs(qv - 0.5 * s * s));
      }
    }
  }
  for (std::size_t i = 1; i < rep.K.size(); ++i)
    rep.max_K_increase = std::max(rep.max_K_increase, rep.K[i] - rep.K[i - 1]);
  for (double k : rep.K) rep.max_K_deviation = std::max(rep.max_K_deviation, std::abs(k - rep.K[0]));
  return rep;
}

}  // namespace dualvp

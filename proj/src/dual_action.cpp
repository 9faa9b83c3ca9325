#include "dualvp/dual_action.hpp"

#include <fstream>
#include <sstream>

namespace dualvp {

namespace {

/// Nonzero entries (column, coefficient) of row i of the difference operator.
template <class Fn>
void for_row(const ActionAssembly& a, int i, Fn&& fn) {
  const int n = a.nodes();
  const double h = a.grid.h();
  if (a.periodic) {
    fn((i + 1) % n, 0.5 / h);
    fn((i + n - 1) % n, -0.5 / h);
    return;
  }
  if (i == 0) {
    fn(0, -1.0 / h);
    fn(1, 1.0 / h);
  } else if (i == n - 1) {
    fn(n - 2, -1.0 / h);
    fn(n - 1, 1.0 / h);
  } else {
    fn(i - 1, -0.5 / h);
    fn(i + 1, 0.5 / h);
  }
}

}  // namespace

ActionAssembly ActionAssembly::make(std::shared_ptr<const DualModel> model, HParams hp,
                                    Grid grid) {
  ActionAssembly a;
  a.terminal = Vec::Zero(model->slot_count());
  a.initial_bc = Vec::Zero(model->slot_count());
  a.model = std::move(model);
  a.hp = std::move(hp);
  a.grid = grid;
  a.check();
  return a;
}

void ActionAssembly::check() const {
  if (!model) throw ConfigError("action assembly has no model");
  hp.check(model->primal_dim());
  require_dim(terminal.size() == slots(), "terminal values must have one entry per slot");
  require_dim(initial_bc.size() == slots(), "initial values must have one entry per slot");
  if (nodes() < 3) throw ConfigError("dual grid needs at least 3 nodes");
}

double ActionAssembly::weight(int i) const {
  const double h = grid.h();
  if (periodic) return h;
  return (i == 0 || i == nodes() - 1) ? 0.5 * h : h;
}

bool ActionAssembly::is_free_D(int node, int slot) const {
  if (periodic) return true;
  if (node == nodes() - 1) return false;
  if (node == 0) return model->slots()[slot].has_initial_condition;
  return true;
}

DualTrajectory ActionAssembly::zero_dual() const {
  DualTrajectory d{Mat::Zero(slots(), nodes()), Mat::Zero(algebraic(), nodes())};
  apply_bcs(d);
  return d;
}

void ActionAssembly::apply_bcs(DualTrajectory& d) const {
  if (periodic) return;
  d.D.col(nodes() - 1) = terminal;
  for (int k = 0; k < slots(); ++k)
    if (!model->slots()[k].has_initial_condition) d.D(k, 0) = initial_bc(k);
}

Mat dual_rates(const ActionAssembly& a, const Mat& D) {
  require_dim(D.cols() == a.nodes() && D.rows() == a.slots(), "dual trajectory has wrong shape");
  Mat R = Mat::Zero(D.rows(), D.cols());
  for (int i = 0; i < a.nodes(); ++i)
    for_row(a, i, [&](int j, double coef) { R.col(i) += coef * D.col(j); });
  return R;
}

ExtendedDual node_dual(const DualTrajectory& d, const Mat& rates, int i) {
  return {rates.col(i), d.D.col(i), d.M.col(i)};
}

double eval_LH(const DualModel& model, const HParams& hp, const Vec& U, const ExtendedDual& e,
               double t) {
  Vec F(model.slot_count()), G(model.algebraic_dim());
  model.eval(U.data(), t, F.data(), G.data());
  return -e.Ddot.dot(model.Y(U)) - e.D.dot(F) + e.M.dot(G) + hp.value(U, t);
}

Mat recover_nodes(const ActionAssembly& a, const DualTrajectory& d) {
  const Mat R = dual_rates(a, d.D);
  Mat U(a.model->primal_dim(), a.nodes());
  for (int i = 0; i < a.nodes(); ++i) {
    try {
      U.col(i) = dtp(*a.model, a.hp, node_dual(d, R, i), a.t(i), a.route);
    } catch (const SingularityError& e) {
      throw SingularityError("node " + std::to_string(i) + ": " + e.what());
    } catch (const ConvergenceError& e) {
      throw ConvergenceError("node " + std::to_string(i) + ": " + e.what(), e.last_residual());
    }
  }
  return U;
}

double assemble_action(const ActionAssembly& a, const DualTrajectory& d) {
  const Mat R = dual_rates(a, d.D);
  const Mat U = recover_nodes(a, d);
  double S = 0.0;
  for (int i = 0; i < a.nodes(); ++i)
    S += a.weight(i) * eval_LH(*a.model, a.hp, U.col(i), node_dual(d, R, i), a.t(i));
  if (!a.periodic) {
    for (int k = 0; k < a.slots(); ++k) {
      const auto& s = a.model->slots()[k];
      if (s.has_initial_condition) S -= d.D(k, 0) * s.initial_value;
    }
  }
  return S;
}

ElResidual el_residual(const ActionAssembly& a, const DualTrajectory& d) {
  const int K = a.slots(), A = a.algebraic(), n = a.nodes();
  const Mat U = recover_nodes(a, d);
  Mat Y(K, n), F(K, n), G(A, n);
  for (int i = 0; i < n; ++i) {
    Y.col(i) = a.model->Y(U.col(i));
    a.model->eval(U.col(i).data(), a.t(i), F.col(i).data(), G.col(i).data());
  }

  ElResidual r;
  r.D_raw = Mat::Zero(K, n);
  for (int i = 0; i < n; ++i) {
    const double w = a.weight(i);
    for_row(a, i, [&](int j, double coef) { r.D_raw.col(j) -= w * coef * Y.col(i); });
    r.D_raw.col(i) -= w * F.col(i);
  }
  r.M_raw = G;
  for (int i = 0; i < n; ++i) r.M_raw.col(i) *= a.weight(i);

  r.ic_residual = Vec::Zero(K);
  if (!a.periodic) {
    for (int k = 0; k < K; ++k) {
      const auto& s = a.model->slots()[k];
      if (!s.has_initial_condition) continue;
      r.D_raw(k, 0) -= s.initial_value;
      r.ic_residual(k) = Y(k, 0) - s.initial_value;
    }
  }

  r.D_scaled = r.D_raw;
  r.M_scaled = r.M_raw;
  for (int i = 0; i < n; ++i) {
    r.D_scaled.col(i) /= a.weight(i);
    r.M_scaled.col(i) /= a.weight(i);
  }
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < K; ++k) {
      if (!a.is_free_D(i, k)) continue;
      r.max_raw = std::max(r.max_raw, std::abs(r.D_raw(k, i)));
      r.max_scaled = std::max(r.max_scaled, std::abs(r.D_scaled(k, i)));
    }
    for (int m = 0; m < A; ++m) {
      r.max_raw = std::max(r.max_raw, std::abs(r.M_raw(m, i)));
      r.max_scaled = std::max(r.max_scaled, std::abs(r.M_scaled(m, i)));
    }
  }
  return r;
}

int free_count(const ActionAssembly& a) {
  int c = 0;
  for (int i = 0; i < a.nodes(); ++i) {
    for (int k = 0; k < a.slots(); ++k) c += a.is_free_D(i, k);
    c += a.algebraic();
  }
  return c;
}

std::vector<int> free_nodes(const ActionAssembly& a) {
  std::vector<int> out;
  for (int i = 0; i < a.nodes(); ++i) {
    for (int k = 0; k < a.slots(); ++k)
      if (a.is_free_D(i, k)) out.push_back(i);
    for (int m = 0; m < a.algebraic(); ++m) out.push_back(i);
  }
  return out;
}

Vec pack_free(const ActionAssembly& a, const DualTrajectory& d) {
  Vec z(free_count(a));
  int p = 0;
  for (int i = 0; i < a.nodes(); ++i) {
    for (int k = 0; k < a.slots(); ++k)
      if (a.is_free_D(i, k)) z(p++) = d.D(k, i);
    for (int m = 0; m < a.algebraic(); ++m) z(p++) = d.M(m, i);
  }
  return z;
}

void unpack_free(const ActionAssembly& a, const Vec& z, DualTrajectory& d) {
  require_dim(z.size() == free_count(a), "unpack_free: wrong vector size");
  int p = 0;
  for (int i = 0; i < a.nodes(); ++i) {
    for (int k = 0; k < a.slots(); ++k)
      if (a.is_free_D(i, k)) d.D(k, i) = z(p++);
    for (int m = 0; m < a.algebraic(); ++m) d.M(m, i) = z(p++);
  }
}

Vec pack_residual(const ActionAssembly& a, const ElResidual& r) {
  Vec g(free_count(a));
  int p = 0;
  for (int i = 0; i < a.nodes(); ++i) {
    for (int k = 0; k < a.slots(); ++k)
      if (a.is_free_D(i, k)) g(p++) = r.D_raw(k, i);
    for (int m = 0; m < a.algebraic(); ++m) g(p++) = r.M_raw(m, i);
  }
  return g;
}

double lorenz_dual_action_formula(const ActionAssembly& a, const DualTrajectory& d) {
  const auto* lz = dynamic_cast<const LorenzModel*>(a.model.get());
  if (!lz) throw UnsupportedError("the dual Lorenz action needs the Lorenz model");
  if (a.periodic) throw UnsupportedError("the dual Lorenz action is stated for an initial-value problem");
  const double c = a.hp.c(0);
  if (a.hp.c(1) != c || a.hp.c(2) != c)
    throw UnsupportedError("the dual Lorenz action uses a single c");
  const Mat R = dual_rates(a, d.D);
  double S = 0.0;
  for (int i = 0; i < a.nodes(); ++i) {
    const ExtendedDual e = node_dual(d, R, i);
    const Vec ub = a.hp.base.at(a.t(i));
    const Vec p = lorenz_p(e, ub, lz->A(), lz->R(), lz->B());
    const double mu = e.D(1), gam = e.D(2);
    const double L = -0.5 * p.dot(lorenz_B(c, mu, gam) * p) - ub.dot(p) -
                     mu * ub(0) * ub(2) + gam * ub(0) * ub(1);
    S += a.weight(i) * L;
  }
  const Vec y0 = lz->initial_values();
  return S - d.D.col(0).dot(y0);
}

double pars_reduced_action_formula(const ActionAssembly& a, const DualTrajectory& d,
                                   const Vec& x0, const Vec& v0) {
  require_dim(d.D.rows() == 2, "reduced Pars action has two dual fields");
  const Mat R = dual_rates(a, d.D);
  double S = 0.0;
  for (int i = 0; i < a.nodes(); ++i) {
    const double t = a.t(i);
    const double z = v0(2) * t + x0(2);
    const double k = v0(2) / (1.0 + z * z);
    const double v1 = R(0, i) - d.D(0, i) * z * k + d.D(1, i) * k;
    const double v2 = R(1, i);
    S += a.weight(i) * (-0.5 * (v1 * v1 + v2 * v2));
  }
  return S - d.D(0, 0) * v0(0) - d.D(1, 0) * v0(1);
}

void write_action_csv(const std::string& path, const ActionAssembly& a,
                      const DualTrajectory& d) {
  const Mat U = recover_nodes(a, d);
  const ElResidual r = el_residual(a, d);
  std::vector<std::string> header{"t"};
  for (const auto& s : a.model->slots()) header.push_back(s.name);
  for (int m = 0; m < a.algebraic(); ++m) header.push_back("M" + std::to_string(m + 1));
  for (const auto& nm : a.model->primal_names()) header.push_back(nm + "_H");
  for (const auto& s : a.model->slots()) header.push_back("res_" + s.name);
  for (int m = 0; m < a.algebraic(); ++m) header.push_back("res_M" + std::to_string(m + 1));
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < a.nodes(); ++i) {
    std::vector<double> row{a.t(i)};
    for (int k = 0; k < a.slots(); ++k) row.push_back(d.D(k, i));
    for (int m = 0; m < a.algebraic(); ++m) row.push_back(d.M(m, i));
    for (int j = 0; j < U.rows(); ++j) row.push_back(U(j, i));
    for (int k = 0; k < a.slots(); ++k) row.push_back(r.D_scaled(k, i));
    for (int m = 0; m < a.algebraic(); ++m) row.push_back(r.M_scaled(m, i));
    rows.push_back(std::move(row));
  }
  write_series_csv(path, header, rows);
}

}  // namespace dualvp

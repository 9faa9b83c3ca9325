#include "dualvp/dual_solver.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <future>
#include <limits>

namespace dualvp {

namespace {

/// Node colouring such that nodes of equal colour are more than 2*reach apart.
std::vector<int> colour_nodes(int n, bool periodic, int reach, int& n_colours) {
  const int period = 2 * reach + 1;
  std::vector<int> colour(n);
  if (!periodic || n % period == 0) {
    for (int i = 0; i < n; ++i) colour[i] = i % period;
    n_colours = std::min(n, period);
    return colour;
  }
  // wrap-around: the tail beyond the last full block gets its own colours
  const int full = (n / period) * period;
  for (int i = 0; i < full; ++i) colour[i] = i % period;
  for (int i = full; i < n; ++i) colour[i] = period + (i - full);
  n_colours = period + (n - full);
  return colour;
}

int ring_distance(int i, int j, int n, bool periodic) {
  const int d = std::abs(i - j);
  return periodic ? std::min(d, n - d) : d;
}

struct Evaluation {
  bool ok = false;
  Vec g;
  double scaled = 0.0;
};

Evaluation evaluate(const ActionAssembly& a, const Vec& z, DualTrajectory& d) {
  Evaluation ev;
  unpack_free(a, z, d);
  try {
    const ElResidual r = el_residual(a, d);
    ev.g = pack_residual(a, r);
    ev.scaled = r.max_scaled;
    ev.ok = ev.g.allFinite();
  } catch (const SingularityError&) {
  } catch (const ConvergenceError&) {
  }
  return ev;
}

SolveResult newton(const ActionAssembly& a, const SolveConfig& cfg, DualTrajectory d) {
  a.apply_bcs(d);
  SolveResult res;
  Vec z = pack_free(a, d);
  // the starting point must be admissible; its failure is reported as is
  ElResidual r0 = el_residual(a, d);
  Vec g = pack_residual(a, r0);
  double scaled = r0.max_scaled;
  const std::vector<int> node_of = free_nodes(a);

  DualTrajectory work = d;
  PackedResidual resid = [&](const Vec& zz) {
    const Evaluation ev = evaluate(a, zz, work);
    if (!ev.ok) return Vec(Vec::Constant(zz.size(), std::numeric_limits<double>::quiet_NaN()));
    return ev.g;
  };

  res.dual = d;
  res.residual_norm = scaled;
  for (int it = 0; it < cfg.max_iter; ++it) {
    if (scaled <= cfg.tol_newton) {
      res.converged = true;
      break;
    }
    Eigen::SparseMatrix<double> J =
        fd_jacobian(resid, z, g, node_of, node_of, a.nodes(), a.periodic, 2, cfg.fd_step);
    if (cfg.regularization > 0.0) {
      for (int i = 0; i < J.rows(); ++i) J.coeffRef(i, i) += cfg.regularization;
    }
    J.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(J);
    if (lu.info() != Eigen::Success) break;
    const Vec step = -lu.solve(g);
    if (!step.allFinite()) break;

    const double merit0 = g.norm();
    double alpha = 1.0;
    bool accepted = false;
    Evaluation trial;
    for (int k = 0; k <= cfg.max_halvings; ++k) {
      trial = evaluate(a, z + alpha * step, work);
      if (trial.ok && trial.g.norm() < merit0) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    res.log.push_back({it, scaled, step.lpNorm<Eigen::Infinity>(), accepted ? alpha : 0.0});
    res.iterations = it + 1;
    if (!accepted) break;
    z += alpha * step;
    g = trial.g;
    scaled = trial.scaled;
    if (scaled < res.residual_norm) {
      unpack_free(a, z, res.dual);
      res.residual_norm = scaled;
    }
  }
  if (scaled <= cfg.tol_newton) {
    res.converged = true;
    unpack_free(a, z, res.dual);
    res.residual_norm = scaled;
  }
  return res;
}

}  // namespace

Eigen::SparseMatrix<double> fd_jacobian(const PackedResidual& residual, const Vec& z,
                                        const Vec& r0, const std::vector<int>& col_node,
                                        const std::vector<int>& row_node, int n_nodes,
                                        bool periodic, int reach, double step) {
  const int n = static_cast<int>(z.size());
  const int nrows = static_cast<int>(r0.size());
  require_dim(static_cast<int>(col_node.size()) == n &&
                  static_cast<int>(row_node.size()) == nrows,
              "fd_jacobian: node maps do not match the packed vectors");
  int n_colours = 0;
  const std::vector<int> colour = colour_nodes(n_nodes, periodic, reach, n_colours);

  std::vector<std::vector<int>> by_node(n_nodes), rows_at(n_nodes);
  for (int p = 0; p < n; ++p) by_node[col_node[p]].push_back(p);
  for (int q = 0; q < nrows; ++q) rows_at[row_node[q]].push_back(q);
  int max_slot = 0;
  for (const auto& v : by_node) max_slot = std::max<int>(max_slot, static_cast<int>(v.size()));

  std::vector<Eigen::Triplet<double>> trip;
  for (int c = 0; c < n_colours; ++c) {
    for (int q = 0; q < max_slot; ++q) {
      Vec zp = z;
      std::vector<int> cols;
      for (int i = 0; i < n_nodes; ++i) {
        if (colour[i] != c || q >= static_cast<int>(by_node[i].size())) continue;
        const int p = by_node[i][q];
        const double dz = step * std::max(1.0, std::abs(z(p)));
        zp(p) += dz;
        cols.push_back(p);
      }
      if (cols.empty()) continue;
      const Vec r1 = residual(zp);
      for (int p : cols) {
        const double dz = zp(p) - z(p);
        const int node = col_node[p];
        for (int off = -reach; off <= reach; ++off) {
          int m = node + off;
          if (periodic) m = (m + n_nodes) % n_nodes;
          if (m < 0 || m >= n_nodes) continue;
          if (ring_distance(m, node, n_nodes, periodic) > reach) continue;
          for (int row : rows_at[m]) {
            const double v = (r1(row) - r0(row)) / dz;
            if (v != 0.0) trip.emplace_back(row, p, v);
          }
        }
      }
    }
  }
  Eigen::SparseMatrix<double> J(nrows, n);
  J.setFromTriplets(trip.begin(), trip.end());
  return J;
}

SolveResult solve_dual_bvp(const ActionAssembly& a, const SolveConfig& cfg,
                           const DualTrajectory* guess) {
  if (!(cfg.tol_newton > 0.0) || cfg.regularization < 0.0 || cfg.max_iter < 1)
    throw ConfigError("invalid solver configuration");
  if (cfg.initial_guess == InitialGuess::supplied && !guess)
    throw ConfigError("initial_guess = supplied needs a dual trajectory");
  DualTrajectory start = (cfg.initial_guess == InitialGuess::supplied) ? *guess : a.zero_dual();

  const int slabs = std::max(1, cfg.continuation_slabs);
  if (slabs == 1 || a.periodic) return newton(a, cfg, start);

  // growing horizons [t0, t0 + s (T - t0) / slabs], each warm started from the last
  const int intervals = a.grid.n_nodes - 1;
  SolveResult last;
  int done_nodes = 0;
  for (int s = 1; s <= slabs; ++s) {
    const int iv = (s == slabs) ? intervals : std::max(2, intervals * s / slabs);
    ActionAssembly sub = a;
    sub.grid = Grid(a.grid.t0, a.grid.t(iv), iv + 1);
    DualTrajectory g = sub.zero_dual();
    if (done_nodes > 0) {
      const int keep = std::min(done_nodes, sub.nodes()) - 1;
      g.D.leftCols(keep) = last.dual.D.leftCols(keep);
      g.M.leftCols(keep) = last.dual.M.leftCols(keep);
    } else if (cfg.initial_guess == InitialGuess::supplied) {
      g.D = start.D.leftCols(sub.nodes());
      g.M = start.M.leftCols(sub.nodes());
    }
    last = newton(sub, cfg, g);
    done_nodes = sub.nodes();
  }
  return last;
}

TrajectoryGrid recover_primal(const ActionAssembly& a, const DualTrajectory& d) {
  const Mat U = recover_nodes(a, d);
  TrajectoryGrid out(a.grid, a.model->primal_names());
  for (int i = 0; i < a.grid.n_nodes; ++i) out.values().col(i) = U.col(i % a.nodes());
  return out;
}

GaugeReport gauge_compare(const ActionAssembly& a1, const ActionAssembly& a2,
                          const SolveConfig& cfg, double gauge_tol) {
  if (a1.grid.n_nodes != a2.grid.n_nodes || a1.grid.t0 != a2.grid.t0 || a1.grid.T != a2.grid.T)
    throw ConfigError("gauge_compare needs both problems on the same grid");
  if (a1.model->primal_dim() != a2.model->primal_dim())
    throw ConfigError("gauge_compare needs the same primal system");
  GaugeReport rep;
  rep.tol = gauge_tol;
  auto f1 = std::async(std::launch::async, [&] { return solve_dual_bvp(a1, cfg); });
  rep.second = solve_dual_bvp(a2, cfg);
  rep.first = f1.get();
  rep.conclusive = rep.first.converged && rep.second.converged;
  const Mat U1 = recover_nodes(a1, rep.first.dual);
  const Mat U2 = recover_nodes(a2, rep.second.dual);
  rep.distance = (U1 - U2).cwiseAbs().maxCoeff();
  rep.pass = rep.conclusive && rep.distance <= gauge_tol;
  return rep;
}

}  // namespace dualvp

#include "dualvp/periodic.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>

namespace dualvp {

OdeSystem rescale_system(const OdeSystem& sys) {
  OdeSystem out;
  out.dim = sys.dim + 1;
  out.names = sys.names;
  out.names.push_back("P");
  const auto inner = sys.rhs;
  const int n = sys.dim;
  out.rhs = [inner, n](double t, const Vec& y, Vec& dy) {
    Vec f(n);
    inner(t, y.head(n), f);
    dy.resize(n + 1);
    dy.head(n) = y(n) * f;
    dy(n) = 0.0;
  };
  return out;
}

OdeSystem rescale_system(const SystemSpec& spec) { return rescale_system(make_ode(spec)); }

std::shared_ptr<const DualModel> rescale_model(std::shared_ptr<const DualModel> model, double P) {
  if (!model->autonomous())
    throw UnsupportedError("periodic search needs an autonomous system; " + model->name() +
                           " depends on t explicitly");
  if (!(P > 0.0)) throw ConfigError("period scale P must be positive");
  return std::make_shared<ScaledModel>(std::move(model), P);
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

ActionAssembly loop_assembly(const PeriodicProblem& pp, double P) {
  ActionAssembly a = ActionAssembly::make(rescale_model(pp.model, P), pp.hp,
                                          Grid(0.0, kTwoPi, pp.n_nodes + 1));
  a.periodic = true;
  return a;
}

double phase_value(const ActionAssembly& a, const DualTrajectory& d, int comp) {
  const Mat R = dual_rates(a, d.D);
  return dtp(*a.model, a.hp, node_dual(d, R, 0), 0.0, a.route)(comp);
}

}  // namespace

PeriodicResult find_periodic_orbit(const PeriodicProblem& pp, const PeriodicOptions& opt) {
  if (!pp.model) throw ConfigError("periodic problem has no model");
  if (pp.n_nodes < 8) throw ConfigError("periodic search needs at least 8 nodes");
  if (pp.phase_component < 0 || pp.phase_component >= pp.model->primal_dim())
    throw ConfigError("phase component out of range");
  if (!(pp.P_guess > 0.0)) throw ConfigError("period guess must be positive");
  pp.hp.check(pp.model->primal_dim());

  ActionAssembly a0 = loop_assembly(pp, pp.P_guess);
  const double h = a0.grid.h();
  const double anchor = pp.hp.base.at(0.0)(pp.phase_component);
  const int nf = free_count(a0);
  const std::vector<int> col_node = free_nodes(a0);
  const int extra = opt.anchor_phase ? 1 : 0;
  std::vector<int> row_node = col_node;
  if (extra) row_node.push_back(0);

  DualTrajectory d = a0.zero_dual();

  // r(z, P) = [raw EL residual, h (U^H_j(0) - anchor) if anchored]
  auto residual = [&](const Vec& z, double P, double* scaled_max, double* phase) {
    ActionAssembly a = loop_assembly(pp, P);
    DualTrajectory dd = d;
    unpack_free(a, z, dd);
    const ElResidual el = el_residual(a, dd);
    Vec r(nf + extra);
    r.head(nf) = pack_residual(a, el);
    const double ph = phase_value(a, dd, pp.phase_component) - anchor;
    if (extra) r(nf) = h * ph;
    if (scaled_max) *scaled_max = el.max_scaled;
    if (phase) *phase = std::abs(ph);
    return r;
  };

  Vec z = pack_free(a0, d);
  double P = pp.P_guess;
  PeriodicResult res;
  double scaled = 0.0, ph = 0.0;
  Vec r = residual(z, P, &scaled, &ph);
  double lambda = opt.lambda0;

  for (int it = 0; it < opt.max_iter; ++it) {
    res.iterations = it;
    if (scaled <= opt.tol && (!extra || ph <= opt.tol)) {
      res.converged = true;
      break;
    }
    const PackedResidual rz = [&](const Vec& zz) { return residual(zz, P, nullptr, nullptr); };
    Eigen::SparseMatrix<double> Jz =
        fd_jacobian(rz, z, r, col_node, row_node, a0.nodes(), true, 2, opt.fd_step);
    const double dP = opt.fd_step * std::max(1.0, std::abs(P));
    const Vec jp = (residual(z, P + dP, nullptr, nullptr) - r) / dP;

    // normal equations of [Jz jp]
    Eigen::SparseMatrix<double> Jt = Jz.transpose();
    Eigen::SparseMatrix<double> N(nf + 1, nf + 1);
    {
      Eigen::SparseMatrix<double> JtJ = Jt * Jz;
      const Vec Jtjp = Jt * jp;
      std::vector<Eigen::Triplet<double>> trips;
      trips.reserve(JtJ.nonZeros() + 2 * (nf + 1));
      for (int k = 0; k < JtJ.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator itr(JtJ, k); itr; ++itr)
          trips.emplace_back(itr.row(), itr.col(), itr.value());
      for (int i = 0; i < nf; ++i) {
        if (Jtjp(i) == 0.0) continue;
        trips.emplace_back(i, nf, Jtjp(i));
        trips.emplace_back(nf, i, Jtjp(i));
      }
      trips.emplace_back(nf, nf, jp.squaredNorm());
      N.setFromTriplets(trips.begin(), trips.end());
    }
    Vec grad(nf + 1);
    grad.head(nf) = Jt * r;
    grad(nf) = jp.dot(r);
    double diag_max = 0.0;
    for (int i = 0; i <= nf; ++i) diag_max = std::max(diag_max, N.coeff(i, i));
    diag_max = std::max(diag_max, 1e-300);

    bool accepted = false;
    for (int attempt = 0; attempt < 30 && !accepted; ++attempt) {
      Eigen::SparseMatrix<double> A = N;
      for (int i = 0; i <= nf; ++i) A.coeffRef(i, i) += lambda * diag_max;
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
      if (ldlt.info() != Eigen::Success) {
        lambda *= 10.0;
        continue;
      }
      const Vec step = -ldlt.solve(grad);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const Vec z_try = z + step.head(nf);
      const double P_try = P + step(nf);
      if (!(P_try > 0.0)) {
        lambda *= 10.0;
        continue;
      }
      double s_try = 0.0, ph_try = 0.0;
      Vec r_try;
      try {
        r_try = residual(z_try, P_try, &s_try, &ph_try);
      } catch (const SingularityError&) {
        lambda *= 10.0;
        continue;
      } catch (const ConvergenceError&) {
        lambda *= 10.0;
        continue;
      }
      if (r_try.allFinite() && r_try.norm() < r.norm()) {
        z = z_try;
        P = P_try;
        r = r_try;
        scaled = s_try;
        ph = ph_try;
        lambda = std::max(lambda / 3.0, 1e-14);
        accepted = true;
      } else {
        lambda *= 4.0;
      }
    }
    if (!accepted) {
      res.iterations = it + 1;
      res.message = "Levenberg-Marquardt step rejected at every damping level";
      break;
    }
    res.iterations = it + 1;
  }
  if (!res.converged && scaled <= opt.tol && (!extra || ph <= opt.tol)) res.converged = true;
  if (!res.converged && res.message.empty())
    res.message = "no critical point within " + std::to_string(opt.max_iter) + " iterations";

  ActionAssembly a = loop_assembly(pp, P);
  unpack_free(a, z, d);
  res.dual = d;
  res.P = P;
  res.residual = scaled;
  res.phase_residual = ph;

  const Mat U = recover_nodes(a, d);
  const int n = a.nodes(), dim = a.model->primal_dim();
  res.orbit = TrajectoryGrid(a.grid, a.model->primal_names());
  res.orbit.derivatives() = Mat::Zero(dim, n + 1);
  Vec total = Vec::Zero(a.model->slot_count());
  double umax = 0.0;
  for (int i = 0; i <= n; ++i) {
    const Vec u = U.col(i % n);
    res.orbit.values().col(i) = u;
    Vec F = Vec::Zero(a.model->slot_count());
    Vec G = Vec::Zero(a.model->algebraic_dim());
    a.model->eval(u.data(), a.t(i % n), F.data(), G.data());
    for (int k = 0; k < a.model->slot_count(); ++k)
      res.orbit.derivatives()(a.model->slots()[k].state_index, i) = F(k);
    if (i < n) {
      total += a.weight(i) * F;
      res.max_speed = std::max(res.max_speed, F.lpNorm<Eigen::Infinity>());
      umax = std::max(umax, u.lpNorm<Eigen::Infinity>());
    }
  }
  res.closure = total.lpNorm<Eigen::Infinity>();
  res.collapsed = res.max_speed <= 1e-8 * std::max(1.0, umax);
  if (res.collapsed) res.message = "orbit collapsed to an equilibrium";

  // one loop of the rescaled flow from the recovered start
  if (dim == a.model->slot_count()) {
    OdeSystem ode;
    ode.dim = dim;
    ode.names = a.model->primal_names();
    const auto model = a.model;
    ode.rhs = [model](double t, const Vec& y, Vec& dy) {
      dy = model->F(y, t);
    };
    try {
      const TrajectoryGrid loop = integrate_ode(ode, U.col(0), Grid(0.0, kTwoPi, 4 * n + 1));
      res.shooting_gap =
          (loop.values().col(loop.n_nodes() - 1) - U.col(0)).lpNorm<Eigen::Infinity>();
    } catch (const DivergenceError&) {
      res.shooting_gap = std::numeric_limits<double>::infinity();
    }
  }
  return res;
}

std::vector<PeriodicResult> sweep_periodic(const std::vector<PeriodicProblem>& problems,
                                           const PeriodicOptions& opt, int threads) {
  threads = std::max(1, threads);
  std::vector<PeriodicResult> out(problems.size());
  for (std::size_t start = 0; start < problems.size(); start += threads) {
    std::vector<std::future<PeriodicResult>> jobs;
    const std::size_t stop = std::min(problems.size(), start + threads);
    for (std::size_t i = start; i < stop; ++i)
      jobs.push_back(std::async(std::launch::async,
                                [&, i] { return find_periodic_orbit(problems[i], opt); }));
    for (std::size_t i = start; i < stop; ++i) out[i] = jobs[i - start].get();
  }
  return out;
}

ShootingResult shooting_periodic(const OdeSystem& sys, const Vec& x0, double P,
                                 int phase_component, int steps) {
  const int n = sys.dim;
  require_dim(x0.size() == n, "shooting_periodic: initial point has wrong size");
  if (phase_component < 0 || phase_component >= n) throw ConfigError("phase component out of range");
  const OdeSystem aug = rescale_system(sys);
  const Grid grid(0.0, kTwoPi, steps + 1);

  // unknowns: x0 without the phase component, then P
  auto unpack = [&](const Vec& z, Vec& x, double& p) {
    x = x0;
    int j = 0;
    for (int i = 0; i < n; ++i)
      if (i != phase_component) x(i) = z(j++);
    p = z(n - 1);
  };
  auto gap = [&](const Vec& z) {
    Vec x;
    double p;
    unpack(z, x, p);
    Vec y(n + 1);
    y << x, p;
    const TrajectoryGrid tr = integrate_ode(aug, y, grid);
    return Vec(tr.values().col(grid.n_nodes - 1).head(n) - x);
  };

  Vec z(n);
  {
    int j = 0;
    for (int i = 0; i < n; ++i)
      if (i != phase_component) z(j++) = x0(i);
    z(n - 1) = P;
  }
  ShootingResult res;
  Vec r = gap(z);
  for (int it = 0; it < 50; ++it) {
    if (r.lpNorm<Eigen::Infinity>() <= 1e-12 * std::max(1.0, z.lpNorm<Eigen::Infinity>())) break;
    Mat J(n, n);
    for (int j = 0; j < n; ++j) {
      Vec zp = z;
      const double dz = 1e-7 * std::max(1.0, std::abs(z(j)));
      zp(j) += dz;
      J.col(j) = (gap(zp) - r) / dz;
    }
    const Vec step = J.colPivHouseholderQr().solve(-r);
    double alpha = 1.0;
    bool ok = false;
    for (int k = 0; k < 20; ++k, alpha *= 0.5) {
      const Vec zt = z + alpha * step;
      if (!(zt(n - 1) > 0.0)) continue;
      const Vec rt = gap(zt);
      if (rt.allFinite() && rt.norm() < r.norm()) {
        z = zt;
        r = rt;
        ok = true;
        break;
      }
    }
    if (!ok) break;
  }
  unpack(z, res.x0, res.P);
  res.residual = r.lpNorm<Eigen::Infinity>();
  res.converged = res.residual <= 1e-9 * std::max(1.0, res.x0.lpNorm<Eigen::Infinity>());
  return res;
}

double orbit_distance_mod_phase(const TrajectoryGrid& a, const TrajectoryGrid& b) {
  require_dim(a.n_nodes() == b.n_nodes() && a.dim() == b.dim(),
              "orbits must share the node count and dimension");
  const int n = a.n_nodes() - 1;  // last node repeats the first
  double best = std::numeric_limits<double>::infinity();
  for (int shift = 0; shift < n; ++shift) {
    double d = 0.0;
    for (int i = 0; i < n && d < best; ++i)
      d = std::max(d, (a.values().col(i) - b.values().col((i + shift) % n)).lpNorm<Eigen::Infinity>());
    best = std::min(best, d);
  }
  return best;
}

}  // namespace dualvp

#include "dualvp/constraint_reduction.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <limits>
#include <cmath>
#include <fstream>

namespace dualvp {

Vec ConstrainedSystem::g(const Vec& x, const Vec& v, double t) const {
  Vec out(n_constraints());
  g(x.data(), v.data(), t, out.data());
  return out;
}

void ConstrainedSystem::jacobians(const Vec& x, const Vec& v, double t, Mat& gx, Mat& gv,
                                  Vec& gt) const {
  const int n = dof(), m = n_constraints();
  const int nv = 2 * n + 1;
  if (nv > kMaxJetVars) throw UnsupportedError("constrained system too large for differentiation");
  std::vector<Jet> xj(n), vj(n), out(m);
  for (int i = 0; i < n; ++i) {
    xj[i] = Jet::variable(x(i), nv, i);
    vj[i] = Jet::variable(v(i), nv, n + i);
  }
  const Jet tj = Jet::variable(t, nv, 2 * n);
  g(xj.data(), vj.data(), tj, out.data());
  gx.resize(m, n);
  gv.resize(m, n);
  gt.resize(m);
  for (int a = 0; a < m; ++a) {
    gx.row(a) = out[a].g.head(n).transpose();
    gv.row(a) = out[a].g.segment(n, n).transpose();
    gt(a) = out[a].g(2 * n);
  }
}

Vec SpeedConstraint::applied_force(const Vec&, const Vec& v, double) const {
  Vec f(3);
  f << -omega_ * v(1), omega_ * v(0), 0.0;
  return f;
}

namespace {

Mat select_cols(const Mat& A, const std::vector<int>& idx) {
  Mat out(A.rows(), idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(j) = A.col(idx[j]);
  return out;
}

Vec assemble_v(const VelocitySplit& s, const Vec& v_r, const Vec& v_s) {
  Vec v(s.indices_r.size() + s.indices_s.size());
  for (std::size_t j = 0; j < s.indices_r.size(); ++j) v(s.indices_r[j]) = v_r(j);
  for (std::size_t j = 0; j < s.indices_s.size(); ++j) v(s.indices_s[j]) = v_s(j);
  return v;
}

Vec pick(const Vec& v, const std::vector<int>& idx) {
  Vec out(idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) out(j) = v(idx[j]);
  return out;
}

}  // namespace

VelocitySplit split_velocities(const ConstrainedSystem& sys, const Vec& x, const Vec& v, double t,
                               double eps_rank, const std::vector<int>& prefer) {
  const int n = sys.dof(), m = sys.n_constraints();
  require_dim(x.size() == n && v.size() == n, "split_velocities: state has wrong size");
  VelocitySplit s;
  s.center_x = x;
  s.center_v = v;
  s.center_t = t;
  if (m == 0) {
    for (int i = 0; i < n; ++i) s.indices_r.push_back(i);
    s.sigma_min = std::numeric_limits<double>::infinity();
    return s;
  }
  Mat gx, gv;
  Vec gt;
  sys.jacobians(x, v, t, gx, gv, gt);
  Eigen::JacobiSVD<Mat> svd(gv);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() ? sv(0) : 0.0;
  if (!(smax > eps_rank)) throw SingularityError("degenerate constraint: dg/dv vanishes");
  int K = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > eps_rank * std::max(1.0, smax)) ++K;
  s.K = K;

  if (static_cast<int>(prefer.size()) == K) {
    VelocitySplit p = s;
    std::vector<bool> eliminated(n, false);
    for (int i : prefer) {
      if (i < 0 || i >= n || eliminated[i]) throw ConfigError("invalid preferred elimination index");
      eliminated[i] = true;
    }
    p.indices_s = prefer;
    std::sort(p.indices_s.begin(), p.indices_s.end());
    for (int i = 0; i < n; ++i)
      if (!eliminated[i]) p.indices_r.push_back(i);
    p.sigma_min = split_sigma(sys, p, x, v, t);
    if (p.sigma_min > eps_rank * std::max(1.0, smax)) return p;
  }

  Eigen::ColPivHouseholderQR<Mat> qr(gv);
  const auto& perm = qr.colsPermutation().indices();
  std::vector<bool> eliminated(n, false);
  for (int j = 0; j < K; ++j) {
    s.indices_s.push_back(perm(j));
    eliminated[perm(j)] = true;
  }
  std::sort(s.indices_s.begin(), s.indices_s.end());
  for (int i = 0; i < n; ++i)
    if (!eliminated[i]) s.indices_r.push_back(i);
  s.sigma_min = split_sigma(sys, s, x, v, t);
  return s;
}

double split_sigma(const ConstrainedSystem& sys, const VelocitySplit& split, const Vec& x,
                   const Vec& v, double t) {
  if (split.K == 0) return std::numeric_limits<double>::infinity();
  Mat gx, gv;
  Vec gt;
  sys.jacobians(x, v, t, gx, gv, gt);
  const Mat sub = select_cols(gv, split.indices_s);
  return Eigen::JacobiSVD<Mat>(sub).singularValues().minCoeff();
}

Vec solve_vs(const ConstrainedSystem& sys, const VelocitySplit& split, const Vec& x,
             const Vec& v_r, double t, const Vec& guess) {
  if (split.K == 0) return Vec::Zero(0);
  Vec vs = guess;
  for (int it = 0; it < 50; ++it) {
    const Vec v = assemble_v(split, v_r, vs);
    const Vec r = sys.g(x, v, t);
    const double scale = std::max(1.0, v.lpNorm<Eigen::Infinity>());
    if (r.lpNorm<Eigen::Infinity>() <= 1e-15 * scale) return vs;
    Mat gx, gv;
    Vec gt;
    sys.jacobians(x, v, t, gx, gv, gt);
    const Mat Js = select_cols(gv, split.indices_s);
    const Vec step = Js.colPivHouseholderQr().solve(-r);
    if (!step.allFinite()) break;
    vs += step;
    if (step.lpNorm<Eigen::Infinity>() <= 1e-16 * std::max(1.0, vs.lpNorm<Eigen::Infinity>())) break;
  }
  const Vec r = sys.g(x, assemble_v(split, v_r, vs), t);
  if (!(r.lpNorm<Eigen::Infinity>() <= 0.1 * kEpsConstraint))
    throw ConvergenceError("solve_vs failed: state left the domain of the velocity split",
                           r.lpNorm<Eigen::Infinity>());
  return vs;
}

Vec vs_rate(const ConstrainedSystem& sys, const VelocitySplit& split, const Vec& x, const Vec& v,
            double t) {
  if (split.K == 0) return Vec::Zero(0);
  Mat gx, gv;
  Vec gt;
  sys.jacobians(x, v, t, gx, gv, gt);
  const Vec F = sys.applied_force(x, v, t);
  const Mat Gr = select_cols(gv, split.indices_r);
  const Mat Gs = select_cols(gv, split.indices_s);
  // d/dt g = g_x v + g_r F_r + g_s vdot_s + g_t = 0
  const Vec rhs = -(gx * v + Gr * pick(F, split.indices_r) + gt);
  return Gs.colPivHouseholderQr().solve(rhs);
}

ReductionResult integrate_reduced(const ConstrainedSystem& sys, const Vec& x0, const Vec& v0,
                                  double T, double h, const std::vector<int>& eliminate) {
  const int n = sys.dof();
  require_dim(x0.size() == n && v0.size() == n, "initial data has wrong size");
  if (!(h > 0.0) || h > T / 10.0) throw ConfigError("integrate_reduced requires 0 < h <= T/10");
  const double g0 = sys.n_constraints() ? sys.g(x0, v0, 0.0).lpNorm<Eigen::Infinity>() : 0.0;
  if (g0 > kEpsConstraint)
    throw ConfigError("initial data violates the constraint: |g(x0, v0)| = " + format_double(g0));

  const Grid grid = Grid::with_step(0.0, T, h);
  const double dt = grid.h();
  std::vector<std::string> names;
  for (int i = 1; i <= n; ++i) names.push_back("x" + std::to_string(i));
  for (int i = 1; i <= n; ++i) names.push_back("v" + std::to_string(i));
  ReductionResult res;
  res.traj = TrajectoryGrid(grid, names);
  res.forces = Mat::Zero(n, grid.n_nodes);

  VelocitySplit split = split_velocities(sys, x0, v0, 0.0, kEpsRank, eliminate);
  res.events.push_back({0.0, split.indices_s, split.indices_r, split.sigma_min});

  Vec x = x0, v = v0;
  // reduced right-hand side on y = (x, v_r); v_s is warm started from vs_hint
  auto rhs = [&](const VelocitySplit& s, double t, const Vec& xx, const Vec& vr, Vec& vs_hint,
                 Vec& xdot, Vec& vrdot) {
    vs_hint = solve_vs(sys, s, xx, vr, t, vs_hint);
    const Vec vv = assemble_v(s, vr, vs_hint);
    xdot = vv;
    vrdot = pick(sys.applied_force(xx, vv, t), s.indices_r);
  };

  auto record = [&](int i, double t) {
    res.traj.values().col(i).head(n) = x;
    res.traj.values().col(i).tail(n) = v;
    const Vec F = sys.applied_force(x, v, t);
    const Vec vsd = vs_rate(sys, split, x, v, t);
    // retained components stay exactly zero
    for (std::size_t j = 0; j < split.indices_s.size(); ++j)
      res.forces(split.indices_s[j], i) = vsd(j) - F(split.indices_s[j]);
    if (sys.n_constraints())
      res.max_constraint = std::max(res.max_constraint, sys.g(x, v, t).lpNorm<Eigen::Infinity>());
  };

  record(0, 0.0);
  for (int i = 0; i + 1 < grid.n_nodes; ++i) {
    const double t = grid.t(i);
    bool done = false;
    for (int attempt = 0; attempt < 2 && !done; ++attempt) {
      try {
        Vec vr = pick(v, split.indices_r), vs = pick(v, split.indices_s);
        Vec k1x, k1v, k2x, k2v, k3x, k3v, k4x, k4v;
        Vec hint = vs;
        rhs(split, t, x, vr, hint, k1x, k1v);
        rhs(split, t + 0.5 * dt, x + 0.5 * dt * k1x, vr + 0.5 * dt * k1v, hint, k2x, k2v);
        rhs(split, t + 0.5 * dt, x + 0.5 * dt * k2x, vr + 0.5 * dt * k2v, hint, k3x, k3v);
        rhs(split, t + dt, x + dt * k3x, vr + dt * k3v, hint, k4x, k4v);
        const Vec xn = x + (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        const Vec vrn = vr + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        const Vec vsn = solve_vs(sys, split, xn, vrn, grid.t(i + 1), hint);
        x = xn;
        v = assemble_v(split, vrn, vsn);
        done = true;
      } catch (const ConvergenceError&) {
        // reset the split at the last good state and retry the step once
        split = split_velocities(sys, x, v, t, kEpsRank, eliminate);
        res.events.push_back({t, split.indices_s, split.indices_r, split.sigma_min});
      }
    }
    if (!done)
      throw ConvergenceError("reduced integration aborted: repeated re-split failure at t = " +
                                 format_double(t),
                             0.0);
    if (!x.allFinite() || !v.allFinite())
      throw DivergenceError("non-finite state in reduced integration", t);
    const double tn = grid.t(i + 1);
    if (split.K > 0 && split_sigma(sys, split, x, v, tn) < 0.5 * split.sigma_min) {
      split = split_velocities(sys, x, v, tn, kEpsRank, eliminate);
      res.events.push_back({tn, split.indices_s, split.indices_r, split.sigma_min});
    }
    record(i + 1, tn);
  }
  return res;
}

std::unique_ptr<ConstrainedSystem> constrained_system(const SystemSpec& spec) {
  if (!spec.has_constraint()) throw UnsupportedError("reduction needs a constrained system");
  return std::make_unique<LinearVelocityConstraint>(spec.L, spec.b);
}

void write_reduction_csv(const std::string& path, const ReductionResult& r) {
  std::vector<std::string> header{"t"};
  for (const auto& c : r.traj.columns()) header.push_back(c);
  for (int i = 1; i <= r.forces.rows(); ++i) header.push_back("Fc" + std::to_string(i));
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < r.traj.n_nodes(); ++i) {
    std::vector<double> row{r.traj.t(i)};
    for (int k = 0; k < r.traj.dim(); ++k) row.push_back(r.traj.values()(k, i));
    for (int k = 0; k < r.forces.rows(); ++k) row.push_back(r.forces(k, i));
    rows.push_back(std::move(row));
  }
  write_series_csv(path, header, rows);
}

}  // namespace dualvp

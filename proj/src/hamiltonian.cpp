#include "dualvp/hamiltonian.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace dualvp {

double reduced_lagrangian(const DualModel& model, const HParams& hp, const ExtendedDual& e,
                          double t, DtpRoute route) {
  const Vec U = dtp(model, hp, e, t, route);
  return eval_LH(model, hp, U, e, t);
}

Vec momentum_map(const DualModel& model, const HParams& hp, const ExtendedDual& e, double t,
                 DtpRoute route) {
  return -model.Y(dtp(model, hp, e, t, route));
}

Mat momentum_jacobian(const DualModel& model, const HParams& hp, const ExtendedDual& e, double t) {
  const Vec U = dtp(model, hp, e, t);
  Mat S;
  stationarity_residual(model, hp, e, t, U, &S);
  const int K = model.slot_count();
  Mat E = Mat::Zero(model.primal_dim(), K);
  for (int k = 0; k < K; ++k) E(model.slots()[k].state_index, k) = 1.0;
  Eigen::PartialPivLU<Mat> lu(S);
  return -E.transpose() * lu.solve(E);
}

Vec rate_recovery(const DualModel& model, const HParams& hp, const DualState& D, const Vec& P,
                  double t) {
  const int K = model.slot_count();
  require_dim(P.size() == K && D.D.size() == K, "rate_recovery: sizes do not match the model");
  ExtendedDual e{Vec::Zero(K), D.D, D.M};
  const double scale = std::max(1.0, P.lpNorm<Eigen::Infinity>());
  for (int it = 0; it < 30; ++it) {
    const Vec r = momentum_map(model, hp, e, t) - P;
    if (r.lpNorm<Eigen::Infinity>() <= 1e-13 * scale) return e.Ddot;
    const Mat J = momentum_jacobian(model, hp, e, t);
    Eigen::FullPivLU<Mat> lu(J);
    if (!lu.isInvertible() || lu.rcond() < 1e-13)
      throw SingularityError(
          "momentum map is not invertible: dP/dDdot = -E^T S^{-1} E is singular at this dual state");
    e.Ddot -= lu.solve(r);
  }
  const Vec r = momentum_map(model, hp, e, t) - P;
  if (r.lpNorm<Eigen::Infinity>() > 1e-9 * scale)
    throw ConvergenceError("rate recovery did not converge", r.lpNorm<Eigen::Infinity>());
  return e.Ddot;
}

Vec lorenz_rate_recovery(const LorenzModel& m, double c, const Vec& ubar, const DualState& D,
                         const Vec& P) {
  const ExtendedDual e0{Vec::Zero(3), D.D, D.M};
  const Vec ptilde = lorenz_p(e0, ubar, m.A(), m.R(), m.B());
  return -lorenz_A(c, D.D(1), D.D(2)) * (P + ubar) - ptilde;
}

double lorenz_reduced_lagrangian(const LorenzModel& m, double c, const Vec& ubar,
                                 const ExtendedDual& e) {
  const Vec p = lorenz_p(e, ubar, m.A(), m.R(), m.B());
  const double mu = e.D(1), gam = e.D(2);
  return -0.5 * p.dot(lorenz_B(c, mu, gam) * p) - ubar.dot(p) - mu * ubar(0) * ubar(2) +
         gam * ubar(0) * ubar(1);
}

double lorenz_hamiltonian(const LorenzModel& m, double c, const Vec& ubar, const DualState& D,
                          const Vec& P) {
  const Vec R = lorenz_rate_recovery(m, c, ubar, D, P);
  return R.dot(P) - lorenz_reduced_lagrangian(m, c, ubar, {R, D.D, D.M});
}

LegendrePoint legendre_point(const DualModel& model, const HParams& hp, const DualState& D,
                             const Vec& P, double t) {
  LegendrePoint lp;
  lp.D = D;
  lp.P = P;
  lp.Ddot = rate_recovery(model, hp, D, P, t);
  lp.H_value = P.dot(lp.Ddot) - reduced_lagrangian(model, hp, {lp.Ddot, D.D, D.M}, t);
  return lp;
}

double hamiltonian_value(const DualModel& model, const HParams& hp, const DualState& D,
                         const Vec& P, double t) {
  return legendre_point(model, hp, D, P, t).H_value;
}

ConservationReport check_conservation(const ActionAssembly& a, const DualTrajectory& d,
                                      bool converged, double C) {
  if (!a.hp.base.is_constant())
    throw UnsupportedError(
        "conservation is only claimed for a time-independent base state; the dual Lagrangian "
        "depends on t otherwise");
  ConservationReport rep;
  rep.valid = converged;
  const Mat R = dual_rates(a, d.D);
  const Mat U = recover_nodes(a, d);
  for (int i = 0; i < a.nodes(); ++i) {
    const ExtendedDual e = node_dual(d, R, i);
    const Vec u = U.col(i);
    // P . Ddot - LL with P = -Y(U^H)
    const double LL = eval_LH(*a.model, a.hp, u, e, a.t(i));
    const double H = -a.model->Y(u).dot(e.Ddot) - LL;
    rep.t.push_back(a.t(i));
    rep.H.push_back(H);
  }
  for (double h : rep.H) rep.drift = std::max(rep.drift, std::abs(h - rep.H.front()));
  rep.relative_drift = rep.drift / std::max(std::abs(rep.H.front()), 1e-300);
  const double h = a.grid.h();
  rep.bound = C * h * h;
  rep.pass = rep.valid && rep.drift <= rep.bound;
  if (!rep.valid) rep.note = "dual trajectory is not a converged critical point; drift is not meaningful";
  return rep;
}

}  // namespace dualvp

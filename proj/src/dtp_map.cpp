#include "dualvp/dtp_map.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <sstream>

namespace dualvp {

Mat lorenz_A(double c, double mu, double gamma) {
  Mat A(3, 3);
  A << c, -gamma, mu, -gamma, c, 0.0, mu, 0.0, c;
  return A;
}

double lorenz_denominator(double c, double mu, double gamma) {
  return 1.0 - (gamma * gamma) / (c * c) - (mu * mu) / (c * c);
}

Mat lorenz_B(double c, double mu, double gamma) {
  const double den = lorenz_denominator(c, mu, gamma);
  if (std::abs(den) <= kEpsSingular)
    throw SingularityError("Lorenz DtP matrix is singular (gamma^2 + mu^2 ~ c^2); increase c");
  const double c2 = c * c;
  Mat B(3, 3);
  B << c2, gamma * c, -mu * c,
       gamma * c, c2 - mu * mu, -gamma * mu,
       -mu * c, -gamma * mu, c2 - gamma * gamma;
  return B / (c2 * c * den);
}

Vec lorenz_p(const ExtendedDual& e, const Vec& ub, double A, double R, double B) {
  const double lam = e.D(0), mu = e.D(1), gam = e.D(2);
  Vec p(3);
  p(0) = gam * ub(1) - mu * ub(2) + e.Ddot(0) - A * lam + R * mu;
  p(1) = gam * ub(0) + e.Ddot(1) - mu + A * lam;
  p(2) = -mu * ub(0) + e.Ddot(2) - B * gam;
  return p;
}

Vec dtp_lorenz(const ExtendedDual& e, double c, const Vec& ubar, double A, double R, double B) {
  require_dim(e.D.size() == 3 && e.Ddot.size() == 3 && ubar.size() == 3,
              "dtp_lorenz: three dual fields expected");
  return ubar + lorenz_B(c, e.D(1), e.D(2)) * lorenz_p(e, ubar, A, R, B);
}

Mat genpars_M(const GenParsCoefficients& c, double mu, double Lambda, const Mat& L) {
  const int M = static_cast<int>(L.rows());
  return Mat::Identity(M, M) - (mu * mu / (c.cx * c.cv)) * L * L.transpose() -
         (Lambda * Lambda / (c.cQ * c.cv)) * Mat::Identity(M, M);
}

Vec dtp_genpars(const ExtendedDual& e, const GenParsCoefficients& c, const Vec& ubar,
                const Mat& L, const Vec& b, bool slack) {
  const int M = static_cast<int>(b.size());
  require_dim(e.D.size() == 2 * M && e.M.size() == (slack ? 2 : 1),
              "dtp_genpars: dual sizes do not match the model");
  const Vec rho = e.D.head(M), lam = e.D.tail(M);
  const Vec rhodot = e.Ddot.head(M), lamdot = e.Ddot.tail(M);
  const double mu = e.M(0);
  const double Lam = slack ? e.M(1) : 0.0;
  const Vec xb = ubar.head(M), vb = ubar.segment(M, M), Qb = ubar.segment(2 * M, M);

  const Mat MM = genpars_M(c, mu, Lam, L);
  Eigen::FullPivLU<Mat> lu(MM);
  if (!lu.isInvertible() || lu.rcond() < kEpsSingular)
    throw SingularityError("generalized-Pars DtP matrix is singular; increase c_x, c_v, c_Q");
  const Vec rhs = vb + (1.0 / c.cv) * (-mu * (L * xb) - Lam * Qb + rho + lamdot - mu * b -
                                       (mu / c.cx) * (L * rhodot) + (Lam / c.cQ) * lam);
  const Vec v = lu.solve(rhs);
  const Vec x = xb + rhodot / c.cx - (mu / c.cx) * (L.transpose() * v);
  const Vec Q = Qb - lam / c.cQ - (Lam / c.cQ) * v;

  Vec U(3 * M + (slack ? 1 : 0));
  U << x, v, Q, Vec::Zero(slack ? 1 : 0);
  if (slack) {
    if (std::abs(c.cs - Lam) <= kEpsSingular)
      throw SingularityError("slack DtP singular: c_s equals Lambda");
    U(3 * M) = c.cs * ubar(3 * M) / (c.cs - Lam);
  }
  return U;
}

Vec stationarity_residual(const DualModel& model, const HParams& hp, const ExtendedDual& e,
                          double t, const Vec& U, Mat* jacobian) {
  const int n = model.primal_dim();
  const int K = model.slot_count();
  const int A = model.algebraic_dim();
  if (n > kMaxJetVars) throw UnsupportedError("primal dimension exceeds automatic differentiation capacity");
  require_dim(U.size() == n, "stationarity_residual: U has wrong size");
  require_dim(e.D.size() == K && e.Ddot.size() == K && e.M.size() == A,
              "stationarity_residual: dual sizes do not match the model");

  std::vector<Jet> u(n), F(K), G(A);
  for (int j = 0; j < n; ++j) u[j] = Jet::variable(U(j), n, j);
  model.eval(u.data(), t, F.data(), G.data());

  const Vec ub = hp.base.at(t);
  Vec grad = hp.c.cwiseProduct(U - ub);
  Mat H = hp.c.asDiagonal();
  for (int k = 0; k < K; ++k) {
    grad(model.slots()[k].state_index) -= e.Ddot(k);
    grad -= e.D(k) * F[k].g;
    if (jacobian) H -= e.D(k) * F[k].H;
  }
  for (int a = 0; a < A; ++a) {
    grad += e.M(a) * G[a].g;
    if (jacobian) H += e.M(a) * G[a].H;
  }
  if (jacobian) *jacobian = H;
  return grad;
}

Vec dtp_generic(const DualModel& model, const HParams& hp, const ExtendedDual& e, double t,
                const DtpOptions& opt, DtpStats* stats) {
  Vec U = hp.base.at(t);
  Mat J;
  Vec r = stationarity_residual(model, hp, e, t, U, &J);
  auto scale = [&](const Vec& u) {
    return std::max(1.0, hp.c.cwiseProduct(u).lpNorm<Eigen::Infinity>());
  };
  int it = 0;
  for (; it < opt.max_iter && r.lpNorm<Eigen::Infinity>() > opt.tol * scale(U); ++it) {
    Eigen::PartialPivLU<Mat> lu(J);
    if (!(lu.rcond() > 1e-14)) throw SingularityError("DtP Jacobian is singular; increase c");
    const Vec step = -lu.solve(r);
    const double r0 = r.norm();
    double alpha = 1.0;
    Vec Ut;
    Mat Jt;
    Vec rt;
    for (int halving = 0; halving < 30; ++halving) {
      Ut = U + alpha * step;
      rt = stationarity_residual(model, hp, e, t, Ut, &Jt);
      if (rt.allFinite() && rt.norm() < r0) break;
      alpha *= 0.5;
    }
    if (!(rt.norm() < r0)) {
      // no decrease along the Newton direction: stagnated at roundoff level
      break;
    }
    U = Ut;
    J = Jt;
    r = rt;
  }
  const double res = r.lpNorm<Eigen::Infinity>();
  if (stats) *stats = {it, res};
  // a stagnated iteration is accepted only close to roundoff
  if (!(res <= std::max(opt.tol, 1e-9) * scale(U))) {
    std::ostringstream os;
    os << "DtP Newton did not converge at t = " << t << " (|dL/dU| = " << res << ")";
    throw ConvergenceError(os.str(), res);
  }
  return U;
}

Vec dtp(const DualModel& model, const HParams& hp, const ExtendedDual& e, double t,
        DtpRoute route) {
  if (route != DtpRoute::generic) {
    if (auto U = model.closed_form_dtp(e, hp, t)) return *U;
    if (route == DtpRoute::closed_form)
      throw UnsupportedError("no closed-form DtP for model " + model.name());
  }
  return dtp_generic(model, hp, e, t);
}

InvertibilityReport check_invertibility(const DualModel& model, const HParams& hp,
                                        const std::vector<ExtendedDual>& nodes,
                                        const std::vector<double>& times, double threshold) {
  require_dim(nodes.size() == times.size(), "check_invertibility: nodes and times differ");
  InvertibilityReport rep;
  rep.min_singular_value = std::numeric_limits<double>::infinity();
  rep.min_eigenvalue = std::numeric_limits<double>::infinity();
  const double cmin = hp.c.minCoeff();
  rep.threshold = threshold * cmin;
  double off_max = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    // at the DtP point when it exists, else at the base point
    Vec U = hp.base.at(times[i]);
    try {
      U = dtp(model, hp, nodes[i], times[i]);
    } catch (const Error&) {
    }
    Mat J;
    stationarity_residual(model, hp, nodes[i], times[i], U, &J);
    Eigen::JacobiSVD<Mat> svd(J);
    const double smin = svd.singularValues().minCoeff();
    Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (J + J.transpose()), Eigen::EigenvaluesOnly);
    const double emin = eig.eigenvalues().minCoeff();
    if (smin < rep.min_singular_value) {
      rep.min_singular_value = smin;
      rep.worst_node = static_cast<int>(i);
    }
    rep.min_eigenvalue = std::min(rep.min_eigenvalue, emin);
    const Mat off = J - Mat(hp.c.asDiagonal());
    off_max = std::max(off_max, Eigen::JacobiSVD<Mat>(off).singularValues()(0));
  }
  rep.ok = rep.min_singular_value >= rep.threshold && rep.min_eigenvalue > 0.0;
  rep.recommended_c_scale = std::max(1.0, 2.0 * off_max / cmin);
  return rep;
}

}  // namespace dualvp

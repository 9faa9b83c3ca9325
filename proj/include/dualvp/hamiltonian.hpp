#pragma once

// Legendre transform of the reduced dual Lagrangian
//   LL(D, Ddot, t) = L_H(U^H(D, Ddot, t), D, Ddot, t)
// with momenta P = dLL/dDdot = -Y(U^H) (only the explicit Ddot dependence
// survives because dL_H/dU vanishes at U^H), and
//   HH(D, P, t) = P . R(D, P, t) - LL(D, R(D, P, t), t).

#include <string>
#include <vector>

#include "dualvp/dual_solver.hpp"

namespace dualvp {

struct LegendrePoint {
  DualState D;
  Vec P;
  Vec Ddot;
  double H_value = 0.0;
};

/// LL(D, Ddot, t).
double reduced_lagrangian(const DualModel& model, const HParams& hp, const ExtendedDual& e,
                          double t, DtpRoute route = DtpRoute::automatic);

Vec momentum_map(const DualModel& model, const HParams& hp, const ExtendedDual& e, double t,
                 DtpRoute route = DtpRoute::automatic);
/// dP/dDdot = -E^T S^{-1} E with S the DtP Jacobian and E the slot selector.
Mat momentum_jacobian(const DualModel& model, const HParams& hp, const ExtendedDual& e, double t);

/// Ddot with momentum_map(D, Ddot) = P, by Newton from Ddot = 0. Throws
/// SingularityError when the momentum map is not invertible.
Vec rate_recovery(const DualModel& model, const HParams& hp, const DualState& D, const Vec& P,
                  double t);

/// Closed forms for Lorenz with a single c:
///   R = -A_D (P + Ubar) - ptilde,  ptilde = p - Ddot.
Vec lorenz_rate_recovery(const LorenzModel& m, double c, const Vec& ubar, const DualState& D,
                         const Vec& P);
double lorenz_reduced_lagrangian(const LorenzModel& m, double c, const Vec& ubar,
                                 const ExtendedDual& e);
double lorenz_hamiltonian(const LorenzModel& m, double c, const Vec& ubar, const DualState& D,
                          const Vec& P);

/// HH(D, P, t) through generic rate recovery.
double hamiltonian_value(const DualModel& model, const HParams& hp, const DualState& D,
                         const Vec& P, double t);
LegendrePoint legendre_point(const DualModel& model, const HParams& hp, const DualState& D,
                             const Vec& P, double t);

struct ConservationReport {
  std::vector<double> t;
  std::vector<double> H;
  double drift = 0.0;           ///< max_i |HH(t_i) - HH(t_0)|
  double relative_drift = 0.0;  ///< drift / max(|HH(t_0)|, tiny)
  double bound = 0.0;           ///< C h^2
  bool valid = false;           ///< precondition (converged dual solve) met
  bool pass = false;
  std::string note;
};

/// Evaluates HH at every node of a dual trajectory, with nodal rates from
/// the action's difference rule. Requires a constant base state.
ConservationReport check_conservation(const ActionAssembly& a, const DualTrajectory& d,
                                      bool converged, double C = 100.0);

}  // namespace dualvp

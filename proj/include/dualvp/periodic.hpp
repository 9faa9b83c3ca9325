#pragma once

// Periodic orbits of autonomous systems x' = F(x). With s = t / P on
// [0, 2 pi] the orbit solves dx/ds = P F(x), dP/ds = 0; the search looks for a
// critical point of the rescaled dual action under periodic dual boundary
// conditions, with P as one extra unknown. The orbit's phase is pinned by the
// base state through the DtP map; the anchor U^H_j(s = 0) = Ubar_j(0) is
// reported, and enforced only on request.

#include <memory>
#include <string>
#include <vector>

#include "dualvp/dual_solver.hpp"
#include "dualvp/integrator.hpp"

namespace dualvp {

/// Augmented system (x, P) with x' = P F(x), P' = 0.
OdeSystem rescale_system(const SystemSpec& spec);
OdeSystem rescale_system(const OdeSystem& sys);
/// Dual model of the rescaled field. Throws UnsupportedError if the model
/// depends on time explicitly.
std::shared_ptr<const DualModel> rescale_model(std::shared_ptr<const DualModel> model, double P);

struct PeriodicProblem {
  std::shared_ptr<const DualModel> model;
  HParams hp;          ///< base state on [0, 2 pi]
  int n_nodes = 512;   ///< stored nodes around the loop
  double P_guess = 1.0;
  int phase_component = 0;
};

struct PeriodicOptions {
  double tol = 1e-9;  ///< on the weight-scaled residual (and the anchor, if enforced)
  int max_iter = 100;
  double fd_step = 1e-7;
  double lambda0 = 1e-6;  ///< initial Levenberg-Marquardt damping, relative
  /// Enforce U^H_j(0) = Ubar_j(0) as an extra equation. Off by default: with
  /// periodic duals the DtP map only reaches orbits whose offset from the base
  /// is orthogonal to the adjoint periodic solution, which already fixes the
  /// phase, and the anchor then overdetermines a nonlinear orbit.
  bool anchor_phase = false;
};

struct PeriodicResult {
  TrajectoryGrid orbit;  ///< U^H in s on [0, 2 pi], last node repeats the first
  DualTrajectory dual;
  double P = 0.0;
  double residual = 0.0;        ///< max weight-scaled EL residual
  double phase_residual = 0.0;
  double closure = 0.0;         ///< |x(0) + int_0^{2pi} x' ds - x(0)|, trapezoid, max norm
  double shooting_gap = 0.0;    ///< RK4 from U^H(0) over one loop, max norm
  double max_speed = 0.0;       ///< max_i |P F(U_i)|
  bool converged = false;
  bool collapsed = false;       ///< orbit degenerated to an equilibrium
  int iterations = 0;
  std::string message;
};

PeriodicResult find_periodic_orbit(const PeriodicProblem& pp, const PeriodicOptions& opt = {});

/// Independent searches, run on up to `threads` workers.
std::vector<PeriodicResult> sweep_periodic(const std::vector<PeriodicProblem>& problems,
                                           const PeriodicOptions& opt, int threads);

struct ShootingResult {
  Vec x0;
  double P = 0.0;
  double residual = 0.0;
  bool converged = false;
};

/// Single-shooting oracle on the same phase condition: Newton for (x0, P)
/// with x0[phase_component] held fixed and phi_{2 pi}(x0) = x0 for the
/// rescaled flow, RK4 with `steps` steps per loop.
ShootingResult shooting_periodic(const OdeSystem& sys, const Vec& x0, double P,
                                 int phase_component, int steps = 2000);

/// Minimal max-norm distance between two closed orbits on the same number of
/// nodes over all cyclic node shifts.
double orbit_distance_mod_phase(const TrajectoryGrid& a, const TrajectoryGrid& b);

}  // namespace dualvp

#pragma once

// Classical fixed-step RK4: the forward-in-time oracle every dual computation
// is checked against.

#include <functional>
#include <string>
#include <vector>

#include "dualvp/primal_model.hpp"
#include "dualvp/trajectory.hpp"

namespace dualvp {

struct OdeSystem {
  int dim = 0;
  std::vector<std::string> names;
  std::function<void(double t, const Vec& y, Vec& dy)> rhs;
};

/// Integrates y' = f(t, y) on `grid`; nodal derivatives are stored for
/// Hermite interpolation. Throws DivergenceError on a non-finite state.
TrajectoryGrid integrate_ode(const OdeSystem& sys, const Vec& y0, const Grid& grid);

/// The ODE integrated for `spec`: x (first-order systems), (x, v), or
/// (x, v, mu) for hamiltonian_linear.
OdeSystem make_ode(const SystemSpec& spec);
Vec initial_ode_state(const SystemSpec& spec);

/// RK4 trajectory of the configured system with columns x, v, Q, s. For
/// gauss / dalembert / vortical laws Q holds the constraint force per unit
/// mass, and s = sqrt(2 Q.v) when the slack law is active.
TrajectoryGrid integrate_ivp(const SystemSpec& spec, double T, double h);

struct InvariantReport {
  double max_constraint_residual = 0.0;
  double max_power = 0.0;          ///< max |Q . v|
  double max_W_residual = 0.0;     ///< max |Q . v - s^2 / 2| (slack law only)
  std::vector<double> K;           ///< kinetic energy per node
  double max_K_increase = 0.0;     ///< largest positive increment of K
  double max_K_deviation = 0.0;    ///< max |K - K(0)|
};

InvariantReport monitor_invariants(const SystemSpec& spec, const TrajectoryGrid& traj);

/// Column layout of integrate_ivp output.
struct PrimalLayout {
  int n = 0;       ///< positions (and velocities)
  int nq = 0;      ///< Q entries
  bool second_order = false;
  int x() const { return 0; }
  int v() const { return n; }
  int q() const { return second_order ? 2 * n : n; }
  int s() const { return q() + nq; }
  int total() const { return s() + (second_order ? 1 : 0); }
};
PrimalLayout primal_layout(const SystemSpec& spec);

}  // namespace dualvp

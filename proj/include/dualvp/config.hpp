#pragma once

// JSON run configuration. One document per run:
//   {"system": {...}, "T": 1, "h": 1e-3, "dual": {...}, "periodic": {...},
//    "compare": {...}}
// Unknown keys are ignored; missing required keys and bad values raise
// ConfigError before any output is written.

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "dualvp/dual_solver.hpp"
#include "dualvp/integrator.hpp"
#include "dualvp/periodic.hpp"

namespace dualvp {

using Json = nlohmann::json;

Json read_json_file(const std::string& path);

struct SystemConfig {
  SystemSpec spec;
  bool reduced_pars = false;  ///< dual model on (v1, v2) of the Gauss-law Pars system
};

/// system: {kind: lorenz|pars|pars_reduced|gen_pars|poly_ode|harmonic,
///          params: {...}, force_law, power_law, L, b, terms,
///          initial: {x0, v0, q0}}
SystemConfig parse_system(const Json& j);
Json system_to_json(const SystemConfig& s);

std::shared_ptr<const DualModel> model_for(const SystemConfig& s);

/// RK4 reference on [0, T]. A free_Q system has no forward dynamics of its
/// own; its reference uses the Gauss-law force, which satisfies the same
/// equations with one admissible Q.
TrajectoryGrid oracle_for(const SystemConfig& s, double T, double h);

/// Rows of `traj` matching the model's primal names, as a base state.
BaseState base_from_trajectory(const DualModel& model, const TrajectoryGrid& traj);

/// traj + delta * sin((k + 2) t + k) in row k, derivatives updated.
TrajectoryGrid perturb(const TrajectoryGrid& traj, double delta);

struct DualConfig {
  Vec c;                      ///< per primal component
  std::string base = "oracle";  ///< oracle | zero | constant
  Vec base_value;             ///< for base = constant
  double perturbation = 0.0;  ///< added to an oracle base
  Vec terminal;               ///< D(T), default 0
  Vec initial_bc;             ///< D(0) for slots without an initial condition
  DtpRoute route = DtpRoute::automatic;
  SolveConfig solve;
};

DualConfig parse_dual(const Json& j, const DualModel& model);
Json dual_to_json(const DualConfig& d);

/// Assembly on a uniform grid of step h over [0, T].
ActionAssembly build_assembly(const SystemConfig& s, const DualConfig& d, double T, double h);

struct PeriodicConfig {
  PeriodicProblem problem;
  PeriodicOptions options;
  std::vector<double> sweep;  ///< extra P guesses searched concurrently
};

/// periodic: {P_guess, n_nodes, phase_component, c,
///            base: {kind: circle, radius, center} | {kind: constant, value}
///                | {kind: oracle_loop, skip}, tol, max_iter, anchor_phase,
///            sweep: [...]}
PeriodicConfig parse_periodic(const Json& j, const SystemConfig& s);

/// reduce: {eliminate: [i, ...]}, zero-based velocity indices preferred for
/// elimination; empty if absent.
std::vector<int> parse_eliminate(const Json& j, int dof);

double json_number(const Json& j, const char* key, double fallback);
double json_required_number(const Json& j, const char* key);
Vec json_vec(const Json& j);
Mat json_mat(const Json& j);
Json vec_json(const Vec& v);

}  // namespace dualvp

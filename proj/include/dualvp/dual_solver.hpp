#pragma once

#include <Eigen/SparseCore>
#include <functional>
#include <vector>

#include "dualvp/dual_action.hpp"

namespace dualvp {

enum class InitialGuess { zero_dual, supplied };

struct SolveConfig {
  double tol_newton = 1e-9;  ///< on the weight-scaled residual, max norm
  int max_iter = 50;
  double regularization = 1e-10;  ///< ridge added to the Jacobian diagonal
  InitialGuess initial_guess = InitialGuess::zero_dual;
  double fd_step = 1e-7;  ///< relative forward-difference step
  int continuation_slabs = 1;  ///< solve on growing horizons, warm starting each
  int max_halvings = 20;
};

struct IterationRecord {
  int iteration = 0;
  double residual = 0.0;  ///< scaled max norm before the step
  double step_norm = 0.0;
  double alpha = 0.0;
};

struct SolveResult {
  DualTrajectory dual;
  bool converged = false;
  double residual_norm = 0.0;
  int iterations = 0;
  std::vector<IterationRecord> log;
};

/// Critical point of the discrete dual action by damped Newton on the free
/// nodal dual values. Returns the best iterate with an honest convergence
/// flag; a DtP singularity at the starting point raises SingularityError.
SolveResult solve_dual_bvp(const ActionAssembly& a, const SolveConfig& cfg,
                           const DualTrajectory* guess = nullptr);

/// Residual function over packed free unknowns, used by the Newton driver and
/// by the periodic search.
using PackedResidual = std::function<Vec(const Vec& z)>;

/// Forward-difference Jacobian of `residual` at z, exploiting that a residual
/// row and an unknown interact only if their nodes are at most `reach` apart
/// (cyclically if periodic).
Eigen::SparseMatrix<double> fd_jacobian(const PackedResidual& residual, const Vec& z,
                                        const Vec& r0, const std::vector<int>& col_node,
                                        const std::vector<int>& row_node, int n_nodes,
                                        bool periodic, int reach, double step);

/// Recovered primal trajectory U^H on the grid.
TrajectoryGrid recover_primal(const ActionAssembly& a, const DualTrajectory& d);

struct GaugeReport {
  double distance = 0.0;
  double tol = 0.0;
  bool conclusive = false;
  bool pass = false;
  SolveResult first, second;
};

/// Solves both problems concurrently and compares the recovered primal
/// trajectories in the max norm (same grid required).
GaugeReport gauge_compare(const ActionAssembly& a1, const ActionAssembly& a2,
                          const SolveConfig& cfg, double gauge_tol);

}  // namespace dualvp

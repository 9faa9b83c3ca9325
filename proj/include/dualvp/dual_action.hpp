#pragma once

// Discrete dual action: trapezoid quadrature of L_H o DtP on a uniform grid,
// initial-condition boundary terms, and its exact gradient.
//
// Nodal dual rates use central differences in the interior and one-sided
// first differences at the two ends. With trapezoid weights this is the
// summation-by-parts pair: the gradient with respect to a nodal D at node 0
// reduces to (Y(0) - Y^0) + O(h) and no spurious boundary terms remain.

#include <memory>
#include <string>
#include <vector>

#include "dualvp/dtp_map.hpp"

namespace dualvp {

/// Nodal dual values: D is slot_count x nodes, M is algebraic_dim x nodes.
struct DualTrajectory {
  Mat D;
  Mat M;
};

struct ActionAssembly {
  std::shared_ptr<const DualModel> model;
  HParams hp;
  Grid grid;
  Vec terminal;      ///< D(T) per slot (Dirichlet)
  Vec initial_bc;    ///< D(0) for slots without an initial condition
  bool periodic = false;  ///< identifies node n_nodes-1 with node 0
  DtpRoute route = DtpRoute::automatic;

  static ActionAssembly make(std::shared_ptr<const DualModel> model, HParams hp, Grid grid);

  int slots() const { return model->slot_count(); }
  int algebraic() const { return model->algebraic_dim(); }
  /// Number of stored nodes (the periodic copy of node 0 is not stored).
  int nodes() const { return periodic ? grid.n_nodes - 1 : grid.n_nodes; }
  double weight(int i) const;
  double t(int i) const { return grid.t(i); }

  /// D entry at (node, slot) that is an unknown of the variational problem.
  bool is_free_D(int node, int slot) const;
  DualTrajectory zero_dual() const;
  void apply_bcs(DualTrajectory& d) const;
  void check() const;
};

/// Nodal rates of D.
Mat dual_rates(const ActionAssembly& a, const Mat& D);
ExtendedDual node_dual(const DualTrajectory& d, const Mat& rates, int i);

/// L_H(U, e, t) = -Ddot . Y(U) - D . F(U, t) + M . G(U, t) + H(U, t).
double eval_LH(const DualModel& model, const HParams& hp, const Vec& U, const ExtendedDual& e,
               double t);

/// U^H at every node (primal_dim x nodes). DtP failures are rethrown with the
/// node index in the message.
Mat recover_nodes(const ActionAssembly& a, const DualTrajectory& d);

double assemble_action(const ActionAssembly& a, const DualTrajectory& d);

struct ElResidual {
  Mat D_raw;     ///< dS_h / dD at each node
  Mat M_raw;     ///< dS_h / dM at each node
  Mat D_scaled;  ///< D_raw divided by the quadrature weight
  Mat M_scaled;
  Vec ic_residual;  ///< Y(U^H(0)) - Y^0 for slots with an initial condition
  double max_raw = 0.0;     ///< over free entries
  double max_scaled = 0.0;  ///< over free entries
};

ElResidual el_residual(const ActionAssembly& a, const DualTrajectory& d);

/// Free unknowns packed node-major: [D free entries, M] per node.
int free_count(const ActionAssembly& a);
Vec pack_free(const ActionAssembly& a, const DualTrajectory& d);
void unpack_free(const ActionAssembly& a, const Vec& z, DualTrajectory& d);
Vec pack_residual(const ActionAssembly& a, const ElResidual& r);
/// Node owning each packed unknown.
std::vector<int> free_nodes(const ActionAssembly& a);

/// The dual Lorenz action written as
///   int -1/2 p.B p - Ubar.p - mu xbar zbar + gamma xbar ybar dt
///   - lambda(0) x0 - mu(0) y0 - gamma(0) z0
/// evaluated with the same quadrature.
double lorenz_dual_action_formula(const ActionAssembly& a, const DualTrajectory& d);

/// The specialised dual action of the reduced Pars velocities with
/// H = (v1^2 + v2^2)/2:
///   -1/2 int (v1^H)^2 + (v2^H)^2 dt - lambda1(0) v1^0 - lambda2(0) v2^0,
///   v1^H = lambda1' - lambda1 z k + lambda2 k,  v2^H = lambda2'.
double pars_reduced_action_formula(const ActionAssembly& a, const DualTrajectory& d,
                                   const Vec& x0, const Vec& v0);

/// Per-node diagnostics: t, D, M, U^H, scaled residuals.
void write_action_csv(const std::string& path, const ActionAssembly& a,
                      const DualTrajectory& d);

}  // namespace dualvp

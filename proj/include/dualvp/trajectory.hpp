#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <string>
#include <vector>

#include "dualvp/errors.hpp"

namespace dualvp {

/// Uniform time mesh t_i = t0 + i h, i = 0 .. n_nodes - 1.
struct Grid {
  double t0 = 0.0;
  double T = 1.0;
  int n_nodes = 3;

  Grid() = default;
  Grid(double t0_, double T_, int n) : t0(t0_), T(T_), n_nodes(n) {
    if (n < 3) throw ConfigError("a grid needs at least 3 nodes");
    if (!(T_ > t0_)) throw ConfigError("grid end time must exceed start time");
  }
  /// Grid with step as close to `h` as possible that lands exactly on T.
  static Grid with_step(double t0, double T, double h);

  double h() const { return (T - t0) / (n_nodes - 1); }
  double t(int i) const { return t0 + i * h(); }
};

/// Nodal values of a vector-valued function on a Grid, together with the
/// nodal time derivatives used for cubic Hermite interpolation.
class TrajectoryGrid {
 public:
  TrajectoryGrid() = default;
  TrajectoryGrid(Grid grid, std::vector<std::string> columns);

  const Grid& grid() const { return grid_; }
  int n_nodes() const { return grid_.n_nodes; }
  int dim() const { return static_cast<int>(columns_.size()); }
  const std::vector<std::string>& columns() const { return columns_; }

  /// values(): dim x n_nodes, column i is the state at node i.
  Eigen::MatrixXd& values() { return values_; }
  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::MatrixXd& derivatives() { return derivs_; }
  const Eigen::MatrixXd& derivatives() const { return derivs_; }
  bool has_derivatives() const { return derivs_.cols() == values_.cols(); }

  Eigen::VectorXd node(int i) const { return values_.col(i); }
  double t(int i) const { return grid_.t(i); }

  /// Cubic Hermite interpolant (linear if no derivatives were stored).
  Eigen::VectorXd at(double t) const;
  Eigen::VectorXd rate_at(double t) const;

  /// Rows [first, first + count) as a new trajectory.
  TrajectoryGrid slice_rows(int first, int count) const;

  void write_csv(std::ostream& os) const;
  void write_csv(const std::string& path) const;

 private:
  int locate(double t, double& theta) const;

  Grid grid_;
  std::vector<std::string> columns_;
  Eigen::MatrixXd values_;
  Eigen::MatrixXd derivs_;
};

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double x);

/// Writes a header line and one row per entry of `t`.
void write_series_csv(std::ostream& os, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows);
void write_series_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows);

}  // namespace dualvp

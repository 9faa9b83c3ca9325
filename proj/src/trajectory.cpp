#include "dualvp/trajectory.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>

namespace dualvp {

Grid Grid::with_step(double t0, double T, double h) {
  if (!(h > 0.0)) throw ConfigError("step must be positive");
  const int intervals = std::max(2, static_cast<int>(std::lround((T - t0) / h)));
  return Grid(t0, T, intervals + 1);
}

TrajectoryGrid::TrajectoryGrid(Grid grid, std::vector<std::string> columns)
    : grid_(grid), columns_(std::move(columns)) {
  values_ = Eigen::MatrixXd::Zero(dim(), grid_.n_nodes);
}

int TrajectoryGrid::locate(double t, double& theta) const {
  const double h = grid_.h();
  const double tol = 1e-12 * std::max(1.0, std::abs(grid_.T));
  if (t < grid_.t0 - tol || t > grid_.T + tol) {
    throw ConfigError("interpolation outside the grid interval: t = " + format_double(t));
  }
  double s = (t - grid_.t0) / h;
  int i = static_cast<int>(std::floor(s));
  i = std::clamp(i, 0, grid_.n_nodes - 2);
  theta = std::clamp(s - i, 0.0, 1.0);
  return i;
}

Eigen::VectorXd TrajectoryGrid::at(double t) const {
  double th;
  const int i = locate(t, th);
  if (!has_derivatives()) return (1.0 - th) * values_.col(i) + th * values_.col(i + 1);
  const double h = grid_.h();
  const double h00 = 2 * th * th * th - 3 * th * th + 1;
  const double h10 = th * th * th - 2 * th * th + th;
  const double h01 = -2 * th * th * th + 3 * th * th;
  const double h11 = th * th * th - th * th;
  return h00 * values_.col(i) + h10 * h * derivs_.col(i) + h01 * values_.col(i + 1) +
         h11 * h * derivs_.col(i + 1);
}

Eigen::VectorXd TrajectoryGrid::rate_at(double t) const {
  double th;
  const int i = locate(t, th);
  const double h = grid_.h();
  if (!has_derivatives()) return (values_.col(i + 1) - values_.col(i)) / h;
  const double d00 = 6 * th * th - 6 * th;
  const double d10 = 3 * th * th - 4 * th + 1;
  const double d01 = -6 * th * th + 6 * th;
  const double d11 = 3 * th * th - 2 * th;
  return (d00 * values_.col(i) + d01 * values_.col(i + 1)) / h + d10 * derivs_.col(i) +
         d11 * derivs_.col(i + 1);
}

TrajectoryGrid TrajectoryGrid::slice_rows(int first, int count) const {
  require_dim(first >= 0 && first + count <= dim(), "slice_rows out of range");
  TrajectoryGrid out(grid_, std::vector<std::string>(columns_.begin() + first,
                                                     columns_.begin() + first + count));
  out.values_ = values_.middleRows(first, count);
  if (has_derivatives()) out.derivs_ = derivs_.middleRows(first, count);
  return out;
}

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

void TrajectoryGrid::write_csv(std::ostream& os) const {
  os << 't';
  for (const auto& c : columns_) os << ',' << c;
  os << '\n';
  for (int i = 0; i < n_nodes(); ++i) {
    os << format_double(t(i));
    for (int k = 0; k < dim(); ++k) os << ',' << format_double(values_(k, i));
    os << '\n';
  }
}

void TrajectoryGrid::write_csv(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot open " + path + " for writing");
  write_csv(f);
}

void write_series_csv(std::ostream& os, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  for (std::size_t k = 0; k < header.size(); ++k) os << (k ? "," : "") << header[k];
  os << '\n';
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << format_double(row[k]);
    os << '\n';
  }
}

void write_series_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot open " + path + " for writing");
  write_series_csv(f, header, rows);
}

}  // namespace dualvp

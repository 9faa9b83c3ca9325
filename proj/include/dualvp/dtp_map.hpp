#pragma once

// Dual-to-primal map: U^H(D, t) solving dL_H/dU = 0.

#include <vector>

#include "dualvp/dual_model.hpp"

namespace dualvp {

inline constexpr double kEpsDtp = 1e-10;

// Lorenz, single c. Dual fields are (lambda, mu, gamma) paired with (x, y, z).
Mat lorenz_A(double c, double mu, double gamma);
/// Explicit inverse of lorenz_A.
Mat lorenz_B(double c, double mu, double gamma);
double lorenz_denominator(double c, double mu, double gamma);
Vec lorenz_p(const ExtendedDual& e, const Vec& ubar, double A, double R, double B);
/// Throws SingularityError when the denominator falls below kEpsSingular.
Vec dtp_lorenz(const ExtendedDual& e, double c, const Vec& ubar, double A, double R, double B);

struct GenParsCoefficients {
  double cx, cv, cQ, cs;
};
/// Dual fields ordered as the GenParsModel slots: D = (rho, lambda), M = (mu[, Lambda]).
Vec dtp_genpars(const ExtendedDual& e, const GenParsCoefficients& c, const Vec& ubar,
                const Mat& L, const Vec& b, bool slack);
Mat genpars_M(const GenParsCoefficients& c, double mu, double Lambda, const Mat& L);

struct DtpOptions {
  int max_iter = 50;
  double tol = 1e-12;  ///< on |dL_H/dU|_inf relative to max(1, |c U|_inf)
};

struct DtpStats {
  int iterations = 0;
  double residual = 0.0;
};

/// Damped Newton from Ubar(t).
Vec dtp_generic(const DualModel& model, const HParams& hp, const ExtendedDual& e, double t,
                const DtpOptions& opt = {}, DtpStats* stats = nullptr);

enum class DtpRoute { automatic, closed_form, generic };

/// Closed form when the model offers one (automatic), else Newton.
Vec dtp(const DualModel& model, const HParams& hp, const ExtendedDual& e, double t,
        DtpRoute route = DtpRoute::automatic);

/// dL_H/dU at (U, e, t), and optionally its Jacobian d^2 L_H / dU^2.
Vec stationarity_residual(const DualModel& model, const HParams& hp, const ExtendedDual& e,
                          double t, const Vec& U, Mat* jacobian = nullptr);

struct InvertibilityReport {
  double min_singular_value = 0.0;
  double min_eigenvalue = 0.0;
  int worst_node = -1;
  double threshold = 0.0;
  /// Factor by which all c should grow so that c dominates the dual-dependent
  /// part of the Jacobian twice over; 1 when no change is needed.
  double recommended_c_scale = 1.0;
  bool ok = true;
};

/// Scans DtP Jacobians at the supplied nodes. Flags nodes whose smallest
/// singular value is below threshold * min(c) or where the Jacobian is
/// not positive definite.
InvertibilityReport check_invertibility(const DualModel& model, const HParams& hp,
                                        const std::vector<ExtendedDual>& nodes,
                                        const std::vector<double>& times,
                                        double threshold = 0.1);

}  // namespace dualvp

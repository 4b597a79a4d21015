#pragma once

#include <complex>
#include <limits>

#include <Eigen/Dense>

#include "fracctl/double_double.hpp"

namespace fracctl {

struct MLParams {
  double alpha = 1.0;
  double beta = 1.0;
  double tol = 1e-12;
};

struct WrightParams {
  double alpha = 0.5;
  double tol = 1e-12;
};

// Euler Gamma for real x on |x| <= 170 (x not a pole). Poles x = 0, -1, -2, ...
// and out-of-envelope arguments raise ValidationError naming "x".
double gamma_fn(double x);

// E_{alpha,beta}(z) for real z with absolute error <= p.tol. Series route
// below the switch radius |z| = 15, real-axis asymptotic route for large
// negative z; routes are error-tracked and the selection falls back on the
// estimate, not the radius. Raises NumericalError carrying the best partial
// value when no route reaches p.tol.
double mittag_leffler(const MLParams& p, double z);

// E_{alpha,beta}(M * scale) for square real M. Diagonal input is evaluated
// elementwise; otherwise an eigendecomposition with an eigenvector condition
// guard cond(V) <= 1e8 is used, then a truncated matrix power series fallback
// for small ||M * scale||.
Eigen::MatrixXd mittag_leffler_matrix(const MLParams& p, const Eigen::MatrixXd& M,
                                      double scale);

// Wright function Psi_alpha(theta) for theta >= 0, alpha in (0,1).
// Compensated (double-double) alternating series; throws NumericalError with
// the tracked estimate when the cancellation budget exceeds p.tol. Documented
// certified ranges at tol = 1e-12: theta <= 24 (alpha = 0.3), <= 12 (0.5),
// <= 6 (2/3), <= 2.5 (0.8); loosening tol extends them (e.g. 0.8 reaches
// theta = 3.5 at 1e-9). Outside the budget the throw carries the honest
// estimate rather than silently losing digits.
double wright(const WrightParams& p, double theta);

namespace detail {

// 1/Gamma(x), zero at the poles. Plain double accuracy (~1e-15 relative).
double rgamma(double x);

// sin(pi x) with exact zeros at integers.
double sinpi(double x);

struct Rational {
  long num = 0;
  long den = 1;
};

// True if |x - num/den| <= 1e-13 for some den <= max_den (smallest den wins).
bool detect_rational(double x, long max_den, Rational& out);

// Gamma(num/den) (argument > 0) in double-double via the fraction table and
// exact rational shifts. Requires den <= 24 after reduction.
DD dd_gamma_rational(long num, long den);

// 1/Gamma(num/den) in double-double, any sign; exact zero at poles.
DD dd_rgamma_rational(long num, long den);

struct Estimated {
  double value = 0.0;
  double estimate = std::numeric_limits<double>::infinity();
  long terms = 0;
};

struct EstimatedC {
  std::complex<double> value{0.0, 0.0};
  double estimate = std::numeric_limits<double>::infinity();
  long terms = 0;
};

// Double-double power series sum_k z^k / Gamma(alpha k + beta), optionally
// with the integrated-kernel factor 1/(alpha k + beta + shift) per term
// (shift >= 0 integral; shift = -1 disables it). Exact-coefficient stride
// recurrence when alpha = p/q (q <= 24) and beta*q, shift are integral;
// honest double-seeded fallback otherwise.
Estimated ml_series(double alpha, double beta, double z, long shift = -1);
EstimatedC ml_series_c(double alpha, double beta, std::complex<double> z,
                       long shift = -1);

// Algebraic asymptotic expansion on the negative real axis (alpha < 1),
// truncated at the Gamma-envelope minimum.
Estimated ml_asymptotic(double alpha, double beta, double z);
EstimatedC ml_asymptotic_c(double alpha, double beta, std::complex<double> z);

// Route-selected evaluation; never throws, reports the tracked estimate.
Estimated ml_auto(double alpha, double beta, double z, double tol);
EstimatedC ml_auto_c(double alpha, double beta, std::complex<double> z, double tol);

}  // namespace detail

}  // namespace fracctl

#include "fracctl/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "fracctl/errors.hpp"
#include "fracctl/gamma_table.hpp"

namespace fracctl {

namespace detail {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
// Two-sided envelope bound of the asymptotic remainder at the optimal
// truncation point x = |z|^{1/alpha}: rem <= 3 (x^2 + 50) e^{-x}
// (validated against high-precision sums across alpha in [0.55, 0.9]).
double asym_remainder_bound(double x) {
  return 3.0 * (x * x + 50.0) * std::exp(-x);
}

// Double-double accumulation noise for N compensated terms of peak
// magnitude m (formal per-operation bound 1.2e-32).
double dd_noise(long n, double m) { return (2.5 * double(n) + 16.0) * 1.2e-32 * m; }

bool lookup_gamma(long den, long s, DD& out) {
  for (int i = 0; i < kGammaTableSize; ++i) {
    if (kGammaTable[i].q == den && kGammaTable[i].s == s) {
      out = DD(kGammaTable[i].hi, kGammaTable[i].lo);
      return true;
    }
  }
  return false;
}

// ---- accumulator shims shared by the real and complex series engines ----

inline DD acc_from(double v) { return DD(v); }
inline DDC acc_from(const std::complex<double>& v) { return DDC(v); }
inline DD acc_pow(double z, long k) { return dd_powi(z, k); }
inline DDC acc_pow(const std::complex<double>& z, long k) { return ddc_powi(z, k); }
inline DD acc_add(const DD& a, const DD& b) { return dd_add(a, b); }
inline DDC acc_add(const DDC& a, const DDC& b) { return ddc_add(a, b); }
inline DD acc_mul(const DD& a, const DD& b) { return dd_mul(a, b); }
inline DDC acc_mul(const DDC& a, const DD& b) { return ddc_mul(a, b); }
inline DDC acc_mul(const DDC& a, const DDC& b) { return ddc_mul(a, b); }
inline DD acc_div(const DD& a, const DD& b) { return dd_div(a, b); }
inline DDC acc_div(const DDC& a, const DD& b) { return ddc_div(a, b); }
inline double acc_abs(const DD& a) { return dd_abs(a); }
inline double acc_abs(const DDC& a) { return ddc_abs(a); }
inline double acc_out(const DD& a) { return a.to_double(); }
inline std::complex<double> acc_out(const DDC& a) { return a.to_complex(); }

template <class Z>
struct EstimatedOf;
template <>
struct EstimatedOf<double> {
  using type = Estimated;
};
template <>
struct EstimatedOf<std::complex<double>> {
  using type = EstimatedC;
};

// Power series sum_k z^k rgamma(alpha k + beta) [ / (alpha k + beta + shift) ].
// Exact-coefficient double-double stride recurrence when alpha = p/q (q <= 24)
// and beta q is integral; double-seeded compensated fallback otherwise.
template <class Z>
typename EstimatedOf<Z>::type series_engine(double alpha, double beta, Z z,
                                            long shift) {
  using Acc = decltype(acc_from(z));
  typename EstimatedOf<Z>::type out;

  const double az = std::abs(z);
  if (az == 0.0) {
    double v = rgamma(beta);
    if (shift >= 0) {
      double d = beta + double(shift);
      v = (d == 0.0) ? 0.0 : v / d;
    }
    out.value = v;
    out.estimate = 2.2e-16 * (std::fabs(v) + 1.0);
    out.terms = 1;
    return out;
  }

  // Peak magnitude exp(x) at x = |z|^{1/alpha}; reject certain overflow.
  const double x_peak = std::pow(az, 1.0 / alpha);
  if (!(x_peak <= 690.0)) return out;  // estimate stays +inf
  const long k_peak = (long)(x_peak / alpha) + 1;
  const long n_max = std::min<long>(200000, 3 * k_peak + 256);

  Rational rat;
  bool exact = detect_rational(alpha, 24, rat) && rat.num > 0;
  long p = 0, q = 1, mb = 0;
  if (exact) {
    p = rat.num;
    q = rat.den;
    double bq = beta * double(q);
    long r = std::llround(bq);
    if (std::fabs(bq - double(r)) <= 1e-9 && std::fabs(bq) < 1e15) {
      mb = r;
    } else {
      exact = false;
    }
  }

  Acc sum = acc_from(Z(0.0));
  double max_mag = 0.0;
  double seed_noise = 0.0;  // double-seeded coefficient noise (inexact path)
  const double stop_abs = 1e-17;
  long n_done = 0;
  int tiny_run = 0;
  bool converged = false;

  if (exact) {
    std::vector<Acc> ring(size_t(q), acc_from(Z(0.0)));
    const Acc zq = acc_pow(z, q);
    for (long k = 0; k <= n_max; ++k) {
      Acc term;
      const long slot = k % q;
      const long kk = k - q;
      // recurrence breaks across Gamma poles (argument <= 0); recompute there
      if (k < q || p * kk + mb <= 0) {
        term = acc_mul(acc_pow(z, k), dd_rgamma_rational(p * k + mb, q));
        if (shift >= 0) term = acc_div(term, dd_rational(double(p * k + mb + shift * q), double(q)));
      } else {
        term = acc_mul(ring[slot], zq);
        for (long r = 0; r < p; ++r)
          term = acc_div(term, dd_rational(double(p * kk + mb + r * q), double(q)));
        if (shift >= 0) {
          term = acc_mul(term, dd_rational(double(p * kk + mb + shift * q), double(q)));
          term = acc_div(term, dd_rational(double(p * k + mb + shift * q), double(q)));
        }
      }
      ring[slot] = term;
      sum = acc_add(sum, term);
      const double tm = acc_abs(term);
      max_mag = std::max({max_mag, tm, acc_abs(sum)});
      n_done = k + 1;
      if (tm < stop_abs * std::max(1.0, max_mag * 1e-16) && k > k_peak) {
        if (++tiny_run >= q + 1) {
          converged = true;
          break;
        }
      } else {
        tiny_run = 0;
      }
    }
    if (converged)
      out.estimate = dd_noise(n_done, max_mag) +
                     30.0 * stop_abs * std::max(1.0, max_mag * 1e-16);
  } else {
    // factored z^k * rgamma(...) representation must not overflow mid-series
    if (az > 1.0 && double(n_max) * std::log(az) > 680.0) return out;
    Acc zpow = acc_from(Z(1.0));
    for (long k = 0; k <= n_max; ++k) {
      double coeff = rgamma(alpha * double(k) + beta);
      if (shift >= 0) {
        double d = alpha * double(k) + beta + double(shift);
        coeff = (d == 0.0) ? 0.0 : coeff / d;
      }
      Acc term = acc_mul(zpow, DD(coeff));
      sum = acc_add(sum, term);
      const double tm = acc_abs(term);
      seed_noise += tm * 1.2e-16;
      max_mag = std::max({max_mag, tm, acc_abs(sum)});
      n_done = k + 1;
      if (tm < stop_abs * std::max(1.0, max_mag * 1e-16) && k > k_peak) {
        if (++tiny_run >= 3) {
          converged = true;
          break;
        }
      } else {
        tiny_run = 0;
      }
      zpow = acc_mul(zpow, acc_from(z));
    }
    if (converged)
      out.estimate = dd_noise(n_done, max_mag) + seed_noise +
                     30.0 * stop_abs * std::max(1.0, max_mag * 1e-16);
  }
  out.value = acc_out(sum);
  out.terms = n_done;
  return out;
}

}  // namespace

double sinpi(double x) {
  double k = std::nearbyint(x);
  double r = x - k;
  double s = std::sin(kPi * r);
  return (std::fmod(k, 2.0) == 0.0) ? s : -s;
}

double rgamma(double x) {
  if (x > 0.5) {
    if (x > 178.0) return 0.0;  // 1/Gamma below double underflow
    return 1.0 / std::tgamma(x);
  }
  if (x == std::floor(x)) return 0.0;  // poles of Gamma
  // reflection: 1/Gamma(x) = sin(pi x) Gamma(1-x) / pi, via lgamma for range
  double s = sinpi(x);
  double lg = std::lgamma(1.0 - x);
  return s / kPi * std::exp(lg);
}

bool detect_rational(double x, long max_den, Rational& out) {
  if (!std::isfinite(x) || std::fabs(x) > 1e6) return false;
  for (long q = 1; q <= max_den; ++q) {
    double pq = x * double(q);
    long p = std::llround(pq);
    if (std::fabs(x - double(p) / double(q)) <= 1e-13) {
      long g = std::gcd(std::labs(p), q);
      if (g == 0) g = 1;
      out.num = p / g;
      out.den = q / g;
      return true;
    }
  }
  return false;
}

DD dd_gamma_rational(long num, long den) {
  long g = std::gcd(std::labs(num), std::labs(den));
  if (g > 1) {
    num /= g;
    den /= g;
  }
  const long k = (num - 1) / den;  // num = s + k den, s in [1, den]
  const long s = num - k * den;
  DD r;
  if (!lookup_gamma(den, s, r))
    throw ContractError("dd_gamma_rational: denominator exceeds fraction table");
  for (long i = 0; i < k; ++i) r = dd_mul(r, dd_rational(double(s + i * den), double(den)));
  return r;
}

DD dd_rgamma_rational(long num, long den) {
  long g = std::gcd(std::labs(num), std::labs(den));
  if (g > 1) {
    num /= g;
    den /= g;
  }
  if (den == 1) {
    if (num <= 0) return DD(0.0);  // pole
    DD gpos = dd_gamma_rational(num, 1);
    return dd_div(DD(1.0), gpos);
  }
  if (num > 0) return dd_div(DD(1.0), dd_gamma_rational(num, den));
  // x = s/den - m with s in (0, den): 1/Gamma(x-1) = (x-1)/Gamma(x) applied m times
  long s = ((num % den) + den) % den;  // nonzero since reduced and den > 1
  long m = (s - num) / den;
  DD f;
  if (!lookup_gamma(den, s, f))
    throw ContractError("dd_rgamma_rational: denominator exceeds fraction table");
  DD r = dd_div(DD(1.0), f);
  for (long i = 1; i <= m; ++i) r = dd_mul(r, dd_rational(double(s - i * den), double(den)));
  return r;
}

Estimated ml_series(double alpha, double beta, double z, long shift) {
  return series_engine<double>(alpha, beta, z, shift);
}

EstimatedC ml_series_c(double alpha, double beta, std::complex<double> z, long shift) {
  return series_engine<std::complex<double>>(alpha, beta, z, shift);
}

Estimated ml_asymptotic(double alpha, double beta, double z) {
  Estimated out;
  if (!(z < 0.0) || !(alpha > 0.0) || alpha >= 1.0) return out;
  const double lz = std::log(-z);
  const double x = std::pow(-z, 1.0 / alpha);
  const long k_star = std::min<long>(350, std::lround(x / alpha));
  if (k_star < 2) return out;
  DD sum(0.0);
  double max_mag = 0.0, last_mag = 0.0, abs_sum = 0.0;
  for (long k = 1; k <= k_star; ++k) {
    // term = -z^{-k} rgamma(beta - alpha k); z^{-k} = (-1)^k |z|^{-k}
    const double arg = beta - alpha * double(k);
    double term;
    if (arg > 0.5) {
      term = rgamma(arg) * std::exp(-double(k) * lz);
    } else {
      // rgamma(arg) = sinpi(arg) Gamma(1 - arg) / pi, combined in log space
      const double lt = std::lgamma(1.0 - arg) - double(k) * lz - std::log(kPi);
      term = sinpi(arg) * std::exp(lt);
    }
    term *= (k % 2 == 0) ? -1.0 : 1.0;  // -(-1)^k
    sum = dd_add(sum, term);
    last_mag = std::fabs(term);
    abs_sum += last_mag;
    max_mag = std::max(max_mag, last_mag);
  }
  out.value = sum.to_double();
  out.terms = k_star;
  out.estimate = asym_remainder_bound(x) + 2.0 * last_mag + abs_sum * 2e-16;
  return out;
}

EstimatedC ml_asymptotic_c(double alpha, double beta, std::complex<double> z) {
  EstimatedC out;
  const double az = std::abs(z);
  if (!(alpha > 0.0) || alpha >= 1.0 || az < 2.0) return out;
  const double aarg = std::fabs(std::arg(z));
  const double sector = alpha * kPi;
  if (aarg > 0.98 * sector && aarg < 1.02 * sector) return out;  // Stokes band
  const double x = std::pow(az, 1.0 / alpha);
  const long k_star = std::min<long>(350, std::lround(x / alpha));
  if (k_star < 2) return out;
  DDC sum(DD(0.0), DD(0.0));
  const std::complex<double> zinv = 1.0 / z;
  std::complex<double> zp(1.0, 0.0);
  double abs_sum = 0.0, last_mag = 0.0;
  for (long k = 1; k <= k_star; ++k) {
    zp *= zinv;
    const std::complex<double> term = -zp * rgamma(beta - alpha * double(k));
    sum = ddc_add(sum, DDC(term));
    last_mag = std::abs(term);
    abs_sum += last_mag;
  }
  double est = asym_remainder_bound(x) + 2.0 * last_mag + abs_sum * 2e-16;
  const std::complex<double> w = std::pow(z, 1.0 / alpha);
  const double expmag =
      std::exp(w.real()) * std::pow(az, (1.0 - beta) / alpha) / alpha;
  if (aarg <= 0.98 * sector) {
    // exponential contribution present in this sector
    const std::complex<double> expterm =
        std::pow(z, (1.0 - beta) / alpha) * std::exp(w) / alpha;
    sum = ddc_add(sum, DDC(expterm));
    if (aarg >= 0.75 * sector) est += expmag * 1e-13 + asym_remainder_bound(x);
  } else {
    // excluded: account for the suppressed exponential's magnitude
    est += expmag;
  }
  out.value = sum.to_complex();
  out.terms = k_star;
  out.estimate = est;
  return out;
}

Estimated ml_auto(double alpha, double beta, double z, double tol) {
  if (z == 0.0) {
    Estimated r;
    r.value = rgamma(beta);
    r.estimate = 2.2e-16 * (std::fabs(r.value) + 1.0);
    r.terms = 1;
    return r;
  }
  const bool asym_applicable = (z < 0.0) && (alpha < 1.0);
  const bool prefer_series = (std::fabs(z) <= 15.0) || !asym_applicable;
  Estimated first = prefer_series ? ml_series(alpha, beta, z)
                                  : ml_asymptotic(alpha, beta, z);
  if (first.estimate <= tol) return first;
  Estimated second = prefer_series ? ml_asymptotic(alpha, beta, z)
                                   : ml_series(alpha, beta, z);
  if (second.estimate <= tol) return second;
  return (first.estimate <= second.estimate) ? first : second;
}

EstimatedC ml_auto_c(double alpha, double beta, std::complex<double> z, double tol) {
  if (std::abs(z.imag()) == 0.0) {
    Estimated r = ml_auto(alpha, beta, z.real(), tol);
    return {std::complex<double>(r.value, 0.0), r.estimate, r.terms};
  }
  const bool prefer_series = std::abs(z) <= 15.0 || alpha >= 1.0;
  EstimatedC first = prefer_series ? ml_series_c(alpha, beta, z)
                                   : ml_asymptotic_c(alpha, beta, z);
  if (first.estimate <= tol) return first;
  EstimatedC second = prefer_series ? ml_asymptotic_c(alpha, beta, z)
                                    : ml_series_c(alpha, beta, z);
  if (second.estimate <= tol) return second;
  return (first.estimate <= second.estimate) ? first : second;
}

}  // namespace detail

double gamma_fn(double x) {
  if (!std::isfinite(x)) throw ValidationError("x: must be finite");
  if (x > 170.62) throw ValidationError("x: Gamma overflows double beyond 170.6");
  if (x < -170.0) throw ValidationError("x: outside supported envelope |x| <= 170");
  if (x <= 0.0 && x == std::floor(x))
    throw ValidationError("x: pole of Gamma at a non-positive integer");
  if (x > 0.0) return std::tgamma(x);
  return detail::kPi / (detail::sinpi(x) * std::tgamma(1.0 - x));
}

double mittag_leffler(const MLParams& p, double z) {
  if (!(p.alpha > 0.0) || !std::isfinite(p.alpha))
    throw ValidationError("alpha: must be positive and finite");
  if (!std::isfinite(p.beta)) throw ValidationError("beta: must be finite");
  if (!(p.tol > 0.0)) throw ValidationError("tol: must be positive");
  if (!std::isfinite(z)) throw ValidationError("z: must be finite");
  detail::Estimated r = detail::ml_auto(p.alpha, p.beta, z, p.tol);
  if (!(r.estimate <= p.tol))
    throw NumericalError("mittag_leffler: no route reached the requested tolerance",
                         r.value, r.estimate);
  return r.value;
}

double wright(const WrightParams& p, double theta) {
  if (!(p.alpha > 0.0) || !(p.alpha < 1.0))
    throw ValidationError("alpha: must lie in (0,1)");
  if (!(p.tol > 0.0)) throw ValidationError("tol: must be positive");
  if (!(theta >= 0.0) || !std::isfinite(theta))
    throw ValidationError("theta: must be finite and >= 0");

  const double alpha = p.alpha;
  // factorially convergent; peak index ~ (theta alpha^alpha)^{1/(1-alpha)}
  const double n_peak =
      std::pow(std::max(theta, 1e-6) * std::pow(alpha, alpha), 1.0 / (1.0 - alpha));
  if (n_peak > 6e4)
    throw NumericalError("wright: series peak beyond evaluation budget", 0.0,
                         std::numeric_limits<double>::infinity());
  const long n_max = std::min<long>(200000, 3 * (long)n_peak + 256);
  const double stop_abs = std::max(1e-300, 1e-3 * p.tol);

  detail::Rational rat;
  const bool exact = detail::detect_rational(alpha, 24, rat) && rat.num > 0;

  DD sum(0.0);
  double max_mag = 0.0;
  double seed_noise = 0.0;
  long n_done = 0;
  int tiny_run = 0;
  bool converged = false;

  if (exact) {
    const long pp = rat.num, q = rat.den;
    std::vector<DD> ring(size_t(q), DD(0.0));
    const DD tq = dd_powi(-theta, q);
    for (long n = 0; n <= n_max; ++n) {
      DD term;
      const long slot = n % q;
      if (n < q) {
        // seed: (-theta)^n / n! * rgamma(1 - alpha (n+1))
        term = dd_mul(dd_powi(-theta, n),
                      detail::dd_rgamma_rational(q - pp * (n + 1), q));
        for (long i = 2; i <= n; ++i) term = dd_div(term, DD(double(i)));
      } else {
        const long nn = n - q;
        term = dd_mul(ring[slot], tq);
        // rgamma(x - p) = rgamma(x) (x-1)(x-2)...(x-p), x = 1 - alpha (nn+1)
        for (long r = 1; r <= pp; ++r)
          term = dd_mul(term, dd_rational(double(q - pp * (nn + 1) - r * q), double(q)));
        for (long i = 1; i <= q; ++i) term = dd_div(term, DD(double(nn + i)));
      }
      ring[slot] = term;
      sum = dd_add(sum, term);
      const double tm = dd_abs(term);
      max_mag = std::max({max_mag, tm, dd_abs(sum)});
      n_done = n + 1;
      if (tm < stop_abs && n > (long)n_peak) {
        if (++tiny_run >= q + 1) {
          converged = true;
          break;
        }
      } else {
        tiny_run = 0;
      }
    }
  } else {
    const double lth = std::log(std::max(theta, 1e-300));
    for (long n = 0; n <= n_max; ++n) {
      // |term| = theta^n / n! Gamma(alpha(n+1)) |sinpi(alpha(n+1))| / pi
      const double y = alpha * double(n + 1);
      const double lt = double(n) * lth - std::lgamma(double(n) + 1.0) +
                        std::lgamma(y) - std::log(detail::kPi);
      double term = detail::sinpi(y) * std::exp(lt);
      if (n % 2 == 1) term = -term;
      if (theta == 0.0 && n > 0) term = 0.0;
      sum = dd_add(sum, term);
      const double tm = std::fabs(term);
      seed_noise += tm * (2.0 + std::fabs(lt)) * 1e-15;
      max_mag = std::max({max_mag, tm, dd_abs(sum)});
      n_done = n + 1;
      if (tm < stop_abs && n > (long)n_peak) {
        if (++tiny_run >= 3) {
          converged = true;
          break;
        }
      } else {
        tiny_run = 0;
      }
    }
  }

  const double est =
      converged ? detail::dd_noise(n_done, max_mag) + seed_noise + 4.0 * stop_abs
                : std::numeric_limits<double>::infinity();
  const double value = sum.to_double();
  if (!(est <= p.tol))
    throw NumericalError("wright: cancellation estimate exceeds tolerance", value, est);
  return value;
}

namespace {

bool exactly_diagonal(const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (i != j && m(i, j) != 0.0) return false;
  return true;
}

// Truncated matrix power series fallback: sum_k (M s)^k rgamma(alpha k + beta).
Eigen::MatrixXd ml_matrix_series(const MLParams& p, const Eigen::MatrixXd& M,
                                 double scale, double* est_out) {
  const Eigen::Index n = M.rows();
  const Eigen::MatrixXd X = M * scale;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd pw = Eigen::MatrixXd::Identity(n, n);
  double max_mag = 0.0, term_norm = 0.0;
  long k = 0;
  for (; k <= 400; ++k) {
    Eigen::MatrixXd term = pw * detail::rgamma(p.alpha * double(k) + p.beta);
    acc += term;
    term_norm = term.cwiseAbs().maxCoeff();
    max_mag = std::max({max_mag, term_norm, acc.cwiseAbs().maxCoeff()});
    if (term_norm < 1e-17 * std::max(1.0, max_mag) && k > 4) break;
    pw = pw * X;
  }
  *est_out = max_mag * double(k + 1) * double(n) * 2e-16 + 2.0 * term_norm;
  return acc;
}

}  // namespace

Eigen::MatrixXd mittag_leffler_matrix(const MLParams& p, const Eigen::MatrixXd& M,
                                      double scale) {
  if (!(p.alpha > 0.0) || !std::isfinite(p.alpha))
    throw ValidationError("alpha: must be positive and finite");
  if (!std::isfinite(p.beta)) throw ValidationError("beta: must be finite");
  if (!(p.tol > 0.0)) throw ValidationError("tol: must be positive");
  if (M.rows() != M.cols()) throw ValidationError("M: must be square");
  if (!std::isfinite(scale)) throw ValidationError("scale: must be finite");
  const Eigen::Index n = M.rows();
  if (n == 0) return Eigen::MatrixXd(0, 0);

  const double scalar_tol = std::max(p.tol / (4.0 * double(n)), 1e-14);

  if (exactly_diagonal(M)) {
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      detail::Estimated e = detail::ml_auto(p.alpha, p.beta, M(i, i) * scale, scalar_tol);
      if (!(e.estimate <= p.tol))
        throw NumericalError("mittag_leffler_matrix: diagonal entry out of tolerance",
                             e.value, e.estimate);
      r(i, i) = e.value;
    }
    return r;
  }

  const double sym_gap = (M - M.transpose()).cwiseAbs().maxCoeff();
  if (sym_gap <= 1e-13 * (1.0 + M.cwiseAbs().maxCoeff())) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    if (es.info() == Eigen::Success) {
      Eigen::VectorXd f(n);
      bool ok = true;
      for (Eigen::Index i = 0; i < n; ++i) {
        detail::Estimated e =
            detail::ml_auto(p.alpha, p.beta, es.eigenvalues()(i) * scale, scalar_tol);
        if (!(e.estimate <= p.tol)) ok = false;
        f(i) = e.value;
      }
      if (ok)
        return es.eigenvectors() * f.asDiagonal() * es.eigenvectors().transpose();
    }
  } else {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(M.cast<std::complex<double>>());
    if (es.info() == Eigen::Success) {
      const Eigen::MatrixXcd& V = es.eigenvectors();
      Eigen::JacobiSVD<Eigen::MatrixXcd> svd(V);
      const double smin = svd.singularValues()(n - 1);
      const double smax = svd.singularValues()(0);
      if (smin > 0.0 && smax / smin <= 1e8) {
        Eigen::VectorXcd f(n);
        bool ok = true;
        for (Eigen::Index i = 0; i < n; ++i) {
          detail::EstimatedC e =
              detail::ml_auto_c(p.alpha, p.beta, es.eigenvalues()(i) * scale, scalar_tol);
          if (!(e.estimate <= p.tol)) ok = false;
          f(i) = e.value;
        }
        if (ok) {
          Eigen::MatrixXcd R = V * f.asDiagonal() * V.inverse();
          const double imax = R.imag().cwiseAbs().maxCoeff();
          const double rmax = R.real().cwiseAbs().maxCoeff();
          if (imax <= std::max(1e-9, 1e-8 * rmax)) return R.real();
        }
      }
    }
  }

  double est = 0.0;
  Eigen::MatrixXd r = ml_matrix_series(p, M, scale, &est);
  if (!(est <= p.tol))
    throw NumericalError(
        "mittag_leffler_matrix: eigendecomposition guard failed and the power-series "
        "fallback did not reach the requested tolerance",
        0.0, est);
  return r;
}

}  // namespace fracctl

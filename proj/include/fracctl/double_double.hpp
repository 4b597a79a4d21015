#pragma once

#include <cmath>
#include <complex>

namespace fracctl {

// Double-double value: hi + lo with |lo| <= ulp(hi)/2. Roughly 31 significant
// decimal digits. Used for compensated series summation where alternating
// cancellation exceeds plain binary64.
struct DD {
  double hi = 0.0;
  double lo = 0.0;

  DD() = default;
  constexpr DD(double h) : hi(h), lo(0.0) {}
  constexpr DD(double h, double l) : hi(h), lo(l) {}

  double to_double() const { return hi + lo; }
};

namespace ddops {

// Error-free sum: a + b = s + err exactly.
inline DD two_sum(double a, double b) {
  double s = a + b;
  double bb = s - a;
  double err = (a - (s - bb)) + (b - bb);
  return {s, err};
}

// Error-free sum assuming |a| >= |b|.
inline DD quick_two_sum(double a, double b) {
  double s = a + b;
  double err = b - (s - a);
  return {s, err};
}

// Error-free product: a * b = p + err exactly (FMA-based).
inline DD two_prod(double a, double b) {
  double p = a * b;
  double err = std::fma(a, b, -p);
  return {p, err};
}

}  // namespace ddops

inline DD dd_add(const DD& a, const DD& b) {
  using namespace ddops;
  DD s = two_sum(a.hi, b.hi);
  DD t = two_sum(a.lo, b.lo);
  s.lo += t.hi;
  s = quick_two_sum(s.hi, s.lo);
  s.lo += t.lo;
  return quick_two_sum(s.hi, s.lo);
}

inline DD dd_add(const DD& a, double b) {
  using namespace ddops;
  DD s = two_sum(a.hi, b);
  s.lo += a.lo;
  return quick_two_sum(s.hi, s.lo);
}

inline DD dd_neg(const DD& a) { return {-a.hi, -a.lo}; }

inline DD dd_sub(const DD& a, const DD& b) { return dd_add(a, dd_neg(b)); }

inline DD dd_mul(const DD& a, const DD& b) {
  using namespace ddops;
  DD p = two_prod(a.hi, b.hi);
  p.lo += a.hi * b.lo + a.lo * b.hi;
  return quick_two_sum(p.hi, p.lo);
}

inline DD dd_mul(const DD& a, double b) {
  using namespace ddops;
  DD p = two_prod(a.hi, b);
  p.lo += a.lo * b;
  return quick_two_sum(p.hi, p.lo);
}

inline DD dd_div(const DD& a, const DD& b) {
  double q1 = a.hi / b.hi;
  DD r = dd_sub(a, dd_mul(b, q1));
  double q2 = r.hi / b.hi;
  r = dd_sub(r, dd_mul(b, q2));
  double q3 = r.hi / b.hi;
  DD q = ddops::quick_two_sum(q1, q2);
  return dd_add(q, q3);
}

inline DD dd_div(const DD& a, double b) { return dd_div(a, DD(b)); }

// Exact rational num/den as a double-double (num, den exactly representable).
inline DD dd_rational(double num, double den) { return dd_div(DD(num), DD(den)); }

inline double dd_abs(const DD& a) { return std::fabs(a.hi); }

// Integer power of a double, accumulated in double-double.
inline DD dd_powi(double base, long n) {
  DD acc(1.0);
  DD b(base);
  long k = n;
  while (k > 0) {
    if (k & 1) acc = dd_mul(acc, b);
    b = dd_mul(b, b);
    k >>= 1;
  }
  return acc;
}

// Complex double-double built from two real components.
struct DDC {
  DD re;
  DD im;

  DDC() = default;
  DDC(const DD& r, const DD& i) : re(r), im(i) {}
  explicit DDC(const std::complex<double>& z) : re(z.real()), im(z.imag()) {}

  std::complex<double> to_complex() const {
    return {re.to_double(), im.to_double()};
  }
};

inline DDC ddc_add(const DDC& a, const DDC& b) {
  return {dd_add(a.re, b.re), dd_add(a.im, b.im)};
}

inline DDC ddc_mul(const DDC& a, const DDC& b) {
  return {dd_sub(dd_mul(a.re, b.re), dd_mul(a.im, b.im)),
          dd_add(dd_mul(a.re, b.im), dd_mul(a.im, b.re))};
}

inline DDC ddc_mul(const DDC& a, const DD& s) {
  return {dd_mul(a.re, s), dd_mul(a.im, s)};
}

inline DDC ddc_div(const DDC& a, const DD& s) {
  return {dd_div(a.re, s), dd_div(a.im, s)};
}

inline double ddc_abs(const DDC& a) { return std::hypot(a.re.hi, a.im.hi); }

// Integer power of a complex double, accumulated in complex double-double.
inline DDC ddc_powi(const std::complex<double>& base, long n) {
  DDC acc(DD(1.0), DD(0.0));
  DDC b(base);
  long k = n;
  while (k > 0) {
    if (k & 1) acc = ddc_mul(acc, b);
    b = ddc_mul(b, b);
    k >>= 1;
  }
  return acc;
}

}  // namespace fracctl

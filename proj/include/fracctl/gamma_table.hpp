#pragma once

namespace fracctl::detail {

// Gamma(s/q) at reduced fractions s/q (1 <= s <= q <= 24, gcd(s,q) = 1),
// stored as double-double.
struct GammaTableEntry {
  int q;
  int s;
  double hi;
  double lo;
};

extern const GammaTableEntry kGammaTable[];
extern const int kGammaTableSize;

}  // namespace fracctl::detail

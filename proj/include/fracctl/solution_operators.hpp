#pragma once

#include <Eigen/Dense>
#include <complex>
#include <map>
#include <vector>

#include "fracctl/system.hpp"

namespace fracctl {

// Shared evaluation context for one spec: the eigendecomposition of A (when
// usable), memoized solution-operator matrices keyed by exact binary64 time
// offset, and lazily grown singular-kernel moment tables per uniform grid
// spacing. Single-threaded use; all returned references remain valid for the
// cache lifetime.
class OperatorCache {
 public:
  explicit OperatorCache(const SystemSpec& spec);

  const SystemSpec& spec() const { return spec_; }
  double alpha() const { return spec_.order.alpha; }

  // E_alpha(A t^alpha): the fractional analogue of the semigroup at offset t.
  const Eigen::MatrixXd& s_alpha(double t);
  // E_{alpha,alpha}(A t^alpha): the convolution-kernel operator at offset t.
  const Eigen::MatrixXd& p_alpha(double t);

  // True when A admits a trustworthy eigendecomposition (cond(V) <= 1e8);
  // otherwise matrix-function fallbacks are used throughout.
  bool spectral() const { return spectral_; }
  const Eigen::VectorXcd& eigenvalues() const { return lambda_; }
  const Eigen::MatrixXcd& eigenvectors() const { return V_; }
  const Eigen::MatrixXcd& eigenvectors_inverse() const { return Vinv_; }

  // Per-eigencomponent tables of cumulative kernel moments on the lattice
  // {d*h}: g0[c][d] = G0(d*h; lambda_c), g1[c][d] = G1(d*h; lambda_c); grown
  // on demand, memoized by exact spacing h.
  struct MomentTable {
    std::vector<std::vector<std::complex<double>>> g0, g1;
  };
  const MomentTable& moment_table(double h, int max_distance);

 private:
  Eigen::MatrixXd evaluate(double beta, double t) const;

  SystemSpec spec_;
  bool spectral_ = false;
  bool diagonal_ = false;
  bool symmetric_ = false;
  Eigen::VectorXcd lambda_;
  Eigen::MatrixXcd V_, Vinv_;
  std::map<double, Eigen::MatrixXd> s_memo_, p_memo_;
  std::map<double, MomentTable> moments_;
};

// Free-function façade mirroring the operator names.
inline const Eigen::MatrixXd& s_alpha(OperatorCache& cache, double t) {
  return cache.s_alpha(t);
}
inline const Eigen::MatrixXd& p_alpha(OperatorCache& cache, double t) {
  return cache.p_alpha(t);
}

namespace kernels {

// Cumulative moments of the weakly singular convolution kernel
// tau^{alpha-1} E_{alpha,alpha}(lambda tau^alpha):
//   G0(T) = integral_0^T tau^{alpha-1} E_{alpha,alpha}(lambda tau^alpha) dtau
//         = T^alpha E_{alpha,alpha+1}(lambda T^alpha),
//   G1(T) = integral_0^T tau^alpha   E_{alpha,alpha}(lambda tau^alpha) dtau
//         = T^{alpha+1} (E_alpha(w) - E_{alpha,2}(w)) / w,  w = lambda T^alpha.
// Product integration built on these is exact for piecewise-linear data.
double g0(double alpha, double T, double lambda, double tol = 1e-12);
double g1(double alpha, double T, double lambda, double tol = 1e-12);
std::complex<double> g0c(double alpha, double T, std::complex<double> lambda,
                         double tol = 1e-12);
std::complex<double> g1c(double alpha, double T, std::complex<double> lambda,
                         double tol = 1e-12);

}  // namespace kernels

// integral_a^t (t-s)^{alpha-1} P_alpha(t-s) B u(s) ds with u taken
// piecewise-linear on the bundle grid and the mask clipping inactive
// channels cell by cell. a and t must be grid nodes; empty intervals yield
// the zero vector. Exact in u via the kernel moments above (spectral route);
// endpoint-blended product integration otherwise.
Eigen::VectorXd singular_convolve(OperatorCache& cache, double a, double t,
                                  const ControlBundle& bundle);

}  // namespace fracctl

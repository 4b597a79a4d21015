#include "fracctl/solution_operators.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <complex>

#include "fracctl/errors.hpp"
#include "fracctl/special_functions.hpp"

namespace fracctl {
namespace {

constexpr double kMatrixTol = 1e-12;

double scalar_tol(int n) { return std::max(kMatrixTol / (4.0 * n), 1e-14); }

bool exactly_diagonal(const Eigen::MatrixXd& A) {
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      if (i != j && A(i, j) != 0.0) return false;
  return true;
}

bool nearly_symmetric(const Eigen::MatrixXd& A) {
  const double gap = (A - A.transpose()).cwiseAbs().maxCoeff();
  return gap <= 1e-13 * (1.0 + A.cwiseAbs().maxCoeff());
}

// Masked endpoint samples of u on one grid cell; channel activity is
// constant inside a cell because window boundaries are grid nodes.
void masked_cell_controls(const SystemSpec& spec, const ControlBundle& bundle,
                          int cell, double mid, Eigen::VectorXd& uL,
                          Eigen::VectorXd& uR) {
  uL = bundle.u.col(cell);
  uR = bundle.u.col(cell + 1);
  if (spec.control_mask.empty()) return;
  for (int j = 0; j < spec.dim_control; ++j)
    if (!channel_active(spec, j, mid)) {
      uL[j] = 0.0;
      uR[j] = 0.0;
    }
}

}  // namespace

namespace kernels {

double g0(double alpha, double T, double lambda, double tol) {
  assert(T >= 0.0);
  if (T == 0.0) return 0.0;
  const double ts = std::pow(T, alpha);
  const detail::Estimated r = detail::ml_auto(alpha, alpha + 1.0, lambda * ts, tol);
  if (!(r.estimate <= tol))
    throw NumericalError("g0: kernel moment did not reach tolerance", r.value,
                         r.estimate);
  return ts * r.value;
}

std::complex<double> g0c(double alpha, double T, std::complex<double> lambda,
                         double tol) {
  assert(T >= 0.0);
  if (T == 0.0) return {0.0, 0.0};
  const double ts = std::pow(T, alpha);
  const detail::EstimatedC r =
      detail::ml_auto_c(alpha, alpha + 1.0, lambda * ts, tol);
  if (!(r.estimate <= tol))
    throw NumericalError("g0: kernel moment did not reach tolerance",
                         std::abs(r.value), r.estimate);
  return ts * r.value;
}

namespace {

// (E_alpha(w) - E_{alpha,2}(w)) / w as an entire function of w:
// sum_j alpha (j+1) w^j / Gamma(alpha j + alpha + 2). Plain double suffices
// for |w| <= 1/2 (no cancellation).
template <class Z>
Z g1_small_series(double alpha, Z w) {
  Z pw = Z(1.0), acc = Z(0.0);
  for (int j = 0; j < 300; ++j) {
    const double c = alpha * (j + 1) * detail::rgamma(alpha * j + alpha + 2.0);
    const Z term = pw * c;
    acc += term;
    if (j > 4 && std::abs(term) <= 1e-18 * std::max(1.0, std::abs(acc))) break;
    pw *= w;
  }
  return acc;
}

}  // namespace

double g1(double alpha, double T, double lambda, double tol) {
  assert(T >= 0.0);
  if (T == 0.0) return 0.0;
  const double ts = std::pow(T, alpha);
  const double w = lambda * ts;
  double s;
  if (std::fabs(w) <= 0.5) {
    s = g1_small_series(alpha, w);
  } else {
    const detail::Estimated e1 = detail::ml_auto(alpha, 1.0, w, 0.25 * tol);
    const detail::Estimated e2 = detail::ml_auto(alpha, 2.0, w, 0.25 * tol);
    const double est = (e1.estimate + e2.estimate) / std::fabs(w);
    if (!(est <= tol))
      throw NumericalError("g1: kernel moment did not reach tolerance",
                           (e1.value - e2.value) / w, est);
    s = (e1.value - e2.value) / w;
  }
  return ts * T * s;
}

std::complex<double> g1c(double alpha, double T, std::complex<double> lambda,
                         double tol) {
  assert(T >= 0.0);
  if (T == 0.0) return {0.0, 0.0};
  const double ts = std::pow(T, alpha);
  const std::complex<double> w = lambda * ts;
  std::complex<double> s;
  if (std::abs(w) <= 0.5) {
    s = g1_small_series(alpha, w);
  } else {
    const detail::EstimatedC e1 = detail::ml_auto_c(alpha, 1.0, w, 0.25 * tol);
    const detail::EstimatedC e2 = detail::ml_auto_c(alpha, 2.0, w, 0.25 * tol);
    const double est = (e1.estimate + e2.estimate) / std::abs(w);
    if (!(est <= tol))
      throw NumericalError("g1: kernel moment did not reach tolerance",
                           std::abs((e1.value - e2.value) / w), est);
    s = (e1.value - e2.value) / w;
  }
  return ts * T * s;
}

}  // namespace kernels

OperatorCache::OperatorCache(const SystemSpec& spec) : spec_(validate(spec)) {
  const int n = spec_.dim_state;
  const Eigen::MatrixXd& A = spec_.A;
  if (exactly_diagonal(A)) {
    diagonal_ = true;
    spectral_ = true;
    lambda_ = A.diagonal().cast<std::complex<double>>();
    V_ = Eigen::MatrixXcd::Identity(n, n);
    Vinv_ = V_;
    return;
  }
  if (nearly_symmetric(A)) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        0.5 * (A + A.transpose()));
    if (es.info() == Eigen::Success) {
      symmetric_ = true;
      spectral_ = true;
      lambda_ = es.eigenvalues().cast<std::complex<double>>();
      V_ = es.eigenvectors().cast<std::complex<double>>();
      Vinv_ = es.eigenvectors().transpose().cast<std::complex<double>>();
      return;
    }
  }
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(
      A.cast<std::complex<double>>());
  if (es.info() == Eigen::Success) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(es.eigenvectors());
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    if (smin > 0.0 && smax / smin <= 1e8) {
      spectral_ = true;
      lambda_ = es.eigenvalues();
      V_ = es.eigenvectors();
      Vinv_ = V_.inverse();
    }
  }
  // Non-diagonalizable or ill-conditioned eigenbasis: matrix-function
  // fallbacks handle every evaluation.
}

Eigen::MatrixXd OperatorCache::evaluate(double beta, double t) const {
  const int n = spec_.dim_state;
  const double a = alpha();
  if (t == 0.0)
    return detail::rgamma(beta) * Eigen::MatrixXd::Identity(n, n);
  const double ts = std::pow(t, a);
  if (!spectral_) {
    MLParams p;
    p.alpha = a;
    p.beta = beta;
    p.tol = kMatrixTol;
    return mittag_leffler_matrix(p, spec_.A, ts);
  }
  const double stol = scalar_tol(n);
  Eigen::VectorXcd f(n);
  for (int i = 0; i < n; ++i) {
    const std::complex<double> z = lambda_[i] * ts;
    if (z.imag() == 0.0) {
      const detail::Estimated r = detail::ml_auto(a, beta, z.real(), stol);
      if (!(r.estimate <= kMatrixTol))
        throw NumericalError(
            "solution operator: scalar evaluation missed tolerance", r.value,
            r.estimate);
      f[i] = r.value;
    } else {
      const detail::EstimatedC r = detail::ml_auto_c(a, beta, z, stol);
      if (!(r.estimate <= kMatrixTol))
        throw NumericalError(
            "solution operator: scalar evaluation missed tolerance",
            std::abs(r.value), r.estimate);
      f[i] = r.value;
    }
  }
  if (diagonal_) {
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) R(i, i) = f[i].real();
    return R;
  }
  const Eigen::MatrixXcd Rc = V_ * f.asDiagonal() * Vinv_;
  const double rmax = Rc.real().cwiseAbs().maxCoeff();
  if (Rc.imag().cwiseAbs().maxCoeff() > 1e-8 * (1.0 + rmax))
    throw NumericalError(
        "solution operator: spectral reconstruction lost realness", rmax,
        Rc.imag().cwiseAbs().maxCoeff());
  return Rc.real();
}

const Eigen::MatrixXd& OperatorCache::s_alpha(double t) {
  if (!std::isfinite(t) || t < 0.0)
    throw ContractError("s_alpha: offset must be finite and >= 0");
  auto it = s_memo_.find(t);
  if (it == s_memo_.end()) it = s_memo_.emplace(t, evaluate(1.0, t)).first;
  return it->second;
}

const Eigen::MatrixXd& OperatorCache::p_alpha(double t) {
  if (!std::isfinite(t) || t < 0.0)
    throw ContractError("p_alpha: offset must be finite and >= 0");
  auto it = p_memo_.find(t);
  if (it == p_memo_.end()) it = p_memo_.emplace(t, evaluate(alpha(), t)).first;
  return it->second;
}

const OperatorCache::MomentTable& OperatorCache::moment_table(double h,
                                                              int max_distance) {
  if (!spectral_)
    throw ContractError("moment_table: requires a spectral decomposition");
  MomentTable& tab = moments_[h];
  const int n = spec_.dim_state;
  if (tab.g0.empty()) {
    tab.g0.assign(n, {std::complex<double>(0.0, 0.0)});
    tab.g1.assign(n, {std::complex<double>(0.0, 0.0)});
  }
  const double tol = scalar_tol(n);
  for (int c = 0; c < n; ++c) {
    const std::complex<double> lam = lambda_[c];
    const bool real_lam = lam.imag() == 0.0;
    for (int d = int(tab.g0[c].size()); d <= max_distance; ++d) {
      const double T = double(d) * h;
      if (real_lam) {
        tab.g0[c].push_back(kernels::g0(alpha(), T, lam.real(), tol));
        tab.g1[c].push_back(kernels::g1(alpha(), T, lam.real(), tol));
      } else {
        tab.g0[c].push_back(kernels::g0c(alpha(), T, lam, tol));
        tab.g1[c].push_back(kernels::g1c(alpha(), T, lam, tol));
      }
    }
  }
  return tab;
}

Eigen::VectorXd singular_convolve(OperatorCache& cache, double a, double t,
                                  const ControlBundle& bundle) {
  const SystemSpec& spec = cache.spec();
  const int n = spec.dim_state;
  if (!(a <= t)) throw ContractError("singular_convolve: need a <= t");
  if (a == t) return Eigen::VectorXd::Zero(n);
  const std::vector<double>& grid = bundle.grid;
  if (Eigen::Index(grid.size()) != bundle.u.cols() ||
      bundle.u.rows() != spec.dim_control)
    throw ContractError("singular_convolve: bundle samples mismatch the grid");
  const auto lo = std::lower_bound(grid.begin(), grid.end(), a);
  const auto hi = std::lower_bound(grid.begin(), grid.end(), t);
  if (lo == grid.end() || *lo != a)
    throw ContractError("singular_convolve: a is not a grid node");
  if (hi == grid.end() || *hi != t)
    throw ContractError("singular_convolve: t is not a grid node");
  const int ia = int(lo - grid.begin());
  const int it = int(hi - grid.begin());
  const int K = it - ia;

  const double span = t - a;
  const double h = span / K;
  bool uniform = true;
  for (int i = 1; i < K && uniform; ++i)
    uniform = std::fabs(grid[ia + i] - (a + h * double(i))) <= 1e-12 * span;

  Eigen::VectorXd uL(spec.dim_control), uR(spec.dim_control);

  if (cache.spectral()) {
    const Eigen::MatrixXcd& V = cache.eigenvectors();
    const Eigen::MatrixXcd& Vinv = cache.eigenvectors_inverse();
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(n);
    const OperatorCache::MomentTable* tab =
        uniform ? &cache.moment_table(h, K) : nullptr;
    const double talpha = cache.alpha();
    const double tol = scalar_tol(n);
    for (int i = 0; i < K; ++i) {
      const double sl = grid[ia + i], sr = grid[ia + i + 1];
      masked_cell_controls(spec, bundle, ia + i, 0.5 * (sl + sr), uL, uR);
      const Eigen::VectorXcd cL =
          Vinv * (spec.B * uL).cast<std::complex<double>>();
      const Eigen::VectorXcd cR =
          Vinv * (spec.B * uR).cast<std::complex<double>>();
      const double hc = sr - sl;
      const int d = K - i;
      for (int c = 0; c < n; ++c) {
        std::complex<double> M0, I1;
        double tau_hi;
        if (tab) {
          M0 = tab->g0[c][d] - tab->g0[c][d - 1];
          I1 = tab->g1[c][d] - tab->g1[c][d - 1];
          tau_hi = double(d) * h;
        } else {
          const std::complex<double> lam = cache.eigenvalues()[c];
          tau_hi = t - sl;
          const double tau_lo = t - sr;
          if (lam.imag() == 0.0) {
            M0 = kernels::g0(talpha, tau_hi, lam.real(), tol) -
                 kernels::g0(talpha, tau_lo, lam.real(), tol);
            I1 = kernels::g1(talpha, tau_hi, lam.real(), tol) -
                 kernels::g1(talpha, tau_lo, lam.real(), tol);
          } else {
            M0 = kernels::g0c(talpha, tau_hi, lam, tol) -
                 kernels::g0c(talpha, tau_lo, lam, tol);
            I1 = kernels::g1c(talpha, tau_hi, lam, tol) -
                 kernels::g1c(talpha, tau_lo, lam, tol);
          }
        }
        const std::complex<double> M1 = (tau_hi * M0 - I1) / hc;
        acc[c] += cL[c] * (M0 - M1) + cR[c] * M1;
      }
    }
    return (V * acc).real();
  }

  // Fallback: P_alpha endpoint evaluations blended linearly inside each cell
  // against the closed-form moments of the bare kernel power.
  const double al = cache.alpha();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < K; ++i) {
    const double sl = grid[ia + i], sr = grid[ia + i + 1];
    masked_cell_controls(spec, bundle, ia + i, 0.5 * (sl + sr), uL, uR);
    const double hc = sr - sl;
    const double tau_hi = uniform ? double(K - i) * h : t - sl;
    const double tau_lo = uniform ? double(K - i - 1) * h : t - sr;
    const double m0 =
        (std::pow(tau_hi, al) - std::pow(tau_lo, al)) / al;
    const double m1 =
        (tau_hi * m0 -
         (std::pow(tau_hi, al + 1.0) - std::pow(tau_lo, al + 1.0)) /
             (al + 1.0)) /
        hc;
    acc += (cache.p_alpha(tau_hi) * (spec.B * uL)) * (m0 - m1) +
           (cache.p_alpha(tau_lo) * (spec.B * uR)) * m1;
  }
  return acc;
}

}  // namespace fracctl

#include "fracctl/propagator.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <complex>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "fracctl/errors.hpp"
#include "detail.hpp"

namespace fracctl {
namespace {

constexpr int kAdjointSampleCells = 64;

// Endpoint control samples of one grid cell with channels inactive at the
// cell midpoint zeroed. Mask windows whose boundaries are grid nodes are
// thereby honored exactly (activity is constant across such a cell).
void masked_cell_controls(const SystemSpec& spec, const ControlBundle& bundle,
                          int cell, double mid, Eigen::VectorXd& uL,
                          Eigen::VectorXd& uR) {
  uL = bundle.u.col(cell);
  uR = bundle.u.col(cell + 1);
  for (int ch = 0; ch < spec.dim_control; ++ch)
    if (!channel_active(spec, ch, mid)) {
      uL[ch] = 0.0;
      uR[ch] = 0.0;
    }
}

// States at every node of one inter-impulse interval, measured from the
// post-impulse state at its left boundary: column p holds
//   x(g_{ia+p}) = S_alpha(g_{ia+p} - g_ia) xplus + conv(g_ia -> g_{ia+p}),
// p = 0..K with K = it - ia. On a uniform spectral lattice all nodes are
// swept together, reusing the per-cell eigencoordinate controls so the
// whole interval costs O(K^2 n) arithmetic on O(K n) special-function
// values; otherwise each node falls back to the shared singular
// convolution.
Eigen::MatrixXd interval_states(OperatorCache& cache,
                                const ControlBundle& bundle, int ia, int it,
                                const Eigen::VectorXd& xplus) {
  const SystemSpec& spec = cache.spec();
  const int n = spec.dim_state;
  const int K = it - ia;
  const std::vector<double>& grid = bundle.grid;
  const double a = grid[ia];
  const double span = grid[it] - a;
  const double h = span / K;
  bool uniform = true;
  for (int i = 1; i < K && uniform; ++i)
    uniform = std::fabs(grid[ia + i] - (a + h * double(i))) <= 1e-12 * span;

  Eigen::MatrixXd out(n, K + 1);
  out.col(0) = xplus;

  if (cache.spectral() && uniform) {
    const Eigen::MatrixXcd& V = cache.eigenvectors();
    const Eigen::MatrixXcd& Vinv = cache.eigenvectors_inverse();
    const OperatorCache::MomentTable& tab = cache.moment_table(h, K);
    Eigen::MatrixXcd CL(n, K), CR(n, K);
    Eigen::VectorXd hc(K);
    Eigen::VectorXd uL(spec.dim_control), uR(spec.dim_control);
    for (int i = 0; i < K; ++i) {
      const double sl = grid[ia + i], sr = grid[ia + i + 1];
      masked_cell_controls(spec, bundle, ia + i, 0.5 * (sl + sr), uL, uR);
      CL.col(i) = Vinv * (spec.B * uL).cast<std::complex<double>>();
      CR.col(i) = Vinv * (spec.B * uR).cast<std::complex<double>>();
      hc[i] = sr - sl;
    }
    Eigen::VectorXcd acc(n);
    for (int p = 1; p <= K; ++p) {
      acc.setZero();
      for (int i = 0; i < p; ++i) {
        const int d = p - i;
        const double tau_hi = double(d) * h;
        for (int c = 0; c < n; ++c) {
          const std::complex<double> M0 = tab.g0[c][d] - tab.g0[c][d - 1];
          const std::complex<double> I1 = tab.g1[c][d] - tab.g1[c][d - 1];
          const std::complex<double> M1 = (tau_hi * M0 - I1) / hc[i];
          acc[c] += CL(c, i) * (M0 - M1) + CR(c, i) * M1;
        }
      }
      out.col(p) =
          cache.s_alpha(grid[ia + p] - a) * xplus + (V * acc).real();
    }
    return out;
  }

  for (int p = 1; p <= K; ++p)
    out.col(p) = cache.s_alpha(grid[ia + p] - a) * xplus +
                 singular_convolve(cache, a, grid[ia + p], bundle);
  return out;
}

// Shared forward walk. `hoisted` selects the commutative impulse-state
// assembly (all (I + D) factors pulled left past the operator chain);
// otherwise the interleaved recursion is used. Both evaluate the interval
// interiors identically.
Trajectory propagate_impl(OperatorCache& cache, const Eigen::VectorXd& x0,
                          const ControlBundle& bundle, bool hoisted,
                          const char* who) {
  const SystemSpec& spec = cache.spec();
  const int n = spec.dim_state;
  if (x0.size() != n)
    throw ContractError(std::string(who) + ": x0 dimension mismatch");
  const std::vector<int> idx = detail::boundary_indices(spec, bundle, who);
  const std::vector<double> T = detail::boundary_times(spec);

  const int n_imp = int(spec.impulses.size());
  const bool terminal = spec.terminal_E.size() != 0;
  const int rows = int(bundle.grid.size()) + n_imp + (terminal ? 1 : 0);
  Trajectory out;
  out.times.reserve(rows);
  out.side.reserve(rows);
  out.states.resize(n, rows);
  int col = 0;
  auto push = [&](double t, int s, const Eigen::VectorXd& x) {
    out.times.push_back(t);
    out.side.push_back(s);
    out.states.col(col++) = x;
  };

  // Hoisted-path bookkeeping: w is the impulse-free operator chain applied
  // to x0; conv_terms / inj_terms carry each interval convolution and
  // impulse injection forward by S_alpha factors alone; prods[i] is the
  // running (I+D_k)...(I+D_{i+1}) product.
  Eigen::VectorXd w = x0;
  std::vector<Eigen::VectorXd> conv_terms, inj_terms;
  std::vector<Eigen::MatrixXd> prods;

  Eigen::VectorXd xplus = x0;
  push(T[0], 0, xplus);
  for (int q = 0; q <= n_imp; ++q) {
    const Eigen::MatrixXd xs =
        interval_states(cache, bundle, idx[q], idx[q + 1], xplus);
    const int K = idx[q + 1] - idx[q];
    for (int p = 1; p < K; ++p) push(bundle.grid[idx[q] + p], 0, xs.col(p));
    const Eigen::VectorXd xL = xs.col(K);
    if (q < n_imp) {
      const ImpulseEvent& ev = spec.impulses[q];
      push(T[q + 1], -1, xL);
      if (!hoisted) {
        xplus = xL + ev.D * xL + ev.E * bundle.v[q];
      } else {
        const Eigen::MatrixXd& S = cache.s_alpha(T[q + 1] - T[q]);
        w = S * w;
        for (Eigen::VectorXd& c : conv_terms) c = S * c;
        for (Eigen::VectorXd& e : inj_terms) e = S * e;
        conv_terms.push_back(singular_convolve(cache, T[q], T[q + 1], bundle));
        inj_terms.push_back(ev.E * bundle.v[q]);
        const Eigen::MatrixXd IpD =
            Eigen::MatrixXd::Identity(n, n) + ev.D;
        for (Eigen::MatrixXd& P : prods) P = IpD * P;
        prods.push_back(IpD);
        xplus = prods[0] * w;
        for (int i = 0; i + 1 < int(conv_terms.size()); ++i)
          xplus += prods[i] * conv_terms[i] + prods[i + 1] * inj_terms[i];
        xplus += prods.back() * conv_terms.back() + inj_terms.back();
      }
      push(T[q + 1], +1, xplus);
    } else if (terminal) {
      push(T[q + 1], -1, xL);
      push(T[q + 1], +1, xL + spec.terminal_E * bundle.v_terminal);
    } else {
      push(T[q + 1], 0, xL);
    }
  }
  assert(col == rows);
  return out;
}

// Left-closed interval index: T_q <= t < T_{q+1}; t at the final boundary
// maps to the last interval.
int interval_left_closed(const std::vector<double>& T, double t) {
  int q = int(std::upper_bound(T.begin(), T.end(), t) - T.begin()) - 1;
  const int last = int(T.size()) - 2;
  return q > last ? last : q;
}

}  // namespace

Eigen::VectorXd Trajectory::final_state() const {
  if (states.cols() == 0) throw ContractError("Trajectory: empty");
  return states.col(states.cols() - 1);
}

Eigen::VectorXd Trajectory::final_left() const {
  for (Eigen::Index j = states.cols(); j-- > 0;)
    if (side[size_t(j)] <= 0) return states.col(j);
  throw ContractError("Trajectory: no left value stored");
}

Eigen::VectorXd post_impulse_state(OperatorCache& cache,
                                   const Eigen::VectorXd& x0,
                                   const ControlBundle& bundle, int k) {
  const SystemSpec& spec = cache.spec();
  if (k < 1 || k > int(spec.impulses.size()))
    throw ContractError("post_impulse_state: impulse index out of range");
  if (x0.size() != spec.dim_state)
    throw ContractError("post_impulse_state: x0 dimension mismatch");
  detail::check_bundle(spec, bundle, "post_impulse_state");
  Eigen::VectorXd x = x0;
  double prev = 0.0;
  for (int j = 0; j < k; ++j) {
    const ImpulseEvent& ev = spec.impulses[size_t(j)];
    const Eigen::VectorXd xl = cache.s_alpha(ev.time - prev) * x +
                               singular_convolve(cache, prev, ev.time, bundle);
    x = xl + ev.D * xl + ev.E * bundle.v[size_t(j)];
    prev = ev.time;
  }
  return x;
}

Trajectory propagate(OperatorCache& cache, const Eigen::VectorXd& x0,
                     const ControlBundle& bundle) {
  return propagate_impl(cache, x0, bundle, false, "propagate");
}

Trajectory propagate_commutative(OperatorCache& cache,
                                 const Eigen::VectorXd& x0,
                                 const ControlBundle& bundle) {
  const SystemSpec& spec = cache.spec();
  for (const ImpulseEvent& ev : spec.impulses) {
    const double defect =
        (ev.D * spec.A - spec.A * ev.D).cwiseAbs().maxCoeff();
    if (!(defect <= 1e-10))
      throw ContractError(
          "propagate_commutative: impulse map does not commute with the "
          "generator");
  }
  return propagate_impl(cache, x0, bundle, true, "propagate_commutative");
}

AdjointTrajectory adjoint_solve(OperatorCache& cache,
                                const Eigen::VectorXd& phi) {
  const SystemSpec& spec = cache.spec();
  const double al = cache.alpha();
  if (!(al > 0.5))
    throw UnsupportedConfigError(
        "adjoint_solve: the backward kernel is square-integrable only for "
        "order > 1/2");
  if (phi.size() != spec.dim_state)
    throw ContractError("adjoint_solve: phi dimension mismatch");

  AdjointTrajectory adj;
  adj.boundaries = detail::boundary_times(spec);
  adj.phi = phi;
  const int n_int = int(adj.boundaries.size()) - 1;
  adj.xi.assign(size_t(n_int), Eigen::VectorXd());
  adj.xi[size_t(n_int) - 1] = phi;
  for (int q = n_int - 2; q >= 0; --q) {
    const double delta = adj.boundaries[size_t(q) + 2] -
                         adj.boundaries[size_t(q) + 1];
    const Eigen::VectorXd carried =
        cache.s_alpha(delta).transpose() * adj.xi[size_t(q) + 1];
    adj.xi[size_t(q)] =
        carried + spec.impulses[size_t(q)].D.transpose() * carried;
  }

  const std::vector<double> base = default_grid(spec, kAdjointSampleCells);
  adj.grid.reserve(base.size());
  for (double t : base)
    if (t != spec.horizon || al == 1.0) adj.grid.push_back(t);
  adj.costates.resize(spec.dim_state, Eigen::Index(adj.grid.size()));
  for (size_t j = 0; j < adj.grid.size(); ++j) {
    const double t = adj.grid[j];
    const int q = interval_left_closed(adj.boundaries, t);
    const double tau = adj.boundaries[size_t(q) + 1] - t;
    adj.costates.col(Eigen::Index(j)) =
        std::pow(tau, al - 1.0) *
        (cache.p_alpha(tau).transpose() * adj.xi[size_t(q)]);
  }
  return adj;
}

Eigen::VectorXd adjoint_costate(OperatorCache& cache,
                                const AdjointTrajectory& adj, double t) {
  const double al = cache.alpha();
  const double b = adj.boundaries.back();
  if (!(t >= 0.0 && t <= b))
    throw ContractError("adjoint_costate: t outside [0, horizon]");
  if (t == b && al < 1.0)
    throw ContractError("adjoint_costate: costate unbounded at the horizon");
  const int q = interval_left_closed(adj.boundaries, t);
  const double tau = adj.boundaries[size_t(q) + 1] - t;
  return std::pow(tau, al - 1.0) *
         (cache.p_alpha(tau).transpose() * adj.xi[size_t(q)]);
}

double green_residual(OperatorCache& cache, const Eigen::VectorXd& x0,
                      const ControlBundle& bundle,
                      const Eigen::VectorXd& phi) {
  const SystemSpec& spec = cache.spec();
  const Trajectory traj = propagate(cache, x0, bundle);
  const AdjointTrajectory adj = adjoint_solve(cache, phi);
  const std::vector<double>& T = adj.boundaries;

  const double lhs =
      traj.final_left().dot(phi) -
      x0.dot(cache.s_alpha(T[1]).transpose() * adj.xi[0]);

  double rhs = 0.0;
  for (size_t q = 0; q + 1 < T.size(); ++q)
    rhs += adj.xi[q].dot(singular_convolve(cache, T[q], T[q + 1], bundle));
  for (size_t k = 0; k < spec.impulses.size(); ++k) {
    const Eigen::VectorXd slot =
        spec.impulses[k].E.transpose() *
        (cache.s_alpha(T[k + 2] - T[k + 1]).transpose() * adj.xi[k + 1]);
    rhs += bundle.v[k].dot(slot);
  }
  return std::fabs(lhs - rhs);
}

Eigen::VectorXd post_impulse_state(const SystemSpec& spec,
                                   const Eigen::VectorXd& x0,
                                   const ControlBundle& bundle, int k) {
  OperatorCache cache(spec);
  return post_impulse_state(cache, x0, bundle, k);
}

Trajectory propagate(const SystemSpec& spec, const Eigen::VectorXd& x0,
                     const ControlBundle& bundle) {
  OperatorCache cache(spec);
  return propagate(cache, x0, bundle);
}

Trajectory propagate_commutative(const SystemSpec& spec,
                                 const Eigen::VectorXd& x0,
                                 const ControlBundle& bundle) {
  OperatorCache cache(spec);
  return propagate_commutative(cache, x0, bundle);
}

AdjointTrajectory adjoint_solve(const SystemSpec& spec,
                                const Eigen::VectorXd& phi) {
  OperatorCache cache(spec);
  return adjoint_solve(cache, phi);
}

double green_residual(const SystemSpec& spec, const Eigen::VectorXd& x0,
                      const ControlBundle& bundle,
                      const Eigen::VectorXd& phi) {
  OperatorCache cache(spec);
  return green_residual(cache, x0, bundle, phi);
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  const int n = int(traj.states.rows());
  out << "time,side";
  for (int i = 1; i <= n; ++i) out << ",x" << i;
  out << "\n";
  char buf[40];
  for (size_t r = 0; r < traj.times.size(); ++r) {
    std::snprintf(buf, sizeof buf, "%.17g", traj.times[r]);
    out << buf << ','
        << (traj.side[r] < 0 ? "L" : (traj.side[r] > 0 ? "R" : "-"));
    for (int i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", traj.states(i, Eigen::Index(r)));
      out << ',' << buf;
    }
    out << "\n";
  }
}

}  // namespace fracctl

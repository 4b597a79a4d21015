#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

#include "fracctl/solution_operators.hpp"
#include "fracctl/system.hpp"

namespace fracctl {

// Forward mild-solution samples over a bundle grid. Impulse instants carry
// two rows: the left limit (side -1) followed by the post-jump value
// (side +1); all other nodes are plain rows (side 0). When the spec has a
// terminal injection matrix the horizon also carries a left/right pair with
// right = left + terminal_E * v_terminal. Invariant at every impulse k:
// right = (I + D_k) * left + E_k * v_k.
struct Trajectory {
  std::vector<double> times;
  std::vector<int> side;  // 0 plain, -1 left limit, +1 right limit
  Eigen::MatrixXd states; // dim_state x times.size(), one column per row entry

  // State at the horizon after any terminal injection (last column).
  Eigen::VectorXd final_state() const;
  // State at the horizon before any terminal injection (left limit at b).
  Eigen::VectorXd final_left() const;
};

// Backward costate in closed form. With boundaries T_0 = 0 < T_1 < ... <
// T_{n+1} = b (impulse instants and the horizon), the costate on each
// interval (T_q, T_{q+1}] is
//   p(t) = (T_{q+1} - t)^(alpha-1) * P_alpha(T_{q+1} - t)^T * xi[q],
// where the coefficients satisfy xi[n] = phi and
//   xi[q] = (I + D_{q+1}^T) * S_alpha(T_{q+2} - T_{q+1})^T * xi[q+1].
// The interval transfer uses S_alpha^T: it is the value of the fractional
// integral of order 1-alpha of the kernel factor at the interval's left end,
// and the unique choice under which the duality pairing of the Green
// identity holds exactly (see green_residual and its tests).
//
// The singular factor (T_{q+1} - t)^(alpha-1) is kept symbolic via the xi
// coefficients; sampled costates avoid interval right endpoints. Stored
// samples assign each node t the interval with T_q <= t < T_{q+1}, so an
// impulse instant carries its right limit p(t_k^+); for alpha < 1 the
// horizon is omitted (p is unbounded there), for alpha = 1 it holds phi.
struct AdjointTrajectory {
  std::vector<double> boundaries;       // {0, t_1, ..., t_n, b}
  std::vector<Eigen::VectorXd> xi;      // one coefficient per interval
  Eigen::VectorXd phi;                  // terminal datum; xi.back() == phi
  std::vector<double> grid;             // costate sample nodes
  Eigen::MatrixXd costates;             // dim_state x grid.size()
};

// x(t_k^+) by the forward recursion
//   x(t_j^+) = (I + D_j)[S_alpha(t_j - t_{j-1}) x(t_{j-1}^+) + conv] + E_j v_j
// with conv the singular convolution over (t_{j-1}, t_j). k is 1-based;
// out-of-range k throws a contract error.
Eigen::VectorXd post_impulse_state(OperatorCache& cache,
                                   const Eigen::VectorXd& x0,
                                   const ControlBundle& bundle, int k);

// Mild solution on [0, b] sampled at every bundle grid node. On each
// inter-impulse interval x(t) = S_alpha(t - t_k) x(t_k^+) + convolution from
// t_k; impulse jumps are applied between intervals. The bundle grid must
// contain 0, every impulse instant, and the horizon as exact nodes.
Trajectory propagate(OperatorCache& cache, const Eigen::VectorXd& x0,
                     const ControlBundle& bundle);

// Same trajectory for specs whose impulse maps commute with the generator
// (checked: max|D_k A - A D_k| <= 1e-10, contract error otherwise). The
// impulse states are assembled in hoisted form - all (I + D_j) factors
// pulled left past the operator chain:
//   x(t_k^+) = P(k,1) w_k + sum_i P(k,i) c_i^(k) + sum_i P(k,i+1) e_i^(k),
// with P(k,i) = (I+D_k)...(I+D_i), w_k the impulse-free operator chain
// applied to x0, and c_i, e_i the interval convolutions and impulse
// injections carried forward by S_alpha factors alone. Algebraically equal
// to propagate under commutativity, computed along a different rounding
// path, so agreement is a meaningful cross-check.
Trajectory propagate_commutative(OperatorCache& cache,
                                 const Eigen::VectorXd& x0,
                                 const ControlBundle& bundle);

// Closed-form backward solve for the terminal datum phi. Requires
// alpha > 1/2 (square-integrability of the kernel factor near interval right
// endpoints); throws an unsupported-configuration error otherwise.
AdjointTrajectory adjoint_solve(OperatorCache& cache,
                                const Eigen::VectorXd& phi);

// Pointwise costate value. Interval boundaries evaluate to the right limit
// p(t^+); the horizon is only finite for alpha = 1 (contract error
// otherwise). Domain [0, b].
Eigen::VectorXd adjoint_costate(OperatorCache& cache,
                                const AdjointTrajectory& adj, double t);

// Absolute defect |LHS - RHS| of the duality identity
//   <x(b^-), phi> - <x0, S_alpha(T_1)^T xi[0]>
//     = sum_q <xi[q], conv over (T_q, T_{q+1})>
//     + sum_k <v_k, E_k^T S_alpha(T_{k+1} - t_k)^T xi[k]>,
// with both sides evaluated through the exact piecewise-linear product
// integration, so the defect reflects special-function accuracy rather than
// quadrature error. The identity concerns the pre-terminal-jump state; any
// terminal injection is excluded on both sides.
double green_residual(OperatorCache& cache, const Eigen::VectorXd& x0,
                      const ControlBundle& bundle, const Eigen::VectorXd& phi);

// Spec-level conveniences; each builds a one-shot cache.
Eigen::VectorXd post_impulse_state(const SystemSpec& spec,
                                   const Eigen::VectorXd& x0,
                                   const ControlBundle& bundle, int k);
Trajectory propagate(const SystemSpec& spec, const Eigen::VectorXd& x0,
                     const ControlBundle& bundle);
Trajectory propagate_commutative(const SystemSpec& spec,
                                 const Eigen::VectorXd& x0,
                                 const ControlBundle& bundle);
AdjointTrajectory adjoint_solve(const SystemSpec& spec,
                                const Eigen::VectorXd& phi);
double green_residual(const SystemSpec& spec, const Eigen::VectorXd& x0,
                      const ControlBundle& bundle, const Eigen::VectorXd& phi);

// CSV rows time,side,x1..xn with side one of "-", "L", "R"; values printed
// with 17 significant digits (binary64 round-trip).
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);

}  // namespace fracctl

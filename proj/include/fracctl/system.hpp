#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "fracctl/errors.hpp"

namespace fracctl {

// Fractional order of the Caputo evolution. Valid range (0, 1]; Gramian and
// adjoint machinery additionally require alpha > 1/2.
struct FractionalOrder {
  double alpha = 1.0;
};

// Closed activation window [begin, end] for one control channel.
struct TimeWindow {
  double begin = 0.0;
  double end = 0.0;
};

// State jump at an interior instant: x(t^+) = (I + D) x(t) + E v.
struct ImpulseEvent {
  double time = 0.0;
  Eigen::MatrixXd D;  // n x n state-jump map
  Eigen::MatrixXd E;  // n x m impulse-control map
};

// Finite-dimensional impulsive fractional control system on [0, horizon].
//
//   C-D^alpha x = A x + B u  away from impulse instants,
//   x(t_k^+) = (I + D_k) x(t_k) + E_k v_k  at interior instants t_k,
//   optionally x_final = x(horizon) + terminal_E v_b (an unpropagated
//   impulse-control injection exactly at the horizon).
struct SystemSpec {
  int dim_state = 0;    // n >= 1
  int dim_control = 0;  // m >= 1
  Eigen::MatrixXd A;    // n x n generator
  Eigen::MatrixXd B;    // n x m distributed-control map
  std::vector<ImpulseEvent> impulses;  // strictly increasing interior times
  double horizon = 1.0;                // b > 0
  FractionalOrder order;
  double semigroup_bound = 1.0;  // declared bound M >= 1, diagnostics only
  // Per-channel activation windows; empty -> every channel always active.
  // When present, size must equal dim_control; a channel with no windows is
  // permanently inactive.
  std::vector<std::vector<TimeWindow>> control_mask;
  // n x m injection applied additively at the horizon (0x0 -> absent).
  Eigen::MatrixXd terminal_E;
  Eigen::VectorXd x0;      // initial state; empty -> zero
  Eigen::VectorXd target;  // steering target; empty -> unset
};

// Control pair (u, {v_k}) living on an explicit time grid. u holds one
// m-vector per grid node (column-wise) and is interpreted piecewise-linear
// inside every grid cell; cells never straddle impulse times because those
// are grid nodes by construction.
struct ControlBundle {
  std::vector<double> grid;        // strictly increasing, grid.front() == 0
  Eigen::MatrixXd u;               // m x grid.size()
  std::vector<Eigen::VectorXd> v;  // one m-vector per interior impulse
  Eigen::VectorXd v_terminal;      // m-vector; size 0 when slot absent
};

// Confirms every structural invariant and returns the normalized spec
// (impulses sorted by time, x0 defaulted to zero). Throws ValidationError
// naming the offending field. Idempotent.
SystemSpec validate(SystemSpec spec);

// True when channel (0-based) is active at time t under the mask.
bool channel_active(const SystemSpec& spec, int channel, double t);

// Sorted unique interior mask-window endpoints; used to snap activation
// boundaries onto integration grids.
std::vector<double> mask_breakpoints(const SystemSpec& spec);

// Hilbert-space inner product of two bundles on identical grids:
// integral of <u_a, u_b> over [0, horizon] (exact for the piecewise-linear
// interpretation) plus the sum of impulse-slot dot products.
double inner_product_omega(const ControlBundle& a, const ControlBundle& b);

// Piecewise-linear value of u at time t (right-continuous cell selection).
Eigen::VectorXd eval_bundle_u(const ControlBundle& bundle, double t);

// Grid covering [0, horizon] that contains every impulse time and every mask
// breakpoint, with cells_per_segment uniform cells between consecutive
// breakpoints.
std::vector<double> default_grid(const SystemSpec& spec, int cells_per_segment);

// All-zero bundle shaped for the spec on the given grid.
ControlBundle zero_bundle(const SystemSpec& spec, const std::vector<double>& grid);

// Truncated spectral model of a 1-D heat equation under Dirichlet boundary
// conditions with one interior impulse: A = diag(-1, -4, ..., -n^2),
// alpha = 2/3, horizon 1, impulse at 1/2 with D = E = I, terminal injection
// I, x0 = 0, target components 1/k. with_mask activates channel k only on
// [1 - 1/k^2, 1].
SystemSpec heat_demo_spec(int n_modes, bool with_mask);

// Round-trip JSON serialization; binary64 values survive bit-exactly.
std::string spec_to_json(const SystemSpec& spec);
SystemSpec spec_from_json(const std::string& text);

}  // namespace fracctl

#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "fracctl/propagator.hpp"
#include "fracctl/solution_operators.hpp"
#include "fracctl/system.hpp"

namespace fracctl {

// Four-block controllability Gramian of the impulsive evolution. With
// boundary times {0, t_1, ..., t_n, b} and the squared backward kernel
// (.)^{2*alpha-2} (integrable only for alpha > 1/2):
//
//   omega       = integral over the last interval (t_n, b] of
//                 (b-s)^{2a-2} P_alpha(b-s) B(s) B(s)* P_alpha*(b-s) ds,
//   psi         = the same integrals over earlier intervals, sandwiched by
//                 the ordered flow/jump products that carry them to b,
//   omega_tilde = the final injection block: S_alpha(b-t_n) E_n E_n*
//                 S_alpha*(b-t_n), degenerating to terminal_E terminal_E*
//                 (the S_alpha(0) = I case) when a terminal slot is present,
//   psi_tilde   = the sandwich sum over the remaining impulse injections
//                 (empty sums yield the zero block),
//   gamma       = omega + psi + omega_tilde + psi_tilde, formed once.
//
// Every block is symmetrized explicitly and is positive semidefinite by
// construction (each quadrature cell contributes a PSD term with
// non-negative exact kernel moments).
struct GramianBundle {
  Eigen::MatrixXd omega;
  Eigen::MatrixXd psi;
  Eigen::MatrixXd omega_tilde;
  Eigen::MatrixXd psi_tilde;
  Eigen::MatrixXd gamma;
  int resolution = 0;  // quadrature cells per inter-impulse interval
};

// Ordered flow/jump transfer operators of one spec. With intervals indexed
// 0..n (interval q = (T_q, T_{q+1}]):
//   to_final[q]     maps the left limit at T_{q+1} (before the jump there,
//                   if any) to the final left limit at b,
//   from_impulse[j] maps the injection E_j v_j placed just after t_{j+1}
//                   (0-based j) to the final left limit,
//   free_map        = to_final[0] S_alpha(T_1): the uncontrolled propagator
//                   applied to x(0).
struct FlowChain {
  std::vector<Eigen::MatrixXd> to_final;
  std::vector<Eigen::MatrixXd> from_impulse;
  Eigen::MatrixXd free_map;
};

FlowChain flow_chain(OperatorCache& cache);

// Impulse-slot components of the adjoint of the endpoint map: slot j pairs
// with v_j as E_j* S_alpha*(T_{j+2}-T_{j+1}) xi_{j+1}, and the terminal slot
// (present only when the spec carries one) is terminal_E* phi.
struct InjectionSlots {
  std::vector<Eigen::VectorXd> v;
  Eigen::VectorXd v_terminal;  // size 0 when the spec has no terminal slot
};

InjectionSlots adjoint_injection_slots(OperatorCache& cache,
                                       const AdjointTrajectory& adj);

// Endpoint map of the zero-initial-state mild solution: the state reached
// at the horizon by the bundle alone (distributed convolutions carried
// through the flow/jump chain, impulse injections, and the terminal
// injection when present). Agrees with propagate(spec, 0, bundle) final
// state; assembled here from the expanded ordered-product form.
Eigen::VectorXd apply_M(OperatorCache& cache, const ControlBundle& bundle);

// Adjoint of the endpoint map, sampled as a bundle on the caller's grid
// (which must span [0, b] and contain every impulse time). Interior nodes
// carry B*(s) (T_{q+1}-s)^{alpha-1} P_alpha*(T_{q+1}-s) xi_q pointwise with
// masked channels zeroed; at interval right-end nodes the kernel power is
// never evaluated (half-open convention) — the node instead stores the
// flat-weight surrogate that makes the trapezoid mass of the closing cell
// equal the exact cell integral of B*p. Requires alpha > 1/2.
ControlBundle apply_M_star(OperatorCache& cache, const Eigen::VectorXd& phi,
                           const std::vector<double>& grid);

// Exact duality pairing <bundle, M* phi>_1: per-interval product integration
// of <u(s), B* p(s)> (exact for piecewise-linear u) plus the impulse and
// terminal slot products. Matches <apply_M(bundle), phi> to quadrature
// exactness, independently of any sampled representation of M* phi.
double mstar_pairing(OperatorCache& cache, const ControlBundle& bundle,
                     const Eigen::VectorXd& phi);

// Exact <M* phi, M* psi>_1: the interval Gram blocks sandwiched by the two
// adjoint coefficient chains plus slot products. Equals <gamma phi, psi> up
// to the shared quadrature.
double mstar_inner(OperatorCache& cache, const Eigen::VectorXd& phi,
                   const Eigen::VectorXd& psi, int resolution = 2048);

// Assembles all four blocks by product integration with exact moments of
// the (.)^{2*alpha-2} kernel on power-graded cells (P_alpha sampled at cell
// endpoints; mask-window boundaries snapped onto the cell grid). resolution
// is the cell count per inter-impulse interval. Throws an
// unsupported-configuration error for alpha <= 1/2.
GramianBundle assemble_gramian(OperatorCache& cache, int resolution = 2048);

// Spec-level one-shot-cache conveniences.
Eigen::VectorXd apply_M(const SystemSpec& spec, const ControlBundle& bundle);
ControlBundle apply_M_star(const SystemSpec& spec, const Eigen::VectorXd& phi,
                           const std::vector<double>& grid);
GramianBundle assemble_gramian(const SystemSpec& spec, int resolution = 2048);

// Matrix dump, one CSV row per matrix row, 17 significant digits.
void write_matrix_csv(const Eigen::MatrixXd& matrix, std::ostream& out);

// JSON document with the min/max eigenvalue of every block plus the
// quadrature resolution.
std::string gramian_summary_json(const GramianBundle& gramian);

}  // namespace fracctl

#pragma once

// Internal helpers shared by the propagation/Gramian/synthesis translation
// units. Not installed; include only from src/.

#include <algorithm>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fracctl/errors.hpp"
#include "fracctl/system.hpp"

namespace fracctl::detail {

// {0, t_1, ..., t_n, horizon}.
inline std::vector<double> boundary_times(const SystemSpec& spec) {
  std::vector<double> T;
  T.reserve(spec.impulses.size() + 2);
  T.push_back(0.0);
  for (const ImpulseEvent& ev : spec.impulses) T.push_back(ev.time);
  T.push_back(spec.horizon);
  return T;
}

inline int grid_index(const std::vector<double>& grid, double t,
                      const char* who) {
  const auto it = std::lower_bound(grid.begin(), grid.end(), t);
  if (it == grid.end() || *it != t)
    throw ContractError(std::string(who) +
                        ": a boundary time is not a grid node");
  return int(it - grid.begin());
}

inline void check_bundle(const SystemSpec& spec, const ControlBundle& bundle,
                         const char* who) {
  if (bundle.u.rows() != spec.dim_control ||
      Eigen::Index(bundle.grid.size()) != bundle.u.cols())
    throw ContractError(std::string(who) +
                        ": bundle samples mismatch the grid");
  if (bundle.grid.size() < 2)
    throw ContractError(std::string(who) + ": bundle grid too small");
  for (size_t i = 1; i < bundle.grid.size(); ++i)
    if (!(bundle.grid[i - 1] < bundle.grid[i]))
      throw ContractError(std::string(who) +
                          ": bundle grid is not strictly increasing");
  if (bundle.v.size() != spec.impulses.size())
    throw ContractError(std::string(who) + ": impulse control count mismatch");
  for (const Eigen::VectorXd& v : bundle.v)
    if (v.size() != spec.dim_control)
      throw ContractError(std::string(who) +
                          ": impulse control dimension mismatch");
  if (spec.terminal_E.size() != 0 &&
      bundle.v_terminal.size() != spec.terminal_E.cols())
    throw ContractError(std::string(who) +
                        ": terminal control dimension mismatch");
}

// check_bundle plus the requirement that the grid spans exactly
// [0, horizon] with every boundary time present; returns the grid indices
// of {0, t_1, ..., t_n, horizon}.
inline std::vector<int> boundary_indices(const SystemSpec& spec,
                                         const ControlBundle& bundle,
                                         const char* who) {
  check_bundle(spec, bundle, who);
  const std::vector<double> T = boundary_times(spec);
  std::vector<int> idx(T.size());
  for (size_t q = 0; q < T.size(); ++q)
    idx[q] = grid_index(bundle.grid, T[q], who);
  if (idx.front() != 0 || idx.back() + 1 != int(bundle.grid.size()))
    throw ContractError(std::string(who) +
                        ": bundle grid must span exactly [0, horizon]");
  return idx;
}

}  // namespace fracctl::detail

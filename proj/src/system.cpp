#include "fracctl/system.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>

#include "json.hpp"

namespace fracctl {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& why) {
  throw ValidationError(field + ": " + why);
}

void require_finite(const Eigen::MatrixXd& m, const std::string& field) {
  if (!m.allFinite()) fail(field, "contains a non-finite entry");
}

// ---- JSON helpers ---------------------------------------------------------

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) rows.push_back(m(i, j));
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index rows,
                                 Eigen::Index cols, const std::string& field) {
  if (!j.is_array() || Eigen::Index(j.size()) != rows * cols)
    fail(field, "expected a row-major list of " + std::to_string(rows * cols) +
                    " numbers");
  Eigen::MatrixXd m(rows, cols);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index jj = 0; jj < cols; ++jj, ++k) {
      if (!j[k].is_number()) fail(field, "entry is not a number");
      m(i, jj) = j[k].get<double>();
    }
  return m;
}

const json& member(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) fail(key, "missing from config");
  return *it;
}

}  // namespace

SystemSpec validate(SystemSpec spec) {
  const int n = spec.dim_state;
  const int m = spec.dim_control;
  if (n < 1) fail("dim_state", "must be >= 1");
  if (m < 1) fail("dim_control", "must be >= 1");
  if (spec.A.rows() != n || spec.A.cols() != n)
    fail("A", "must be " + std::to_string(n) + "x" + std::to_string(n));
  if (spec.B.rows() != n || spec.B.cols() != m)
    fail("B", "must be " + std::to_string(n) + "x" + std::to_string(m));
  require_finite(spec.A, "A");
  require_finite(spec.B, "B");
  if (!(spec.horizon > 0.0) || !std::isfinite(spec.horizon))
    fail("horizon", "must be a positive real");
  if (!(spec.order.alpha > 0.0) || !(spec.order.alpha <= 1.0))
    fail("alpha", "must lie in (0, 1]");
  if (!(spec.semigroup_bound >= 1.0) || !std::isfinite(spec.semigroup_bound))
    fail("semigroup_bound", "must be >= 1");

  if (spec.x0.size() == 0) spec.x0 = Eigen::VectorXd::Zero(n);
  if (spec.x0.size() != n) fail("x0", "must have dim_state entries");
  require_finite(spec.x0, "x0");
  if (spec.target.size() != 0 && spec.target.size() != n)
    fail("target", "must be empty or have dim_state entries");
  require_finite(spec.target, "target");

  std::stable_sort(spec.impulses.begin(), spec.impulses.end(),
                   [](const ImpulseEvent& a, const ImpulseEvent& b) {
                     return a.time < b.time;
                   });
  for (std::size_t k = 0; k < spec.impulses.size(); ++k) {
    const std::string tag = "impulses[" + std::to_string(k) + "]";
    const ImpulseEvent& ev = spec.impulses[k];
    if (!std::isfinite(ev.time) || !(ev.time > 0.0) || !(ev.time < spec.horizon))
      fail(tag + ".time", "must be strictly inside (0, horizon)");
    if (k > 0 && !(spec.impulses[k - 1].time < ev.time))
      fail(tag + ".time", "impulse times must be strictly increasing");
    if (ev.D.rows() != n || ev.D.cols() != n)
      fail(tag + ".D", "must be " + std::to_string(n) + "x" + std::to_string(n));
    if (ev.E.rows() != n || ev.E.cols() != m)
      fail(tag + ".E", "must be " + std::to_string(n) + "x" + std::to_string(m));
    require_finite(ev.D, tag + ".D");
    require_finite(ev.E, tag + ".E");
  }

  if (!spec.control_mask.empty()) {
    if (int(spec.control_mask.size()) != m)
      fail("control_mask", "must list one window set per control channel");
    for (std::size_t j = 0; j < spec.control_mask.size(); ++j) {
      const std::string tag = "control_mask[" + std::to_string(j) + "]";
      for (const TimeWindow& w : spec.control_mask[j]) {
        if (!std::isfinite(w.begin) || !std::isfinite(w.end) ||
            !(w.begin < w.end) || w.begin < 0.0 || w.end > spec.horizon)
          fail(tag, "windows must satisfy 0 <= begin < end <= horizon");
      }
    }
  }

  if (spec.terminal_E.size() != 0) {
    if (spec.terminal_E.rows() != n || spec.terminal_E.cols() != m)
      fail("terminal_E",
           "must be " + std::to_string(n) + "x" + std::to_string(m));
    require_finite(spec.terminal_E, "terminal_E");
  }
  return spec;
}

bool channel_active(const SystemSpec& spec, int channel, double t) {
  assert(channel >= 0 && channel < spec.dim_control);
  if (spec.control_mask.empty()) return true;
  for (const TimeWindow& w : spec.control_mask[channel])
    if (t >= w.begin && t <= w.end) return true;
  return false;
}

std::vector<double> mask_breakpoints(const SystemSpec& spec) {
  std::vector<double> pts;
  for (const auto& windows : spec.control_mask)
    for (const TimeWindow& w : windows) {
      if (w.begin > 0.0 && w.begin < spec.horizon) pts.push_back(w.begin);
      if (w.end > 0.0 && w.end < spec.horizon) pts.push_back(w.end);
    }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

double inner_product_omega(const ControlBundle& a, const ControlBundle& b) {
  if (a.grid != b.grid) throw ContractError("inner_product_omega: grid mismatch");
  if (a.v.size() != b.v.size())
    throw ContractError("inner_product_omega: impulse-slot count mismatch");
  if (a.v_terminal.size() != b.v_terminal.size())
    throw ContractError("inner_product_omega: v_terminal mismatch");
  const Eigen::Index nodes = Eigen::Index(a.grid.size());
  if (a.u.cols() != nodes || b.u.cols() != nodes || a.u.rows() != b.u.rows())
    throw ContractError("inner_product_omega: u sample shape mismatch");

  // Exact integral of the product of two piecewise-linear functions:
  // cell contribution h/6 * (2<a0,b0> + <a0,b1> + <a1,b0> + 2<a1,b1>).
  double acc = 0.0;
  for (Eigen::Index i = 0; i + 1 < nodes; ++i) {
    const double h = a.grid[i + 1] - a.grid[i];
    const auto a0 = a.u.col(i), a1 = a.u.col(i + 1);
    const auto b0 = b.u.col(i), b1 = b.u.col(i + 1);
    acc += h / 6.0 *
           (2.0 * a0.dot(b0) + a0.dot(b1) + a1.dot(b0) + 2.0 * a1.dot(b1));
  }
  for (std::size_t k = 0; k < a.v.size(); ++k) {
    if (a.v[k].size() != b.v[k].size())
      throw ContractError("inner_product_omega: v size mismatch");
    acc += a.v[k].dot(b.v[k]);
  }
  if (a.v_terminal.size() != 0) acc += a.v_terminal.dot(b.v_terminal);
  return acc;
}

Eigen::VectorXd eval_bundle_u(const ControlBundle& bundle, double t) {
  const auto& g = bundle.grid;
  assert(g.size() >= 2);
  auto it = std::upper_bound(g.begin(), g.end(), t);
  Eigen::Index cell = std::clamp<Eigen::Index>(it - g.begin() - 1, 0,
                                               Eigen::Index(g.size()) - 2);
  const double h = g[cell + 1] - g[cell];
  const double w = std::clamp((t - g[cell]) / h, 0.0, 1.0);
  return (1.0 - w) * bundle.u.col(cell) + w * bundle.u.col(cell + 1);
}

namespace {

// x as p/q with q <= max_den, to within 1e-13 relative.
bool as_fraction(double x, long max_den, long& num, long& den) {
  for (long q = 1; q <= max_den; ++q) {
    const double pq = x * double(q);
    const double p = std::round(pq);
    if (std::fabs(pq - p) <= 1e-13 * double(q) * std::max(1.0, std::fabs(x))) {
      num = long(p);
      den = q;
      return true;
    }
  }
  return false;
}

// Uniform cells on [a, c]; a is already in the grid, c is appended exactly.
void fill_uniform(std::vector<double>& grid, double a, double c, int cells) {
  for (int i = 1; i < cells; ++i)
    grid.push_back(a + (c - a) * double(i) / double(cells));
  grid.push_back(c);
}

}  // namespace

std::vector<double> default_grid(const SystemSpec& spec, int cells_per_segment) {
  assert(cells_per_segment >= 1);
  std::vector<double> hard{0.0};
  for (const ImpulseEvent& ev : spec.impulses) hard.push_back(ev.time);
  hard.push_back(spec.horizon);
  const std::vector<double> soft = mask_breakpoints(spec);

  std::vector<double> grid{0.0};
  for (std::size_t s = 0; s + 1 < hard.size(); ++s) {
    const double a = hard[s], c = hard[s + 1];
    std::vector<double> cuts{a};
    for (double t : soft)
      if (t > a && t < c) cuts.push_back(t);
    cuts.push_back(c);

    // Mask breakpoints at small-denominator rational offsets are placed on
    // one shared uniform lattice spanning the whole inter-impulse interval,
    // so every node-to-node distance is a lattice multiple and convolutions
    // reuse the same kernel moments. Irrational or fine offsets fall back to
    // uniform cells inside each sub-segment.
    long L = 1;
    bool lattice = true;
    for (std::size_t j = 1; j + 1 < cuts.size() && lattice; ++j) {
      long p = 0, q = 1;
      lattice = as_fraction((cuts[j] - a) / (c - a), 128, p, q);
      if (lattice) L = std::lcm(L, q);
      lattice = lattice && L <= 1024;
    }
    if (lattice) {
      const long mult = (long(cells_per_segment) + L - 1) / L;
      std::vector<long> idx(cuts.size(), 0);
      for (std::size_t j = 1; j + 1 < cuts.size(); ++j)
        idx[j] = std::lround((cuts[j] - a) / (c - a) * double(L));
      idx.back() = L;
      for (std::size_t j = 0; j + 1 < cuts.size(); ++j)
        fill_uniform(grid, cuts[j], cuts[j + 1],
                     int((idx[j + 1] - idx[j]) * mult));
    } else {
      for (std::size_t j = 0; j + 1 < cuts.size(); ++j)
        fill_uniform(grid, cuts[j], cuts[j + 1], cells_per_segment);
    }
  }
  return grid;
}

ControlBundle zero_bundle(const SystemSpec& spec,
                          const std::vector<double>& grid) {
  ControlBundle bundle;
  bundle.grid = grid;
  bundle.u = Eigen::MatrixXd::Zero(spec.dim_control, Eigen::Index(grid.size()));
  bundle.v.assign(spec.impulses.size(),
                  Eigen::VectorXd::Zero(spec.dim_control));
  if (spec.terminal_E.size() != 0)
    bundle.v_terminal = Eigen::VectorXd::Zero(spec.dim_control);
  return bundle;
}

SystemSpec heat_demo_spec(int n_modes, bool with_mask) {
  if (n_modes < 1) fail("n_modes", "must be >= 1");
  SystemSpec spec;
  spec.dim_state = n_modes;
  spec.dim_control = n_modes;
  spec.A = Eigen::MatrixXd::Zero(n_modes, n_modes);
  for (int k = 1; k <= n_modes; ++k) spec.A(k - 1, k - 1) = -double(k) * k;
  spec.B = Eigen::MatrixXd::Identity(n_modes, n_modes);
  spec.horizon = 1.0;
  spec.order.alpha = 2.0 / 3.0;
  spec.semigroup_bound = 1.0;
  ImpulseEvent ev;
  ev.time = 0.5;
  ev.D = Eigen::MatrixXd::Identity(n_modes, n_modes);
  ev.E = Eigen::MatrixXd::Identity(n_modes, n_modes);
  spec.impulses.push_back(std::move(ev));
  spec.terminal_E = Eigen::MatrixXd::Identity(n_modes, n_modes);
  spec.x0 = Eigen::VectorXd::Zero(n_modes);
  spec.target = Eigen::VectorXd::Zero(n_modes);
  for (int k = 1; k <= n_modes; ++k) spec.target(k - 1) = 1.0 / double(k);
  if (with_mask) {
    spec.control_mask.resize(n_modes);
    for (int k = 1; k <= n_modes; ++k)
      spec.control_mask[k - 1].push_back(
          TimeWindow{1.0 - 1.0 / (double(k) * k), 1.0});
  }
  return validate(std::move(spec));
}

std::string spec_to_json(const SystemSpec& spec) {
  json j;
  j["dim_state"] = spec.dim_state;
  j["dim_control"] = spec.dim_control;
  j["alpha"] = spec.order.alpha;
  j["horizon"] = spec.horizon;
  j["semigroup_bound"] = spec.semigroup_bound;
  j["A"] = matrix_to_json(spec.A);
  j["B"] = matrix_to_json(spec.B);
  json imps = json::array();
  for (const ImpulseEvent& ev : spec.impulses) {
    json e;
    e["time"] = ev.time;
    e["D"] = matrix_to_json(ev.D);
    e["E"] = matrix_to_json(ev.E);
    imps.push_back(std::move(e));
  }
  j["impulses"] = std::move(imps);
  j["x0"] = matrix_to_json(spec.x0);
  if (spec.target.size() != 0) j["target"] = matrix_to_json(spec.target);
  if (!spec.control_mask.empty()) {
    json mask = json::array();
    for (const auto& windows : spec.control_mask) {
      json ws = json::array();
      for (const TimeWindow& w : windows)
        ws.push_back(json{{"begin", w.begin}, {"end", w.end}});
      mask.push_back(std::move(ws));
    }
    j["mask"] = std::move(mask);
  }
  if (spec.terminal_E.size() != 0)
    j["terminal_E"] = matrix_to_json(spec.terminal_E);
  return j.dump(2);
}

SystemSpec spec_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: not parseable JSON: ") +
                          e.what());
  }
  if (!j.is_object()) throw ValidationError("config: top level must be an object");

  SystemSpec spec;
  if (!member(j, "dim_state").is_number_integer()) fail("dim_state", "must be an integer");
  if (!member(j, "dim_control").is_number_integer()) fail("dim_control", "must be an integer");
  spec.dim_state = member(j, "dim_state").get<int>();
  spec.dim_control = member(j, "dim_control").get<int>();
  if (spec.dim_state < 1) fail("dim_state", "must be >= 1");
  if (spec.dim_control < 1) fail("dim_control", "must be >= 1");
  const Eigen::Index n = spec.dim_state, m = spec.dim_control;

  if (!member(j, "alpha").is_number()) fail("alpha", "must be a number");
  spec.order.alpha = member(j, "alpha").get<double>();
  if (!member(j, "horizon").is_number()) fail("horizon", "must be a number");
  spec.horizon = member(j, "horizon").get<double>();
  if (j.contains("semigroup_bound")) {
    if (!j["semigroup_bound"].is_number()) fail("semigroup_bound", "must be a number");
    spec.semigroup_bound = j["semigroup_bound"].get<double>();
  }
  spec.A = matrix_from_json(member(j, "A"), n, n, "A");
  spec.B = matrix_from_json(member(j, "B"), n, m, "B");
  if (j.contains("impulses")) {
    const json& imps = j["impulses"];
    if (!imps.is_array()) fail("impulses", "must be a list");
    for (std::size_t k = 0; k < imps.size(); ++k) {
      const std::string tag = "impulses[" + std::to_string(k) + "]";
      const json& e = imps[k];
      if (!e.is_object() || !e.contains("time") || !e["time"].is_number())
        fail(tag + ".time", "must be a number");
      ImpulseEvent ev;
      ev.time = e["time"].get<double>();
      ev.D = matrix_from_json(member(e, "D"), n, n, tag + ".D");
      ev.E = matrix_from_json(member(e, "E"), n, m, tag + ".E");
      spec.impulses.push_back(std::move(ev));
    }
  }
  if (j.contains("x0")) spec.x0 = matrix_from_json(j["x0"], n, 1, "x0");
  if (j.contains("target"))
    spec.target = matrix_from_json(j["target"], n, 1, "target");
  if (j.contains("mask")) {
    const json& mask = j["mask"];
    if (!mask.is_array()) fail("mask", "must be a list of window lists");
    for (std::size_t c = 0; c < mask.size(); ++c) {
      const std::string tag = "mask[" + std::to_string(c) + "]";
      if (!mask[c].is_array()) fail(tag, "must be a list of windows");
      std::vector<TimeWindow> ws;
      for (const json& w : mask[c]) {
        if (!w.is_object() || !w.contains("begin") || !w.contains("end") ||
            !w["begin"].is_number() || !w["end"].is_number())
          fail(tag, "windows must be {begin, end} numbers");
        ws.push_back(TimeWindow{w["begin"].get<double>(), w["end"].get<double>()});
      }
      spec.control_mask.push_back(std::move(ws));
    }
  }
  if (j.contains("terminal_E"))
    spec.terminal_E = matrix_from_json(j["terminal_E"], n, m, "terminal_E");
  return validate(std::move(spec));
}

}  // namespace fracctl

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

#include "doctest.h"
#include "fracctl/errors.hpp"
#include "fracctl/solution_operators.hpp"
#include "fracctl/special_functions.hpp"
#include "fracctl/system.hpp"
#include "oracles.hpp"
#include "spec_factory.hpp"

using namespace fracctl;

namespace {

// Test-side matrix exponential: scaling and squaring over a plain Taylor sum.
Eigen::MatrixXd expm_oracle(Eigen::MatrixXd M) {
  const int n = int(M.rows());
  int squarings = 0;
  double norm = M.cwiseAbs().rowwise().sum().maxCoeff();
  while (norm > 0.25 && squarings < 60) {
    M *= 0.5;
    norm *= 0.5;
    ++squarings;
  }
  Eigen::MatrixXd R = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k <= 30; ++k) {
    term = (term * M) / double(k);
    R += term;
  }
  for (int s = 0; s < squarings; ++s) R = R * R;
  return R;
}

// Test-side two-parameter kernel by plain double series; adequate for
// moderate |z| and entirely independent of the production evaluation routes.
template <class Z>
Z series_ml(double alpha, double beta, Z z) {
  Z term = Z(1.0) / std::tgamma(beta);
  Z acc = term;
  Z zp = Z(1.0);
  for (int k = 1; k < 250; ++k) {
    zp *= z;
    const double g = alpha * double(k) + beta;
    if (g > 170.0) break;
    term = zp / std::tgamma(g);
    acc += term;
    if (std::abs(term) <= 1e-18 * std::max(1.0, std::abs(acc)) && k > 4) break;
  }
  return acc;
}

// Bundle sampling a smooth control law on the default grid of the spec.
ControlBundle sampled_bundle(const SystemSpec& spec, int cells_per_segment,
                             const std::function<Eigen::VectorXd(double)>& f) {
  ControlBundle b = zero_bundle(spec, default_grid(spec, cells_per_segment));
  for (size_t j = 0; j < b.grid.size(); ++j) b.u.col(j) = f(b.grid[j]);
  return b;
}

SystemSpec plain_spec(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                      double alpha) {
  SystemSpec s;
  s.dim_state = int(A.rows());
  s.dim_control = int(B.cols());
  s.A = A;
  s.B = B;
  s.order.alpha = alpha;
  return validate(std::move(s));
}

}  // namespace

TEST_CASE("operator values at zero offset") {
  std::mt19937 gen(11);
  const SystemSpec spec = factory::random_spec(gen, 4, 2, 0, 0.7);
  OperatorCache cache(spec);
  CHECK(cache.s_alpha(0.0).isIdentity(0.0));
  const Eigen::MatrixXd P0 = cache.p_alpha(0.0);
  const double inv_gamma = 1.0 / gamma_fn(0.7);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(std::fabs(P0(i, j) - (i == j ? inv_gamma : 0.0)) <= 1e-15);
}

TEST_CASE("order one reduces to the matrix exponential") {
  std::mt19937 gen(12);
  for (int trial = 0; trial < 8; ++trial) {
    const SystemSpec spec = factory::random_spec(gen, 2 + trial % 4, 2, 0, 1.0);
    OperatorCache cache(spec);
    for (double t : {0.15, 0.6, 1.0}) {
      const Eigen::MatrixXd ref = expm_oracle(spec.A * t);
      CHECK((cache.s_alpha(t) - ref).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK((cache.p_alpha(t) - ref).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("diagonal generators evaluate elementwise") {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, 2);
  A(0, 0) = -1.0;
  A(1, 1) = -3.0;
  const SystemSpec spec = plain_spec(A, Eigen::MatrixXd::Identity(2, 2), 2.0 / 3.0);
  OperatorCache cache(spec);
  CHECK(cache.spectral());
  const Eigen::MatrixXd S = cache.s_alpha(1.0);
  const Eigen::MatrixXd P = cache.p_alpha(1.0);
  CHECK(std::fabs(S(0, 0) - 0.4040965472404525372185854) <= 1e-12);
  CHECK(std::fabs(S(1, 1) - 0.1454809767474285062099035) <= 1e-12);
  CHECK(std::fabs(P(0, 0) - 0.1966837922155390084793066) <= 1e-12);
  CHECK(std::fabs(P(1, 1) - 0.03452937274470059697808306) <= 1e-12);
  CHECK(std::fabs(S(0, 1)) + std::fabs(S(1, 0)) == 0.0);
  CHECK(std::fabs(P(0, 1)) + std::fabs(P(1, 0)) == 0.0);
}

TEST_CASE("memoized evaluations are stable and reproducible") {
  std::mt19937 gen(13);
  const SystemSpec spec = factory::random_spec(gen, 5, 2, 0, 0.8);
  OperatorCache cache(spec);
  const Eigen::MatrixXd* first = &cache.s_alpha(0.7);
  CHECK(first == &cache.s_alpha(0.7));  // memo returns the stored matrix
  OperatorCache fresh(spec);
  const double scale = 1.0 + first->cwiseAbs().maxCoeff();
  CHECK((*first - fresh.s_alpha(0.7)).cwiseAbs().maxCoeff() <= 1e-13 * scale);
  CHECK((cache.p_alpha(0.3) - fresh.p_alpha(0.3)).cwiseAbs().maxCoeff() <=
        1e-13 * scale);
}

TEST_CASE("operators commute with the generator") {
  std::mt19937 gen(14);
  for (int trial = 0; trial < 5; ++trial) {
    const SystemSpec spec = factory::random_spec(gen, 4, 2, 0, 0.6 + 0.1 * trial);
    OperatorCache cache(spec);
    for (double t : {0.2, 0.9}) {
      const Eigen::MatrixXd& S = cache.s_alpha(t);
      const Eigen::MatrixXd& P = cache.p_alpha(t);
      CHECK((S * spec.A - spec.A * S).cwiseAbs().maxCoeff() <= 1e-9);
      CHECK((P * spec.A - spec.A * P).cwiseAbs().maxCoeff() <= 1e-9);
    }
  }
}

TEST_CASE("heat demo operator norms stay inside the relaxation bounds") {
  const SystemSpec spec = heat_demo_spec(4, true);
  OperatorCache cache(spec);
  const double p_bound = 1.0 / gamma_fn(spec.order.alpha);
  for (int i = 1; i <= 100; ++i) {
    const double t = double(i) / 100.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> s_svd(cache.s_alpha(t));
    Eigen::JacobiSVD<Eigen::MatrixXd> p_svd(cache.p_alpha(t));
    CHECK(s_svd.singularValues().maxCoeff() <= 1.0 + 1e-12);
    CHECK(p_svd.singularValues().maxCoeff() <= p_bound + 1e-12);
  }
}

TEST_CASE("kernel moments match independent references") {
  // G0(T; lam) = int_0^T tau^{a-1} E_{a,a}(lam tau^a) dtau,
  // G1(T; lam) = int_0^T tau^a   E_{a,a}(lam tau^a) dtau, at a = 3/4.
  CHECK(std::fabs(kernels::g0(0.75, 1.0, -2.0) -
                  0.3989607582935227728259864) <= 1e-13);
  CHECK(std::fabs(kernels::g1(0.75, 1.0, -2.0) -
                  0.09993226234747325107069283) <= 1e-13);
  CHECK(std::fabs(kernels::g0(0.75, 0.5, -16.0) -
                  0.06047588574835443776046975) <= 1e-13);
  CHECK(std::fabs(kernels::g1(0.75, 0.5, -16.0) -
                  0.002409883246755574914247769) <= 1e-13);
  CHECK(kernels::g0(0.75, 0.0, -2.0) == 0.0);
  CHECK(kernels::g1(0.75, 0.0, -2.0) == 0.0);
}

TEST_CASE("kernel moments match graded quadrature") {
  // Small-argument series route (|lam| T^a <= 1/2) and a complex pair,
  // checked against graded Gauss-Legendre quadrature over the plain series.
  const double a = 0.75;
  {
    const double lam = -2.0, T = 0.1;
    auto f0 = [&](double tau) {
      return std::pow(tau, a - 1.0) * series_ml(a, a, lam * std::pow(tau, a));
    };
    auto f1 = [&](double tau) {
      return std::pow(tau, a) * series_ml(a, a, lam * std::pow(tau, a));
    };
    CHECK(std::fabs(kernels::g0(a, T, lam) -
                    oracles::integrate_geometric(f0, T, 60, oracles::gl20())) <=
          1e-12);
    CHECK(std::fabs(kernels::g1(a, T, lam) -
                    oracles::integrate_geometric(f1, T, 60, oracles::gl20())) <=
          1e-12);
  }
  {
    const double al = 0.6;
    const std::complex<double> lam(-1.0, 2.0);
    const double T = 0.8;
    for (int part = 0; part < 2; ++part) {
      auto fr0 = [&](double tau) {
        const std::complex<double> v =
            std::pow(tau, al - 1.0) * series_ml(al, al, lam * std::pow(tau, al));
        return part == 0 ? v.real() : v.imag();
      };
      auto fr1 = [&](double tau) {
        const std::complex<double> v =
            std::pow(tau, al) * series_ml(al, al, lam * std::pow(tau, al));
        return part == 0 ? v.real() : v.imag();
      };
      const std::complex<double> got0 = kernels::g0c(al, T, lam);
      const std::complex<double> got1 = kernels::g1c(al, T, lam);
      const double want0 =
          oracles::integrate_geometric(fr0, T, 60, oracles::gl20());
      const double want1 =
          oracles::integrate_geometric(fr1, T, 60, oracles::gl20());
      CHECK(std::fabs((part == 0 ? got0.real() : got0.imag()) - want0) <= 1e-11);
      CHECK(std::fabs((part == 0 ? got1.real() : got1.imag()) - want1) <= 1e-11);
    }
  }
}

TEST_CASE("moment tables grow lazily and stay bitwise stable") {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, 2);
  A(0, 0) = -1.0;
  A(1, 1) = -2.0;
  const SystemSpec spec = plain_spec(A, Eigen::MatrixXd::Identity(2, 2), 0.75);
  OperatorCache cache(spec);
  const double h = 0.125;
  const OperatorCache::MomentTable& t4 = cache.moment_table(h, 4);
  const std::complex<double> g0_3 = t4.g0[1][3];
  const OperatorCache::MomentTable& t8 = cache.moment_table(h, 8);
  CHECK(&t4 == &t8);
  CHECK(t8.g0[1].size() == 9);
  CHECK(t8.g0[1][3] == g0_3);
  CHECK(t8.g0[0][0] == std::complex<double>(0.0, 0.0));
  CHECK(std::fabs(t8.g0[1][8].real() -
                  kernels::g0(0.75, 1.0, -2.0)) <= 1e-15);
}

TEST_CASE("convolution of the zero control vanishes") {
  std::mt19937 gen(15);
  const SystemSpec spec = factory::random_spec(gen, 3, 2, 0, 0.7);
  OperatorCache cache(spec);
  const ControlBundle b = zero_bundle(spec, default_grid(spec, 64));
  const Eigen::VectorXd y = singular_convolve(cache, 0.0, 1.0, b);
  CHECK(y.norm() == 0.0);
  CHECK(singular_convolve(cache, 0.5, 0.5, b).norm() == 0.0);
}

TEST_CASE("order one with zero generator integrates a constant exactly") {
  const SystemSpec spec = plain_spec(Eigen::MatrixXd::Zero(2, 2),
                                     Eigen::MatrixXd::Identity(2, 2), 1.0);
  OperatorCache cache(spec);
  Eigen::VectorXd c(2);
  c << 2.0, -0.5;
  const ControlBundle b =
      sampled_bundle(spec, 64, [&](double) { return c; });
  for (double t : {0.25, 0.5, 1.0}) {
    const Eigen::VectorXd y = singular_convolve(cache, 0.0, t, b);
    CHECK((y - c * t).cwiseAbs().maxCoeff() <= 1e-14 * (1.0 + t));
  }
}

TEST_CASE("scalar relaxation reaches the closed-form response") {
  // C-D^{3/4} x = -x + u with u = 1: x(t) = 1 - E_{3/4}(-t^{3/4}).
  Eigen::MatrixXd A(1, 1), B(1, 1);
  A << -1.0;
  B << 1.0;
  const SystemSpec spec = plain_spec(A, B, 0.75);
  OperatorCache cache(spec);
  Eigen::VectorXd one(1);
  one << 1.0;
  for (int cells : {64, 1024}) {
    const ControlBundle b = sampled_bundle(spec, cells, [&](double) { return one; });
    const Eigen::VectorXd y = singular_convolve(cache, 0.0, 1.0, b);
    // Constant controls are represented exactly, so even the coarse grid
    // must hit the reference at solver tolerance.
    CHECK(std::fabs(y[0] - 0.6068916971842459382303639) <= 1e-10);
    const Eigen::VectorXd ymid = singular_convolve(cache, 0.0, 0.5, b);
    const double want =
        1.0 - oracles::ml_neg_spectral(0.75, std::pow(0.5, 0.75));
    CHECK(std::fabs(ymid[0] - want) <= 1e-10);
  }
}

TEST_CASE("smooth control convolution matches graded quadrature") {
  // Symmetric generator: test-side eigendecomposition + plain series.
  Eigen::MatrixXd A(2, 2);
  A << -1.2, 0.4, 0.4, -2.0;
  Eigen::MatrixXd B(2, 2);
  B << 1.0, 0.3, -0.2, 0.8;
  const double al = 0.7;
  const SystemSpec spec = plain_spec(A, B, al);
  OperatorCache cache(spec);
  auto u_law = [](double s) {
    Eigen::VectorXd u(2);
    u << std::sin(3.0 * s) + 0.2, std::cos(2.0 * s);
    return u;
  };
  const ControlBundle b = sampled_bundle(spec, 1024, u_law);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  const Eigen::MatrixXd W = es.eigenvectors();
  const Eigen::VectorXd d = es.eigenvalues();
  for (double t : {0.5, 1.0}) {
    const Eigen::VectorXd y = singular_convolve(cache, 0.0, t, b);
    for (int comp = 0; comp < 2; ++comp) {
      auto f = [&](double tau) {
        Eigen::VectorXd scal(2);
        for (int k = 0; k < 2; ++k)
          scal[k] = series_ml(al, al, d[k] * std::pow(tau, al));
        const Eigen::MatrixXd E = W * scal.asDiagonal() * W.transpose();
        const Eigen::VectorXd q = E * (B * u_law(t - tau));
        return std::pow(tau, al - 1.0) * q[comp];
      };
      const double want = oracles::integrate_geometric(f, t, 60, oracles::gl20());
      CHECK(std::fabs(y[comp] - want) <= 1e-5);
    }
  }
}

TEST_CASE("complex spectrum convolution matches graded quadrature") {
  Eigen::MatrixXd A(2, 2);
  A << 0.0, 2.0, -2.0, -1.0;
  Eigen::MatrixXd B(2, 2);
  B << 1.0, 0.0, 0.5, 1.0;
  const double al = 0.8;
  const SystemSpec spec = plain_spec(A, B, al);
  OperatorCache cache(spec);
  CHECK(cache.spectral());
  auto u_law = [](double s) {
    Eigen::VectorXd u(2);
    u << std::exp(-s), 0.5 * s;
    return u;
  };
  const ControlBundle b = sampled_bundle(spec, 1024, u_law);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(A.cast<std::complex<double>>());
  const Eigen::MatrixXcd W = es.eigenvectors();
  const Eigen::MatrixXcd Winv = W.inverse();
  const Eigen::VectorXcd d = es.eigenvalues();
  const double t = 0.75;
  const Eigen::VectorXd y = singular_convolve(cache, 0.0, t, b);
  for (int comp = 0; comp < 2; ++comp) {
    auto f = [&](double tau) {
      Eigen::VectorXcd scal(2);
      for (int k = 0; k < 2; ++k)
        scal[k] = series_ml(al, al, d[k] * std::pow(tau, al));
      const Eigen::MatrixXcd E = W * scal.asDiagonal() * Winv;
      const Eigen::VectorXcd q =
          E * (B * u_law(t - tau)).cast<std::complex<double>>();
      return std::pow(tau, al - 1.0) * q[comp].real();
    };
    const double want = oracles::integrate_geometric(f, t, 60, oracles::gl20());
    CHECK(std::fabs(y[comp] - want) <= 1e-5);
  }
}

TEST_CASE("refinement improves the convolution at the contracted order") {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, 2);
  A(0, 0) = -1.0;
  A(1, 1) = -2.5;
  for (double al : {0.75, 0.9}) {
    const SystemSpec spec = plain_spec(A, Eigen::MatrixXd::Identity(2, 2), al);
    OperatorCache cache(spec);
    auto u_law = [](double s) {
      Eigen::VectorXd u(2);
      u << std::sin(3.0 * s) + 0.2, std::cos(2.0 * s) - 0.5;
      return u;
    };
    Eigen::VectorXd ref, coarse, fine;
    ref = singular_convolve(cache, 0.0, 1.0, sampled_bundle(spec, 4096, u_law));
    coarse =
        singular_convolve(cache, 0.0, 1.0, sampled_bundle(spec, 128, u_law));
    fine = singular_convolve(cache, 0.0, 1.0, sampled_bundle(spec, 256, u_law));
    const double e1 = (coarse - ref).norm();
    const double e2 = (fine - ref).norm();
    REQUIRE(e2 > 1e-13);
    CHECK(e1 / e2 >= std::pow(2.0, std::min(2.0, 1.0 + al)));
  }
}

TEST_CASE("mask clips inactive channels inside the convolution") {
  Eigen::MatrixXd A(2, 2);
  A << -1.0, 0.2, 0.2, -2.0;
  Eigen::MatrixXd B(2, 2);
  B << 1.0, 0.4, -0.3, 1.0;
  SystemSpec spec;
  spec.dim_state = 2;
  spec.dim_control = 2;
  spec.A = A;
  spec.B = B;
  spec.order.alpha = 0.7;
  spec.control_mask = {{TimeWindow{0.25, 0.5}}, {TimeWindow{0.0, 1.0}}};
  spec = validate(std::move(spec));
  OperatorCache cache(spec);
  // Channel 0 law vanishes at both window boundaries, so masked evaluation
  // must agree with hand-zeroed samples cell by cell.
  auto u_law = [](double s) {
    Eigen::VectorXd u(2);
    u << std::sin(8.0 * M_PI * s), std::cos(s);
    return u;
  };
  ControlBundle masked = sampled_bundle(spec, 64, u_law);
  ControlBundle zeroed = masked;
  for (size_t j = 0; j < zeroed.grid.size(); ++j)
    if (zeroed.grid[j] < 0.25 || zeroed.grid[j] > 0.5) zeroed.u(0, j) = 0.0;
  SystemSpec unmasked = spec;
  unmasked.control_mask.clear();
  OperatorCache plain(unmasked);
  const Eigen::VectorXd a = singular_convolve(cache, 0.0, 1.0, masked);
  const Eigen::VectorXd b = singular_convolve(plain, 0.0, 1.0, zeroed);
  CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12);

  // A channel with an empty window list never contributes.
  SystemSpec dead = spec;
  dead.control_mask = {{}, {TimeWindow{0.0, 1.0}}};
  dead = validate(std::move(dead));
  OperatorCache dead_cache(dead);
  ControlBundle only0 = sampled_bundle(dead, 64, [](double s) {
    Eigen::VectorXd u(2);
    u << std::sin(s) + 1.0, 0.0;
    return u;
  });
  CHECK(singular_convolve(dead_cache, 0.0, 1.0, only0).norm() == 0.0);
}

TEST_CASE("convolution rejects off-grid endpoints and shape mismatches") {
  std::mt19937 gen(16);
  const SystemSpec spec = factory::random_spec(gen, 2, 1, 0, 0.8);
  OperatorCache cache(spec);
  ControlBundle b = zero_bundle(spec, default_grid(spec, 16));
  CHECK_THROWS_AS(singular_convolve(cache, 0.01, 1.0, b), ContractError);
  CHECK_THROWS_AS(singular_convolve(cache, 0.0, 0.99, b), ContractError);
  CHECK_THROWS_AS(singular_convolve(cache, 1.0, 0.5, b), ContractError);
  ControlBundle bad = b;
  bad.u = Eigen::MatrixXd::Zero(1, 3);
  CHECK_THROWS_AS(singular_convolve(cache, 0.0, 1.0, bad), ContractError);
}

TEST_CASE("defective generators use the blended fallback") {
  Eigen::MatrixXd A(2, 2);
  A << 0.0, 1.0, 0.0, 0.0;  // nilpotent: series truncate after the A term
  const double al = 0.75;
  const SystemSpec spec = plain_spec(A, Eigen::MatrixXd::Identity(2, 2), al);
  OperatorCache cache(spec);
  CHECK(!cache.spectral());
  const double t = 0.8;
  const double ta = std::pow(t, al);
  Eigen::MatrixXd S_ref = Eigen::MatrixXd::Identity(2, 2) + A * ta / gamma_fn(al + 1.0);
  Eigen::MatrixXd P_ref = Eigen::MatrixXd::Identity(2, 2) / gamma_fn(al) +
                          A * ta / gamma_fn(2.0 * al);
  CHECK((cache.s_alpha(t) - S_ref).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((cache.p_alpha(t) - P_ref).cwiseAbs().maxCoeff() <= 1e-12);

  const ControlBundle b = sampled_bundle(spec, 1024, [&](double) {
    return Eigen::VectorXd::Ones(2).eval();
  });
  const double tc = 0.75;  // grid node of the 1024-cell lattice
  const double tca = std::pow(tc, al);
  const Eigen::VectorXd y = singular_convolve(cache, 0.0, tc, b);
  // Closed form: x1 = t^al/Gamma(al+1) + t^{2al}/(2 al Gamma(2 al)),
  //              x2 = t^al/Gamma(al+1).
  const double x2 = tca / gamma_fn(al + 1.0);
  const double x1 = x2 + tca * tca / (2.0 * al * gamma_fn(2.0 * al));
  CHECK(std::fabs(y[1] - x2) <= 1e-12);       // constant kernel row: exact
  CHECK(std::fabs(y[0] - x1) <= 2e-4);        // blended row: O(h^{2 alpha})
}

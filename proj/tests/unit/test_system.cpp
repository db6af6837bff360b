#include <doctest.h>

#include <cmath>
#include <random>

#include "cvxwave/error.hpp"
#include "cvxwave/system.hpp"
#include "support.hpp"

using namespace cvxwave;
using G3 = std::array<double, 3>;

namespace {

double l2(const VecField& R) {
  const Grid3& g = R.grid();
  double acc = 0.0;
  for (int c = 0; c < R.n_comp(); ++c)
    for (double v : R[c].values()) acc += v * v;
  return std::sqrt(acc * g.h() * g.h() * g.h());
}

VecField perturbed(const VecField& W, double size, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  VecField out = W;
  for (int c = 0; c < W.n_comp(); ++c) {
    double scale = 0.0;
    for (double v : W[c].values()) scale = std::max(scale, std::abs(v));
    for (auto& v : out[c].data()) v += size * scale * U(rng);
  }
  return out;
}

} // namespace

TEST_SUITE("system") {

TEST_CASE("amplitude") {
  const PolyBasis b1(0.1, 1), b3(0.1, 3);
  const SystemCoeffs k1(b1), k3(b3);
  const std::vector<double> w1{1.0 / b1.s(1)};
  CHECK(amplitude(w1, k1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(amplitude(std::vector<double>{0, 0, 0}, k3) == 0.0);
  const double sum = b3.s(1) + b3.s(2) + b3.s(3);
  CHECK(amplitude(std::vector<double>(3, 1.0 / sum), k3) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(k3.s[0] > 0.0);
  CHECK_THROWS_AS(SystemCoeffs(b1, 0.0), ConfigError);
}

TEST_CASE("F1 and F2 by hand for N = 1") {
  const PolyBasis b(0.1, 1);
  const SystemCoeffs k(b);
  REQUIRE(k.D[0] == doctest::Approx(15.0).epsilon(1e-12));
  const G3 gx{1, 0, 0}, zero{0, 0, 0};
  // grad tau = 0 or grad w = 0 kill the numerator
  CHECK(F1(zero, std::vector<G3>{{1, 2, 3}}, std::vector<double>{1.0}, k) == 0.0);
  CHECK(F1(gx, std::vector<G3>{zero}, std::vector<double>{1.0}, k) == 0.0);

  const double f = F1(gx, std::vector<G3>{gx}, std::vector<double>{1.0}, k);
  CHECK(f == doctest::Approx(-2.0).epsilon(1e-14));
  CHECK(F2_row(1, 0.0, gx, std::vector<G3>{gx}, std::vector<double>{1.0}, f, k) == doctest::Approx(0.0).scale(30.0).epsilon(1e-13));

  const double f2 = F1(gx, std::vector<G3>{gx}, std::vector<double>{2.0}, k);
  CHECK(f2 == doctest::Approx(-1.0).epsilon(1e-14));
  // -2*15*1 + 1*15*2
  CHECK(F2_row(1, 0.0, gx, std::vector<G3>{gx}, std::vector<double>{2.0}, f2, k) == doctest::Approx(0.0).scale(30.0).epsilon(1e-13));
  const double f3 = F1(gx, std::vector<G3>{zero}, std::vector<double>{2.0}, k);
  CHECK(f3 == 0.0);
  CHECK(F2_row(1, 0.0, gx, std::vector<G3>{zero}, std::vector<double>{2.0}, f3, k) == 0.0);

  // with everything else zero the row is the Laplacian
  CHECK(F2_row(1, 4.25, zero, std::vector<G3>{zero}, std::vector<double>{1.0}, 0.0, k) == 4.25);
  // general N = 1 expansion: lap - 2 D (tau . w) - F1 D w
  const G3 gt{0.3, -0.2, 0.9}, gw{1.1, 0.4, -0.7};
  const double w = 0.8, lap = -2.5;
  const double tw = gt[0] * gw[0] + gt[1] * gw[1] + gt[2] * gw[2];
  const double F = -2.0 * b.s(1) * tw / (b.s(1) * w);
  CHECK(F1(gt, std::vector<G3>{gw}, std::vector<double>{w}, k) == doctest::Approx(F).epsilon(1e-14));
  CHECK(F2_row(1, lap, gt, std::vector<G3>{gw}, std::vector<double>{w}, F, k) == doctest::Approx(lap - 30.0 * tw - F * 15.0 * w).epsilon(1e-13));
}

TEST_CASE("F1 is homogeneous of degree zero in the w block") {
  const PolyBasis b(0.1, 3);
  const SystemCoeffs k(b);
  const G3 gt{0.1, 0.2, 0.97};
  const std::vector<G3> gw{{0.3, -0.1, 0.5}, {0.02, 0.07, -0.2}, {-0.01, 0.0, 0.04}};
  const std::vector<double> w{0.9, 0.2, -0.05};
  const double f = F1(gt, gw, w, k, Feasibility::permissive);
  for (double a : {0.5, 2.0, 1000.0}) {
    std::vector<G3> ga = gw;
    std::vector<double> wa = w;
    for (auto& g : ga)
      for (auto& v : g) v *= a;
    for (auto& v : wa) v *= a;
    CHECK(F1(gt, ga, wa, k, Feasibility::permissive) == doctest::Approx(f).epsilon(1e-14));
  }
}

TEST_CASE("feasibility modes") {
  const PolyBasis b(0.1, 1);
  const SystemCoeffs k(b, 0.01);
  const std::vector<double> tiny{0.001 / b.s(1)};
  const G3 gx{1, 0, 0};
  try {
    F1(gx, std::vector<G3>{gx}, tiny, k, Feasibility::strict, 42);
    FAIL("expected InfeasibleError");
  } catch (const InfeasibleError& e) {
    CHECK(e.node() == 42);
  }
  // permissive: the denominator becomes m_floor, sign kept
  CHECK(F1(gx, std::vector<G3>{gx}, tiny, k, Feasibility::permissive) == doctest::Approx(-2.0 * b.s(1) / 0.01));
  CHECK(guarded_amplitude(-0.001, k, Feasibility::permissive) == -0.01);
  CHECK(guarded_amplitude(0.0, k, Feasibility::permissive) == 0.01);
  CHECK(guarded_amplitude(0.5, k, Feasibility::strict) == 0.5);
}

TEST_CASE("residual vanishes for affine tau and constant w") {
  const Grid3 g = testing::omega(0.125);
  const PolyBasis b(0.1, 3);
  const SystemCoeffs k(b);
  VecField W(g, 4);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const auto x = g.coord(n);
    W[0][n] = 5.0 + 0.3 * x[0] - 0.1 * x[1] + x[2];
    for (int c = 1; c < 4; ++c) W[c][n] = 0.3 / b.s(c);
  }
  const auto R = residual(W, k);
  for (int c = 0; c < 4; ++c)
    for (double v : R[c].values()) REQUIRE(std::abs(v) < 1e-10);
}

TEST_CASE("residual assembles F1 and F2 from the grid stencils") {
  const Grid3 g = testing::omega(0.125);
  const PolyBasis b(0.1, 2);
  const SystemCoeffs k(b, 1e-4);
  const auto W = perturbed(testing::free_space_W(g, b, {0, 0, -5}), 0.05, 3);
  const auto R = residual(W, k);
  const double h = g.h();
  for (const Index3 p : {Index3{1, 1, 1}, Index3{4, 3, 6}, Index3{7, 7, 7}}) {
    const auto [i, j, kk] = p;
    auto d = [&](int c, int a) {
      Index3 u = p, v = p;
      u[a] += 1;
      v[a] -= 1;
      return (W[c](u[0], u[1], u[2]) - W[c](v[0], v[1], v[2])) / (2 * h);
    };
    auto lap = [&](int c) {
      double acc = -6 * W[c](i, j, kk);
      for (int a = 0; a < 3; ++a) {
        Index3 u = p, v = p;
        u[a] += 1;
        v[a] -= 1;
        acc += W[c](u[0], u[1], u[2]) + W[c](v[0], v[1], v[2]);
      }
      return acc / (h * h);
    };
    const G3 gt{d(0, 0), d(0, 1), d(0, 2)};
    const std::vector<G3> gw{{d(1, 0), d(1, 1), d(1, 2)}, {d(2, 0), d(2, 1), d(2, 2)}};
    const std::vector<double> w{W[1](i, j, kk), W[2](i, j, kk)};
    const double f = F1(gt, gw, w, k);
    CHECK(R[0](i, j, kk) == doctest::Approx(lap(0) - f).epsilon(1e-12));
    CHECK(R[1](i, j, kk) == doctest::Approx(F2_row(1, lap(1), gt, gw, w, f, k)).epsilon(1e-12));
    CHECK(R[2](i, j, kk) == doctest::Approx(F2_row(2, lap(2), gt, gw, w, f, k)).epsilon(1e-12));
  }
  for (std::size_t n : boundary_nodes(g)) REQUIRE(R[1][n] == 0.0);
}

TEST_CASE("free-space solution is a discrete near-zero of the system") {
  const PolyBasis b(0.1, 3);
  const SystemCoeffs k(b, 1e-3);
  std::vector<double> norms;
  for (double h : {1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0}) {
    const auto W = testing::free_space_W(testing::omega(h), b, {0, 0, -5});
    norms.push_back(l2(residual(W, k)));
  }
  CAPTURE(norms[0]);
  CAPTURE(norms[1]);
  CAPTURE(norms[2]);
  CHECK(norms[0] / norms[1] >= 1.5);
  CHECK(norms[1] / norms[2] >= 1.5);
}

TEST_CASE("scaling the w block leaves the tau row unchanged") {
  const Grid3 g = testing::omega(0.125);
  const PolyBasis b(0.1, 3);
  const SystemCoeffs k(b, 1e-6);
  const auto W = perturbed(testing::free_space_W(g, b, {0, 0, -5}), 0.02, 9);
  VecField W2 = W;
  for (int c = 1; c < 4; ++c)
    for (auto& v : W2[c].data()) v *= 2.0;
  const auto R = residual(W, k), R2 = residual(W2, k);
  for (std::size_t n = 0; n < g.size(); ++n) {
    REQUIRE(R2[0][n] == doctest::Approx(R[0][n]).epsilon(1e-13));
    for (int c = 1; c < 4; ++c) REQUIRE(R2[c][n] == doctest::Approx(2.0 * R[c][n]).epsilon(1e-12).scale(1e-3));
  }
}

TEST_CASE("residual is smooth along directions inside the feasible set") {
  const Grid3 g = testing::omega(0.125);
  const PolyBasis b(0.1, 3);
  const SystemCoeffs k(b, 1e-4);
  const auto W = perturbed(testing::free_space_W(g, b, {0, 0, -5}), 0.02, 1);
  VecField dir = W;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int c = 0; c < 4; ++c)
    for (auto& v : dir[c].data()) v = (c == 0 ? 1.0 : 1e-3) * U(rng);
  auto step = [&](double e) {
    VecField p = W, m = W;
    for (int c = 0; c < 4; ++c)
      for (std::size_t n = 0; n < g.size(); ++n) {
        p[c][n] += e * dir[c][n];
        m[c][n] -= e * dir[c][n];
      }
    const auto Rp = residual(p, k), Rm = residual(m, k);
    std::vector<double> d;
    for (int c = 0; c < 4; ++c)
      for (std::size_t n = 0; n < g.size(); ++n) d.push_back((Rp[c][n] - Rm[c][n]) / (2 * e));
    return d;
  };
  // central differences of a smooth map: successive gaps shrink by 4 when the step halves
  const auto d0 = step(2e-3), d1 = step(1e-3), d2 = step(5e-4);
  double a = 0.0, c = 0.0;
  for (std::size_t i = 0; i < d1.size(); ++i) {
    a += (d0[i] - d1[i]) * (d0[i] - d1[i]);
    c += (d1[i] - d2[i]) * (d1[i] - d2[i]);
  }
  CHECK(std::sqrt(a / c) == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("small perturbations of a feasible field stay feasible") {
  const Grid3 g = testing::omega(0.125);
  const PolyBasis b(0.1, 3);
  const SystemCoeffs k(b, 1e-3);
  const auto W = testing::free_space_W(g, b, {0, 0, -5});
  const double m0 = min_amplitude(W, k);
  REQUIRE(m0 > k.m_floor);
  const double room = m0 - k.m_floor;
  double s1 = 0.0;
  for (double s : k.s) s1 += std::abs(s);
  for (unsigned seed = 1; seed <= 20; ++seed) {
    VecField P = W;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    // |delta S| <= sum |s_n| * |delta w_n| < room
    for (int c = 1; c < 4; ++c)
      for (auto& v : P[c].data()) v += 0.99 * room / s1 * U(rng);
    REQUIRE(min_amplitude(P, k) > k.m_floor);
    CHECK_NOTHROW(residual(P, k, Feasibility::strict));
  }
}

}

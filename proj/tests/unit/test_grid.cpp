#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "cvxwave/error.hpp"
#include "cvxwave/grid.hpp"
#include "support.hpp"

using namespace cvxwave;
using testing::omega;

namespace {

double max_abs_interior(const ScalarField& f, const std::function<double(const Vec3&)>& ref) {
  const Grid3& g = f.grid();
  double e = 0.0;
  for (int k = 1; k < g.nz() - 1; ++k)
    for (int j = 1; j < g.ny() - 1; ++j)
      for (int i = 1; i < g.nx() - 1; ++i) e = std::max(e, std::abs(f(i, j, k) - ref(g.coord(i, j, k))));
  return e;
}

ScalarField random_field(const Grid3& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  ScalarField f(g);
  for (auto& v : f.data()) v = U(rng);
  return f;
}

} // namespace

TEST_SUITE("grid") {

TEST_CASE("coordinates are origin plus h times index") {
  const Grid3 g = omega(1.0 / 16.0);
  CHECK(g.nx() == 17);
  CHECK(g.nz() == 17);
  const auto p = g.coord(16, 3, 11);
  CHECK(p[0] == -0.5 + 16 * (1.0 / 16.0));
  CHECK(p[1] == -0.5 + 3 * (1.0 / 16.0));
  CHECK(p[2] == 11 * (1.0 / 16.0));
  CHECK(g.ijk(g.index(5, 7, 9)) == Index3{5, 7, 9});
}

TEST_CASE("degenerate grids are rejected") {
  CHECK_THROWS_AS(Grid3({0, 0, 0}, 0.1, {2, 5, 5}), ConfigError);
  CHECK_THROWS_AS(Grid3({0, 0, 0}, -0.1, {5, 5, 5}), ConfigError);
  CHECK_THROWS_AS(Grid3::box({0, 0, 0}, {1, 1, 1}, 0.3), ConfigError);
}

TEST_CASE("non-finite values are rejected") {
  ScalarField f(omega(0.25));
  f[3] = std::nan("");
  CHECK_THROWS_AS(f.check_finite("test"), NumericalError);
}

TEST_CASE("node classes: rim of the top face is gamma1") {
  const Grid3 g = omega(0.25);
  const auto cls = classify_nodes(g);
  CHECK(cls[g.index(2, 2, 4)] == NodeClass::gamma0);
  CHECK(cls[g.index(0, 2, 4)] == NodeClass::gamma1);
  CHECK(cls[g.index(4, 4, 4)] == NodeClass::gamma1);
  CHECK(cls[g.index(2, 2, 0)] == NodeClass::gamma1);
  CHECK(cls[g.index(2, 2, 2)] == NodeClass::interior);
  CHECK(gamma0_nodes(g).size() == 9);
  CHECK(boundary_nodes(g).size() == 125 - 27);
  std::size_t n0 = 0, n1 = 0;
  for (auto c : cls) {
    n0 += c == NodeClass::gamma0;
    n1 += c == NodeClass::gamma1;
  }
  CHECK(n0 + n1 == boundary_nodes(g).size());
}

TEST_CASE("laplacian7 on constants and quadratics") {
  const Grid3 g = omega(1.0 / 8.0);
  const auto c = laplacian7(ScalarField(g, 3.7));
  CHECK(max_abs_interior(c, [](const Vec3&) { return 0.0; }) < 1e-12);
  const auto q = laplacian7(ScalarField::from_function(g, [](const Vec3& x) { return x[0] * x[0] + x[1] * x[1] + x[2] * x[2]; }));
  CHECK(max_abs_interior(q, [](const Vec3&) { return 6.0; }) < 1e-10 * 6.0);
  // mixed quadratic: lap(3xy - 2z^2 + x) = -4
  const auto m = laplacian7(ScalarField::from_function(g, [](const Vec3& x) { return 3 * x[0] * x[1] - 2 * x[2] * x[2] + x[0]; }));
  CHECK(max_abs_interior(m, [](const Vec3&) { return -4.0; }) < 1e-10 * 4.0);
  CHECK(q(0, 3, 3) == 0.0);
}

TEST_CASE("laplacian7 on sin(pi x) at h = 1/8") {
  const Grid3 g = omega(1.0 / 8.0);
  const double pi = std::numbers::pi;
  const auto L = laplacian7(ScalarField::from_function(g, [&](const Vec3& x) { return std::sin(pi * x[0]); }));
  double worst = 0.0;
  for (int k = 1; k < g.nz() - 1; ++k)
    for (int j = 1; j < g.ny() - 1; ++j)
      for (int i = 1; i < g.nx() - 1; ++i) {
        const double s = std::sin(pi * g.coord(i, j, k)[0]);
        if (std::abs(s) < 1e-12) {
          CHECK(std::abs(L(i, j, k)) < 1e-9);
          continue;
        }
        worst = std::max(worst, std::abs(L(i, j, k) / (-pi * pi * s) - 1.0));
      }
  CHECK(worst < 0.02);
}

TEST_CASE("gradient_c exact on affine, accurate on distance") {
  const Grid3 g = omega(1.0 / 16.0);
  const auto G = gradient_c(ScalarField::from_function(g, [](const Vec3& x) { return 2 * x[0] + 3 * x[1] - x[2]; }));
  const double want[3] = {2.0, 3.0, -1.0};
  for (int a = 0; a < 3; ++a)
    for (std::size_t n = 0; n < g.size(); ++n) REQUIRE(G[static_cast<std::size_t>(a)][n] == doctest::Approx(want[a]).epsilon(1e-12));

  const auto Z = gradient_c(ScalarField(g, -1.25));
  for (int a = 0; a < 3; ++a)
    for (double v : Z[static_cast<std::size_t>(a)].data()) REQUIRE(v == 0.0);

  const Vec3 x0{0, 0, -5};
  const auto D = gradient_c(ScalarField::from_function(g, [&](const Vec3& x) { return testing::dist(x, x0); }));
  double err = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    const auto x = g.coord(n);
    const double r = testing::dist(x, x0);
    for (int a = 0; a < 3; ++a) err = std::max(err, std::abs(D[static_cast<std::size_t>(a)][n] - (x[a] - x0[a]) / r));
  }
  CHECK(err < 0.01);
}

TEST_CASE("dz_oneside examples") {
  const Grid3 g = omega(1.0 / 16.0);
  const auto top = [&](const std::vector<double>& v, int i, int j) { return v[static_cast<std::size_t>(i + g.nx() * j)]; };
  const auto dz = dz_oneside(ScalarField::from_function(g, [](const Vec3& x) { return x[2]; }));
  CHECK(dz.size() == static_cast<std::size_t>(g.nx() * g.ny()));
  CHECK(top(dz, 3, 5) == doctest::Approx(1.0).epsilon(1e-13));
  const auto dz2 = dz_oneside(ScalarField::from_function(g, [](const Vec3& x) { return x[2] * x[2]; }));
  CHECK(top(dz2, 8, 8) == doctest::Approx(2.0).epsilon(1e-13));
  const Vec3 x0{0, 0, -5};
  const auto dd = dz_oneside(ScalarField::from_function(g, [&](const Vec3& x) { return testing::dist(x, x0); }));
  CHECK(std::abs(top(dd, 8, 8) - 1.0) < 1e-3);
}

TEST_CASE("interp_refine: coincident nodes, affine and trilinear") {
  const Grid3 g = omega(1.0 / 8.0);
  const auto f = random_field(g, 11);
  const auto F = interp_refine(f);
  CHECK(F.grid() == g.refined());
  for (int k = 0; k < g.nz(); ++k)
    for (int j = 0; j < g.ny(); ++j)
      for (int i = 0; i < g.nx(); ++i) REQUIRE(F(2 * i, 2 * j, 2 * k) == f(i, j, k));

  const auto aff = [](const Vec3& x) { return 1.5 - 2 * x[0] + 0.25 * x[1] + 4 * x[2]; };
  const auto Fa = interp_refine(ScalarField::from_function(g, aff));
  for (std::size_t n = 0; n < Fa.size(); ++n) REQUIRE(Fa[n] == doctest::Approx(aff(Fa.grid().coord(n))).epsilon(1e-12));

  // xyz is itself trilinear in each cell, so the refinement reproduces it at every fine node
  const auto xyz = [](const Vec3& x) { return x[0] * x[1] * x[2]; };
  const auto Fx = interp_refine(ScalarField::from_function(g, xyz));
  double e = 0.0;
  for (std::size_t n = 0; n < Fx.size(); ++n) e = std::max(e, std::abs(Fx[n] - xyz(Fx.grid().coord(n))));
  CHECK(e < 1e-14);
  // a cell centre sits between eight coarse nodes: their mean
  const double mean = (f(2, 2, 2) + f(3, 2, 2) + f(2, 3, 2) + f(3, 3, 2) + f(2, 2, 3) + f(3, 2, 3) + f(2, 3, 3) + f(3, 3, 3)) / 8.0;
  CHECK(F(5, 5, 5) == doctest::Approx(mean).epsilon(1e-14));
}

TEST_CASE("refine then restrict is the identity") {
  const Grid3 g = omega(0.25);
  const auto f = random_field(g, 3);
  const auto back = restrict_to(interp_refine(f), g);
  CHECK(back.data() == f.data());
  CHECK_THROWS_AS(restrict_to(f, omega(1.0 / 3.0)), ConfigError);
}

TEST_CASE("operators are linear") {
  const Grid3 g = omega(1.0 / 8.0);
  const auto f = random_field(g, 1), h = random_field(g, 2);
  ScalarField comb(g);
  for (std::size_t n = 0; n < g.size(); ++n) comb[n] = 2.5 * f[n] - 0.75 * h[n];
  const auto Lf = laplacian7(f), Lh = laplacian7(h), Lc = laplacian7(comb);
  const auto Gf = gradient_c(f), Gh = gradient_c(h), Gc = gradient_c(comb);
  double e = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    e = std::max(e, std::abs(Lc[n] - (2.5 * Lf[n] - 0.75 * Lh[n])));
    for (std::size_t a = 0; a < 3; ++a) e = std::max(e, std::abs(Gc[a][n] - (2.5 * Gf[a][n] - 0.75 * Gh[a][n])));
  }
  CHECK(e < 1e-10);
}

TEST_CASE("node-sum quadrature: volume and first moment") {
  for (double h : {1.0 / 8.0, 1.0 / 16.0}) {
    const Grid3 g = omega(h);
    const double one = weighted_quadrature(ScalarField(g, 1.0), [](const Vec3&) { return 1.0; });
    // all nodes carry h^3, so the sum is (1 + h)^3
    CHECK(one == doctest::Approx(std::pow(1.0 + h, 3)).epsilon(1e-12));
    CHECK(std::abs(one - 1.0) < 4 * h);
    const double zs = weighted_quadrature(ScalarField::from_function(g, [](const Vec3& x) { return x[2]; }),
                                          [](const Vec3&) { return 1.0; });
    CHECK(std::abs(zs - 0.5) < 2 * h);
    const double in = weighted_quadrature(ScalarField(g, 1.0), [](const Vec3&) { return 1.0; }, NodeSet::interior);
    CHECK(in == doctest::Approx(std::pow(1.0 - h, 3)).epsilon(1e-12));
  }
  const auto f = random_field(omega(0.125), 5);
  ScalarField sq(f.grid());
  for (std::size_t n = 0; n < sq.size(); ++n) sq[n] = f[n] * f[n];
  CHECK(weighted_quadrature(sq, [](const Vec3&) { return 1.0; }) >= 0.0);
}

TEST_CASE("node-sum quadrature of exp(2 z^2) converges to the adaptive oracle") {
  using boost::math::quadrature::gauss_kronrod;
  const double exact = gauss_kronrod<double, 61>::integrate([](double z) { return std::exp(2 * z * z); }, 0.0, 1.0, 10, 1e-14);
  CHECK(exact == doctest::Approx(2.3644538928).epsilon(1e-9));

  auto Q = [](double h) {
    return weighted_quadrature(ScalarField(omega(h), 1.0), [](const Vec3& x) { return std::exp(2 * x[2] * x[2]); });
  };
  const double q16 = Q(1.0 / 16.0), q32 = Q(1.0 / 32.0), q64 = Q(1.0 / 64.0);
  // first order: the error halves with h
  const double r1 = (q16 - exact) / (q32 - exact), r2 = (q32 - exact) / (q64 - exact);
  CHECK(r1 == doctest::Approx(2.0).epsilon(0.1));
  CHECK(r2 == doctest::Approx(2.0).epsilon(0.05));
  // one Richardson step removes the O(h) boundary term
  CHECK(2 * q64 - q32 == doctest::Approx(exact).epsilon(0.02));
}

TEST_CASE("VecField flatten round trip") {
  const Grid3 g = omega(0.25);
  VecField W(std::vector<ScalarField>{random_field(g, 1), random_field(g, 2), random_field(g, 3)});
  auto flat = W.flatten();
  CHECK(flat.size() == 3 * g.size());
  CHECK(flat[g.size() + 4] == W[1][4]);
  VecField V(g, 3);
  V.assign(flat);
  for (int c = 0; c < 3; ++c) CHECK(V[c].data() == W[c].data());
}

}

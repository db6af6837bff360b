#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "cvxwave/error.hpp"
#include "cvxwave/verify.hpp"
#include "support.hpp"

using namespace cvxwave;

namespace {

double integrate01(const std::function<double(double)>& f) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 1.0, 15, 1e-13);
}

// u = sin(pi x') sin(pi y') phi(z), phi = z (1 - z)^2: every Carleman term separates into
// (1/4) times a z integral.
double continuous_ratio(double lambda, double b) {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  auto phi = [](double z) { return z * (1 - z) * (1 - z); };
  auto dphi = [](double z) { return (1 - z) * (1 - 3 * z); };
  auto ddphi = [](double z) { return 6 * z - 4; };
  auto w = [&](double z) { return std::exp(2 * lambda * (z + b) * (z + b)); };
  const double P = integrate01([&](double z) { return phi(z) * phi(z) * w(z); });
  const double P1 = integrate01([&](double z) { return dphi(z) * dphi(z) * w(z); });
  const double P2 = integrate01([&](double z) { return ddphi(z) * ddphi(z) * w(z); });
  const double L = integrate01([&](double z) { const double v = ddphi(z) - 2 * pi2 * phi(z); return v * v * w(z); });
  // xx, yy, xy twice; zz; xz and yz twice
  const double hess = 4 * pi2 * pi2 * P + P2 + 4 * pi2 * P1;
  const double grad = 2 * pi2 * P + P1;
  return L / (hess / lambda + lambda * grad + lambda * lambda * lambda * P);
}

} // namespace

TEST_SUITE("verify") {

TEST_CASE("admissible samples") {
  const Grid3 g = testing::omega(1.0 / 16.0);
  const auto u = sample_admissible_u(g, 5);
  for (std::size_t n : boundary_nodes(g)) REQUIRE(u[n] == 0.0);
  double nrm = 0.0;
  for (double v : u.values()) nrm += v * v;
  CHECK(nrm * std::pow(g.h(), 3) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sample_admissible_u(g, 5).data() == u.data());
  CHECK(sample_admissible_u(g, 6).data() != u.data());
  CHECK_THROWS_AS(sample_admissible_u(g, 5, 0), ConfigError);
}

TEST_CASE("samples have a double zero at the top face") {
  // the one-sided z derivative at the top sees only the interior and must vanish at second order
  std::vector<double> top;
  for (double h : {1.0 / 16.0, 1.0 / 32.0}) {
    const Grid3 g = testing::omega(h);
    ScalarField u = sample_admissible_u(g, 3);
    const auto dz = dz_oneside(u);
    double m = 0.0;
    for (int j = 1; j < g.ny() - 1; ++j)
      for (int i = 1; i < g.nx() - 1; ++i) m = std::max(m, std::abs(dz[static_cast<std::size_t>(i + g.nx() * j)]));
    top.push_back(m);
  }
  CAPTURE(top[0]);
  CAPTURE(top[1]);
  CHECK(top[0] / top[1] > 3.0);
}

TEST_CASE("ratio is scale invariant and needs lambda >= 1") {
  const Grid3 g = testing::omega(0.125);
  const auto u = sample_admissible_u(g, 1);
  ScalarField u3 = u;
  for (auto& v : u3.data()) v *= -3.0;
  CHECK(carleman_ratio(u3, 4.0, 0.1) == doctest::Approx(carleman_ratio(u, 4.0, 0.1)).epsilon(1e-13));
  CHECK_THROWS_AS(carleman_ratio(u, 0.5, 0.1), ConfigError);
  CHECK_THROWS_AS(carleman_ratio(ScalarField(g, 0.0), 2.0, 0.1), ConfigError);
  const auto t = carleman_terms(u, 1.0, 0.0);
  CHECK(t.lhs > 0.0);
  CHECK(t.hess > 0.0);
  CHECK(t.grad > 0.0);
}

TEST_CASE("discrete ratio matches a separable continuous oracle") {
  const Grid3 g = testing::omega(1.0 / 64.0);
  const auto u = ScalarField::from_function(g, [](const Vec3& x) {
    const double pi = std::numbers::pi, z = x[2];
    return std::sin(pi * (x[0] + 0.5)) * std::sin(pi * (x[1] + 0.5)) * z * (1 - z) * (1 - z);
  });
  for (double lambda : {1.0, 8.0}) {
    CAPTURE(lambda);
    const double ref = continuous_ratio(lambda, 0.1);
    CHECK(carleman_ratio(u, lambda, 0.1) == doctest::Approx(ref).epsilon(0.02));
  }
}

TEST_CASE("sweep") {
  const Grid3 g = testing::omega(0.125);
  const auto a = carleman_sweep(g, {2.0, 4.0}, 4, 100);
  const auto b = carleman_sweep(g, {2.0, 4.0}, 4, 100);
  CHECK(a.min_ratio == b.min_ratio);
  CHECK(a.worst_seed == b.worst_seed);
  CHECK(a.worst_seed[0] >= 100);
  CHECK(a.worst_seed[0] < 104);
  CHECK(a.min_ratio[1] == doctest::Approx(carleman_ratio(sample_admissible_u(g, a.worst_seed[1]), 4.0, 0.1)));
  CHECK(a.to_json()["samples"][0] == 4);
  CHECK(a.text().find(a.pass ? "PASS" : "FAIL") != std::string::npos);
  CHECK_THROWS_AS(carleman_sweep(g, {2.0}, 0, 1), ConfigError);
  CHECK_THROWS_AS(carleman_sweep(g, {}, 3, 1), ConfigError);
}

TEST_CASE("Bregman gap") {
  const Grid3 g = testing::omega(0.125);
  VecField W1(g, 2), W2(g, 2), G(g, 2);
  for (std::size_t n = 0; n < g.size(); ++n) {
    W1[0][n] = 1.0;
    W2[0][n] = 1.5;
    G[0][n] = 2.0;
  }
  CHECK(bregman_gap(3.0, 3.0, G, W1, W1) == 0.0);
  // linear function J = 2 sum W: gap zero
  const double J1 = 2.0 * g.size(), J2 = 3.0 * g.size();
  CHECK(bregman_gap(J1, J2, G, W1, W2) == doctest::Approx(0.0).scale(1.0));
  CHECK(bregman_gap(J1, J2 + 1.0, G, W1, W2) == doctest::Approx(1.0));
}

TEST_CASE("convexity probe bookkeeping") {
  const Grid3 g = testing::omega(0.125);
  const PolyBasis b(0.1, 2);
  const SystemCoeffs k(b, 1e-6);
  const auto W = testing::free_space_W(g, b, {0, 0, -5});
  const auto d = testing::data_from(W);
  ObjectiveConfig cfg;
  cfg.lambda = 2.0;
  const auto r = convexity_probe(W, d, cfg, k, 3, 9, 0.05);
  CHECK(r.gaps.size() == 3);
  CHECK(r.rel_gaps.size() == 3);
  CHECK(r.min_gap == *std::min_element(r.gaps.begin(), r.gaps.end()));
  const auto again = convexity_probe(W, d, cfg, k, 3, 9, 0.05);
  CHECK(again.gaps == r.gaps);
  CHECK(r.to_json()["pairs"] == 3);
  CHECK_THROWS_AS(convexity_probe(W, d, cfg, k, 0, 9), ConfigError);
}

}

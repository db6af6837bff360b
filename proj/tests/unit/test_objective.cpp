#include <doctest.h>

#include <cmath>
#include <random>

#include "cvxwave/error.hpp"
#include "cvxwave/objective.hpp"
#include "cvxwave/system.hpp"
#include "support.hpp"

using namespace cvxwave;

namespace {

const Vec3 kSource{0, 0, -5};

// W from free space, then jittered in the interior only
VecField jittered(const Grid3& g, const PolyBasis& b, double size, unsigned seed) {
  VecField W = testing::free_space_W(g, b, kSource);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const DofMap dofs(g);
  // w_2.. vanish identically in free space; borrow the w_1 scale for them
  double w1 = 0.0;
  for (double v : W[1].values()) w1 = std::max(w1, std::abs(v));
  for (int c = 0; c < W.n_comp(); ++c) {
    double scale = c == 0 ? 0.0 : w1;
    for (double v : W[c].values()) scale = std::max(scale, std::abs(v));
    for (std::size_t n : dofs.free_nodes()) W[c][n] += size * scale * U(rng);
  }
  return W;
}

// straight from the residual field plus dz_oneside; no shared loops with the objective
double naive_J(const VecField& W, const LevelData& d, const ObjectiveConfig& cfg, const SystemCoeffs& k) {
  const Grid3& g = W.grid();
  const double h = g.h();
  const auto R = residual(W, k, cfg.mode);
  double J = 0.0;
  const DofMap dofs(g);
  for (std::size_t n : dofs.free_nodes()) {
    const double wz = std::exp(2 * cfg.lambda * std::pow(g.coord(n)[2] + cfg.b, 2));
    for (int c = 0; c < W.n_comp(); ++c) J += wz * h * h * h * R[c][n] * R[c][n];
  }
  const auto top = gamma0_nodes(g);
  const double wt = std::exp(2 * cfg.lambda * std::pow(1.0 + cfg.b, 2));
  for (int c = 0; c < W.n_comp(); ++c) {
    const auto dz = dz_oneside(W[c]);
    for (std::size_t q = 0; q < top.size(); ++q) {
      const auto [i, j, kk] = g.ijk(top[q]);
      const double e = dz[static_cast<std::size_t>(i + g.nx() * j)] - d.q1[q * W.n_comp() + c];
      J += cfg.sigma_N * wt * h * h * e * e;
    }
  }
  return J;
}

} // namespace

TEST_SUITE("objective") {

TEST_CASE("Carleman weight values") {
  ObjectiveConfig cfg;
  CHECK(carleman_weight(0.0, cfg) == 1.0);
  CHECK(carleman_weight(1.0, cfg) == doctest::Approx(std::exp(2.0)).epsilon(1e-15));
  cfg.lambda = 0.0;
  CHECK(carleman_weight(0.7, cfg) == 1.0);
  cfg.lambda = 3.0;
  cfg.b = 0.5;
  CHECK(carleman_weight(0.0, cfg) == doctest::Approx(std::exp(1.5)).epsilon(1e-15));
}

TEST_CASE("config validation and json") {
  ObjectiveConfig cfg;
  CHECK_NOTHROW(cfg.validate(1.0));
  cfg.lambda = 800.0;
  CHECK_THROWS_AS(cfg.validate(1.0), ConfigError);
  cfg.lambda = -1.0;
  CHECK_THROWS_AS(cfg.validate(1.0), ConfigError);
  cfg = ObjectiveConfig{};
  cfg.lambda = 4.0;
  cfg.mode = Feasibility::strict;
  const auto back = ObjectiveConfig::from_json(cfg.to_json());
  CHECK(back.lambda == 4.0);
  CHECK(back.mode == Feasibility::strict);
  CHECK_THROWS_AS(ObjectiveConfig::from_json({{"lamda", 1.0}}), ConfigError);
  CHECK_THROWS_AS(ObjectiveConfig::from_json({{"mode", "loose"}}), ConfigError);
}

TEST_CASE("constant residual in the tau row") {
  // tau = R0 x^2 / 2 has lap tau = R0 exactly; constant w keeps F1 = 0 and every other row zero
  const double h = 0.125, R0 = 0.7;
  const Grid3 g = testing::omega(h);
  const PolyBasis b(0.1, 2);
  const SystemCoeffs k(b);
  VecField W(g, 3);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const double x = g.coord(n)[0];
    W[0][n] = R0 * x * x / 2;
    W[1][n] = 0.05;
    W[2][n] = 0.01;
  }
  ObjectiveConfig cfg;
  cfg.lambda = 0.0;
  cfg.sigma_N = 0.0;
  const auto d = testing::data_from(W);
  const double n_int = std::pow(g.nx() - 2.0, 3);
  CHECK(eval_J(W, d, cfg, k) == doctest::Approx(R0 * R0 * n_int * h * h * h).epsilon(1e-12));
  cfg.sigma_N = 10.0;
  // Neumann rows come from W itself
  CHECK(eval_J_parts(W, d, cfg, k).neumann == 0.0);
}

TEST_CASE("J matches an independent evaluation") {
  const Grid3 g = testing::omega(0.125);
  const PolyBasis b(0.1, 3);
  const SystemCoeffs k(b, 1e-6);
  const auto ref = testing::free_space_W(g, b, kSource);
  const auto d = testing::data_from(ref);
  auto W = jittered(g, b, 0.05, 1);
  // perturb the Neumann data too so that term is non-zero
  auto dd = d;
  for (std::size_t i = 0; i < dd.q1.size(); ++i) dd.q1[i] *= 1.0 + 0.01 * static_cast<double>(i % 7);
  for (double lambda : {0.0, 1.0, 3.0}) {
    ObjectiveConfig cfg;
    cfg.lambda = lambda;
    cfg.b = 0.1;
    const double J = eval_J(W, dd, cfg, k);
    CHECK(J > 0.0);
    CHECK(J == doctest::Approx(naive_J(W, dd, cfg, k)).epsilon(1e-12));
    double Jg = 0.0;
    grad_J(W, dd, cfg, k, &Jg);
    CHECK(Jg == doctest::Approx(J).epsilon(1e-14));
  }
}

TEST_CASE("gradient agrees with central differences") {
  const Grid3 g = testing::omega(0.125);
  const PolyBasis b(0.1, 3);
  const SystemCoeffs k(b, 1e-6);
  const auto d = testing::data_from(testing::free_space_W(g, b, kSource));
  auto W = jittered(g, b, 0.05, 2);
  auto dd = d;
  for (double& q : dd.q1) q *= 1.02;

  for (double beta : {0.0, 1e-4}) {
    CAPTURE(beta);
    ObjectiveConfig cfg;
    cfg.lambda = 2.0;
    cfg.beta = beta;
    const auto G = grad_J(W, dd, cfg, k);
    const DofMap dofs(g);
    const auto& free = dofs.free_nodes();
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::size_t> pick_node(0, free.size() - 1);
    std::uniform_int_distribution<int> pick_comp(0, 3);
    // include top-adjacent nodes that feel the Neumann stencil
    std::vector<std::pair<std::size_t, int>> probes;
    for (int i = 0; i < 20; ++i) probes.emplace_back(free[pick_node(rng)], pick_comp(rng));
    probes.emplace_back(g.index(4, 4, g.nz() - 2), 0);
    probes.emplace_back(g.index(3, 5, g.nz() - 3), 2);
    for (const auto& [n, c] : probes) {
      double scale = 0.0;
      for (double v : W[c].values()) scale = std::max(scale, std::abs(v));
      const double e = 1e-5 * scale;
      VecField Wp = W, Wm = W;
      Wp[c][n] += e;
      Wm[c][n] -= e;
      const double fd = (eval_J(Wp, dd, cfg, k) - eval_J(Wm, dd, cfg, k)) / (2 * e);
      CAPTURE(n);
      CAPTURE(c);
      CHECK(G[c][n] == doctest::Approx(fd).epsilon(1e-5).scale(1e-6 * grad_norm(G)));
    }
    for (std::size_t n : boundary_nodes(g)) REQUIRE(G[0][n] == 0.0);
  }
}

TEST_CASE("gradient through the clamped amplitude") {
  // every w is below the floor: S is frozen at m_floor and drops out of the derivative
  const Grid3 g = testing::omega(0.125);
  const PolyBasis b(0.1, 1);
  const SystemCoeffs k(b, 1.0);
  auto W = jittered(g, b, 0.1, 4);
  const auto d = testing::data_from(W);
  ObjectiveConfig cfg;
  const auto G = grad_J(W, d, cfg, k);
  const std::size_t n = g.index(4, 4, 4);
  const double e = 1e-9;
  VecField Wp = W, Wm = W;
  Wp[1][n] += e;
  Wm[1][n] -= e;
  CHECK(G[1][n] == doctest::Approx((eval_J(Wp, d, cfg, k) - eval_J(Wm, d, cfg, k)) / (2 * e)).epsilon(1e-5));
}

TEST_CASE("J grows with lambda") {
  const Grid3 g = testing::omega(0.125);
  const PolyBasis b(0.1, 2);
  const SystemCoeffs k(b, 1e-6);
  const auto W = jittered(g, b, 0.05, 5);
  const auto d = testing::data_from(W);
  double prev = 0.0;
  for (double lambda : {0.0, 1.0, 2.0, 4.0}) {
    ObjectiveConfig cfg;
    cfg.lambda = lambda;
    const double J = eval_J(W, d, cfg, k);
    CHECK(J > prev);
    prev = J;
  }
}

TEST_CASE("input mismatches are rejected") {
  const Grid3 g = testing::omega(0.125);
  const PolyBasis b(0.1, 2);
  const SystemCoeffs k(b);
  auto W = jittered(g, b, 0.0, 6);
  const auto d = testing::data_from(W);
  ObjectiveConfig cfg;
  CHECK_NOTHROW(eval_J(W, d, cfg, k));
  auto bad = W;
  bad[1][0] += 1e-6;
  CHECK_THROWS_AS(eval_J(bad, d, cfg, k), ConfigError);
  auto short_q = d;
  short_q.q1.pop_back();
  CHECK_THROWS_AS(eval_J(W, short_q, cfg, k), ConfigError);
  CHECK_THROWS_AS(eval_J(W, d, cfg, SystemCoeffs(PolyBasis(0.1, 3))), ConfigError);
  CHECK_THROWS_AS(eval_J(W, testing::data_from(jittered(testing::omega(0.0625), b, 0.0, 6)), cfg, k), ConfigError);
  auto nan = W;
  nan[0][g.index(3, 3, 3)] = std::nan("");
  CHECK_THROWS_AS(eval_J(nan, d, cfg, k), NumericalError);
}

TEST_CASE("impose_dirichlet copies boundary values only") {
  const Grid3 g = testing::omega(0.125);
  const PolyBasis b(0.1, 1);
  const auto ref = testing::free_space_W(g, b, kSource);
  const auto d = testing::data_from(ref);
  VecField W(g, 2);
  impose_dirichlet(W, d);
  for (std::size_t n : boundary_nodes(g)) REQUIRE(W[0][n] == ref[0][n]);
  CHECK(W[0][g.index(4, 4, 4)] == 0.0);
}

TEST_CASE("free-space J decays under refinement") {
  const PolyBasis b(0.1, 3);
  const SystemCoeffs k(b, 1e-3);
  ObjectiveConfig cfg;
  cfg.lambda = 1.0;
  std::vector<double> J;
  for (double h : {1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0}) {
    const auto W = testing::free_space_W(testing::omega(h), b, kSource);
    J.push_back(eval_J(W, testing::data_from(W), cfg, k));
  }
  CAPTURE(J[0]);
  CAPTURE(J[1]);
  CAPTURE(J[2]);
  CHECK(J[0] / J[1] >= 2.0);
  CHECK(J[1] / J[2] >= 2.0);
}

TEST_CASE("norms over free dofs") {
  const Grid3 g = testing::omega(0.125);
  VecField a(g, 2), c(g, 2);
  for (std::size_t n = 0; n < g.size(); ++n) {
    a[0][n] = 1.0;
    a[1][n] = 2.0;
    c[1][n] = 1.0;
  }
  const double nf = static_cast<double>(DofMap(g).n_free_nodes());
  CHECK(nf == 343.0);
  CHECK(dot_free(a, c) == 2.0 * nf);
  CHECK(grad_norm(a) == doctest::Approx(std::sqrt(5.0 * nf)));
  CHECK(grad_norm(a, true) == doctest::Approx(std::sqrt(5.0 * nf / std::pow(0.125, 3))));
}

}

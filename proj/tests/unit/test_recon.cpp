#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "cvxwave/error.hpp"
#include "cvxwave/recon.hpp"
#include "support.hpp"

using namespace cvxwave;
using testing::dist;
using testing::omega;

TEST_SUITE("recon") {

TEST_CASE("c from distance-like travel times") {
  const double h = 1.0 / 16.0;
  const Grid3 g = omega(h);
  const Vec3 x0{0, 0, -5};
  const auto c1 = c_from_tau(ScalarField::from_function(g, [&](const Vec3& x) { return dist(x, x0); }));
  const auto c4 = c_from_tau(ScalarField::from_function(g, [&](const Vec3& x) { return 2 * dist(x, x0); }));
  double e1 = 0.0, e4 = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    e1 = std::max(e1, std::abs(c1[n] - 1.0));
    e4 = std::max(e4, std::abs(c4[n] - 4.0));
  }
  CHECK(e1 < 10 * h * h);
  CHECK(e4 < 40 * h * h);
}

TEST_CASE("c from tau is non-negative") {
  const Grid3 g = omega(0.125);
  const auto c = c_from_tau(ScalarField::from_function(g, [](const Vec3& x) { return std::sin(7 * x[0]) * std::cos(5 * x[2]) - x[1]; }));
  for (double v : c.values()) REQUIRE(v >= 0.0);
}

TEST_CASE("phantom values") {
  CHECK(make_phantom("test1")({0, 0, 0.5}) == 2.0);
  CHECK(make_phantom("test5")({0, 0, 0.5}) == 5.0);
  CHECK(make_phantom("test2")({0, 0, 0.5}) == 2.0);
  CHECK(make_phantom("test3")({0.25, 0, 0.5}) == 2.0);
  CHECK(make_phantom("test3")({0.0, 0, 0.5}) == 1.0);
  for (const auto& name : phantom_names()) {
    CAPTURE(name);
    const auto p = make_phantom(name);
    CHECK(p({0, 0, -0.1}) == 1.0);
    CHECK(p({0.7, 0, 0.5}) == 1.0);
    CHECK(p({0, 0, 1.2}) == 1.0);
    double lo = 1e9, hi = -1e9;
    const auto f = p.sample(omega(1.0 / 32.0));
    for (double v : f.values()) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    CHECK(lo > 0.0);
    CHECK(hi <= p.peak + 1e-12);
    if (name == "test4" || name == "test6") {
      CHECK(lo == doctest::Approx(0.4).epsilon(0.02));
      CHECK(hi == doctest::Approx(1.6).epsilon(1e-12));
    }
  }
  CHECK(make_phantom("test6").descriptor.at("noise").get<double>() == 0.05);
}

TEST_CASE("unknown phantom lists valid names") {
  try {
    make_phantom("test9");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("test1") != std::string::npos);
    CHECK(msg.find("test6") != std::string::npos);
  }
}

TEST_CASE("metrics of the truth and of the constant background") {
  const auto ph = make_phantom("test1", 1e-4);
  const Grid3 g = omega(1.0 / 64.0);
  const auto truth = ph.sample(g);
  const auto r = metrics(truth, ph);
  CHECK(r.rel_l2 == 0.0);
  CHECK(r.com_offset == 0.0);
  CHECK(r.max_c == 2.0);
  CHECK(r.support_min >= 1.0);
  CHECK(r.com[2] == doctest::Approx(0.5).epsilon(1e-9));

  // recovered = 1: sqrt(V / (1 + 3V)) for a unit-contrast ball of volume V in the unit cube
  const double V = 4.0 / 3.0 * std::numbers::pi * 0.008;
  const auto flat = metrics(ScalarField(g, 1.0), ph);
  CHECK(flat.rel_l2 == doctest::Approx(std::sqrt(V / (1 + 3 * V))).epsilon(0.05));
  CHECK(flat.mask_nodes == 0);
  CHECK(std::isinf(flat.com_offset));
}

TEST_CASE("metrics clamp below the floor and count it") {
  const auto ph = make_phantom("test1");
  ScalarField c(omega(0.125), 1.0);
  c[10] = -3.0;
  c[11] = 0.05;
  const auto r = metrics(c, ph, 0.3, 0.1);
  CHECK(r.clamped == 2);
  CHECK(r.c[10] == 0.1);
  CHECK(r.min_c == 0.1);
  CHECK(r.threshold == doctest::Approx(1.3));
}

TEST_CASE("two symmetric inclusions give a centred mask") {
  const double h = 1.0 / 32.0;
  const auto ph = make_phantom("test3", h);
  const auto r = metrics(ph.sample(omega(h)), ph);
  CHECK(std::abs(r.com[0]) < 2 * h);
  CHECK(std::abs(r.com[1]) < 2 * h);
  // mirror the field in x: same report
  ScalarField m(omega(h));
  const Grid3& g = m.grid();
  for (int k = 0; k < g.nz(); ++k)
    for (int j = 0; j < g.ny(); ++j)
      for (int i = 0; i < g.nx(); ++i) m(i, j, k) = r.c(g.nx() - 1 - i, j, k);
  const auto rm = metrics(m, ph);
  CHECK(rm.rel_l2 == doctest::Approx(r.rel_l2));
  CHECK(rm.max_c == r.max_c);
}

TEST_CASE("mid-plane slices and their files") {
  const Grid3 g = omega(0.125);
  const auto f = ScalarField::from_function(g, [](const Vec3& x) { return x[0] + 10 * x[2]; });
  const auto rows = midplane_xz(f);
  CHECK(rows.size() == 9);
  CHECK(rows[2].size() == 9);
  CHECK(rows[2][0] == doctest::Approx(-0.5 + 2.5));
  const auto stem = std::filesystem::temp_directory_path() / "cvxwave_unit_slice";
  write_slices(stem, f, 0.0, 10.0);
  auto p = stem;
  std::ifstream pgm(p.replace_extension(".pgm"));
  std::string magic;
  pgm >> magic;
  CHECK(magic == "P5");
  std::filesystem::remove(p);
  std::filesystem::remove(p.replace_extension(".csv"));
}

}

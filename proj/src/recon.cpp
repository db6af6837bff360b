#include "cvxwave/recon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "cvxwave/error.hpp"
#include "cvxwave/io.hpp"

namespace cvxwave {

namespace {

double smoothstep(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return s * s * (3.0 - 2.0 * s);
}

// 1 inside, 0 outside, C1 ramp across a layer of width 2h around signed distance d = 0.
double ramp(double d, double h) { return smoothstep((d + h) / (2.0 * h)); }

double norm3(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

} // namespace

double Phantom::operator()(const Vec3& x) const {
  const double tol = 1e-12;
  if (x[0] < -A / 2 - tol || x[0] > A / 2 + tol || x[1] < -A / 2 - tol || x[1] > A / 2 + tol ||
      x[2] < -tol || x[2] > A + tol) {
    return 1.0;
  }
  return inside(x);
}

ScalarField Phantom::sample(const Grid3& g) const {
  return ScalarField::from_function(g, [this](const Vec3& x) { return (*this)(x); });
}

const std::vector<std::string>& phantom_names() {
  static const std::vector<std::string> names{"test1", "test2", "test3", "test4", "test5", "test6"};
  return names;
}

Phantom make_phantom(const std::string& name, double smooth_h, double A) {
  if (!(smooth_h > 0.0) || !(A > 0.0)) throw ConfigError("phantom: smoothing width and A must be positive");
  Phantom p;
  p.name = name;
  p.A = A;
  const double h = smooth_h;
  auto ball = [h](Vec3 c, double r, double cin) {
    return [=](const Vec3& x) {
      const double d = r - norm3({x[0] - c[0], x[1] - c[1], x[2] - c[2]});
      return 1.0 + (cin - 1.0) * ramp(d, h);
    };
  };
  if (name == "test1" || name == "test5") {
    const double cin = name == "test1" ? 2.0 : 5.0;
    p.peak = cin;
    p.inside = ball({0.0, 0.0, 0.5}, 0.2, cin);
    p.descriptor = {{"shape", "ball"}, {"center", {0.0, 0.0, 0.5}}, {"radius", 0.2}, {"c_inside", cin}};
  } else if (name == "test2") {
    const Vec3 c{0.0, 0.0, 0.5}, ax{0.25, 0.15, 0.15};
    p.peak = 2.0;
    p.inside = [=](const Vec3& x) {
      const double rho = norm3({(x[0] - c[0]) / ax[0], (x[1] - c[1]) / ax[1], (x[2] - c[2]) / ax[2]});
      const double d = (1.0 - rho) * std::min({ax[0], ax[1], ax[2]});
      return 1.0 + ramp(d, h);
    };
    p.descriptor = {{"shape", "ellipsoid"}, {"center", c}, {"semi_axes", ax}, {"c_inside", 2.0}};
  } else if (name == "test3") {
    const Vec3 c1{-0.25, 0.0, 0.5}, c2{0.25, 0.0, 0.5};
    const double r = 0.15;
    p.peak = 2.0;
    auto b1 = ball(c1, r, 2.0), b2 = ball(c2, r, 2.0);
    p.inside = [=](const Vec3& x) { return std::max(b1(x), b2(x)); };
    p.descriptor = {{"shape", "two balls"}, {"centers", {c1, c2}}, {"radius", r}, {"c_inside", 2.0}};
  } else if (name == "test4" || name == "test6") {
    const Vec3 c{0.0, 0.0, 0.5};
    const double R = 0.3;
    p.peak = 1.6;
    p.inside = [=](const Vec3& x) {
      const double rt = norm3({x[0] - c[0], x[1] - c[1], x[2] - c[2]}) / R;
      const double bump = 1.0 - smoothstep((rt - 0.5) / 0.5);
      return 1.0 + 0.6 * std::cos(2.0 * std::numbers::pi * rt) * bump;
    };
    p.descriptor = {{"shape", "radial cosine"}, {"center", c}, {"radius", R}, {"range", {0.4, 1.6}}};
    if (name == "test6") p.descriptor["noise"] = 0.05;
  } else {
    std::string valid;
    for (const auto& n : phantom_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw ConfigError("unknown phantom '" + name + "'; valid names: " + valid);
  }
  p.descriptor["name"] = name;
  p.descriptor["smoothing_h"] = h;
  return p;
}

ScalarField c_from_tau(const ScalarField& tau) {
  const auto g = gradient_c(tau);
  ScalarField c(tau.grid());
  for (std::size_t n = 0; n < c.size(); ++n) c[n] = g[0][n] * g[0][n] + g[1][n] * g[1][n] + g[2][n] * g[2][n];
  return c;
}

nlohmann::json ReconReport::to_json() const {
  return {{"rel_l2", rel_l2},       {"max_c", max_c},
          {"min_c", min_c},         {"mask_nodes", mask_nodes},
          {"com", com},             {"true_com", true_com},
          {"com_offset", com_offset}, {"support_min", support_min},
          {"support_max", support_max}, {"threshold", threshold},
          {"c_floor", c_floor},     {"clamped", clamped}};
}

ReconReport metrics(const ScalarField& recovered, const Phantom& ph, double frac, double c_floor) {
  recovered.check_finite("metrics input");
  const Grid3& g = recovered.grid();
  ReconReport r;
  r.c_floor = c_floor;
  r.c = recovered;
  for (auto& v : r.c.data()) {
    if (v < c_floor) {
      v = c_floor;
      ++r.clamped;
    }
  }
  r.threshold = 1.0 + frac * (ph.peak - 1.0);
  double num = 0.0, den = 0.0;
  Vec3 sum{}, tsum{};
  std::size_t tcount = 0;
  double gmax = -1e300, gmin = 1e300, mmax = -1e300;
  r.support_min = 1e300;
  r.support_max = -1e300;
  bool any_support = false;
  for (std::size_t n = 0; n < g.size(); ++n) {
    const Vec3 x = g.coord(n);
    const double ct = ph(x), cr = r.c[n];
    num += (cr - ct) * (cr - ct);
    den += ct * ct;
    gmax = std::max(gmax, cr);
    gmin = std::min(gmin, cr);
    if (cr > r.threshold) {
      ++r.mask_nodes;
      mmax = std::max(mmax, cr);
      for (int a = 0; a < 3; ++a) sum[static_cast<std::size_t>(a)] += x[static_cast<std::size_t>(a)];
    }
    if (ct > r.threshold) {
      ++tcount;
      for (int a = 0; a < 3; ++a) tsum[static_cast<std::size_t>(a)] += x[static_cast<std::size_t>(a)];
    }
    if (ph.in_support(x)) {
      any_support = true;
      r.support_min = std::min(r.support_min, cr);
      r.support_max = std::max(r.support_max, cr);
    }
  }
  r.rel_l2 = std::sqrt(num / den);
  r.max_c = r.mask_nodes ? mmax : gmax;
  r.min_c = gmin;
  if (!any_support) r.support_min = r.support_max = 1.0;
  for (int a = 0; a < 3; ++a) {
    const auto ua = static_cast<std::size_t>(a);
    r.com[ua] = r.mask_nodes ? sum[ua] / static_cast<double>(r.mask_nodes) : 0.0;
    r.true_com[ua] = tcount ? tsum[ua] / static_cast<double>(tcount) : 0.0;
  }
  r.com_offset = r.mask_nodes ? norm3({r.com[0] - r.true_com[0], r.com[1] - r.true_com[1], r.com[2] - r.true_com[2]})
                              : std::numeric_limits<double>::infinity();
  return r;
}

std::vector<std::vector<double>> midplane_xz(const ScalarField& f) {
  const Grid3& g = f.grid();
  const int j = g.ny() / 2;
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(g.nz()));
  for (int k = 0; k < g.nz(); ++k) {
    auto& row = rows[static_cast<std::size_t>(k)];
    for (int i = 0; i < g.nx(); ++i) row.push_back(f(i, j, k));
  }
  return rows;
}

void write_slices(const std::filesystem::path& stem, const ScalarField& f, double lo, double hi) {
  const auto rows = midplane_xz(f);
  auto p = stem;
  io::write_slice_csv(p.replace_extension(".csv"), rows);
  io::write_slice_pgm(p.replace_extension(".pgm"), rows, lo, hi);
}

} // namespace cvxwave

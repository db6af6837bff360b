#include "cvxwave/eikonal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cvxwave/error.hpp"

namespace cvxwave {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Godunov upwind solution of sum_a max(u - m_a, 0)^2 = f^2 with m sorted ascending.
double godunov(double a, double b, double c, double f) {
  if (a > b) std::swap(a, b);
  if (b > c) std::swap(b, c);
  if (a > b) std::swap(a, b);
  double u = a + f;
  if (u <= b) return u;
  const double d = 2.0 * f * f - (a - b) * (a - b);
  u = 0.5 * (a + b + std::sqrt(std::max(d, 0.0)));
  if (u <= c) return u;
  const double s = a + b + c;
  const double q = a * a + b * b + c * c - f * f;
  const double disc = s * s - 3.0 * q;
  return (s + std::sqrt(std::max(disc, 0.0))) / 3.0;
}

} // namespace

TravelTimeField fast_sweep(const ScalarField& c, const Vec3& x0, const EikonalOptions& opt) {
  c.check_finite("eikonal coefficient");
  for (double v : c.values()) {
    if (!(v > 0.0)) throw ConfigError("eikonal: coefficient must be positive");
  }
  const Grid3& g = c.grid();
  const double h = g.h();
  const int nx = g.nx(), ny = g.ny(), nz = g.nz();

  // constant slowness at the source, from the nearest node
  Index3 near{};
  for (int a = 0; a < 3; ++a) {
    near[a] = std::clamp(static_cast<int>(std::lround((x0[a] - g.origin()[a]) / h)), 0, g.dims()[a] - 1);
  }
  const double s0 = std::sqrt(c(near[0], near[1], near[2]));

  std::vector<double> tau(g.size(), kInf);
  std::vector<char> fixed(g.size(), 0);
  const double r_init = opt.init_radius_cells * h;
  std::size_t n_fixed = 0;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const Vec3 x = g.coord(i, j, k);
        const double d = std::hypot(x[0] - x0[0], x[1] - x0[1], x[2] - x0[2]);
        if (d <= r_init * (1.0 + 1e-12)) {
          const std::size_t n = g.index(i, j, k);
          tau[n] = s0 * d;
          fixed[n] = 1;
          ++n_fixed;
        }
      }
  if (n_fixed == 0) throw ConfigError("eikonal: source is not within 2h of any grid node");

  std::vector<double> f(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) f[n] = std::sqrt(c[n]) * h;

  const std::size_t sy = static_cast<std::size_t>(nx), sz = sy * static_cast<std::size_t>(ny);
  TravelTimeField out;
  out.source = x0;
  double change = kInf;
  int cycle = 0;
  while (cycle < opt.max_cycles) {
    ++cycle;
    change = 0.0;
    bool newly_reached = false;
    for (int dir = 0; dir < 8; ++dir) {
      const int di = (dir & 1) ? -1 : 1, dj = (dir & 2) ? -1 : 1, dk = (dir & 4) ? -1 : 1;
      for (int kk = 0; kk < nz; ++kk) {
        const int k = dk > 0 ? kk : nz - 1 - kk;
        for (int jj = 0; jj < ny; ++jj) {
          const int j = dj > 0 ? jj : ny - 1 - jj;
          for (int ii = 0; ii < nx; ++ii) {
            const int i = di > 0 ? ii : nx - 1 - ii;
            const std::size_t n = g.index(i, j, k);
            if (fixed[n]) continue;
            const double a = std::min(i > 0 ? tau[n - 1] : kInf, i < nx - 1 ? tau[n + 1] : kInf);
            const double b = std::min(j > 0 ? tau[n - sy] : kInf, j < ny - 1 ? tau[n + sy] : kInf);
            const double cc = std::min(k > 0 ? tau[n - sz] : kInf, k < nz - 1 ? tau[n + sz] : kInf);
            if (a == kInf && b == kInf && cc == kInf) continue;
            const double u = godunov(a, b, cc, f[n]);
            if (u < tau[n]) {
              if (tau[n] == kInf) newly_reached = true;
              else change = std::max(change, tau[n] - u);
              tau[n] = u;
            }
          }
        }
      }
    }
    if (!newly_reached && change < opt.tol) break;
  }
  out.cycles = cycle;
  out.last_update = change;
  if (change >= opt.tol) {
    std::ostringstream msg;
    msg << "eikonal: no convergence after " << opt.max_cycles << " cycles (last update " << change << ")";
    throw NumericalError(msg.str());
  }
  out.tau = ScalarField(g, std::move(tau));
  return out;
}

} // namespace cvxwave

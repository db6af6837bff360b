#pragma once

#include <cmath>
#include <numbers>

#include "cvxwave/acquire.hpp"
#include "cvxwave/basis.hpp"
#include "cvxwave/grid.hpp"
#include "cvxwave/objective.hpp"

namespace testing {

using namespace cvxwave;

inline Grid3 omega(double h, double A = 1.0) { return Grid3::box({-A / 2, -A / 2, 0.0}, {A / 2, A / 2, A}, h); }

inline double dist(const Vec3& a, const Vec3& b) { return std::hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2]); }

// c = 1 free space, u_t(0) = delta: p = (t - r)_+ / (4 pi r), so w(x, t) = t / (4 pi r) and
// w_n = <t, P_n> / (4 pi r). Every term of the system cancels analytically.
inline VecField free_space_W(const Grid3& g, const PolyBasis& b, const Vec3& x0) {
  const int N = b.N();
  std::vector<double> a(static_cast<std::size_t>(N));
  for (int n = 1; n <= N; ++n) {
    // <t, P_n> from the monomial coefficients: sum_k c_k T1^(k+2)/(k+2)
    double acc = 0.0;
    const auto& c = b.coeffs(n);
    for (std::size_t k = 1; k < c.size(); ++k) acc += c[k] * std::pow(b.T1(), k + 2.0) / (k + 2.0);
    a[static_cast<std::size_t>(n - 1)] = acc;
  }
  VecField W(g, N + 1);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = dist(g.coord(i), x0);
    W[0][i] = r;
    for (int n = 1; n <= N; ++n) W[n][i] = a[static_cast<std::size_t>(n - 1)] / (4.0 * std::numbers::pi * r);
  }
  return W;
}

// Level data whose Dirichlet values and Neumann rows are taken from W itself.
inline LevelData data_from(const VecField& W) {
  const Grid3& g = W.grid();
  LevelData d{VecField(g, W.n_comp()), {}};
  for (std::size_t n : boundary_nodes(g))
    for (int c = 0; c < W.n_comp(); ++c) d.dirichlet[c][n] = W[c][n];
  std::vector<std::vector<double>> dz;
  for (int c = 0; c < W.n_comp(); ++c) dz.push_back(dz_oneside(W[c]));
  for (std::size_t n : gamma0_nodes(g)) {
    const auto [i, j, k] = g.ijk(n);
    for (int c = 0; c < W.n_comp(); ++c) d.q1.push_back(dz[static_cast<std::size_t>(c)][static_cast<std::size_t>(i + g.nx() * j)]);
  }
  return d;
}

// Boundary projection holding the boundary values and top-face z-derivatives of W.
inline CauchyProjection cauchy_from(const VecField& W, const Vec3& x0, double T1 = 0.1) {
  const Grid3& g = W.grid();
  const auto d = data_from(W);
  CauchyProjection cp;
  cp.omega = g;
  cp.source = x0;
  cp.N = W.n_comp() - 1;
  cp.T1 = T1;
  cp.nodes = boundary_nodes(g);
  for (std::size_t n : cp.nodes)
    for (int c = 0; c < W.n_comp(); ++c) cp.q0.push_back(W[c][n]);
  cp.g0 = gamma0_nodes(g);
  cp.q1 = d.q1;
  return cp;
}

} // namespace testing

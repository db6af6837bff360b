#include "cvxwave/grid.hpp"

#include <cmath>
#include <sstream>

#include "cvxwave/error.hpp"

namespace cvxwave {

Grid3::Grid3(Vec3 origin, double h, Index3 dims) : origin_(origin), h_(h), dims_(dims) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw ConfigError("grid spacing must be positive and finite");
  }
  for (int d : dims) {
    if (d < 3) {
      throw ConfigError("grid needs at least 3 nodes per axis");
    }
  }
}

Grid3 Grid3::box(const Vec3& lo, const Vec3& hi, double h) {
  Index3 dims{};
  for (int a = 0; a < 3; ++a) {
    const double cells = (hi[a] - lo[a]) / h;
    const double rounded = std::round(cells);
    if (rounded < 2.0 || std::abs(cells - rounded) > 1e-9 * std::max(1.0, cells)) {
      std::ostringstream msg;
      msg << "box extent " << hi[a] - lo[a] << " on axis " << a << " is not a multiple of h=" << h;
      throw ConfigError(msg.str());
    }
    dims[a] = static_cast<int>(rounded) + 1;
  }
  return Grid3(lo, h, dims);
}

Index3 Grid3::ijk(std::size_t idx) const noexcept {
  const auto nx = static_cast<std::size_t>(dims_[0]);
  const auto ny = static_cast<std::size_t>(dims_[1]);
  const auto i = static_cast<int>(idx % nx);
  const auto j = static_cast<int>((idx / nx) % ny);
  const auto k = static_cast<int>(idx / (nx * ny));
  return {i, j, k};
}

std::optional<Index3> Grid3::node_at(const Vec3& p, double tol) const {
  Index3 out{};
  for (int a = 0; a < 3; ++a) {
    const double s = (p[a] - origin_[a]) / h_;
    const double r = std::round(s);
    if (std::abs(s - r) > tol || r < 0 || r > dims_[a] - 1) {
      return std::nullopt;
    }
    out[a] = static_cast<int>(r);
  }
  return out;
}

Grid3 Grid3::refined() const {
  return Grid3(origin_, h_ / 2.0,
               {2 * (dims_[0] - 1) + 1, 2 * (dims_[1] - 1) + 1, 2 * (dims_[2] - 1) + 1});
}

ScalarField::ScalarField(Grid3 grid, double fill) : grid_(grid), values_(grid.size(), fill) {
  if (!std::isfinite(fill)) {
    throw NumericalError("non-finite fill value");
  }
}

ScalarField::ScalarField(Grid3 grid, std::vector<double> values)
  : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw ConfigError("field size does not match grid");
  }
  check_finite("ScalarField construction");
}

ScalarField ScalarField::from_function(const Grid3& grid,
                                       const std::function<double(const Vec3&)>& f) {
  std::vector<double> v(grid.size());
  for (int k = 0; k < grid.nz(); ++k)
    for (int j = 0; j < grid.ny(); ++j)
      for (int i = 0; i < grid.nx(); ++i) v[grid.index(i, j, k)] = f(grid.coord(i, j, k));
  return ScalarField(grid, std::move(v));
}

void ScalarField::check_finite(std::string_view where) const {
  for (std::size_t n = 0; n < values_.size(); ++n) {
    if (!std::isfinite(values_[n])) {
      std::ostringstream msg;
      msg << where << ": non-finite value at node " << n;
      throw NumericalError(msg.str());
    }
  }
}

VecField::VecField(const Grid3& grid, int n_comp) {
  if (n_comp < 1) throw ConfigError("VecField needs at least one component");
  comps_.assign(static_cast<std::size_t>(n_comp), ScalarField(grid));
}

VecField::VecField(std::vector<ScalarField> comps) : comps_(std::move(comps)) {
  if (comps_.empty()) throw ConfigError("VecField needs at least one component");
  for (const auto& c : comps_) {
    if (!(c.grid() == comps_.front().grid())) throw ConfigError("VecField components on different grids");
  }
}

std::vector<double> VecField::flatten() const {
  std::vector<double> out;
  out.reserve(comps_.size() * grid().size());
  for (const auto& c : comps_) out.insert(out.end(), c.data().begin(), c.data().end());
  return out;
}

void VecField::assign(std::span<const double> flat) {
  const std::size_t n = grid().size();
  if (flat.size() != n * comps_.size()) throw ConfigError("flat vector size mismatch");
  for (std::size_t c = 0; c < comps_.size(); ++c) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(c * n),
              flat.begin() + static_cast<std::ptrdiff_t>((c + 1) * n), comps_[c].data().begin());
  }
}

std::vector<NodeClass> classify_nodes(const Grid3& g) {
  std::vector<NodeClass> out(g.size(), NodeClass::interior);
  const int K = g.nz() - 1;
  for (int k = 0; k < g.nz(); ++k)
    for (int j = 0; j < g.ny(); ++j)
      for (int i = 0; i < g.nx(); ++i) {
        if (!g.is_boundary(i, j, k)) continue;
        const bool rim = i == 0 || j == 0 || i == g.nx() - 1 || j == g.ny() - 1;
        out[g.index(i, j, k)] = (k == K && !rim) ? NodeClass::gamma0 : NodeClass::gamma1;
      }
  return out;
}

std::vector<std::size_t> gamma0_nodes(const Grid3& g) {
  std::vector<std::size_t> out;
  const int K = g.nz() - 1;
  for (int j = 1; j < g.ny() - 1; ++j)
    for (int i = 1; i < g.nx() - 1; ++i) out.push_back(g.index(i, j, K));
  return out;
}

std::vector<std::size_t> boundary_nodes(const Grid3& g) {
  std::vector<std::size_t> out;
  for (int k = 0; k < g.nz(); ++k)
    for (int j = 0; j < g.ny(); ++j)
      for (int i = 0; i < g.nx(); ++i)
        if (g.is_boundary(i, j, k)) out.push_back(g.index(i, j, k));
  return out;
}

ScalarField laplacian7(const ScalarField& f) {
  f.check_finite("laplacian7 input");
  const Grid3& g = f.grid();
  ScalarField out(g);
  const double inv_h2 = 1.0 / (g.h() * g.h());
  const std::size_t sx = 1, sy = static_cast<std::size_t>(g.nx()),
                    sz = static_cast<std::size_t>(g.nx()) * g.ny();
  for (int k = 1; k < g.nz() - 1; ++k)
    for (int j = 1; j < g.ny() - 1; ++j)
      for (int i = 1; i < g.nx() - 1; ++i) {
        const std::size_t n = g.index(i, j, k);
        out[n] = (f[n + sx] + f[n - sx] + f[n + sy] + f[n - sy] + f[n + sz] + f[n - sz] -
                  6.0 * f[n]) * inv_h2;
      }
  return out;
}

std::array<ScalarField, 3> gradient_c(const ScalarField& f) {
  f.check_finite("gradient_c input");
  const Grid3& g = f.grid();
  std::array<ScalarField, 3> out{ScalarField(g), ScalarField(g), ScalarField(g)};
  const double inv_2h = 1.0 / (2.0 * g.h());
  const std::array<std::size_t, 3> stride{1, static_cast<std::size_t>(g.nx()),
                                          static_cast<std::size_t>(g.nx()) * g.ny()};
  for (int k = 0; k < g.nz(); ++k)
    for (int j = 0; j < g.ny(); ++j)
      for (int i = 0; i < g.nx(); ++i) {
        const std::size_t n = g.index(i, j, k);
        const Index3 pos{i, j, k};
        for (int a = 0; a < 3; ++a) {
          const std::size_t s = stride[a];
          double d;
          if (pos[a] == 0) {
            d = (-3.0 * f[n] + 4.0 * f[n + s] - f[n + 2 * s]) * inv_2h;
          } else if (pos[a] == g.dims()[a] - 1) {
            d = (3.0 * f[n] - 4.0 * f[n - s] + f[n - 2 * s]) * inv_2h;
          } else {
            d = (f[n + s] - f[n - s]) * inv_2h;
          }
          out[a][n] = d;
        }
      }
  return out;
}

std::vector<double> dz_oneside(const ScalarField& f) {
  const Grid3& g = f.grid();
  if (g.nz() < 3) throw ConfigError("dz_oneside needs at least 3 layers");
  const int K = g.nz() - 1;
  std::vector<double> out(static_cast<std::size_t>(g.nx()) * g.ny());
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      out[static_cast<std::size_t>(i) + static_cast<std::size_t>(g.nx()) * j] =
          (3.0 * f(i, j, K) - 4.0 * f(i, j, K - 1) + f(i, j, K - 2)) / (2.0 * g.h());
    }
  return out;
}

ScalarField interp_refine(const ScalarField& coarse) {
  const Grid3& cg = coarse.grid();
  const Grid3 fg = cg.refined();
  ScalarField out(fg);
  for (int K = 0; K < fg.nz(); ++K)
    for (int J = 0; J < fg.ny(); ++J)
      for (int I = 0; I < fg.nx(); ++I) {
        const int i0 = I / 2, i1 = (I + 1) / 2;
        const int j0 = J / 2, j1 = (J + 1) / 2;
        const int k0 = K / 2, k1 = (K + 1) / 2;
        const int ni = i0 == i1 ? 1 : 2, nj = j0 == j1 ? 1 : 2, nk = k0 == k1 ? 1 : 2;
        const double w = 1.0 / (ni * nj * nk);
        double acc = 0.0;
        for (int c = 0; c < nk; ++c)
          for (int b = 0; b < nj; ++b)
            for (int a = 0; a < ni; ++a) acc += coarse(a ? i1 : i0, b ? j1 : j0, c ? k1 : k0);
        out(I, J, K) = ni * nj * nk == 1 ? acc : acc * w;
      }
  return out;
}

ScalarField restrict_to(const ScalarField& fine, const Grid3& coarse) {
  const Grid3& fg = fine.grid();
  const double ratio = coarse.h() / fg.h();
  const double r = std::round(ratio);
  if (std::abs(ratio - r) > 1e-9 || r < 1.0) throw ConfigError("grids are not nested");
  const auto m = static_cast<int>(r);
  auto o = fg.node_at(coarse.origin());
  if (!o) throw ConfigError("coarse origin is not a fine-grid node");
  for (int a = 0; a < 3; ++a) {
    if ((*o)[a] + m * (coarse.dims()[a] - 1) > fg.dims()[a] - 1) {
      throw ConfigError("coarse grid extends beyond the fine grid");
    }
  }
  ScalarField out(coarse);
  for (int k = 0; k < coarse.nz(); ++k)
    for (int j = 0; j < coarse.ny(); ++j)
      for (int i = 0; i < coarse.nx(); ++i)
        out(i, j, k) = fine((*o)[0] + m * i, (*o)[1] + m * j, (*o)[2] + m * k);
  return out;
}

double weighted_quadrature(const ScalarField& f, const std::function<double(const Vec3&)>& weight,
                           NodeSet nodes) {
  const Grid3& g = f.grid();
  const double dv = g.h() * g.h() * g.h();
  double sum = 0.0;
  for (int k = 0; k < g.nz(); ++k)
    for (int j = 0; j < g.ny(); ++j)
      for (int i = 0; i < g.nx(); ++i) {
        if (nodes == NodeSet::interior && g.is_boundary(i, j, k)) continue;
        sum += f(i, j, k) * weight(g.coord(i, j, k));
      }
  return sum * dv;
}

} // namespace cvxwave

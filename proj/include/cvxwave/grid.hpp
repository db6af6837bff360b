#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace cvxwave {

using Vec3 = std::array<double, 3>;
using Index3 = std::array<int, 3>;

/// Uniform Cartesian node grid: x(i,j,k) = origin + h*(i,j,k), x fastest.
class Grid3 {
public:
  Grid3() = default;
  Grid3(Vec3 origin, double h, Index3 dims);

  /// Grid spanning [lo, hi] with spacing h; the extents must be multiples of h.
  static Grid3 box(const Vec3& lo, const Vec3& hi, double h);

  const Vec3& origin() const noexcept { return origin_; }
  double h() const noexcept { return h_; }
  const Index3& dims() const noexcept { return dims_; }
  int nx() const noexcept { return dims_[0]; }
  int ny() const noexcept { return dims_[1]; }
  int nz() const noexcept { return dims_[2]; }
  std::size_t size() const noexcept {
    return static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
  }

  std::size_t index(int i, int j, int k) const noexcept {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims_[0]) * (static_cast<std::size_t>(j) +
                                                 static_cast<std::size_t>(dims_[1]) * k);
  }
  Index3 ijk(std::size_t idx) const noexcept;

  Vec3 coord(int i, int j, int k) const noexcept {
    return {origin_[0] + h_ * i, origin_[1] + h_ * j, origin_[2] + h_ * k};
  }
  Vec3 coord(std::size_t idx) const noexcept {
    auto [i, j, k] = ijk(idx);
    return coord(i, j, k);
  }
  Vec3 upper() const noexcept { return coord(dims_[0] - 1, dims_[1] - 1, dims_[2] - 1); }

  bool is_boundary(int i, int j, int k) const noexcept {
    return i == 0 || j == 0 || k == 0 || i == dims_[0] - 1 || j == dims_[1] - 1 ||
           k == dims_[2] - 1;
  }

  /// Node whose coordinate matches p within tol*h, if any.
  std::optional<Index3> node_at(const Vec3& p, double tol = 1e-6) const;

  /// Nested 2x refinement (spacing h/2, same extents).
  Grid3 refined() const;

  bool operator==(const Grid3& other) const noexcept = default;

private:
  Vec3 origin_{0.0, 0.0, 0.0};
  double h_ = 1.0;
  Index3 dims_{3, 3, 3};
};

/// Node-indexed real values on a Grid3. Values are finite.
class ScalarField {
public:
  ScalarField() = default;
  explicit ScalarField(Grid3 grid, double fill = 0.0);
  ScalarField(Grid3 grid, std::vector<double> values);

  static ScalarField from_function(const Grid3& grid, const std::function<double(const Vec3&)>& f);

  const Grid3& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }

  double& operator[](std::size_t idx) noexcept { return values_[idx]; }
  double operator[](std::size_t idx) const noexcept { return values_[idx]; }
  double& operator()(int i, int j, int k) noexcept { return values_[grid_.index(i, j, k)]; }
  double operator()(int i, int j, int k) const noexcept { return values_[grid_.index(i, j, k)]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  std::vector<double>& data() noexcept { return values_; }
  const std::vector<double>& data() const noexcept { return values_; }

  /// Throws NumericalError naming `where` and the first offending node.
  void check_finite(std::string_view where) const;

private:
  Grid3 grid_;
  std::vector<double> values_;
};

/// The (N+1)-component unknown: component 0 is tau, 1..N are w_n.
class VecField {
public:
  VecField() = default;
  VecField(const Grid3& grid, int n_comp);
  explicit VecField(std::vector<ScalarField> comps);

  const Grid3& grid() const noexcept { return comps_.front().grid(); }
  int n_comp() const noexcept { return static_cast<int>(comps_.size()); }
  ScalarField& operator[](int c) noexcept { return comps_[static_cast<std::size_t>(c)]; }
  const ScalarField& operator[](int c) const noexcept { return comps_[static_cast<std::size_t>(c)]; }
  ScalarField& tau() noexcept { return comps_.front(); }
  const ScalarField& tau() const noexcept { return comps_.front(); }

  /// Flattened component-major copy and its inverse.
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);

private:
  std::vector<ScalarField> comps_;
};

enum class NodeClass : unsigned char { interior, gamma0, gamma1 };

/// Interior / top face (z = max) / remaining boundary. Rim nodes of the top face are gamma1.
std::vector<NodeClass> classify_nodes(const Grid3& grid);

/// Flat indices of gamma0 nodes (top face without its rim), ordered by (i, j).
std::vector<std::size_t> gamma0_nodes(const Grid3& grid);

/// Flat indices of all boundary nodes in index order.
std::vector<std::size_t> boundary_nodes(const Grid3& grid);

/// 7-point Laplacian at interior nodes; boundary entries are zero.
ScalarField laplacian7(const ScalarField& f);

/// Central differences inside, second-order one-sided differences on the boundary.
std::array<ScalarField, 3> gradient_c(const ScalarField& f);

/// Backward second-order z-derivative on the top layer, (3f_K - 4f_{K-1} + f_{K-2})/(2h).
/// Result is indexed i + nx*j over the full top layer.
std::vector<double> dz_oneside(const ScalarField& f);

/// Trilinear interpolation onto the nested 2x refinement.
ScalarField interp_refine(const ScalarField& coarse);

/// Injection of a fine field onto the coarse nodes it shares with `coarse`.
ScalarField restrict_to(const ScalarField& fine, const Grid3& coarse);

enum class NodeSet { interior, all };

/// Sum of f*weight*h^3 over the chosen nodes in index order.
double weighted_quadrature(const ScalarField& f, const std::function<double(const Vec3&)>& weight,
                           NodeSet nodes = NodeSet::all);

} // namespace cvxwave

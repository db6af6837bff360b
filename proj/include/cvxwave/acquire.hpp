#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "cvxwave/basis.hpp"
#include "cvxwave/forward.hpp"
#include "cvxwave/grid.hpp"

namespace cvxwave {

struct PickOptions {
  double threshold = 0.5; ///< fraction of the global max the first wave must reach
  /// The vertex comes from a least-squares parabola through the contiguous samples around the
  /// wave's maximum that stay above this fraction of it (at least three samples).
  double fit_fraction = 0.8;
};

/// Arrival time of the first wave with the largest amplitude in a uniformly sampled trace: the
/// first run of samples with |u| >= threshold * max|u|, refined around its maximum.
/// Throws NumericalError("no arrival") on an all-zero trace.
double pick_arrival(std::span<const double> trace, double dt, const PickOptions& opt = {});

/// Cumulative trapezoid rule applied twice: p(0) = p_t(0) = 0.
std::vector<double> double_time_integral(std::span<const double> u, double dt);

/// w(t_j) = p(tau0 + t_j) - p(tau0), t_j = j*dt on [0, T1], by linear interpolation.
std::vector<double> time_shift(std::span<const double> p, double dt, double tau0, double T1);

/// Composite Simpson (3/8 closing panel for an odd interval count) of w*P_n, n = 1..N.
std::vector<double> project_basis(std::span<const double> w, double dt, const PolyBasis& basis);

/// Multiplies Gamma0 streams (f0 on Gamma0, f1, and the two sublayers) by 1 + eps*xi_t with one
/// xi_t ~ U[-1, 1] per time sample, drawn from a seeded 64-bit Mersenne twister.
BoundaryRecording add_noise(const BoundaryRecording& rec, double eps, std::uint64_t seed);

/// Per-sample noise factors xi_t used by add_noise.
std::vector<double> noise_samples(int n_times, std::uint64_t seed);

/// Travel times on the boundary and on the two layers below the top face.
struct PickedArrivals {
  Grid3 omega;
  std::vector<double> tau0;       ///< per recording node position
  std::vector<double> top1, top2; ///< layers K-1 and K-2, indexed i + nx*j
  std::vector<double> dz_tau0;    ///< per gamma0 node, one-sided stencil

  double at_top(int i, int j, int layer, const BoundaryRecording& rec) const;
};

PickedArrivals pick_all(const BoundaryRecording& rec, const PickOptions& opt = {});

/// Same layout filled from a travel-time field given on the Omega grid (eikonal oracle).
PickedArrivals arrivals_from_field(const BoundaryRecording& rec, const ScalarField& tau);

/// Boundary data of the elliptic system. Row r of q0 is (tau0, q_1..q_N) at boundary node
/// nodes[r]; row g of q1 is (dz tau0, q1_1..q1_N) at gamma0 node g0[g].
struct CauchyProjection {
  Grid3 omega;
  Vec3 source{};
  int N = 0;
  double T1 = 0.0;
  std::vector<std::size_t> nodes;
  std::vector<double> q0;
  std::vector<std::size_t> g0;
  std::vector<double> q1;
  nlohmann::json meta = nlohmann::json::object();

  int n_comp() const noexcept { return N + 1; }
  double q0_at(std::size_t row, int comp) const { return q0[row * static_cast<std::size_t>(N + 1) + comp]; }
  double q1_at(std::size_t row, int comp) const { return q1[row * static_cast<std::size_t>(N + 1) + comp]; }

  /// Dirichlet values on the boundary of `level` (interior zero) and q1 rows in gamma0_nodes(level)
  /// order. `level` must be a nested coarsening of omega with the same extents.
  VecField dirichlet_on(const Grid3& level) const;
  std::vector<double> neumann_on(const Grid3& level) const;

  void save(const std::filesystem::path& dir) const;
  static CauchyProjection load(const std::filesystem::path& dir);
};

/// Shift, project and difference the recorded traces. The Neumann rows use the one-sided
/// z-stencil applied to the projections of the three top layers, each shifted by its own time.
CauchyProjection build_cauchy(const BoundaryRecording& rec, const PickedArrivals& arr,
                              const PolyBasis& basis);

/// Window check: T1 + max tau0 must not exceed the recording length.
double acquisition_T(const PickedArrivals& arr, double T1);

} // namespace cvxwave

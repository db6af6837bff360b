#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "cvxwave/grid.hpp"

namespace cvxwave {

/// Explicit leapfrog solver setup for c(x) u_tt = Lap u in the box Omega_f with zero Dirichlet
/// walls and u(.,0) = 0, u_t(.,0) = mollified delta at the source.
struct ForwardConfig {
  Vec3 box_lo{-6.5, -6.5, -6.0};
  Vec3 box_hi{6.5, 6.5, 7.0};
  Vec3 source{0.0, 0.0, -5.0};
  double A = 1.0; ///< Omega = (-A/2, A/2)^2 x (0, A)
  double eps_moll = 0.01;
  double dt = 0.002;
  double T0 = 6.5;
  double h = 1.0 / 32.0;
  double cfl_safety = 0.9;
  double source_scale = 1.0;

  /// Skip nodes outside the source light cone and outside the backward cone of Omega. Both cones
  /// are widened by kConeCells cells plus `cone_margin`: the scheme's precursors run ahead of
  /// the unit-speed front and only die off after about a dozen cells.
  bool trim_cones = true;
  double cone_margin = 0.0;
  static constexpr int kConeCells = 16;

  bool track_energy = false;
  int energy_every = 10;
  int snapshot_every = 0; ///< 0 disables snapshots of u on Omega
  int threads = 1;

  /// Full geometry: Omega_f = (-6.5, 6.5)^2 x (-6, 7), x0 = (0, 0, -5), T0 = 6.5.
  static ForwardConfig full(double h);
  /// Small box for fast runs: Omega_f = (-2, 2)^2 x (-1.5, 2.5), x0 = (0, 0, -1), T0 = 2.9.
  static ForwardConfig reduced(double h);

  Grid3 box_grid() const;
  Grid3 omega_grid() const;
  int n_times() const;

  /// Geometry and CFL checks; c_min is the smallest coefficient value in Omega (at most 1).
  void validate(double c_min) const;
  double cfl_limit(double c_min) const;

  nlohmann::json to_json() const;
  static ForwardConfig from_json(const nlohmann::json& j);
};

/// Boundary traces of u sampled at t_k = k*dt, k = 0..n_times-1.
struct BoundaryRecording {
  Grid3 omega;
  Vec3 source{};
  double dt = 0.0;
  int n_times = 0;
  /// Flat omega indices of all boundary nodes, grouped by face block.
  std::vector<std::size_t> nodes;
  std::vector<double> f0; ///< [node position][time]
  /// Top-face traces at layers K-1 and K-2 for every (i, j), indexed i + nx*j.
  std::vector<double> sub1, sub2;
  /// dz u on gamma0 nodes (order of gamma0_nodes(omega)), same one-sided stencil as dz_oneside.
  std::vector<double> f1;
  std::vector<double> energy_times, energy;
  std::vector<ScalarField> snapshots;
  nlohmann::json config; ///< forward configuration that produced the traces

  std::size_t n_nodes() const noexcept { return nodes.size(); }
  /// Position of a flat omega index in `nodes`; throws if it is not a boundary node.
  std::size_t position(std::size_t omega_index) const;
  std::span<const double> trace(std::size_t pos) const {
    return {f0.data() + pos * static_cast<std::size_t>(n_times), static_cast<std::size_t>(n_times)};
  }
  std::span<double> trace(std::size_t pos) {
    return {f0.data() + pos * static_cast<std::size_t>(n_times), static_cast<std::size_t>(n_times)};
  }
  /// u(., t) at top-layer node (i, j) and layer offset 0, 1 or 2 below the top.
  std::span<const double> top_trace(int i, int j, int layer) const;
  double t_end() const noexcept { return dt * (n_times - 1); }

  void save(const std::filesystem::path& dir) const;
  static BoundaryRecording load(const std::filesystem::path& dir);

private:
  mutable std::vector<std::ptrdiff_t> lookup_;
};

/// Boundary nodes of `omega` in recording order: face blocks z-, z+, y-, y+, x-, x+, each node
/// listed once under the first face it lies on.
std::vector<std::size_t> boundary_face_order(const Grid3& omega);

/// Mollified point source: exp(-1 / (1 - |x-x0|^2/eps)) / eps inside |x-x0|^2 < eps, else 0.
double mollified_delta(const Vec3& x, const Vec3& x0, double eps);

/// Simulate and record. `c_omega` holds c on the Omega grid at spacing cfg.h; c = 1 elsewhere.
BoundaryRecording run_forward(const ScalarField& c_omega, const ForwardConfig& cfg);

} // namespace cvxwave

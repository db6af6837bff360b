#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cvxwave/grid.hpp"

namespace cvxwave {

/// Analytic ground-truth coefficient; c = 1 outside the closed unit-size cube Omega.
struct Phantom {
  std::string name;
  double peak = 1.0;        ///< c at the inclusion centre (largest value of c)
  double A = 1.0;
  std::function<double(const Vec3&)> inside; ///< c on Omega
  nlohmann::json descriptor;

  double operator()(const Vec3& x) const;
  ScalarField sample(const Grid3& g) const;
  /// Nodes where the phantom departs from 1.
  bool in_support(const Vec3& x) const { return std::abs((*this)(x) - 1.0) > 1e-12; }
};

const std::vector<std::string>& phantom_names();

/// test1..test5 plus test6 (test4 geometry, used with 5% data noise). Edges ramp over 2*smooth_h
/// with a C1 smoothstep. Unknown names raise ConfigError listing the valid ones.
Phantom make_phantom(const std::string& name, double smooth_h = 1.0 / 32.0, double A = 1.0);

/// |grad tau|^2 with central differences inside and one-sided ones on the boundary.
ScalarField c_from_tau(const ScalarField& tau);

struct ReconReport {
  ScalarField c;          ///< recovered c after the floor clamp
  double c_floor = 0.1;
  std::size_t clamped = 0;
  double rel_l2 = 0.0;
  double max_c = 0.0;     ///< maximum over the detected-inclusion mask (global max if the mask is empty)
  double min_c = 0.0;
  std::size_t mask_nodes = 0;
  Vec3 com{};             ///< centroid of the detected mask
  Vec3 true_com{};        ///< centroid of the same threshold applied to the phantom
  double com_offset = 0.0;
  double support_min = 0.0, support_max = 0.0; ///< recovered range over the phantom support
  double threshold = 0.0;

  nlohmann::json to_json() const;
};

/// Detection threshold 1 + frac*(peak - 1).
ReconReport metrics(const ScalarField& recovered, const Phantom& ph, double frac = 0.3, double c_floor = 0.1);

/// Mid-plane y = 0 slice of f as rows indexed by z (row k holds i = 0..nx-1).
std::vector<std::vector<double>> midplane_xz(const ScalarField& f);

/// CSV + PGM of the mid-plane slice, scaled to [lo, hi].
void write_slices(const std::filesystem::path& stem, const ScalarField& f, double lo, double hi);

} // namespace cvxwave

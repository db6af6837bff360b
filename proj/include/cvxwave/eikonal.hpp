#pragma once

#include "cvxwave/grid.hpp"

namespace cvxwave {

struct TravelTimeField {
  ScalarField tau;
  Vec3 source{};
  int cycles = 0;         ///< full 8-ordering sweep cycles performed
  double last_update = 0; ///< max |change| in the final cycle
};

struct EikonalOptions {
  double tol = 1e-8;
  int max_cycles = 100;
  double init_radius_cells = 2.0; ///< nodes within this many h of x0 are initialized exactly
};

/// First-order Godunov fast sweeping for |grad tau|^2 = c with tau ~ sqrt(c(x0)) |x - x0| near
/// the source. Throws NumericalError when the sweeps do not settle within max_cycles.
TravelTimeField fast_sweep(const ScalarField& c, const Vec3& x0, const EikonalOptions& opt = {});

} // namespace cvxwave

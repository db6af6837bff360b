#pragma once

#include <array>
#include <span>
#include <vector>

#include "cvxwave/basis.hpp"
#include "cvxwave/grid.hpp"

namespace cvxwave {

struct SystemCoeffs {
  explicit SystemCoeffs(const PolyBasis& b, double m_floor = 0.01);

  int N;
  double m_floor;
  std::vector<double> s; ///< s_n = P_n'(0), 0-based
  std::vector<double> D; ///< row-major N x N, D[m][n] = int P_n' P_m
};

/// Strict mode throws InfeasibleError below the floor; permissive mode replaces the amplitude by
/// sign(S)*m_floor there (sign of zero taken as +).
enum class Feasibility { strict, permissive };

/// S = sum_n s_n w_n for the N-vector (w_1..w_N).
double amplitude(std::span<const double> wt, const SystemCoeffs& k);

/// Amplitude after the feasibility rule; `node` is reported in the strict-mode error.
double guarded_amplitude(double S, const SystemCoeffs& k, Feasibility mode, std::size_t node = 0);

/// F1 = -2 (grad tau . sum_n s_n grad w_n) / S. gradWt holds N rows of 3 derivatives.
double F1(const std::array<double, 3>& grad_tau, std::span<const std::array<double, 3>> gradWt,
          std::span<const double> wt, const SystemCoeffs& k, Feasibility mode = Feasibility::strict,
          std::size_t node = 0);

/// Residual of row m (1-based): lap_wm - 2 sum_i tau_i sum_n D_mn d_i w_n - F1 sum_n D_mn w_n.
double F2_row(int m, double lap_wm, const std::array<double, 3>& grad_tau,
              std::span<const std::array<double, 3>> gradWt, std::span<const double> wt,
              double F1_value, const SystemCoeffs& k);

/// Full residual at interior nodes: component 0 = lap tau - F1, components m = F2_row.
/// Boundary entries are zero. Strict mode reports the node with the smallest amplitude.
VecField residual(const VecField& W, const SystemCoeffs& k, Feasibility mode = Feasibility::strict);

/// Smallest amplitude over all nodes.
double min_amplitude(const VecField& W, const SystemCoeffs& k);

} // namespace cvxwave

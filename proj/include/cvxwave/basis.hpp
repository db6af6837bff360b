#pragma once

#include <vector>

#include <json.hpp>

namespace cvxwave {

/// Orthonormal polynomials P_1..P_N on L2(0, T1) spanned by {t, ..., t^N}, so P_n(0) = 0.
///
/// Built by Gram-Schmidt on exact rational monomial moments of the unit interval and then
/// rescaled to (0, T1), which sidesteps the Hilbert-matrix conditioning of the direct route.
class PolyBasis {
public:
  static constexpr int max_order = 8;

  PolyBasis(double T1, int N);

  double T1() const noexcept { return T1_; }
  int N() const noexcept { return N_; }

  /// Monomial coefficients of P_n (1-based n); entry k multiplies t^k and entry 0 is zero.
  const std::vector<double>& coeffs(int n) const { return coeffs_.at(static_cast<std::size_t>(n - 1)); }

  /// s_n = P_n'(0), 1-based.
  double s(int n) const { return s_.at(static_cast<std::size_t>(n - 1)); }
  const std::vector<double>& s() const noexcept { return s_; }

  /// D(m, n) = int_0^T1 P_n'(t) P_m(t) dt, 1-based.
  double D(int m, int n) const {
    return D_[static_cast<std::size_t>(m - 1) * static_cast<std::size_t>(N_) +
              static_cast<std::size_t>(n - 1)];
  }
  /// Row-major N x N copy of D (0-based).
  const std::vector<double>& D_matrix() const noexcept { return D_; }

  double eval(int n, double t) const;
  double eval_deriv(int n, double t) const;

  nlohmann::json to_json() const;

private:
  double T1_;
  int N_;
  std::vector<std::vector<double>> coeffs_;
  std::vector<double> s_;
  std::vector<double> D_;
};

} // namespace cvxwave

#include "cvxwave/system.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "cvxwave/error.hpp"

namespace cvxwave {

SystemCoeffs::SystemCoeffs(const PolyBasis& b, double floor)
  : N(b.N()), m_floor(floor), s(b.s()), D(b.D_matrix()) {
  if (!(floor > 0.0)) throw ConfigError("system: m_floor must be positive");
}

double amplitude(std::span<const double> wt, const SystemCoeffs& k) {
  double S = 0.0;
  for (int n = 0; n < k.N; ++n) S += k.s[static_cast<std::size_t>(n)] * wt[static_cast<std::size_t>(n)];
  return S;
}

double guarded_amplitude(double S, const SystemCoeffs& k, Feasibility mode, std::size_t node) {
  if (S >= k.m_floor) return S;
  if (mode == Feasibility::strict) {
    std::ostringstream msg;
    msg << "infeasible: amplitude " << S << " below m_floor " << k.m_floor << " at node " << node;
    throw InfeasibleError(msg.str(), node);
  }
  if (std::abs(S) >= k.m_floor) return S;
  return S < 0.0 ? -k.m_floor : k.m_floor;
}

double F1(const std::array<double, 3>& grad_tau, std::span<const std::array<double, 3>> gradWt,
          std::span<const double> wt, const SystemCoeffs& k, Feasibility mode, std::size_t node) {
  const double S = guarded_amplitude(amplitude(wt, k), k, mode, node);
  double num = 0.0;
  for (int i = 0; i < 3; ++i) {
    double G = 0.0;
    for (int n = 0; n < k.N; ++n) G += k.s[static_cast<std::size_t>(n)] * gradWt[static_cast<std::size_t>(n)][i];
    num += grad_tau[i] * G;
  }
  return -2.0 * num / S;
}

double F2_row(int m, double lap_wm, const std::array<double, 3>& grad_tau,
              std::span<const std::array<double, 3>> gradWt, std::span<const double> wt,
              double F1_value, const SystemCoeffs& k) {
  const auto row = static_cast<std::size_t>(m - 1) * static_cast<std::size_t>(k.N);
  double r = lap_wm;
  double dw = 0.0;
  for (int n = 0; n < k.N; ++n) {
    const double d = k.D[row + static_cast<std::size_t>(n)];
    const auto& g = gradWt[static_cast<std::size_t>(n)];
    r -= 2.0 * d * (grad_tau[0] * g[0] + grad_tau[1] * g[1] + grad_tau[2] * g[2]);
    dw += d * wt[static_cast<std::size_t>(n)];
  }
  return r - F1_value * dw;
}

double min_amplitude(const VecField& W, const SystemCoeffs& k) {
  double m = std::numeric_limits<double>::infinity();
  std::vector<double> wt(static_cast<std::size_t>(k.N));
  for (std::size_t x = 0; x < W.grid().size(); ++x) {
    for (int n = 0; n < k.N; ++n) wt[static_cast<std::size_t>(n)] = W[n + 1][x];
    m = std::min(m, amplitude(wt, k));
  }
  return m;
}

VecField residual(const VecField& W, const SystemCoeffs& k, Feasibility mode) {
  if (W.n_comp() != k.N + 1) throw ConfigError("residual: component count does not match N + 1");
  const Grid3& g = W.grid();
  const int nc = W.n_comp();
  std::vector<ScalarField> lap;
  std::vector<std::array<ScalarField, 3>> grad;
  for (int c = 0; c < nc; ++c) {
    lap.push_back(laplacian7(W[c]));
    grad.push_back(gradient_c(W[c]));
  }
  if (mode == Feasibility::strict) {
    // report the worst interior offender, not merely the first one met
    double worst = std::numeric_limits<double>::infinity();
    std::size_t at = 0;
    std::vector<double> wt(static_cast<std::size_t>(k.N));
    for (int kk = 1; kk < g.nz() - 1; ++kk)
      for (int j = 1; j < g.ny() - 1; ++j)
        for (int i = 1; i < g.nx() - 1; ++i) {
          const std::size_t x = g.index(i, j, kk);
          for (int n = 0; n < k.N; ++n) wt[static_cast<std::size_t>(n)] = W[n + 1][x];
          const double S = amplitude(wt, k);
          if (S < worst) {
            worst = S;
            at = x;
          }
        }
    if (worst < k.m_floor) (void)guarded_amplitude(worst, k, mode, at);
  }
  VecField R(g, nc);
  std::vector<double> wt(static_cast<std::size_t>(k.N));
  std::vector<std::array<double, 3>> gw(static_cast<std::size_t>(k.N));
  for (int kk = 1; kk < g.nz() - 1; ++kk)
    for (int j = 1; j < g.ny() - 1; ++j)
      for (int i = 1; i < g.nx() - 1; ++i) {
        const std::size_t x = g.index(i, j, kk);
        const std::array<double, 3> gt{grad[0][0][x], grad[0][1][x], grad[0][2][x]};
        for (int n = 0; n < k.N; ++n) {
          const auto un = static_cast<std::size_t>(n);
          wt[un] = W[n + 1][x];
          gw[un] = {grad[un + 1][0][x], grad[un + 1][1][x], grad[un + 1][2][x]};
        }
        const double f1 = F1(gt, gw, wt, k, mode, x);
        R[0][x] = lap[0][x] - f1;
        for (int m = 1; m <= k.N; ++m) R[m][x] = F2_row(m, lap[static_cast<std::size_t>(m)][x], gt, gw, wt, f1, k);
      }
  return R;
}

} // namespace cvxwave

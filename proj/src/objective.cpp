#include "cvxwave/objective.hpp"

#include <cmath>
#include <sstream>

#include "cvxwave/error.hpp"

namespace cvxwave {

void ObjectiveConfig::validate(double A) const {
  if (!(lambda >= 0.0) || !(b >= 0.0) || !(beta >= 0.0) || !(sigma_N >= 0.0)) {
    throw ConfigError("objective: lambda, b, beta and sigma_N must be non-negative");
  }
  if (lambda * (A + b) * (A + b) > 700.0) throw ConfigError("objective: Carleman weight overflows (lambda (A+b)^2 > 700)");
}

nlohmann::json ObjectiveConfig::to_json() const {
  return {{"lambda", lambda}, {"b", b}, {"beta", beta}, {"sigma_N", sigma_N},
          {"mode", mode == Feasibility::strict ? "strict" : "permissive"}};
}

ObjectiveConfig ObjectiveConfig::from_json(const nlohmann::json& j) {
  ObjectiveConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& key = it.key();
    if (key == "lambda") c.lambda = it->get<double>();
    else if (key == "b") c.b = it->get<double>();
    else if (key == "beta") c.beta = it->get<double>();
    else if (key == "sigma_N") c.sigma_N = it->get<double>();
    else if (key == "mode") {
      const auto m = it->get<std::string>();
      if (m == "strict") c.mode = Feasibility::strict;
      else if (m == "permissive") c.mode = Feasibility::permissive;
      else throw ConfigError("objective config: mode must be strict or permissive");
    } else throw ConfigError("objective config: unknown key '" + key + "'");
  }
  return c;
}

double carleman_weight(double z, const ObjectiveConfig& cfg) {
  return std::exp(2.0 * cfg.lambda * (z + cfg.b) * (z + cfg.b));
}

DofMap::DofMap(const Grid3& g) : free_(g.size(), 0) {
  for (int k = 1; k < g.nz() - 1; ++k)
    for (int j = 1; j < g.ny() - 1; ++j)
      for (int i = 1; i < g.nx() - 1; ++i) {
        const std::size_t n = g.index(i, j, k);
        free_[n] = 1;
        list_.push_back(n);
      }
  n_free_ = list_.size();
}

LevelData LevelData::from(const CauchyProjection& cp, const Grid3& level) {
  return {cp.dirichlet_on(level), cp.neumann_on(level)};
}

void impose_dirichlet(VecField& W, const LevelData& data) {
  if (!(W.grid() == data.grid()) || W.n_comp() != data.dirichlet.n_comp()) {
    throw ConfigError("impose_dirichlet: field does not match the level data");
  }
  for (std::size_t n : boundary_nodes(W.grid()))
    for (int c = 0; c < W.n_comp(); ++c) W[c][n] = data.dirichlet[c][n];
}

namespace {

void check_inputs(const VecField& W, const LevelData& data, const SystemCoeffs& k) {
  if (W.n_comp() != k.N + 1) throw ConfigError("objective: component count does not match N + 1");
  if (!(W.grid() == data.grid()) || data.dirichlet.n_comp() != W.n_comp()) {
    throw ConfigError("objective: field and level data live on different grids");
  }
  const auto nc = static_cast<std::size_t>(W.n_comp());
  if (data.q1.size() != gamma0_nodes(W.grid()).size() * nc) throw ConfigError("objective: Neumann data size mismatch");
  for (std::size_t n : boundary_nodes(W.grid()))
    for (int c = 0; c < W.n_comp(); ++c) {
      const double a = W[c][n], d = data.dirichlet[c][n];
      if (std::abs(a - d) > 1e-12 * (1.0 + std::abs(d))) {
        std::ostringstream msg;
        msg << "objective: Dirichlet mismatch at node " << n << " component " << c;
        throw ConfigError(msg.str());
      }
    }
  for (int c = 0; c < W.n_comp(); ++c) W[c].check_finite("objective input");
}

// One pass over the grid computing J and, when G is non-null, its exact gradient.
JParts accumulate(const VecField& W, const LevelData& data, const ObjectiveConfig& cfg, const SystemCoeffs& k,
                  VecField* G) {
  check_inputs(W, data, k);
  const Grid3& g = W.grid();
  const int nc = W.n_comp(), N = k.N;
  const double h = g.h(), h2 = h * h, h3 = h2 * h;
  const std::size_t sx = 1, sy = static_cast<std::size_t>(g.nx()),
                    sz = sy * static_cast<std::size_t>(g.ny());
  const std::array<std::size_t, 3> stride{sx, sy, sz};

  std::vector<const double*> w(static_cast<std::size_t>(nc));
  std::vector<double*> gr(static_cast<std::size_t>(nc), nullptr);
  for (int c = 0; c < nc; ++c) {
    w[static_cast<std::size_t>(c)] = W[c].data().data();
    if (G) gr[static_cast<std::size_t>(c)] = (*G)[c].data().data();
  }

  JParts J;
  std::vector<double> V(static_cast<std::size_t>(nc)), L(V.size()), r(V.size()), rho(V.size()),
      adjV(V.size()), Dw(static_cast<std::size_t>(N));
  std::vector<std::array<double, 3>> dg(V.size()), adjG(V.size()), E(static_cast<std::size_t>(N));
  const auto& s = k.s;
  const auto& D = k.D;
  auto Dmn = [&](int m, int n) { return D[static_cast<std::size_t>(m) * static_cast<std::size_t>(N) + static_cast<std::size_t>(n)]; };

  for (int kk = 1; kk < g.nz() - 1; ++kk) {
    const double omega = carleman_weight(g.coord(0, 0, kk)[2], cfg);
    for (int j = 1; j < g.ny() - 1; ++j)
      for (int i = 1; i < g.nx() - 1; ++i) {
        const std::size_t x = g.index(i, j, kk);
        for (int c = 0; c < nc; ++c) {
          const auto uc = static_cast<std::size_t>(c);
          const double* f = w[uc];
          V[uc] = f[x];
          double lap = -6.0 * f[x];
          for (int a = 0; a < 3; ++a) {
            const double fp = f[x + stride[static_cast<std::size_t>(a)]], fm = f[x - stride[static_cast<std::size_t>(a)]];
            lap += fp + fm;
            dg[uc][static_cast<std::size_t>(a)] = (fp - fm) / (2.0 * h);
          }
          L[uc] = lap / h2;
        }
        double S_raw = 0.0;
        std::array<double, 3> Gs{0.0, 0.0, 0.0};
        for (int n = 0; n < N; ++n) {
          const auto un = static_cast<std::size_t>(n);
          S_raw += s[un] * V[un + 1];
          for (int a = 0; a < 3; ++a) Gs[static_cast<std::size_t>(a)] += s[un] * dg[un + 1][static_cast<std::size_t>(a)];
        }
        const double S = guarded_amplitude(S_raw, k, cfg.mode, x);
        const bool clamped = S != S_raw;
        const auto& gt = dg[0];
        const double P = gt[0] * Gs[0] + gt[1] * Gs[1] + gt[2] * Gs[2];
        const double f1 = -2.0 * P / S;
        r[0] = L[0] - f1;
        for (int m = 0; m < N; ++m) {
          const auto um = static_cast<std::size_t>(m);
          double dw = 0.0;
          std::array<double, 3> e{0.0, 0.0, 0.0};
          for (int n = 0; n < N; ++n) {
            const double d = Dmn(m, n);
            dw += d * V[static_cast<std::size_t>(n) + 1];
            for (int a = 0; a < 3; ++a) e[static_cast<std::size_t>(a)] += d * dg[static_cast<std::size_t>(n) + 1][static_cast<std::size_t>(a)];
          }
          Dw[um] = dw;
          E[um] = e;
          r[um + 1] = L[um + 1] - 2.0 * (gt[0] * e[0] + gt[1] * e[1] + gt[2] * e[2]) - f1 * dw;
        }
        double rr = 0.0;
        for (double v : r) rr += v * v;
        J.interior += omega * h3 * rr;
        if (!G) continue;

        for (int c = 0; c < nc; ++c) rho[static_cast<std::size_t>(c)] = 2.0 * omega * h3 * r[static_cast<std::size_t>(c)];
        double phi = -rho[0];
        for (int m = 0; m < N; ++m) phi -= rho[static_cast<std::size_t>(m) + 1] * Dw[static_cast<std::size_t>(m)];
        // tau gradient
        for (int a = 0; a < 3; ++a) {
          const auto ua = static_cast<std::size_t>(a);
          double acc = 0.0;
          for (int m = 0; m < N; ++m) acc += rho[static_cast<std::size_t>(m) + 1] * E[static_cast<std::size_t>(m)][ua];
          adjG[0][ua] = -2.0 * acc - 2.0 * phi * Gs[ua] / S;
        }
        adjV[0] = 0.0;
        for (int n = 0; n < N; ++n) {
          const auto un = static_cast<std::size_t>(n);
          double rD = 0.0; // sum_m rho_m D_mn
          for (int m = 0; m < N; ++m) rD += rho[static_cast<std::size_t>(m) + 1] * Dmn(m, n);
          for (int a = 0; a < 3; ++a) {
            const auto ua = static_cast<std::size_t>(a);
            adjG[un + 1][ua] = -2.0 * gt[ua] * rD - 2.0 * phi * gt[ua] * s[un] / S;
          }
          adjV[un + 1] = -f1 * rD + (clamped ? 0.0 : -phi * f1 * s[un] / S);
        }
        for (int c = 0; c < nc; ++c) {
          const auto uc = static_cast<std::size_t>(c);
          double* out = gr[uc];
          const double l = rho[uc] / h2;
          out[x] += adjV[uc] - 6.0 * l;
          for (int a = 0; a < 3; ++a) {
            const auto ua = static_cast<std::size_t>(a);
            const double q = adjG[uc][ua] / (2.0 * h);
            out[x + stride[ua]] += l + q;
            out[x - stride[ua]] += l - q;
          }
        }
      }
  }

  // Neumann penalty on gamma0
  if (cfg.sigma_N > 0.0) {
    const auto g0 = gamma0_nodes(g);
    const double omega = carleman_weight(g.upper()[2], cfg);
    const auto unc = static_cast<std::size_t>(nc);
    for (std::size_t q = 0; q < g0.size(); ++q) {
      const std::size_t x = g0[q];
      for (std::size_t c = 0; c < unc; ++c) {
        const double* f = w[c];
        const double d = (3.0 * f[x] - 4.0 * f[x - sz] + f[x - 2 * sz]) / (2.0 * h) - data.q1[q * unc + c];
        J.neumann += cfg.sigma_N * omega * h2 * d * d;
        if (G) {
          const double a = 2.0 * cfg.sigma_N * omega * h2 * d / (2.0 * h);
          gr[c][x] += 3.0 * a;
          gr[c][x - sz] -= 4.0 * a;
          gr[c][x - 2 * sz] += a;
        }
      }
    }
  }

  // squared second differences
  if (cfg.beta > 0.0) {
    for (int c = 0; c < nc; ++c) {
      const double* f = w[static_cast<std::size_t>(c)];
      double* out = gr[static_cast<std::size_t>(c)];
      for (int kk = 1; kk < g.nz() - 1; ++kk)
        for (int j = 1; j < g.ny() - 1; ++j)
          for (int i = 1; i < g.nx() - 1; ++i) {
            const std::size_t x = g.index(i, j, kk);
            for (int a = 0; a < 3; ++a) {
              const std::size_t sa = stride[static_cast<std::size_t>(a)];
              const double dd = (f[x + sa] - 2.0 * f[x] + f[x - sa]) / h2;
              J.smooth += cfg.beta * h3 * dd * dd;
              if (G) {
                const double t = 2.0 * cfg.beta * h3 * dd / h2;
                out[x + sa] += t;
                out[x - sa] += t;
                out[x] -= 2.0 * t;
              }
              for (int b2 = a + 1; b2 < 3; ++b2) {
                const std::size_t sb = stride[static_cast<std::size_t>(b2)];
                const double dm = (f[x + sa + sb] - f[x + sa - sb] - f[x - sa + sb] + f[x - sa - sb]) / (4.0 * h2);
                J.smooth += 2.0 * cfg.beta * h3 * dm * dm;
                if (G) {
                  const double t = 4.0 * cfg.beta * h3 * dm / (4.0 * h2);
                  out[x + sa + sb] += t;
                  out[x + sa - sb] -= t;
                  out[x - sa + sb] -= t;
                  out[x - sa - sb] += t;
                }
              }
            }
          }
    }
  }

  if (G) {
    for (std::size_t n : boundary_nodes(g))
      for (int c = 0; c < nc; ++c) (*G)[c][n] = 0.0;
  }
  if (!std::isfinite(J.total())) throw NumericalError("objective: non-finite value");
  return J;
}

} // namespace

JParts eval_J_parts(const VecField& W, const LevelData& data, const ObjectiveConfig& cfg, const SystemCoeffs& k) {
  return accumulate(W, data, cfg, k, nullptr);
}

double eval_J(const VecField& W, const LevelData& data, const ObjectiveConfig& cfg, const SystemCoeffs& k) {
  return accumulate(W, data, cfg, k, nullptr).total();
}

VecField grad_J(const VecField& W, const LevelData& data, const ObjectiveConfig& cfg, const SystemCoeffs& k,
                double* J_out) {
  VecField G(W.grid(), W.n_comp());
  const auto J = accumulate(W, data, cfg, k, &G);
  if (J_out) *J_out = J.total();
  return G;
}

double dot_free(const VecField& a, const VecField& b) {
  const Grid3& g = a.grid();
  double acc = 0.0;
  for (int c = 0; c < a.n_comp(); ++c)
    for (int k = 1; k < g.nz() - 1; ++k)
      for (int j = 1; j < g.ny() - 1; ++j)
        for (int i = 1; i < g.nx() - 1; ++i) {
          const std::size_t n = g.index(i, j, k);
          acc += a[c][n] * b[c][n];
        }
  return acc;
}

double grad_norm(const VecField& G, bool l2) {
  const double h = G.grid().h();
  return std::sqrt(dot_free(G, G) / (l2 ? h * h * h : 1.0));
}

} // namespace cvxwave

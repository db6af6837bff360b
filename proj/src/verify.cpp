#include "cvxwave/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "cvxwave/error.hpp"

namespace cvxwave {

namespace {

double uniform_pm1(std::mt19937_64& rng) { return 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0; }

// Second derivative along axis a: 3-point inside, 4-point one-sided (second order) on the faces.
ScalarField second_diff(const ScalarField& f, int a) {
  const Grid3& g = f.grid();
  if (g.dims()[static_cast<std::size_t>(a)] < 4) throw ConfigError("carleman: need at least 4 nodes per axis");
  const double h2 = g.h() * g.h();
  ScalarField out(g);
  for (int k = 0; k < g.nz(); ++k)
    for (int j = 0; j < g.ny(); ++j)
      for (int i = 0; i < g.nx(); ++i) {
        Index3 p{i, j, k};
        const int pa = p[static_cast<std::size_t>(a)], last = g.dims()[static_cast<std::size_t>(a)] - 1;
        auto at = [&](int off) {
          Index3 q = p;
          q[static_cast<std::size_t>(a)] += off;
          return f(q[0], q[1], q[2]);
        };
        double v;
        if (pa == 0) v = 2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3);
        else if (pa == last) v = 2.0 * at(0) - 5.0 * at(-1) + 4.0 * at(-2) - at(-3);
        else v = at(1) - 2.0 * at(0) + at(-1);
        out(i, j, k) = v / h2;
      }
  return out;
}

// Composite trapezoid node weight (per node, including h^3).
std::vector<double> trapezoid_weights(const Grid3& g) {
  std::vector<double> w(g.size());
  const double h3 = g.h() * g.h() * g.h();
  for (int k = 0; k < g.nz(); ++k)
    for (int j = 0; j < g.ny(); ++j)
      for (int i = 0; i < g.nx(); ++i) {
        double f = h3;
        if (i == 0 || i == g.nx() - 1) f *= 0.5;
        if (j == 0 || j == g.ny() - 1) f *= 0.5;
        if (k == 0 || k == g.nz() - 1) f *= 0.5;
        w[g.index(i, j, k)] = f;
      }
  return w;
}

} // namespace

ScalarField sample_admissible_u(const Grid3& g, std::uint64_t seed, int modes, double A) {
  if (modes < 1) throw ConfigError("sampler: need at least one mode");
  std::mt19937_64 rng(seed);
  std::vector<double> a(static_cast<std::size_t>(modes * modes));
  for (auto& v : a) v = uniform_pm1(rng);
  std::array<double, 4> cub{};
  for (auto& v : cub) v = uniform_pm1(rng);
  // keep the cubic away from the zero polynomial
  cub[0] += std::copysign(0.5, cub[0]);
  const double pi = std::numbers::pi;
  ScalarField u(g);
  double nrm = 0.0;
  for (int k = 0; k < g.nz(); ++k)
    for (int j = 0; j < g.ny(); ++j)
      for (int i = 0; i < g.nx(); ++i) {
        if (g.is_boundary(i, j, k)) continue;
        const Vec3 x = g.coord(i, j, k);
        const double xs = (x[0] + A / 2) / A, ys = (x[1] + A / 2) / A, z = x[2];
        double s = 0.0;
        for (int p = 1; p <= modes; ++p)
          for (int q = 1; q <= modes; ++q)
            s += a[static_cast<std::size_t>((p - 1) * modes + q - 1)] * std::sin(p * pi * xs) * std::sin(q * pi * ys);
        const double zz = z / A;
        const double phi = z * (A - z) * (A - z) * (cub[0] + zz * (cub[1] + zz * (cub[2] + zz * cub[3])));
        const double v = s * phi;
        u(i, j, k) = v;
        nrm += v * v;
      }
  nrm = std::sqrt(nrm * g.h() * g.h() * g.h());
  if (!(nrm > 0.0)) throw NumericalError("sampler: degenerate sample");
  for (auto& v : u.data()) v /= nrm;
  return u;
}

CarlemanTerms carleman_terms(const ScalarField& u, double lambda, double b) {
  const Grid3& g = u.grid();
  std::array<ScalarField, 3> dd{second_diff(u, 0), second_diff(u, 1), second_diff(u, 2)};
  const auto grad = gradient_c(u);
  std::array<std::array<ScalarField, 3>, 3> mixed{gradient_c(grad[0]), gradient_c(grad[1]), gradient_c(grad[2])};
  const auto tw = trapezoid_weights(g);
  CarlemanTerms t;
  for (std::size_t n = 0; n < g.size(); ++n) {
    const double z = g.coord(n)[2];
    const double w = tw[n] * std::exp(2.0 * lambda * (z + b) * (z + b));
    const double lap = dd[0][n] + dd[1][n] + dd[2][n];
    t.lhs += lap * lap * w;
    double hs = dd[0][n] * dd[0][n] + dd[1][n] * dd[1][n] + dd[2][n] * dd[2][n];
    hs += 2.0 * (mixed[0][1][n] * mixed[0][1][n] + mixed[0][2][n] * mixed[0][2][n] + mixed[1][2][n] * mixed[1][2][n]);
    t.hess += hs * w;
    t.grad += (grad[0][n] * grad[0][n] + grad[1][n] * grad[1][n] + grad[2][n] * grad[2][n]) * w;
    t.mass += u[n] * u[n] * w;
  }
  return t;
}

double carleman_ratio(const ScalarField& u, double lambda, double b) {
  if (!(lambda >= 1.0)) throw ConfigError("carleman_ratio: lambda must be at least 1");
  const auto t = carleman_terms(u, lambda, b);
  const double den = t.hess / lambda + lambda * t.grad + lambda * lambda * lambda * t.mass;
  if (!(den > 0.0)) throw ConfigError("carleman_ratio: degenerate denominator (u = 0)");
  return t.lhs / den;
}

nlohmann::json CarlemanReport::to_json() const {
  return {{"lambdas", lambdas}, {"min_ratio", min_ratio}, {"samples", samples}, {"worst_seed", worst_seed},
          {"b", b},             {"floor", floor},         {"max_collapse", max_collapse}, {"pass", pass}};
}

std::string CarlemanReport::text() const {
  std::ostringstream s;
  s << "Carleman ratio sweep (b = " << b << ", floor = " << floor << ")\n";
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    s << "  lambda " << lambdas[i] << ": min ratio " << min_ratio[i] << " over " << samples[i]
      << " samples (worst seed " << worst_seed[i] << ")\n";
  }
  s << "  result: " << (pass ? "PASS" : "FAIL") << '\n';
  return s.str();
}

CarlemanReport carleman_sweep(const Grid3& g, const std::vector<double>& lambdas, int samples, std::uint64_t seed,
                              double b, double floor, double max_collapse) {
  if (samples < 1) throw ConfigError("carleman_sweep: empty sample list");
  if (lambdas.empty()) throw ConfigError("carleman_sweep: no lambda values");
  CarlemanReport r;
  r.lambdas = lambdas;
  r.b = b;
  r.floor = floor;
  r.max_collapse = max_collapse;
  r.min_ratio.assign(lambdas.size(), std::numeric_limits<double>::infinity());
  r.samples.assign(lambdas.size(), samples);
  r.worst_seed.assign(lambdas.size(), seed);
  for (int s = 0; s < samples; ++s) {
    const auto sd = seed + static_cast<std::uint64_t>(s);
    const auto u = sample_admissible_u(g, sd);
    for (std::size_t l = 0; l < lambdas.size(); ++l) {
      const double rho = carleman_ratio(u, lambdas[l], b);
      if (rho < r.min_ratio[l]) {
        r.min_ratio[l] = rho;
        r.worst_seed[l] = sd;
      }
    }
  }
  r.pass = std::all_of(r.min_ratio.begin(), r.min_ratio.end(), [&](double v) { return v >= floor; }) &&
           r.min_ratio.back() >= (1.0 - max_collapse) * r.min_ratio.front();
  return r;
}

double bregman_gap(double J1, double J2, const VecField& g1, const VecField& W1, const VecField& W2) {
  double inner = 0.0;
  for (int c = 0; c < W1.n_comp(); ++c)
    for (std::size_t n = 0; n < W1.grid().size(); ++n) inner += g1[c][n] * (W2[c][n] - W1[c][n]);
  return J2 - J1 - inner;
}

nlohmann::json ConvexityReport::to_json() const {
  return {{"pairs", pairs},           {"resampled", resampled}, {"perturbation", perturbation},
          {"min_gap", min_gap},       {"frac_nonneg", frac_nonneg}, {"min_second_diff", min_second_diff},
          {"floor", floor},           {"gaps", gaps},           {"rel_gaps", rel_gaps},
          {"pass", pass}};
}

std::string ConvexityReport::text() const {
  std::ostringstream s;
  s << "Convexity probe: " << pairs << " pairs, perturbation " << perturbation << " (" << resampled
    << " redraws)\n";
  s << "  min Bregman gap " << min_gap << ", non-negative fraction " << frac_nonneg << '\n';
  s << "  min segment second difference " << min_second_diff << '\n';
  s << "  result: " << (pass ? "PASS" : "FAIL") << '\n';
  return s.str();
}

ConvexityReport convexity_probe(const VecField& base, const LevelData& data, const ObjectiveConfig& cfg_in,
                                const SystemCoeffs& k, int pairs, std::uint64_t seed, double perturbation,
                                double floor) {
  if (pairs < 1) throw ConfigError("convexity_probe: need at least one pair");
  ObjectiveConfig cfg = cfg_in;
  cfg.mode = Feasibility::strict;
  const Grid3& g = base.grid();
  const int nc = base.n_comp();
  std::vector<double> scale(static_cast<std::size_t>(nc), 0.0);
  for (int c = 0; c < nc; ++c)
    for (std::size_t n = 0; n < g.size(); ++n) scale[static_cast<std::size_t>(c)] = std::max(scale[static_cast<std::size_t>(c)], std::abs(base[c][n]));

  ConvexityReport r;
  r.pairs = pairs;
  r.perturbation = perturbation;
  r.floor = floor;
  r.min_gap = std::numeric_limits<double>::infinity();
  r.min_second_diff = std::numeric_limits<double>::infinity();
  std::uint64_t next = seed;
  auto draw = [&](double size) {
    VecField W = base;
    for (int c = 0; c < nc; ++c) {
      const auto u = sample_admissible_u(g, next++);
      double umax = 0.0;
      for (double v : u.values()) umax = std::max(umax, std::abs(v));
      const double a = size * scale[static_cast<std::size_t>(c)] / umax;
      for (std::size_t n = 0; n < g.size(); ++n) W[c][n] += a * u[n];
    }
    return W;
  };
  int nonneg = 0;
  for (int p = 0; p < pairs; ++p) {
    double size = perturbation;
    VecField W1, W2;
    int tries = 0;
    while (true) {
      W1 = draw(size);
      W2 = draw(size);
      if (min_amplitude(W1, k) >= k.m_floor && min_amplitude(W2, k) >= k.m_floor) break;
      if (++tries >= 20) throw NumericalError("convexity_probe: could not draw a feasible pair");
      ++r.resampled;
      size *= 0.5;
    }
    double J1 = 0.0;
    const auto G1 = grad_J(W1, data, cfg, k, &J1);
    const double J2 = eval_J(W2, data, cfg, k);
    const double gap = bregman_gap(J1, J2, G1, W1, W2);
    r.gaps.push_back(gap);
    r.rel_gaps.push_back(gap / std::max(J1, std::numeric_limits<double>::min()));
    r.min_gap = std::min(r.min_gap, gap);
    if (gap >= floor) ++nonneg;
    // second differences of t -> J(W1 + t (W2 - W1)) on t = 0, 1/4, ..., 1
    std::array<double, 5> Jt{};
    for (int s = 0; s <= 4; ++s) {
      const double t = 0.25 * s;
      VecField Wt = W1;
      for (int c = 0; c < nc; ++c)
        for (std::size_t n = 0; n < g.size(); ++n) Wt[c][n] = W1[c][n] + t * (W2[c][n] - W1[c][n]);
      Jt[static_cast<std::size_t>(s)] = s == 0 ? J1 : (s == 4 ? J2 : eval_J(Wt, data, cfg, k));
    }
    for (int s = 1; s <= 3; ++s) {
      const auto us = static_cast<std::size_t>(s);
      r.min_second_diff = std::min(r.min_second_diff, Jt[us - 1] - 2.0 * Jt[us] + Jt[us + 1]);
    }
  }
  r.frac_nonneg = static_cast<double>(nonneg) / pairs;
  r.pass = nonneg == pairs && r.min_second_diff >= floor;
  return r;
}

} // namespace cvxwave

#include "cvxwave/optimize.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "cvxwave/error.hpp"

namespace cvxwave {

MultilevelPlan MultilevelPlan::parse(const std::string& text, double tol, int max_iter) {
  MultilevelPlan p;
  p.levels.clear();
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double h = 0.0;
    try {
      const auto slash = item.find('/');
      if (slash == std::string::npos) h = std::stod(item);
      else h = std::stod(item.substr(0, slash)) / std::stod(item.substr(slash + 1));
    } catch (const std::exception&) {
      throw ConfigError("levels: cannot parse '" + item + "'");
    }
    p.levels.push_back({h, tol, max_iter});
  }
  p.validate();
  return p;
}

void MultilevelPlan::validate() const {
  if (levels.empty()) throw ConfigError("levels: empty plan");
  for (std::size_t l = 0; l < levels.size(); ++l) {
    if (!(levels[l].h > 0.0) || !(levels[l].tol > 0.0) || levels[l].max_iter < 1) {
      throw ConfigError("levels: spacing, tolerance and iteration cap must be positive");
    }
    if (l > 0 && std::abs(levels[l].h * 2.0 - levels[l - 1].h) > 1e-12 * levels[l - 1].h) {
      throw ConfigError("levels: each spacing must be exactly half the previous one");
    }
  }
}

nlohmann::json MultilevelPlan::to_json() const {
  auto arr = nlohmann::json::array();
  for (const auto& l : levels) arr.push_back({{"h", l.h}, {"tol", l.tol}, {"max_iter", l.max_iter}});
  return arr;
}

void RunTrace::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "level,iteration,J,grad_norm,step,margin\n";
  out << std::setprecision(17);
  for (const auto& r : iters) {
    out << r.level << ',' << r.iter << ',' << r.J << ',' << r.grad_norm << ',' << r.step << ',' << r.margin << '\n';
  }
}

nlohmann::json RunTrace::summary(bool timing) const {
  auto arr = nlohmann::json::array();
  for (const auto& l : levels) {
    nlohmann::json e = {{"h", l.h},
                        {"iterations", l.iterations},
                        {"converged", l.converged},
                        {"J_start", l.J_start},
                        {"J_end", l.J_end},
                        {"grad_end", l.grad_end}};
    if (timing) e["wall_seconds"] = l.wall_seconds;
    arr.push_back(e);
  }
  return {{"levels", arr}, {"iterations", iters.size()}};
}

GDResult gradient_descent(std::vector<double> x, const DescentProblem& prob, const LevelPlan& plan,
                          const GDOptions& opt, RunTrace* trace, int level) {
  if (!(opt.gamma0 > 0.0) || opt.max_halvings < 1) throw ConfigError("gd: gamma0 and max_halvings must be positive");
  std::vector<double> g(x.size()), trial(x.size()), g_trial(x.size());
  double J = prob.value_grad(x, g);
  auto norm_of = [&](const std::vector<double>& v) {
    double s = 0.0;
    for (double e : v) s += e * e;
    return std::sqrt(s / prob.metric);
  };
  double gn = norm_of(g);
  GDResult res;
  double last_step = opt.gamma0;
  auto log = [&](int it, double step) {
    if (!trace) return;
    trace->iters.push_back({level, it, J, gn, step, prob.margin ? prob.margin(x) : 0.0});
  };
  log(0, 0.0);
  int it = 0;
  while (gn >= plan.tol && it < plan.max_iter) {
    double gd = 0.0;
    for (double e : g) gd += e * e;
    gd /= prob.metric; // <g, d> with d = g / metric
    double gamma = opt.warm_step ? std::min(opt.gamma0, 2.0 * last_step) : opt.gamma0;
    bool accepted = false;
    double J_trial = 0.0;
    for (int k = 0; k <= opt.max_halvings; ++k) {
      for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] - gamma * g[i] / prob.metric;
      if (prob.project) prob.project(trial);
      J_trial = prob.value(trial);
      if (std::isfinite(J_trial) && J_trial <= J - opt.armijo_c * gamma * gd && J_trial < J) {
        accepted = true;
        break;
      }
      gamma *= 0.5;
    }
    if (!accepted) {
      std::ostringstream msg;
      msg << "gd stalled: no descent after " << opt.max_halvings << " halvings at iteration " << it
          << " (J=" << J << ", grad_norm=" << gn << ")";
      throw NumericalError(msg.str());
    }
    ++it;
    x.swap(trial);
    J = prob.value_grad(x, g);
    gn = norm_of(g);
    last_step = gamma;
    log(it, gamma);
  }
  res.x = std::move(x);
  res.converged = gn < plan.tol;
  res.iterations = it;
  res.J = J;
  res.grad_norm = gn;
  return res;
}

std::size_t project_amplitude(VecField& W, const SystemCoeffs& k) {
  const Grid3& g = W.grid();
  double ss = 0.0;
  for (double v : k.s) ss += v * v;
  std::size_t changed = 0;
  std::vector<double> wt(static_cast<std::size_t>(k.N));
  for (int kk = 1; kk < g.nz() - 1; ++kk)
    for (int j = 1; j < g.ny() - 1; ++j)
      for (int i = 1; i < g.nx() - 1; ++i) {
        const std::size_t x = g.index(i, j, kk);
        for (int n = 0; n < k.N; ++n) wt[static_cast<std::size_t>(n)] = W[n + 1][x];
        const double S = amplitude(wt, k);
        if (S >= k.m_floor) continue;
        // Euclidean projection onto the half space s.w >= m_floor
        const double a = (k.m_floor - S) / ss;
        for (int n = 0; n < k.N; ++n) W[n + 1][x] += a * k.s[static_cast<std::size_t>(n)];
        ++changed;
      }
  return changed;
}

LevelResult gd_level(const VecField& W0, const LevelData& data, const ObjectiveConfig& cfg, const SystemCoeffs& k,
                     const LevelPlan& plan, const GDOptions& opt, RunTrace* trace, int level) {
  const Grid3 grid = W0.grid();
  const int nc = W0.n_comp();
  const double h = grid.h();
  auto as_field = [&](std::span<const double> flat) {
    VecField W(grid, nc);
    W.assign(flat);
    return W;
  };
  DescentProblem prob;
  prob.metric = opt.l2_metric ? h * h * h : 1.0;
  prob.value = [&](std::span<const double> x) {
    try {
      return eval_J(as_field(x), data, cfg, k);
    } catch (const InfeasibleError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  prob.value_grad = [&](std::span<const double> x, std::vector<double>& gout) {
    double J = 0.0;
    const auto G = grad_J(as_field(x), data, cfg, k, &J);
    gout = G.flatten();
    return J;
  };
  prob.margin = [&](std::span<const double> x) { return min_amplitude(as_field(x), k); };
  if (opt.project) {
    prob.project = [&](std::vector<double>& x) {
      auto W = as_field(x);
      if (project_amplitude(W, k) > 0) x = W.flatten();
    };
  }
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t first = trace ? trace->iters.size() : 0;
  auto r = gradient_descent(W0.flatten(), prob, plan, opt, trace, level);
  if (trace) {
    LevelSummary s;
    s.h = h;
    s.iterations = r.iterations;
    s.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    s.converged = r.converged;
    s.J_start = trace->iters[first].J;
    s.J_end = r.J;
    s.grad_end = r.grad_norm;
    trace->levels.push_back(s);
  }
  return {as_field(r.x), r.converged, r.iterations, r.J, r.grad_norm};
}

ScalarField harmonic_extension(const ScalarField& f, double rel_tol, int max_iter) {
  const Grid3& g = f.grid();
  const double h2 = g.h() * g.h();
  const std::size_t sy = static_cast<std::size_t>(g.nx()), sz = sy * static_cast<std::size_t>(g.ny());
  ScalarField u(g, 0.0);
  for (std::size_t n : boundary_nodes(g)) u[n] = f[n];
  // A v = -lap v on interior unknowns (SPD); rhs carries the boundary values
  auto apply = [&](const std::vector<double>& v, std::vector<double>& out) {
    for (int k = 1; k < g.nz() - 1; ++k)
      for (int j = 1; j < g.ny() - 1; ++j)
        for (int i = 1; i < g.nx() - 1; ++i) {
          const std::size_t n = g.index(i, j, k);
          out[n] = (6.0 * v[n] - v[n + 1] - v[n - 1] - v[n + sy] - v[n - sy] - v[n + sz] - v[n - sz]) / h2;
        }
  };
  const std::size_t N = g.size();
  std::vector<double> x(N, 0.0), r(N, 0.0), p(N, 0.0), Ap(N, 0.0);
  {
    std::vector<double> ub(u.data()), Aub(N, 0.0);
    apply(ub, Aub);
    for (int k = 1; k < g.nz() - 1; ++k)
      for (int j = 1; j < g.ny() - 1; ++j)
        for (int i = 1; i < g.nx() - 1; ++i) {
          const std::size_t n = g.index(i, j, k);
          r[n] = -Aub[n];
        }
  }
  auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t n = 0; n < N; ++n) s += a[n] * b[n];
    return s;
  };
  p = r;
  double rr = dot(r, r);
  const double stop = rel_tol * rel_tol * std::max(rr, 1e-300);
  int it = 0;
  while (rr > stop && it < max_iter) {
    apply(p, Ap);
    for (std::size_t n : boundary_nodes(g)) Ap[n] = 0.0;
    const double alpha = rr / dot(p, Ap);
    for (std::size_t n = 0; n < N; ++n) {
      x[n] += alpha * p[n];
      r[n] -= alpha * Ap[n];
    }
    const double rr_new = dot(r, r);
    for (std::size_t n = 0; n < N; ++n) p[n] = r[n] + (rr_new / rr) * p[n];
    rr = rr_new;
    ++it;
  }
  if (rr > stop) throw NumericalError("harmonic_extension: CG did not converge");
  for (int k = 1; k < g.nz() - 1; ++k)
    for (int j = 1; j < g.ny() - 1; ++j)
      for (int i = 1; i < g.nx() - 1; ++i) {
        const std::size_t n = g.index(i, j, k);
        u[n] = x[n];
      }
  return u;
}

VecField baseline_start(const Grid3& level, const CauchyProjection& baseline, const CauchyProjection& data,
                        const BaselineOptions& opt) {
  if (baseline.N != data.N || !(baseline.omega == data.omega)) {
    throw ConfigError("baseline_start: baseline and data projections differ in N or grid");
  }
  const VecField Wb = baseline.dirichlet_on(level);
  const VecField Wd = data.dirichlet_on(level);
  const Vec3 x0 = data.source;
  auto dist = [&](std::size_t n) {
    const Vec3 x = level.coord(n);
    return std::hypot(x[0] - x0[0], x[1] - x0[1], x[2] - x0[2]);
  };
  const auto bnd = boundary_nodes(level);
  VecField W(level, data.N + 1);
  for (int c = 0; c <= data.N; ++c) {
    ScalarField edge(level, 0.0);
    for (std::size_t n : bnd) {
      double v = Wb[c][n];
      if (c == 0) v -= dist(n);
      if (opt.blend) v += Wd[c][n] - Wb[c][n];
      edge[n] = v;
    }
    ScalarField ext = harmonic_extension(edge);
    if (c == 0)
      for (std::size_t n = 0; n < level.size(); ++n) ext[n] += dist(n);
    W[c] = std::move(ext);
    for (std::size_t n : bnd) W[c][n] = Wd[c][n];
  }
  return W;
}

MultilevelResult multilevel(const VecField& W0, const CauchyProjection& data, const MultilevelPlan& plan,
                            const ObjectiveConfig& cfg, const SystemCoeffs& k, const GDOptions& opt) {
  plan.validate();
  if (std::abs(W0.grid().h() - plan.levels.front().h) > 1e-12) {
    throw ConfigError("multilevel: start field must live on the coarsest level");
  }
  MultilevelResult out;
  VecField W = W0;
  out.converged = true;
  for (std::size_t l = 0; l < plan.levels.size(); ++l) {
    const Grid3 grid = Grid3::box(data.omega.origin(), data.omega.upper(), plan.levels[l].h);
    const LevelData ld = LevelData::from(data, grid);
    if (l > 0) {
      std::vector<ScalarField> comps;
      for (int c = 0; c < W.n_comp(); ++c) comps.push_back(interp_refine(W[c]));
      W = VecField(std::move(comps));
    }
    impose_dirichlet(W, ld);
    auto r = gd_level(W, ld, cfg, k, plan.levels[l], opt, &out.trace, static_cast<int>(l));
    out.converged = out.converged && r.converged;
    W = std::move(r.W);
    out.per_level.push_back(W);
  }
  out.W = std::move(W);
  return out;
}

} // namespace cvxwave

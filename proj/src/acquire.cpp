#include "cvxwave/acquire.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "cvxwave/error.hpp"
#include "cvxwave/io.hpp"

namespace cvxwave {

namespace {

// Ratio r with level.h = r * fine.h and identical extents; throws otherwise.
int nesting_ratio(const Grid3& fine, const Grid3& level) {
  const double r = level.h() / fine.h();
  const int ri = static_cast<int>(std::lround(r));
  if (ri < 1 || std::abs(r - ri) > 1e-9 * r) throw ConfigError("level grid is not a coarsening of the data grid");
  for (int a = 0; a < 3; ++a) {
    if (std::abs(level.origin()[a] - fine.origin()[a]) > 1e-9 * fine.h() ||
        (level.dims()[a] - 1) * ri != fine.dims()[a] - 1) {
      throw ConfigError("level grid does not share the data grid extents");
    }
  }
  return ri;
}

double interp(std::span<const double> p, double dt, double t) {
  const double s = t / dt;
  auto j = static_cast<std::size_t>(std::floor(s));
  if (j + 1 >= p.size()) {
    if (j + 1 == p.size() && s - static_cast<double>(j) < 1e-9) return p.back();
    throw ConfigError("time_shift: shifted window exceeds the recording");
  }
  const double a = s - static_cast<double>(j);
  return (1.0 - a) * p[j] + a * p[j + 1];
}

std::vector<double> shifted_projection(std::span<const double> u, double dt, double tau,
                                       const PolyBasis& basis) {
  const auto p = double_time_integral(u, dt);
  const auto w = time_shift(p, dt, tau, basis.T1());
  return project_basis(w, dt, basis);
}

} // namespace

double pick_arrival(std::span<const double> trace, double dt, const PickOptions& opt) {
  const std::size_t n = trace.size();
  double gmax = 0.0;
  for (double v : trace) gmax = std::max(gmax, std::abs(v));
  if (!(gmax > 0.0)) throw NumericalError("no arrival: trace is identically zero");
  const double level = opt.threshold * gmax;
  std::size_t first = 0;
  while (first < n && std::abs(trace[first]) < level) ++first;
  std::size_t last = first;
  while (last + 1 < n && std::abs(trace[last + 1]) >= level) ++last;
  std::size_t best = first;
  for (std::size_t j = first; j <= last; ++j)
    if (std::abs(trace[j]) > std::abs(trace[best])) best = j;
  // a maximum at either end of the trace is not a resolved wave
  if (best == 0 || best + 1 == n) throw NumericalError("no arrival: wave maximum at the end of the trace");

  const double cut = opt.fit_fraction * std::abs(trace[best]);
  std::size_t lo = best, hi = best;
  while (lo > 0 && std::abs(trace[lo - 1]) >= cut) --lo;
  while (hi + 1 < n && std::abs(trace[hi + 1]) >= cut) ++hi;
  lo = std::min(lo, best - 1);
  hi = std::max(hi, best + 1);
  // centered least squares |u| ~ a + b s + c s^2, s = (j - best)
  double S[5] = {0, 0, 0, 0, 0}, R[3] = {0, 0, 0};
  for (std::size_t j = lo; j <= hi; ++j) {
    const double sj = static_cast<double>(j) - static_cast<double>(best), y = std::abs(trace[j]);
    double pw = 1.0;
    for (int e = 0; e < 5; ++e) {
      S[e] += pw;
      if (e < 3) R[e] += pw * y;
      pw *= sj;
    }
  }
  const double M[3][3] = {{S[0], S[1], S[2]}, {S[1], S[2], S[3]}, {S[2], S[3], S[4]}};
  auto det3 = [](const double m[3][3]) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  };
  const double d = det3(M);
  double t = dt * static_cast<double>(best);
  if (d != 0.0) {
    double Mb[3][3], Mc[3][3];
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        Mb[r][c] = c == 1 ? R[r] : M[r][c];
        Mc[r][c] = c == 2 ? R[r] : M[r][c];
      }
    const double b = det3(Mb) / d, c = det3(Mc) / d;
    if (c < 0.0) {
      const double s = -b / (2.0 * c);
      // keep the vertex inside the fitted window
      t += dt * std::clamp(s, static_cast<double>(lo) - static_cast<double>(best),
                           static_cast<double>(hi) - static_cast<double>(best));
    }
  }
  return t;
}

std::vector<double> double_time_integral(std::span<const double> u, double dt) {
  if (u.size() < 2) throw ConfigError("double_time_integral: need at least two samples");
  std::vector<double> v(u.size()), p(u.size());
  v[0] = 0.0;
  for (std::size_t j = 1; j < u.size(); ++j) v[j] = v[j - 1] + 0.5 * dt * (u[j - 1] + u[j]);
  p[0] = 0.0;
  for (std::size_t j = 1; j < u.size(); ++j) p[j] = p[j - 1] + 0.5 * dt * (v[j - 1] + v[j]);
  return p;
}

std::vector<double> time_shift(std::span<const double> p, double dt, double tau0, double T1) {
  if (!(tau0 >= 0.0) || !(T1 > 0.0)) throw ConfigError("time_shift: need tau0 >= 0 and T1 > 0");
  const double t_end = dt * static_cast<double>(p.size() - 1);
  if (tau0 + T1 > t_end * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "time_shift: tau0 + T1 = " << tau0 + T1 << " exceeds the recording length " << t_end;
    throw ConfigError(msg.str());
  }
  const auto m = static_cast<std::size_t>(std::lround(T1 / dt));
  std::vector<double> w(m + 1);
  const double p0 = interp(p, dt, tau0);
  for (std::size_t j = 0; j <= m; ++j) w[j] = interp(p, dt, tau0 + dt * static_cast<double>(j)) - p0;
  w[0] = 0.0;
  return w;
}

std::vector<double> project_basis(std::span<const double> w, double dt, const PolyBasis& basis) {
  const std::size_t m = w.size() - 1;
  if (w.size() < 4) throw ConfigError("project_basis: need at least 4 samples");
  // Simpson weights over [0, m'] with m' even; a 3/8 panel closes an odd count
  std::vector<double> wt(w.size(), 0.0);
  const std::size_t ms = (m % 2 == 0) ? m : m - 3;
  for (std::size_t j = 0; j + 2 <= ms; j += 2) {
    wt[j] += dt / 3.0;
    wt[j + 1] += 4.0 * dt / 3.0;
    wt[j + 2] += dt / 3.0;
  }
  if (ms != m) {
    wt[ms] += 3.0 * dt / 8.0;
    wt[ms + 1] += 9.0 * dt / 8.0;
    wt[ms + 2] += 9.0 * dt / 8.0;
    wt[ms + 3] += 3.0 * dt / 8.0;
  }
  std::vector<double> q(static_cast<std::size_t>(basis.N()), 0.0);
  for (int n = 1; n <= basis.N(); ++n) {
    double acc = 0.0;
    for (std::size_t j = 0; j <= m; ++j) acc += wt[j] * w[j] * basis.eval(n, dt * static_cast<double>(j));
    q[static_cast<std::size_t>(n - 1)] = acc;
  }
  return q;
}

std::vector<double> noise_samples(int n_times, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> xi(static_cast<std::size_t>(n_times));
  // 53 random bits mapped onto [-1, 1]; avoids the library-defined distribution classes
  for (auto& x : xi) x = 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0;
  return xi;
}

BoundaryRecording add_noise(const BoundaryRecording& rec, double eps, std::uint64_t seed) {
  if (!std::isfinite(eps)) throw ConfigError("add_noise: eps must be finite");
  BoundaryRecording out = rec;
  if (eps == 0.0) return out;
  const auto xi = noise_samples(rec.n_times, seed);
  const auto nt = static_cast<std::size_t>(rec.n_times);
  auto scale = [&](double* row) {
    for (std::size_t t = 0; t < nt; ++t) row[t] *= 1.0 + eps * xi[t];
  };
  const auto g0 = gamma0_nodes(rec.omega);
  for (std::size_t g = 0; g < g0.size(); ++g) {
    scale(out.f0.data() + out.position(g0[g]) * nt);
    scale(out.f1.data() + g * nt);
    auto [i, j, k] = rec.omega.ijk(g0[g]);
    const std::size_t ij = static_cast<std::size_t>(i) + static_cast<std::size_t>(rec.omega.nx()) * j;
    scale(out.sub1.data() + ij * nt);
    scale(out.sub2.data() + ij * nt);
  }
  return out;
}

double PickedArrivals::at_top(int i, int j, int layer, const BoundaryRecording& rec) const {
  const std::size_t ij = static_cast<std::size_t>(i) + static_cast<std::size_t>(omega.nx()) * j;
  switch (layer) {
    case 0: return tau0[rec.position(omega.index(i, j, omega.nz() - 1))];
    case 1: return top1[ij];
    case 2: return top2[ij];
    default: throw ConfigError("at_top: layer must be 0, 1 or 2");
  }
}

namespace {

void fill_dz(PickedArrivals& a, const BoundaryRecording& rec) {
  const auto g0 = gamma0_nodes(a.omega);
  a.dz_tau0.resize(g0.size());
  const double h = a.omega.h();
  for (std::size_t g = 0; g < g0.size(); ++g) {
    auto [i, j, k] = a.omega.ijk(g0[g]);
    a.dz_tau0[g] = (3.0 * a.at_top(i, j, 0, rec) - 4.0 * a.at_top(i, j, 1, rec) + a.at_top(i, j, 2, rec)) /
                   (2.0 * h);
  }
}

} // namespace

PickedArrivals pick_all(const BoundaryRecording& rec, const PickOptions& opt) {
  PickedArrivals a;
  a.omega = rec.omega;
  a.tau0.resize(rec.n_nodes());
  for (std::size_t p = 0; p < rec.n_nodes(); ++p) a.tau0[p] = pick_arrival(rec.trace(p), rec.dt, opt);
  const int nx = rec.omega.nx(), ny = rec.omega.ny();
  a.top1.resize(static_cast<std::size_t>(nx) * ny);
  a.top2.resize(a.top1.size());
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const std::size_t ij = static_cast<std::size_t>(i) + static_cast<std::size_t>(nx) * j;
      a.top1[ij] = pick_arrival(rec.top_trace(i, j, 1), rec.dt, opt);
      a.top2[ij] = pick_arrival(rec.top_trace(i, j, 2), rec.dt, opt);
    }
  fill_dz(a, rec);
  return a;
}

PickedArrivals arrivals_from_field(const BoundaryRecording& rec, const ScalarField& tau) {
  if (!(tau.grid() == rec.omega)) throw ConfigError("arrivals_from_field: tau must live on the recording grid");
  PickedArrivals a;
  a.omega = rec.omega;
  a.tau0.resize(rec.n_nodes());
  for (std::size_t p = 0; p < rec.n_nodes(); ++p) a.tau0[p] = tau[rec.nodes[p]];
  const int nx = rec.omega.nx(), ny = rec.omega.ny(), K = rec.omega.nz() - 1;
  a.top1.resize(static_cast<std::size_t>(nx) * ny);
  a.top2.resize(a.top1.size());
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const std::size_t ij = static_cast<std::size_t>(i) + static_cast<std::size_t>(nx) * j;
      a.top1[ij] = tau(i, j, K - 1);
      a.top2[ij] = tau(i, j, K - 2);
    }
  fill_dz(a, rec);
  return a;
}

double acquisition_T(const PickedArrivals& arr, double T1) {
  return *std::max_element(arr.tau0.begin(), arr.tau0.end()) + T1;
}

CauchyProjection build_cauchy(const BoundaryRecording& rec, const PickedArrivals& arr,
                              const PolyBasis& basis) {
  if (!(arr.omega == rec.omega) || arr.tau0.size() != rec.n_nodes()) {
    throw ConfigError("build_cauchy: arrivals do not match the recording");
  }
  const double T = acquisition_T(arr, basis.T1());
  if (T > rec.t_end() * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "build_cauchy: max tau0 + T1 = " << T << " exceeds the recording length " << rec.t_end();
    throw ConfigError(msg.str());
  }
  CauchyProjection cp;
  cp.omega = rec.omega;
  cp.source = rec.source;
  cp.N = basis.N();
  cp.T1 = basis.T1();
  cp.nodes = rec.nodes;
  const auto nc = static_cast<std::size_t>(cp.N + 1);
  cp.q0.assign(cp.nodes.size() * nc, 0.0);
  for (std::size_t p = 0; p < cp.nodes.size(); ++p) {
    cp.q0[p * nc] = arr.tau0[p];
    const auto q = shifted_projection(rec.trace(p), rec.dt, arr.tau0[p], basis);
    std::copy(q.begin(), q.end(), cp.q0.begin() + static_cast<std::ptrdiff_t>(p * nc + 1));
  }
  cp.g0 = gamma0_nodes(rec.omega);
  cp.q1.assign(cp.g0.size() * nc, 0.0);
  const double h = rec.omega.h();
  for (std::size_t g = 0; g < cp.g0.size(); ++g) {
    auto [i, j, k] = rec.omega.ijk(cp.g0[g]);
    cp.q1[g * nc] = arr.dz_tau0[g];
    std::array<std::vector<double>, 3> ql;
    for (int layer = 0; layer < 3; ++layer) {
      ql[static_cast<std::size_t>(layer)] =
          shifted_projection(rec.top_trace(i, j, layer), rec.dt, arr.at_top(i, j, layer, rec), basis);
    }
    for (std::size_t n = 0; n < nc - 1; ++n) {
      cp.q1[g * nc + 1 + n] = (3.0 * ql[0][n] - 4.0 * ql[1][n] + ql[2][n]) / (2.0 * h);
    }
  }
  cp.meta = {{"T", T}, {"T1", cp.T1}, {"N", cp.N}, {"basis", basis.to_json()}};
  return cp;
}

VecField CauchyProjection::dirichlet_on(const Grid3& level) const {
  const int r = nesting_ratio(omega, level);
  VecField W(level, N + 1);
  std::vector<std::ptrdiff_t> row(omega.size(), -1);
  for (std::size_t p = 0; p < nodes.size(); ++p) row[nodes[p]] = static_cast<std::ptrdiff_t>(p);
  for (std::size_t n : boundary_nodes(level)) {
    auto [i, j, k] = level.ijk(n);
    const auto p = row[omega.index(i * r, j * r, k * r)];
    if (p < 0) throw ConfigError("dirichlet_on: missing boundary data");
    for (int c = 0; c <= N; ++c) W[c][n] = q0_at(static_cast<std::size_t>(p), c);
  }
  return W;
}

std::vector<double> CauchyProjection::neumann_on(const Grid3& level) const {
  const int r = nesting_ratio(omega, level);
  std::vector<std::ptrdiff_t> row(omega.size(), -1);
  for (std::size_t g = 0; g < g0.size(); ++g) row[g0[g]] = static_cast<std::ptrdiff_t>(g);
  const auto lg0 = gamma0_nodes(level);
  const auto nc = static_cast<std::size_t>(N + 1);
  std::vector<double> out(lg0.size() * nc);
  for (std::size_t g = 0; g < lg0.size(); ++g) {
    auto [i, j, k] = level.ijk(lg0[g]);
    const auto p = row[omega.index(i * r, j * r, k * r)];
    if (p < 0) throw ConfigError("neumann_on: missing Neumann data");
    for (std::size_t c = 0; c < nc; ++c) out[g * nc + c] = q1[static_cast<std::size_t>(p) * nc + c];
  }
  return out;
}

void CauchyProjection::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  nlohmann::json h;
  h["format"] = "cvxwave-cauchy-1";
  h["omega"] = io::grid_to_json(omega);
  h["source"] = source;
  h["N"] = N;
  h["T1"] = T1;
  h["n_boundary"] = nodes.size();
  h["n_gamma0"] = g0.size();
  h["blocks"] = {{{"name", "q0"}, {"rows", nodes.size()}, {"cols", N + 1}, {"offset", 0}},
                 {{"name", "q1"}, {"rows", g0.size()}, {"cols", N + 1}, {"offset", q0.size()}}};
  h["meta"] = meta;
  io::write_json(dir / "cauchy.json", h);
  std::ofstream out(dir / "cauchy.bin", std::ios::binary);
  if (!out) throw InputError("cannot write " + (dir / "cauchy.bin").string());
  io::append_f64(out, q0);
  io::append_f64(out, q1);
}

CauchyProjection CauchyProjection::load(const std::filesystem::path& dir) {
  const auto h = io::read_json(dir / "cauchy.json");
  if (h.value("format", "") != "cvxwave-cauchy-1") {
    throw InputError((dir / "cauchy.json").string() + ": not a Cauchy data header");
  }
  CauchyProjection cp;
  cp.omega = io::grid_from_json(h.at("omega"));
  cp.source = h.at("source").get<Vec3>();
  cp.N = h.at("N").get<int>();
  cp.T1 = h.at("T1").get<double>();
  cp.meta = h.value("meta", nlohmann::json::object());
  cp.nodes = boundary_face_order(cp.omega);
  cp.g0 = gamma0_nodes(cp.omega);
  const auto flat = io::read_f64(dir / "cauchy.bin");
  const auto nc = static_cast<std::size_t>(cp.N + 1);
  if (flat.size() != (cp.nodes.size() + cp.g0.size()) * nc) {
    throw InputError((dir / "cauchy.bin").string() + ": size mismatch");
  }
  cp.q0.assign(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(cp.nodes.size() * nc));
  cp.q1.assign(flat.begin() + static_cast<std::ptrdiff_t>(cp.nodes.size() * nc), flat.end());
  return cp;
}

} // namespace cvxwave

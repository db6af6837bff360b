#include "cvxwave/forward.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include "cvxwave/error.hpp"
#include "cvxwave/io.hpp"

namespace cvxwave {

namespace {

// Face blocks in storage order: z-, z+, y-, y+, x-, x+. A node belongs to the first face it lies on.
int face_of(const Grid3& g, int i, int j, int k) {
  if (k == 0) return 0;
  if (k == g.nz() - 1) return 1;
  if (j == 0) return 2;
  if (j == g.ny() - 1) return 3;
  if (i == 0) return 4;
  if (i == g.nx() - 1) return 5;
  return -1;
}

constexpr const char* face_names[6] = {"z-", "z+", "y-", "y+", "x-", "x+"};

std::vector<std::size_t> face_ordered_nodes(const Grid3& g, std::array<std::size_t, 6>* counts) {
  std::vector<std::size_t> out;
  for (int f = 0; f < 6; ++f) {
    std::size_t before = out.size();
    for (int k = 0; k < g.nz(); ++k)
      for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i)
          if (face_of(g, i, j, k) == f) out.push_back(g.index(i, j, k));
    if (counts) (*counts)[static_cast<std::size_t>(f)] = out.size() - before;
  }
  return out;
}

template <class Fn>
void parallel_slabs(int lo, int hi, int threads, Fn&& fn) {
  const int n = hi - lo + 1;
  if (threads <= 1 || n < 2 * threads) {
    fn(lo, hi);
    return;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    const int a = lo + n * t / threads;
    const int b = lo + n * (t + 1) / threads - 1;
    pool.emplace_back([&fn, a, b] { fn(a, b); });
  }
  for (auto& th : pool) th.join();
}

} // namespace

std::vector<std::size_t> boundary_face_order(const Grid3& omega) {
  return face_ordered_nodes(omega, nullptr);
}

ForwardConfig ForwardConfig::full(double h) {
  ForwardConfig c;
  c.h = h;
  return c;
}

ForwardConfig ForwardConfig::reduced(double h) {
  ForwardConfig c;
  c.box_lo = {-2.0, -2.0, -1.5};
  c.box_hi = {2.0, 2.0, 2.5};
  c.source = {0.0, 0.0, -1.0};
  c.T0 = 2.9;
  c.h = h;
  return c;
}

Grid3 ForwardConfig::box_grid() const { return Grid3::box(box_lo, box_hi, h); }

Grid3 ForwardConfig::omega_grid() const {
  return Grid3::box({-A / 2, -A / 2, 0.0}, {A / 2, A / 2, A}, h);
}

int ForwardConfig::n_times() const { return static_cast<int>(std::lround(T0 / dt)) + 1; }

double ForwardConfig::cfl_limit(double c_min) const {
  return cfl_safety * h * std::sqrt(c_min) / std::sqrt(3.0);
}

void ForwardConfig::validate(double c_min) const {
  if (!(dt > 0.0) || !(T0 > dt) || !(eps_moll > 0.0) || !(A > 0.0)) {
    throw ConfigError("forward: dt, T0, eps_moll and A must be positive with T0 > dt");
  }
  if (!(c_min > 0.0)) throw ConfigError("forward: coefficient must be positive");
  const double limit = cfl_limit(std::min(c_min, 1.0));
  if (dt > limit) {
    std::ostringstream msg;
    msg << "CFL violated: dt=" << dt << " exceeds limit " << limit << " (h=" << h
        << ", c_min=" << c_min << ", safety=" << cfl_safety << ")";
    throw NumericalError(msg.str());
  }
  const Vec3 olo{-A / 2, -A / 2, 0.0}, ohi{A / 2, A / 2, A};
  for (int a = 0; a < 3; ++a) {
    if (!(box_lo[a] < olo[a] && ohi[a] < box_hi[a])) {
      throw ConfigError("forward: Omega must lie strictly inside Omega_f");
    }
  }
  const double r = std::sqrt(eps_moll);
  bool in_box = true, in_omega = true;
  for (int a = 0; a < 3; ++a) {
    in_box = in_box && source[a] - r > box_lo[a] && source[a] + r < box_hi[a];
    in_omega = in_omega && source[a] + r >= olo[a] && source[a] - r <= ohi[a];
  }
  if (!in_box || in_omega) {
    throw ConfigError("forward: source support must lie in Omega_f and away from closed Omega");
  }
  (void)box_grid();
  auto og = omega_grid();
  if (!box_grid().node_at(og.origin())) throw ConfigError("forward: Omega is not aligned with the box grid");
}

nlohmann::json ForwardConfig::to_json() const {
  return {{"box_lo", box_lo},     {"box_hi", box_hi},
          {"source", source},     {"A", A},
          {"eps_moll", eps_moll}, {"dt", dt},
          {"T0", T0},             {"h", h},
          {"cfl_safety", cfl_safety}, {"source_scale", source_scale},
          {"trim_cones", trim_cones}, {"cone_margin", cone_margin},
          {"track_energy", track_energy}, {"energy_every", energy_every},
          {"snapshot_every", snapshot_every}, {"threads", threads}};
}

ForwardConfig ForwardConfig::from_json(const nlohmann::json& j) {
  ForwardConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    const auto& v = it.value();
    if (k == "box_lo") c.box_lo = v.get<Vec3>();
    else if (k == "box_hi") c.box_hi = v.get<Vec3>();
    else if (k == "source") c.source = v.get<Vec3>();
    else if (k == "A") c.A = v.get<double>();
    else if (k == "eps_moll") c.eps_moll = v.get<double>();
    else if (k == "dt") c.dt = v.get<double>();
    else if (k == "T0") c.T0 = v.get<double>();
    else if (k == "h") c.h = v.get<double>();
    else if (k == "cfl_safety") c.cfl_safety = v.get<double>();
    else if (k == "source_scale") c.source_scale = v.get<double>();
    else if (k == "trim_cones") c.trim_cones = v.get<bool>();
    else if (k == "cone_margin") c.cone_margin = v.get<double>();
    else if (k == "track_energy") c.track_energy = v.get<bool>();
    else if (k == "energy_every") c.energy_every = v.get<int>();
    else if (k == "snapshot_every") c.snapshot_every = v.get<int>();
    else if (k == "threads") c.threads = v.get<int>();
    else throw ConfigError("forward config: unknown key '" + k + "'");
  }
  return c;
}

double mollified_delta(const Vec3& x, const Vec3& x0, double eps) {
  const double r2 = (x[0] - x0[0]) * (x[0] - x0[0]) + (x[1] - x0[1]) * (x[1] - x0[1]) +
                    (x[2] - x0[2]) * (x[2] - x0[2]);
  if (!(r2 < eps)) return 0.0;
  return std::exp(-1.0 / (1.0 - r2 / eps)) / eps;
}

std::size_t BoundaryRecording::position(std::size_t omega_index) const {
  if (lookup_.size() != omega.size()) {
    lookup_.assign(omega.size(), -1);
    for (std::size_t p = 0; p < nodes.size(); ++p) lookup_[nodes[p]] = static_cast<std::ptrdiff_t>(p);
  }
  if (omega_index >= lookup_.size() || lookup_[omega_index] < 0) {
    throw ConfigError("recording: node is not on the boundary of Omega");
  }
  return static_cast<std::size_t>(lookup_[omega_index]);
}

std::span<const double> BoundaryRecording::top_trace(int i, int j, int layer) const {
  const auto nt = static_cast<std::size_t>(n_times);
  const std::size_t ij = static_cast<std::size_t>(i) + static_cast<std::size_t>(omega.nx()) * j;
  switch (layer) {
    case 0: return trace(position(omega.index(i, j, omega.nz() - 1)));
    case 1: return {sub1.data() + ij * nt, nt};
    case 2: return {sub2.data() + ij * nt, nt};
    default: throw ConfigError("top_trace: layer must be 0, 1 or 2");
  }
}

void BoundaryRecording::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::array<std::size_t, 6> counts{};
  const auto order = face_ordered_nodes(omega, &counts);
  if (order != nodes) throw ConfigError("recording: node order is not face-block order");

  const auto nt = static_cast<std::size_t>(n_times);
  nlohmann::json blocks = nlohmann::json::array();
  std::size_t offset = 0;
  for (int f = 0; f < 6; ++f) {
    const auto cnt = counts[static_cast<std::size_t>(f)];
    blocks.push_back({{"name", std::string("f0_") + face_names[f]}, {"rows", cnt}, {"cols", nt},
                      {"offset", offset}});
    offset += cnt * nt;
  }
  const std::size_t nxy = sub1.size() / std::max<std::size_t>(nt, 1);
  for (const char* name : {"sub1", "sub2"}) {
    blocks.push_back({{"name", name}, {"rows", nxy}, {"cols", nt}, {"offset", offset}});
    offset += nxy * nt;
  }
  blocks.push_back({{"name", "f1"}, {"rows", f1.size() / std::max<std::size_t>(nt, 1)},
                    {"cols", nt}, {"offset", offset}});

  nlohmann::json header;
  header["format"] = "cvxwave-recording-1";
  header["omega"] = io::grid_to_json(omega);
  header["source"] = source;
  header["dt"] = dt;
  header["n_times"] = n_times;
  header["T0"] = t_end();
  header["blocks"] = blocks;
  header["forward_config"] = config;
  if (!energy.empty()) {
    header["energy_times"] = energy_times;
    header["energy"] = energy;
  }
  io::write_json(dir / "recording.json", header);

  std::ofstream out(dir / "recording.bin", std::ios::binary);
  if (!out) throw InputError("cannot write " + (dir / "recording.bin").string());
  io::append_f64(out, f0);
  io::append_f64(out, sub1);
  io::append_f64(out, sub2);
  io::append_f64(out, f1);
}

BoundaryRecording BoundaryRecording::load(const std::filesystem::path& dir) {
  const auto header = io::read_json(dir / "recording.json");
  if (header.value("format", "") != "cvxwave-recording-1") {
    throw InputError((dir / "recording.json").string() + ": not a recording header");
  }
  BoundaryRecording r;
  r.omega = io::grid_from_json(header.at("omega"));
  r.source = header.at("source").get<Vec3>();
  r.dt = header.at("dt").get<double>();
  r.n_times = header.at("n_times").get<int>();
  r.config = header.value("forward_config", nlohmann::json::object());
  if (header.contains("energy")) {
    r.energy_times = header.at("energy_times").get<std::vector<double>>();
    r.energy = header.at("energy").get<std::vector<double>>();
  }
  r.nodes = face_ordered_nodes(r.omega, nullptr);
  const auto flat = io::read_f64(dir / "recording.bin");
  const auto nt = static_cast<std::size_t>(r.n_times);
  const std::size_t nxy = static_cast<std::size_t>(r.omega.nx()) * r.omega.ny();
  const std::size_t n_g0 = gamma0_nodes(r.omega).size();
  const std::size_t expect = (r.nodes.size() + 2 * nxy + n_g0) * nt;
  if (flat.size() != expect) throw InputError((dir / "recording.bin").string() + ": size mismatch");
  auto it = flat.begin();
  auto take = [&it](std::size_t n) {
    std::vector<double> v(it, it + static_cast<std::ptrdiff_t>(n));
    it += static_cast<std::ptrdiff_t>(n);
    return v;
  };
  r.f0 = take(r.nodes.size() * nt);
  r.sub1 = take(nxy * nt);
  r.sub2 = take(nxy * nt);
  r.f1 = take(n_g0 * nt);
  return r;
}

BoundaryRecording run_forward(const ScalarField& c_omega, const ForwardConfig& cfg) {
  const Grid3 og = cfg.omega_grid();
  if (!(c_omega.grid() == og)) throw ConfigError("forward: coefficient must live on the Omega grid at spacing h");
  c_omega.check_finite("forward coefficient");
  double c_min = 1.0;
  for (double v : c_omega.values()) c_min = std::min(c_min, v);
  cfg.validate(c_min);

  const Grid3 bg = cfg.box_grid();
  const Index3 off = *bg.node_at(og.origin());
  const double h = cfg.h, dt = cfg.dt;
  const double q1 = dt * dt / (h * h);
  std::vector<double> q(og.size());
  for (std::size_t n = 0; n < og.size(); ++n) q[n] = q1 / c_omega[n];

  const std::size_t N = bg.size();
  std::vector<double> prev(N, 0.0), cur(N, 0.0);
  const int nt = cfg.n_times();

  // u^1 = dt * mollified delta
  {
    const double r = std::sqrt(cfg.eps_moll);
    Index3 lo{}, hi{};
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::max(1, static_cast<int>(std::floor((cfg.source[a] - r - bg.origin()[a]) / h)));
      hi[a] = std::min(bg.dims()[a] - 2, static_cast<int>(std::ceil((cfg.source[a] + r - bg.origin()[a]) / h)));
    }
    for (int k = lo[2]; k <= hi[2]; ++k)
      for (int j = lo[1]; j <= hi[1]; ++j)
        for (int i = lo[0]; i <= hi[0]; ++i)
          cur[bg.index(i, j, k)] =
              cfg.source_scale * dt * mollified_delta(bg.coord(i, j, k), cfg.source, cfg.eps_moll);
  }

  BoundaryRecording rec;
  rec.omega = og;
  rec.source = cfg.source;
  rec.dt = dt;
  rec.n_times = nt;
  rec.config = cfg.to_json();
  rec.nodes = face_ordered_nodes(og, nullptr);
  const auto unt = static_cast<std::size_t>(nt);
  rec.f0.assign(rec.nodes.size() * unt, 0.0);
  const std::size_t nxy = static_cast<std::size_t>(og.nx()) * og.ny();
  rec.sub1.assign(nxy * unt, 0.0);
  rec.sub2.assign(nxy * unt, 0.0);
  const auto g0 = gamma0_nodes(og);
  rec.f1.assign(g0.size() * unt, 0.0);

  std::vector<std::size_t> box_of_node(rec.nodes.size());
  for (std::size_t p = 0; p < rec.nodes.size(); ++p) {
    auto [i, j, k] = og.ijk(rec.nodes[p]);
    box_of_node[p] = bg.index(off[0] + i, off[1] + j, off[2] + k);
  }
  const int K = og.nz() - 1;
  auto box_at = [&](int i, int j, int k) { return bg.index(off[0] + i, off[1] + j, off[2] + k); };

  auto record = [&](int step, const std::vector<double>& u) {
    const auto s = static_cast<std::size_t>(step);
    for (std::size_t p = 0; p < rec.nodes.size(); ++p) rec.f0[p * unt + s] = u[box_of_node[p]];
    for (int j = 0; j < og.ny(); ++j)
      for (int i = 0; i < og.nx(); ++i) {
        const std::size_t ij = static_cast<std::size_t>(i) + static_cast<std::size_t>(og.nx()) * j;
        rec.sub1[ij * unt + s] = u[box_at(i, j, K - 1)];
        rec.sub2[ij * unt + s] = u[box_at(i, j, K - 2)];
      }
    for (std::size_t g = 0; g < g0.size(); ++g) {
      auto [i, j, k] = og.ijk(g0[g]);
      rec.f1[g * unt + s] =
          (3.0 * u[box_at(i, j, K)] - 4.0 * u[box_at(i, j, K - 1)] + u[box_at(i, j, K - 2)]) / (2.0 * h);
    }
    if (cfg.snapshot_every > 0 && step % cfg.snapshot_every == 0) {
      ScalarField snap(og);
      for (int k = 0; k < og.nz(); ++k)
        for (int j = 0; j < og.ny(); ++j)
          for (int i = 0; i < og.nx(); ++i) snap(i, j, k) = u[box_at(i, j, k)];
      rec.snapshots.push_back(std::move(snap));
    }
  };

  const double dv = h * h * h;
  // E = sum c ((u_new - u_old)/dt)^2 h^3/2 + sum_edges |grad of the time-average|^2 h^3/2
  auto energy = [&](const std::vector<double>& u_new, const std::vector<double>& u_old) {
    double kin = 0.0, pot = 0.0;
    const std::array<std::size_t, 3> stride{1, static_cast<std::size_t>(bg.nx()),
                                            static_cast<std::size_t>(bg.nx()) * bg.ny()};
    for (int k = 0; k < bg.nz(); ++k)
      for (int j = 0; j < bg.ny(); ++j)
        for (int i = 0; i < bg.nx(); ++i) {
          const std::size_t n = bg.index(i, j, k);
          double c = 1.0;
          const int oi = i - off[0], oj = j - off[1], ok = k - off[2];
          if (oi >= 0 && oj >= 0 && ok >= 0 && oi < og.nx() && oj < og.ny() && ok < og.nz()) {
            c = c_omega(oi, oj, ok);
          }
          const double v = (u_new[n] - u_old[n]) / dt;
          kin += c * v * v;
          const double m = 0.5 * (u_new[n] + u_old[n]);
          const Index3 pos{i, j, k};
          for (int a = 0; a < 3; ++a) {
            if (pos[a] + 1 >= bg.dims()[a]) continue;
            const std::size_t nb = n + stride[a];
            const double d = (0.5 * (u_new[nb] + u_old[nb]) - m) / h;
            pot += d * d;
          }
        }
    return 0.5 * (kin + pot) * dv;
  };

  record(0, prev);
  record(1, cur);

  const Vec3 olo{-cfg.A / 2, -cfg.A / 2, 0.0}, ohi{cfg.A / 2, cfg.A / 2, cfg.A};
  const double src_r = std::sqrt(cfg.eps_moll);
  const std::size_t sy = static_cast<std::size_t>(bg.nx()), sz = sy * static_cast<std::size_t>(bg.ny());

  for (int step = 1; step + 1 < nt; ++step) {
    const double t_next = dt * (step + 1);
    Index3 lo{1, 1, 1}, hi{bg.nx() - 2, bg.ny() - 2, bg.nz() - 2};
    if (cfg.trim_cones) {
      const double widen = cfg.cone_margin + ForwardConfig::kConeCells * h;
      const double r_src = t_next + src_r + widen;
      // energy bookkeeping needs the whole wavefield, so only the source cone is trimmed then
      const double r_dat = cfg.track_energy ? 1e30 : cfg.T0 - t_next + widen;
      for (int a = 0; a < 3; ++a) {
        const double a_lo = std::max(cfg.source[a] - r_src, olo[a] - r_dat);
        const double a_hi = std::min(cfg.source[a] + r_src, ohi[a] + r_dat);
        lo[a] = std::max(lo[a], static_cast<int>(std::floor((a_lo - bg.origin()[a]) / h)));
        hi[a] = std::min(hi[a], static_cast<int>(std::ceil((a_hi - bg.origin()[a]) / h)));
      }
    }
    bool bad = false;
    if (lo[0] <= hi[0] && lo[1] <= hi[1] && lo[2] <= hi[2]) {
      std::vector<char> slab_bad(static_cast<std::size_t>(hi[2] - lo[2] + 1), 0);
      parallel_slabs(lo[2], hi[2], cfg.threads, [&](int k0, int k1) {
        for (int k = k0; k <= k1; ++k) {
          bool any_bad = false;
          const int ok = k - off[2];
          const bool z_in = ok >= 0 && ok < og.nz();
          for (int j = lo[1]; j <= hi[1]; ++j) {
            const int oj = j - off[1];
            const bool row_in = z_in && oj >= 0 && oj < og.ny();
            // split the row into [lo, a) constant, [a, b] inside Omega, (b, hi] constant
            int a = hi[0] + 1, b = hi[0];
            if (row_in) {
              a = std::max(lo[0], off[0]);
              b = std::min(hi[0], off[0] + og.nx() - 1);
              if (a > b) { a = hi[0] + 1; b = hi[0]; }
            }
            const std::size_t base = bg.index(0, j, k);
            auto update = [&](int i, double qq) {
              const std::size_t n = base + static_cast<std::size_t>(i);
              const double lap = cur[n + 1] + cur[n - 1] + cur[n + sy] + cur[n - sy] + cur[n + sz] +
                                 cur[n - sz] - 6.0 * cur[n];
              const double v = 2.0 * cur[n] - prev[n] + qq * lap;
              prev[n] = v;
              any_bad |= !std::isfinite(v);
            };
            for (int i = lo[0]; i < a && i <= hi[0]; ++i) update(i, q1);
            if (a <= b) {
              const double* qrow = q.data() + og.index(0, oj, ok);
              for (int i = a; i <= b; ++i) update(i, qrow[i - off[0]]);
            }
            for (int i = std::max(lo[0], b + 1); i <= hi[0]; ++i) update(i, q1);
          }
          slab_bad[static_cast<std::size_t>(k - lo[2])] = any_bad;
        }
      });
      bad = std::any_of(slab_bad.begin(), slab_bad.end(), [](char c) { return c != 0; });
    }
    if (bad) {
      std::ostringstream msg;
      msg << "forward: non-finite value at step " << step + 1;
      throw NumericalError(msg.str());
    }
    // prev now holds u^{step+1}, cur holds u^{step}
    if (cfg.track_energy && (step % std::max(cfg.energy_every, 1) == 0)) {
      rec.energy_times.push_back(dt * (step + 0.5));
      rec.energy.push_back(energy(prev, cur));
    }
    std::swap(prev, cur);
    record(step + 1, cur);
  }
  return rec;
}

} // namespace cvxwave

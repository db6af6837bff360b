#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "cvxwave/error.hpp"
#include "cvxwave/io.hpp"
#include "cvxwave/verify.hpp"

#ifndef CVXWAVE_VERSION
#define CVXWAVE_VERSION "unknown"
#endif

namespace cvxwave::cli {

namespace {

using Clock = std::chrono::steady_clock;

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

// Records inputs and outputs by name and hash; written last so its presence marks a complete run.
class Manifest {
public:
  Manifest(std::string command, nlohmann::json config)
    : command_(std::move(command)), config_(std::move(config)), t0_(Clock::now()), started_(utc_now()) {}

  void input(const fs::path& p) { inputs_[p.filename().string()] = io::file_hash(p); }
  void inputs_in(const fs::path& dir) {
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file() && e.path().filename() != "manifest.json") input(e.path());
  }

  void timing(nlohmann::json t) { timing_ = std::move(t); }

  void write(const fs::path& dir) const {
    nlohmann::json outs = nlohmann::json::object();
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file() && e.path().filename() != "manifest.json")
        outs[e.path().filename().string()] = io::file_hash(e.path());
    nlohmann::json m;
    m["tool"] = "cvxwave";
    m["version"] = CVXWAVE_VERSION;
    m["command"] = command_;
    m["config"] = config_;
    m["inputs"] = inputs_;
    m["outputs"] = outs;
    m["started"] = started_;
    m["wall_seconds"] = std::chrono::duration<double>(Clock::now() - t0_).count();
    if (!timing_.is_null()) m["timing"] = timing_;
    io::write_json(dir / "manifest.json", m);
  }

private:
  std::string command_;
  nlohmann::json config_;
  std::map<std::string, std::string> inputs_;
  Clock::time_point t0_;
  std::string started_;
  nlohmann::json timing_;
};

void require_dir(const fs::path& p, const char* what) {
  if (!fs::is_directory(p)) throw InputError(std::string(what) + " directory not found: " + p.string());
}

void require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw InputError("missing input: " + p.string());
}

// Stage into a sibling directory and move it into place only once everything is written.
class Staging {
public:
  explicit Staging(fs::path target) : target_(std::move(target)) {
    if (target_.empty()) throw ConfigError("--out is required");
    tmp_ = target_;
    tmp_ += ".partial";
    fs::remove_all(tmp_);
    fs::create_directories(tmp_);
  }
  ~Staging() {
    std::error_code ec;
    if (!done_) fs::remove_all(tmp_, ec);
  }
  const fs::path& dir() const { return tmp_; }
  void commit() {
    fs::remove_all(target_);
    if (target_.has_parent_path()) fs::create_directories(target_.parent_path());
    fs::rename(tmp_, target_);
    done_ = true;
  }

private:
  fs::path target_, tmp_;
  bool done_ = false;
};

Phantom phantom_from_file(const fs::path& p) {
  const auto j = io::read_json(p);
  return make_phantom(j.at("name").get<std::string>(), j.at("smoothing_h").get<double>(), j.value("A", 1.0));
}

void copy_if_exists(const fs::path& from, const fs::path& to) {
  if (fs::is_regular_file(from)) fs::copy_file(from, to, fs::copy_options::overwrite_existing);
}

double range_hi(const Phantom& ph) { return std::max(2.0, ph.peak + 0.5); }

} // namespace

double parse_spacing(const std::string& s) {
  double v = 0.0;
  try {
    const auto slash = s.find('/');
    if (slash == std::string::npos) {
      v = std::stod(s);
    } else {
      v = std::stod(s.substr(0, slash)) / std::stod(s.substr(slash + 1));
    }
  } catch (const std::exception&) {
    throw ConfigError("cannot read spacing '" + s + "'");
  }
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("spacing must be positive: '" + s + "'");
  return v;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("cannot read number '" + item + "' in '" + s + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty list '" + s + "'");
  return out;
}

RunConfig load_config(const std::optional<fs::path>& path) {
  if (!path) return {};
  require_file(*path);
  return RunConfig::from_json(io::read_json(*path));
}

int cmd_phantom(const PhantomArgs& a) {
  const auto fc = a.cfg.forward();
  const Phantom ph = make_phantom(a.cfg.phantom, fc.h, fc.A);
  Manifest man("phantom", a.cfg.to_json());
  Staging st(a.out);
  const auto c = phantom_on_omega(ph, fc);
  auto desc = ph.descriptor;
  desc["A"] = fc.A;
  desc["peak"] = ph.peak;
  io::write_json(st.dir() / "phantom.json", desc);
  io::write_raw(st.dir() / "c", c);
  io::write_vtk(st.dir() / "c.vtk", c, "c");
  write_slices(st.dir() / "c_xz", c, 0.0, range_hi(ph));
  man.write(st.dir());
  st.commit();
  std::cout << "phantom " << ph.name << " on " << c.grid().nx() << "^3 nodes -> " << a.out.string() << "\n";
  return 0;
}

int cmd_simulate(const SimulateArgs& a) {
  const auto fc = a.cfg.forward();
  const Phantom ph = make_phantom(a.cfg.phantom, fc.h, fc.A);
  const auto c = phantom_on_omega(ph, fc);
  double cmin = 1.0;
  for (double v : c.data()) cmin = std::min(cmin, v);
  fc.validate(cmin); // CFL and geometry, before anything is written
  Manifest man("simulate", a.cfg.to_json());
  Staging st(a.out);
  const auto rec = run_forward(c, fc);
  rec.save(st.dir());
  auto desc = ph.descriptor;
  desc["A"] = fc.A;
  desc["peak"] = ph.peak;
  io::write_json(st.dir() / "phantom.json", desc);
  io::write_raw(st.dir() / "c_true", c);
  if (fc.track_energy) {
    std::ofstream e(st.dir() / "energy.csv");
    e << std::setprecision(17) << "t,energy\n";
    for (std::size_t i = 0; i < rec.energy.size(); ++i) e << rec.energy_times[i] << ',' << rec.energy[i] << '\n';
  }
  man.write(st.dir());
  st.commit();
  std::cout << "simulated " << rec.n_times << " steps, " << rec.n_nodes() << " boundary nodes -> " << a.out.string()
            << "\n";
  return 0;
}

int cmd_pick(const PickArgs& a) {
  require_dir(a.in, "recording");
  require_file(a.in / "recording.json");
  const auto rec = BoundaryRecording::load(a.in);
  std::optional<ScalarField> c_true;
  if (a.cfg.acquire.tau == "eikonal") {
    require_file(a.in / "c_true.json");
    c_true = io::read_raw(a.in / "c_true").front();
  }
  Manifest man("pick", a.cfg.to_json());
  man.inputs_in(a.in);
  Staging st(a.out);
  const auto cp = acquire_data(rec, a.cfg.acquire, c_true ? &*c_true : nullptr);
  cp.save(st.dir());
  copy_if_exists(a.in / "phantom.json", st.dir() / "phantom.json");
  man.write(st.dir());
  st.commit();
  double tmax = 0.0;
  for (std::size_t r = 0; r < cp.nodes.size(); ++r) tmax = std::max(tmax, cp.q0_at(r, 0));
  std::cout << "projected " << cp.nodes.size() << " boundary nodes onto N=" << cp.N << ", T1=" << cp.T1
            << " (max tau " << tmax << ") -> " << a.out.string() << "\n";
  return 0;
}

int cmd_invert(const InvertArgs& a) {
  require_dir(a.data, "data");
  require_file(a.data / "cauchy.json");
  const auto data = CauchyProjection::load(a.data);
  if (a.N && *a.N != data.N) {
    std::ostringstream msg;
    msg << "--N " << *a.N << " does not match the data (N = " << data.N << "); re-run pick with --basis " << *a.N
        << "," << data.T1;
    throw ConfigError(msg.str());
  }
  if (!data.meta.contains("forward_config") || !data.meta.contains("acquire"))
    throw InputError(a.data.string() + ": Cauchy data lacks its forward/acquire settings");
  const auto fc = ForwardConfig::from_json(data.meta.at("forward_config"));
  const auto acq = AcquireConfig::from_json(data.meta.at("acquire"));
  RunConfig resolved = a.cfg;
  resolved.acquire = acq;
  auto j = resolved.to_json();
  j["forward_resolved"] = fc.to_json();

  Manifest man("invert", j);
  man.inputs_in(a.data);
  const auto base = baseline_projection(fc, acq);
  Staging st(a.out);
  const auto inv = invert(data, base, a.cfg.objective, a.cfg.optimize);
  const auto& res = inv.result;

  std::vector<ScalarField> comps;
  for (int c = 0; c < res.W.n_comp(); ++c) comps.push_back(res.W[c]);
  io::write_raw(st.dir() / "W", comps);
  io::write_raw(st.dir() / "c", inv.c);
  io::write_vtk(st.dir() / "c.vtk", inv.c, "c");
  res.trace.write_csv(st.dir() / "trace.csv");

  nlohmann::json summary = res.trace.summary();
  summary["converged"] = res.converged;
  summary["J_start"] = inv.J_start;
  summary["amplitude_scale"] = inv.kappa;
  double hi = 2.0;
  if (fs::is_regular_file(a.data / "phantom.json")) {
    const Phantom ph = phantom_from_file(a.data / "phantom.json");
    copy_if_exists(a.data / "phantom.json", st.dir() / "phantom.json");
    const auto rep = metrics(inv.c, ph, 0.3, a.cfg.optimize.c_floor);
    io::write_json(st.dir() / "report.json", rep.to_json());
    hi = range_hi(ph);
  }
  io::write_json(st.dir() / "summary.json", summary);
  write_slices(st.dir() / "c_xz", inv.c, 0.0, hi);
  man.timing(res.trace.summary(true)["levels"]);
  man.write(st.dir());
  st.commit();
  for (const auto& l : res.trace.levels) {
    std::cout << "level h=" << l.h << ": " << l.iterations << " iterations, J " << l.J_start << " -> " << l.J_end
              << ", |grad| " << l.grad_end << (l.converged ? "" : " (unconverged)") << "\n";
  }
  return 0;
}

int cmd_verify_carleman(const CarlemanArgs& a) {
  const Grid3 g = Grid3::box({-0.5, -0.5, 0.0}, {0.5, 0.5, 1.0}, a.h);
  nlohmann::json cfg = {{"h", a.h},         {"lambdas", a.lambdas}, {"samples", a.samples},       {"seed", a.seed},
                        {"b", a.b},         {"floor", a.floor},     {"max_collapse", a.max_collapse}};
  Manifest man("verify carleman", cfg);
  Staging st(a.out);
  const auto rep = carleman_sweep(g, a.lambdas, a.samples, a.seed, a.b, a.floor, a.max_collapse);
  io::write_json(st.dir() / "carleman.json", rep.to_json());
  std::ofstream(st.dir() / "carleman.txt") << rep.text();
  man.write(st.dir());
  st.commit();
  std::cout << rep.text();
  return 0;
}

int cmd_verify_convexity(const ConvexityArgs& a) {
  require_dir(a.data, "data");
  require_file(a.data / "cauchy.json");
  const auto data_in = CauchyProjection::load(a.data);
  if (!data_in.meta.contains("forward_config") || !data_in.meta.contains("acquire"))
    throw InputError(a.data.string() + ": Cauchy data lacks its forward/acquire settings");
  const auto fc = ForwardConfig::from_json(data_in.meta.at("forward_config"));
  const auto acq = AcquireConfig::from_json(data_in.meta.at("acquire"));
  a.cfg.objective.validate(data_in.omega.upper()[2] - data_in.omega.origin()[2]);
  auto j = a.cfg.to_json();
  j["verify"] = {{"h", a.h}, {"pairs", a.pairs}, {"seed", a.seed}, {"perturbation", a.perturbation}, {"floor", a.floor}};
  Manifest man("verify convexity", j);
  man.inputs_in(a.data);
  const double kappa = amplitude_scale(data_in, a.cfg.optimize);
  const auto data = scale_amplitude(data_in, kappa);
  const auto base = scale_amplitude(baseline_projection(fc, acq), kappa);
  const Grid3 g = Grid3::box(data.omega.origin(), data.omega.upper(), a.h);
  const SystemCoeffs k(PolyBasis(data.T1, data.N), a.cfg.optimize.m_floor);
  const auto start = baseline_start(g, base, data, a.cfg.optimize.baseline);
  Staging st(a.out);
  const auto rep = convexity_probe(start, LevelData::from(data, g), a.cfg.objective, k, a.pairs, a.seed,
                                   a.perturbation, a.floor);
  io::write_json(st.dir() / "convexity.json", rep.to_json());
  std::ofstream(st.dir() / "convexity.txt") << rep.text();
  man.write(st.dir());
  st.commit();
  std::cout << rep.text();
  return 0;
}

int cmd_report(const ReportArgs& a) {
  require_dir(a.run, "run");
  require_file(a.run / "summary.json");
  const auto summary = io::read_json(a.run / "summary.json");
  std::optional<nlohmann::json> rep;
  if (fs::is_regular_file(a.run / "report.json")) rep = io::read_json(a.run / "report.json");

  std::ostringstream txt;
  txt << std::setprecision(6);
  txt << "run: " << a.run.string() << "\n";
  if (fs::is_regular_file(a.run / "phantom.json")) {
    const auto ph = io::read_json(a.run / "phantom.json");
    txt << "phantom: " << ph.value("name", "?") << " (peak c " << ph.value("peak", 0.0) << ")\n";
  }
  txt << "converged: " << (summary.value("converged", false) ? "yes" : "no") << "\n";
  if (summary.contains("levels")) {
    for (const auto& l : summary["levels"]) {
      txt << "  level h=" << l.value("h", 0.0) << "  iterations " << l.value("iterations", 0) << "  J "
          << l.value("J_start", 0.0) << " -> " << l.value("J_end", 0.0) << "  |grad| " << l.value("grad_end", 0.0)
          << "\n";
    }
  }
  std::ostringstream csv;
  csv << std::setprecision(10) << "metric,value\n";
  if (rep) {
    const auto& r = *rep;
    txt << "max computed c in inclusion: " << r.value("max_c", 0.0) << "\n";
    txt << "inclusion centre: (" << r["com"][0].get<double>() << ", " << r["com"][1].get<double>() << ", "
        << r["com"][2].get<double>() << "), true (" << r["true_com"][0].get<double>() << ", "
        << r["true_com"][1].get<double>() << ", " << r["true_com"][2].get<double>() << ")\n";
    txt << "centre offset: " << (r["com_offset"].is_null() ? std::string("none detected") : std::to_string(r["com_offset"].get<double>())) << "\n";
    txt << "range over phantom support: [" << r.value("support_min", 0.0) << ", " << r.value("support_max", 0.0)
        << "]\n";
    txt << "relative L2 error: " << r.value("rel_l2", 0.0) << "\n";
    txt << "nodes clamped at c_floor: " << r.value("clamped", 0) << "\n";
    for (const char* key : {"max_c", "min_c", "com_offset", "support_min", "support_max", "rel_l2", "mask_nodes",
                            "clamped", "threshold"}) {
      csv << key << ',';
      if (r.contains(key) && !r[key].is_null()) csv << r[key].dump();
      csv << '\n';
    }
  } else {
    txt << "no phantom alongside the data; reconstruction metrics skipped\n";
  }
  const fs::path out = a.out.value_or(a.run / "report.txt");
  {
    std::ofstream f(out);
    if (!f) throw InputError("cannot write " + out.string());
    f << txt.str();
  }
  {
    auto csv_path = out;
    csv_path.replace_extension(".csv");
    std::ofstream f(csv_path);
    f << csv.str();
  }
  std::cout << txt.str();
  return 0;
}

} // namespace cvxwave::cli

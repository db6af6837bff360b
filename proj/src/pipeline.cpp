#include "cvxwave/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "cvxwave/eikonal.hpp"
#include "cvxwave/error.hpp"

namespace cvxwave {

nlohmann::json AcquireConfig::to_json() const {
  return {{"N", N}, {"T1", T1}, {"threshold", pick.threshold}, {"fit_fraction", pick.fit_fraction}, {"noise", noise}, {"seed", seed}, {"tau", tau}};
}

AcquireConfig AcquireConfig::from_json(const nlohmann::json& j) {
  AcquireConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    if (k == "N") c.N = it->get<int>();
    else if (k == "T1") c.T1 = it->get<double>();
    else if (k == "threshold") c.pick.threshold = it->get<double>();
    else if (k == "fit_fraction") c.pick.fit_fraction = it->get<double>();
    else if (k == "noise") c.noise = it->get<double>();
    else if (k == "seed") c.seed = it->get<std::uint64_t>();
    else if (k == "tau") c.tau = it->get<std::string>();
    else throw ConfigError("acquire config: unknown key '" + k + "'");
  }
  if (c.tau != "pick" && c.tau != "eikonal") throw ConfigError("acquire config: tau must be pick or eikonal");
  if (!(c.pick.threshold > 0.0 && c.pick.threshold <= 1.0)) throw ConfigError("acquire config: threshold must lie in (0, 1]");
  if (!(c.pick.fit_fraction >= 0.0 && c.pick.fit_fraction < 1.0)) throw ConfigError("acquire config: fit_fraction must lie in [0, 1)");
  if (!(c.noise >= 0.0)) throw ConfigError("acquire config: noise must be non-negative");
  return c;
}

nlohmann::json OptimizeConfig::to_json() const {
  return {{"levels", plan.to_json()},
          {"gamma0", gd.gamma0},
          {"armijo_c", gd.armijo_c},
          {"max_halvings", gd.max_halvings},
          {"project", gd.project},
          {"warm_step", gd.warm_step},
          {"l2_metric", gd.l2_metric},
          {"blend", baseline.blend},
          {"m_floor", m_floor},
          {"c_floor", c_floor},
          {"normalize_amplitude", normalize_amplitude}};
}

OptimizeConfig OptimizeConfig::from_json(const nlohmann::json& j) {
  OptimizeConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    if (k == "levels") {
      if (it->is_string()) {
        c.plan = MultilevelPlan::parse(it->get<std::string>());
      } else {
        c.plan.levels.clear();
        for (const auto& l : *it) {
          LevelPlan lp;
          for (auto jt = l.begin(); jt != l.end(); ++jt) {
            if (jt.key() == "h") lp.h = jt->get<double>();
            else if (jt.key() == "tol") lp.tol = jt->get<double>();
            else if (jt.key() == "max_iter") lp.max_iter = jt->get<int>();
            else throw ConfigError("levels: unknown key '" + jt.key() + "'");
          }
          c.plan.levels.push_back(lp);
        }
        c.plan.validate();
      }
    } else if (k == "gamma0") c.gd.gamma0 = it->get<double>();
    else if (k == "armijo_c") c.gd.armijo_c = it->get<double>();
    else if (k == "max_halvings") c.gd.max_halvings = it->get<int>();
    else if (k == "project") c.gd.project = it->get<bool>();
    else if (k == "warm_step") c.gd.warm_step = it->get<bool>();
    else if (k == "l2_metric") c.gd.l2_metric = it->get<bool>();
    else if (k == "blend") c.baseline.blend = it->get<bool>();
    else if (k == "m_floor") c.m_floor = it->get<double>();
    else if (k == "c_floor") c.c_floor = it->get<double>();
    else if (k == "normalize_amplitude") c.normalize_amplitude = it->get<bool>();
    else throw ConfigError("optimize config: unknown key '" + k + "'");
  }
  return c;
}

ForwardConfig RunConfig::forward() const {
  ForwardConfig fc;
  if (preset == "full") fc = ForwardConfig::full(h);
  else if (preset == "reduced") fc = ForwardConfig::reduced(h);
  else throw ConfigError("preset must be full or reduced");
  auto j = fc.to_json();
  for (auto it = forward_overrides.begin(); it != forward_overrides.end(); ++it) {
    if (!j.contains(it.key())) throw ConfigError("forward config: unknown key '" + it.key() + "'");
    j[it.key()] = *it;
  }
  j["threads"] = threads;
  fc = ForwardConfig::from_json(j);
  return fc;
}

nlohmann::json RunConfig::to_json() const {
  return {{"preset", preset},
          {"phantom", phantom},
          {"h", h},
          {"forward", forward_overrides},
          {"acquire", acquire.to_json()},
          {"objective", objective.to_json()},
          {"optimize", optimize.to_json()},
          {"threads", threads}};
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    if (k == "preset") c.preset = it->get<std::string>();
    else if (k == "phantom") c.phantom = it->get<std::string>();
    else if (k == "h") c.h = it->get<double>();
    else if (k == "forward") c.forward_overrides = *it;
    else if (k == "acquire") c.acquire = AcquireConfig::from_json(*it);
    else if (k == "objective") c.objective = ObjectiveConfig::from_json(*it);
    else if (k == "optimize") c.optimize = OptimizeConfig::from_json(*it);
    else if (k == "threads") c.threads = it->get<int>();
    else throw ConfigError("config: unknown key '" + k + "'");
  }
  (void)c.forward();
  return c;
}

ScalarField phantom_on_omega(const Phantom& ph, const ForwardConfig& fc) { return ph.sample(fc.omega_grid()); }

BoundaryRecording simulate(const Phantom& ph, const ForwardConfig& fc) {
  auto rec = run_forward(phantom_on_omega(ph, fc), fc);
  return rec;
}

ScalarField eikonal_tau_on_omega(const ScalarField& c_omega, const ForwardConfig& fc) {
  const Grid3 og = fc.omega_grid();
  if (!(c_omega.grid() == og)) throw ConfigError("eikonal: coefficient must live on the Omega grid");
  const double h = fc.h;
  // lateral margin of one unit around Omega and half a unit beyond the source and the top face
  auto snap_lo = [&](double v, int a) { return og.origin()[static_cast<std::size_t>(a)] - h * std::ceil((og.origin()[static_cast<std::size_t>(a)] - v) / h - 1e-9); };
  auto snap_hi = [&](double v, int a) { return og.upper()[static_cast<std::size_t>(a)] + h * std::ceil((v - og.upper()[static_cast<std::size_t>(a)]) / h - 1e-9); };
  Vec3 lo{}, hi{};
  for (int a = 0; a < 3; ++a) {
    const auto ua = static_cast<std::size_t>(a);
    const double l = std::min(og.origin()[ua] - 1.0, fc.source[ua] - 0.5);
    const double u = std::max(og.upper()[ua] + (a == 2 ? 0.5 : 1.0), fc.source[ua] + 0.5);
    lo[ua] = snap_lo(l, a);
    hi[ua] = snap_hi(u, a);
  }
  const Grid3 box = Grid3::box(lo, hi, h);
  const Index3 off = *box.node_at(og.origin());
  ScalarField c(box, 1.0);
  for (int k = 0; k < og.nz(); ++k)
    for (int j = 0; j < og.ny(); ++j)
      for (int i = 0; i < og.nx(); ++i) c(off[0] + i, off[1] + j, off[2] + k) = c_omega(i, j, k);
  const auto tt = fast_sweep(c, fc.source);
  ScalarField tau(og);
  for (int k = 0; k < og.nz(); ++k)
    for (int j = 0; j < og.ny(); ++j)
      for (int i = 0; i < og.nx(); ++i) tau(i, j, k) = tt.tau(off[0] + i, off[1] + j, off[2] + k);
  return tau;
}

CauchyProjection acquire_data(const BoundaryRecording& rec_in, const AcquireConfig& cfg, const ScalarField* c_true) {
  const PolyBasis basis(cfg.T1, cfg.N);
  const BoundaryRecording rec = cfg.noise > 0.0 ? add_noise(rec_in, cfg.noise, cfg.seed) : rec_in;
  PickedArrivals arr;
  if (cfg.tau == "eikonal") {
    if (!c_true) throw ConfigError("acquire: eikonal travel times need the true coefficient");
    const auto fc = ForwardConfig::from_json(rec.config);
    arr = arrivals_from_field(rec, eikonal_tau_on_omega(*c_true, fc));
  } else {
    arr = pick_all(rec, cfg.pick);
  }
  auto cp = build_cauchy(rec, arr, basis);
  cp.meta["acquire"] = cfg.to_json();
  cp.meta["forward_config"] = rec_in.config;
  return cp;
}

CauchyProjection baseline_projection(const ForwardConfig& fc, const AcquireConfig& cfg) {
  const ScalarField one(fc.omega_grid(), 1.0);
  const auto rec = run_forward(one, fc);
  AcquireConfig clean = cfg;
  clean.noise = 0.0;
  return acquire_data(rec, clean, &one);
}

double median_boundary_amplitude(const CauchyProjection& cp, const SystemCoeffs& k) {
  std::vector<double> S(cp.nodes.size());
  const auto nc = static_cast<std::size_t>(cp.N + 1);
  for (std::size_t r = 0; r < cp.nodes.size(); ++r) {
    S[r] = amplitude(std::span<const double>(cp.q0.data() + r * nc + 1, nc - 1), k);
  }
  auto mid = S.begin() + static_cast<std::ptrdiff_t>(S.size() / 2);
  std::nth_element(S.begin(), mid, S.end());
  return *mid;
}

CauchyProjection scale_amplitude(const CauchyProjection& cp, double kappa) {
  CauchyProjection out = cp;
  const auto nc = static_cast<std::size_t>(cp.N + 1);
  for (std::size_t i = 0; i < out.q0.size(); ++i)
    if (i % nc) out.q0[i] *= kappa;
  for (std::size_t i = 0; i < out.q1.size(); ++i)
    if (i % nc) out.q1[i] *= kappa;
  out.meta["amplitude_scale"] = kappa;
  return out;
}

double amplitude_scale(const CauchyProjection& data, const OptimizeConfig& cfg) {
  if (!cfg.normalize_amplitude) return 1.0;
  const SystemCoeffs k(PolyBasis(data.T1, data.N), cfg.m_floor);
  const double med = median_boundary_amplitude(data, k);
  if (!(med > 0.0)) throw NumericalError("median boundary amplitude is not positive; check the picks");
  return 1.0 / med;
}

InversionOutput invert(const CauchyProjection& data_in, const CauchyProjection& baseline_in,
                       const ObjectiveConfig& ocfg, const OptimizeConfig& cfg) {
  ocfg.validate(data_in.omega.upper()[2] - data_in.omega.origin()[2]);
  const PolyBasis basis(data_in.T1, data_in.N);
  const SystemCoeffs k(basis, cfg.m_floor);
  InversionOutput out;
  out.kappa = amplitude_scale(data_in, cfg);
  const auto data = scale_amplitude(data_in, out.kappa);
  const auto baseline = scale_amplitude(baseline_in, out.kappa);
  const Grid3 coarse = Grid3::box(data.omega.origin(), data.omega.upper(), cfg.plan.levels.front().h);
  out.start = baseline_start(coarse, baseline, data, cfg.baseline);
  out.J_start = eval_J(out.start, LevelData::from(data, coarse), ocfg, k);
  out.result = multilevel(out.start, data, cfg.plan, ocfg, k, cfg.gd);
  out.c = c_from_tau(out.result.W.tau());
  return out;
}

ScenarioOutput run_scenario(const RunConfig& cfg) {
  const ForwardConfig fc = cfg.forward();
  const Phantom ph = make_phantom(cfg.phantom, fc.h, fc.A);
  const ScalarField c_true = phantom_on_omega(ph, fc);
  const auto rec = run_forward(c_true, fc);
  ScenarioOutput out;
  out.data = acquire_data(rec, cfg.acquire, &c_true);
  const auto base = baseline_projection(fc, cfg.acquire);
  out.inversion = invert(out.data, base, cfg.objective, cfg.optimize);
  out.report = metrics(out.inversion.c, ph, 0.3, cfg.optimize.c_floor);
  return out;
}

} // namespace cvxwave

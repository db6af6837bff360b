#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "cvxwave/error.hpp"

using namespace cvxwave;
using namespace cvxwave::cli;

namespace {

// Flags left unset keep the value from --config (or the built-in default).
template <class T>
void set_if(const std::optional<T>& flag, T& target) {
  if (flag) target = *flag;
}

struct Common {
  std::optional<std::string> config;
  std::optional<int> threads;

  RunConfig load() const {
    RunConfig c = load_config(config ? std::optional<fs::path>(*config) : std::nullopt);
    set_if(threads, c.threads);
    return c;
  }
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON run configuration; flags override it");
  sub->add_option("--threads", c.threads, "worker threads");
}

struct GeometryFlags {
  std::optional<std::string> preset, h, phantom;
  void add(CLI::App* sub, const char* phantom_flag) {
    sub->add_option("--preset", preset, "forward geometry: full or reduced");
    sub->add_option("--h", h, "grid spacing, e.g. 1/16");
    sub->add_option(phantom_flag, phantom, "phantom name (test1..test6)");
  }
  void apply_to(RunConfig& c) const {
    set_if(preset, c.preset);
    set_if(phantom, c.phantom);
    if (h) c.h = parse_spacing(*h);
  }
};

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convexification inversion for c(x) u_tt = Lap u from single-source boundary data"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(CVXWAVE_VERSION));

  // phantom
  Common ph_common;
  GeometryFlags ph_geo;
  std::string ph_out;
  auto* ph = app.add_subcommand("phantom", "sample a test coefficient on Omega");
  add_common(ph, ph_common);
  ph_geo.add(ph, "--name");
  ph->add_option("--out", ph_out, "output directory")->required();

  // simulate
  Common sim_common;
  GeometryFlags sim_geo;
  std::string sim_out;
  std::optional<double> sim_dt, sim_T0;
  bool sim_energy = false, sim_no_trim = false;
  auto* sim = app.add_subcommand("simulate", "run the forward solver and record boundary traces");
  add_common(sim, sim_common);
  sim_geo.add(sim, "--phantom");
  sim->add_option("--dt", sim_dt, "time step");
  sim->add_option("--T0", sim_T0, "final time");
  sim->add_flag("--energy", sim_energy, "record the discrete energy");
  sim->add_flag("--no-trim", sim_no_trim, "update every node, also outside the light cones");
  sim->add_option("--out", sim_out, "output directory")->required();

  // pick
  Common pk_common;
  std::string pk_in, pk_out;
  std::optional<std::string> pk_basis, pk_tau;
  std::optional<double> pk_noise, pk_threshold, pk_fit;
  std::optional<std::uint64_t> pk_seed;
  auto* pk = app.add_subcommand("pick", "arrival times and polynomial projections of a recording");
  add_common(pk, pk_common);
  pk->add_option("--in", pk_in, "recording directory")->required();
  pk->add_option("--basis", pk_basis, "N,T1 (default 3,0.1)");
  pk->add_option("--noise", pk_noise, "multiplicative noise level on the top face");
  pk->add_option("--seed", pk_seed, "noise seed");
  pk->add_option("--tau", pk_tau, "travel times from 'pick' or the 'eikonal' oracle");
  pk->add_option("--threshold", pk_threshold, "first-wave threshold as a fraction of the trace maximum");
  pk->add_option("--fit-fraction", pk_fit, "samples above this fraction of the peak enter the vertex fit");
  pk->add_option("--out", pk_out, "output directory")->required();

  // invert
  Common inv_common;
  std::string inv_data, inv_out;
  std::optional<std::string> inv_levels;
  std::optional<int> inv_N, inv_max_iter;
  std::optional<double> inv_lambda, inv_tol, inv_sigma, inv_beta, inv_b, inv_gamma, inv_mfloor, inv_cfloor;
  bool inv_warm = false, inv_l2 = false, inv_raw = false, inv_no_blend = false, inv_project = false;
  auto* inv = app.add_subcommand("invert", "multilevel minimization of the weighted functional");
  add_common(inv, inv_common);
  inv->add_option("--data", inv_data, "directory written by pick")->required();
  inv->add_option("--levels", inv_levels, "mesh sequence, e.g. 1/8,1/16");
  inv->add_option("--N", inv_N, "number of basis functions (must match the data)");
  inv->add_option("--lambda", inv_lambda, "Carleman weight parameter");
  inv->add_option("--tol", inv_tol, "per-level gradient-norm tolerance");
  inv->add_option("--max-iter", inv_max_iter, "per-level iteration cap");
  inv->add_option("--sigma-N", inv_sigma, "Neumann penalty weight");
  inv->add_option("--beta", inv_beta, "second-difference smoothing weight");
  inv->add_option("--b", inv_b, "weight shift b in exp(2 lambda (z+b)^2)");
  inv->add_option("--gamma0", inv_gamma, "first trial step");
  inv->add_option("--m-floor", inv_mfloor, "amplitude floor");
  inv->add_option("--c-floor", inv_cfloor, "lower clamp for the reported c");
  inv->add_flag("--warm-step", inv_warm, "start each line search from twice the last step");
  inv->add_flag("--l2-metric", inv_l2, "step along grad / h^3");
  inv->add_flag("--raw-amplitude", inv_raw, "do not rescale the w data to unit median amplitude");
  inv->add_flag("--no-blend", inv_no_blend, "overwrite the start's boundary instead of blending");
  inv->add_flag("--project", inv_project, "project onto amplitude >= m_floor after each step");
  inv->add_option("--out", inv_out, "output directory")->required();

  // verify
  auto* ver = app.add_subcommand("verify", "property probes");
  ver->require_subcommand(1);
  CarlemanArgs ca;
  std::string ca_h = "1/16", ca_lambdas = "4,8,16", ca_out;
  auto* car = ver->add_subcommand("carleman", "Carleman ratio sweep over admissible samples");
  car->add_option("--h", ca_h, "grid spacing");
  car->add_option("--lambdas", ca_lambdas, "comma-separated lambda values");
  car->add_option("--samples", ca.samples, "samples per lambda");
  car->add_option("--seed", ca.seed, "first sample seed");
  car->add_option("--b", ca.b, "weight shift");
  car->add_option("--floor", ca.floor, "minimum acceptable ratio");
  car->add_option("--max-collapse", ca.max_collapse, "largest allowed relative drop across the sweep");
  car->add_option("--out", ca_out, "output directory")->required();

  Common cv_common;
  ConvexityArgs cv;
  std::string cv_h = "1/8", cv_data, cv_out;
  std::optional<double> cv_lambda;
  auto* cvx = ver->add_subcommand("convexity", "Bregman gaps between feasible pairs");
  add_common(cvx, cv_common);
  cvx->add_option("--data", cv_data, "directory written by pick")->required();
  cvx->add_option("--h", cv_h, "mesh spacing of the probe");
  cvx->add_option("--pairs", cv.pairs, "number of pairs");
  cvx->add_option("--seed", cv.seed, "seed");
  cvx->add_option("--lambda", cv_lambda, "Carleman weight parameter");
  cvx->add_option("--perturbation", cv.perturbation, "perturbation size relative to each component");
  cvx->add_option("--out", cv_out, "output directory")->required();

  // report
  ReportArgs ra;
  std::string ra_run;
  std::optional<std::string> ra_out;
  auto* rep = app.add_subcommand("report", "text/CSV summary of an invert run");
  rep->add_option("--run", ra_run, "directory written by invert")->required();
  rep->add_option("--out", ra_out, "text report path (default <run>/report.txt)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*ph) {
      PhantomArgs a{ph_common.load(), ph_out};
      ph_geo.apply_to(a.cfg);
      return cmd_phantom(a);
    }
    if (*sim) {
      SimulateArgs a{sim_common.load(), sim_out};
      sim_geo.apply_to(a.cfg);
      if (sim_dt) a.cfg.forward_overrides["dt"] = *sim_dt;
      if (sim_T0) a.cfg.forward_overrides["T0"] = *sim_T0;
      if (sim_energy) a.cfg.forward_overrides["track_energy"] = true;
      if (sim_no_trim) a.cfg.forward_overrides["trim_cones"] = false;
      return cmd_simulate(a);
    }
    if (*pk) {
      PickArgs a{pk_common.load(), pk_in, pk_out};
      auto& q = a.cfg.acquire;
      if (pk_basis) {
        const auto v = parse_list(*pk_basis);
        if (v.size() != 2) throw ConfigError("--basis expects N,T1");
        q.N = static_cast<int>(v[0]);
        if (static_cast<double>(q.N) != v[0]) throw ConfigError("--basis: N must be an integer");
        q.T1 = v[1];
      }
      set_if(pk_noise, q.noise);
      set_if(pk_seed, q.seed);
      set_if(pk_tau, q.tau);
      set_if(pk_threshold, q.pick.threshold);
      set_if(pk_fit, q.pick.fit_fraction);
      a.cfg.acquire = AcquireConfig::from_json(q.to_json()); // range checks
      return cmd_pick(a);
    }
    if (*inv) {
      InvertArgs a{inv_common.load(), inv_data, inv_out, inv_N};
      auto& o = a.cfg.optimize;
      auto& j = a.cfg.objective;
      const double tol = inv_tol.value_or(o.plan.levels.front().tol);
      const int max_iter = inv_max_iter.value_or(o.plan.levels.front().max_iter);
      if (inv_levels) {
        o.plan = MultilevelPlan::parse(*inv_levels, tol, max_iter);
      } else {
        for (auto& l : o.plan.levels) {
          if (inv_tol) l.tol = tol;
          if (inv_max_iter) l.max_iter = max_iter;
        }
        o.plan.validate();
      }
      set_if(inv_lambda, j.lambda);
      set_if(inv_sigma, j.sigma_N);
      set_if(inv_beta, j.beta);
      set_if(inv_b, j.b);
      set_if(inv_gamma, o.gd.gamma0);
      set_if(inv_mfloor, o.m_floor);
      set_if(inv_cfloor, o.c_floor);
      if (inv_warm) o.gd.warm_step = true;
      if (inv_l2) o.gd.l2_metric = true;
      if (inv_raw) o.normalize_amplitude = false;
      if (inv_no_blend) o.baseline.blend = false;
      if (inv_project) o.gd.project = true;
      a.cfg.optimize = OptimizeConfig::from_json(o.to_json());
      a.cfg.objective = ObjectiveConfig::from_json(j.to_json());
      return cmd_invert(a);
    }
    if (*car) {
      ca.h = parse_spacing(ca_h);
      ca.lambdas = parse_list(ca_lambdas);
      ca.out = ca_out;
      return cmd_verify_carleman(ca);
    }
    if (*cvx) {
      cv.cfg = cv_common.load();
      set_if(cv_lambda, cv.cfg.objective.lambda);
      cv.h = parse_spacing(cv_h);
      cv.data = cv_data;
      cv.out = cv_out;
      return cmd_verify_convexity(cv);
    }
    if (*rep) {
      ra.run = ra_run;
      if (ra_out) ra.out = fs::path(*ra_out);
      return cmd_report(ra);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const InfeasibleError& e) {
    std::cerr << "numerical failure: " << e.what() << " (node " << e.node() << ")\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const InputError& e) {
    std::cerr << "missing input: " << e.what() << "\n";
    return 4;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "missing input: " << e.what() << "\n";
    return 4;
  }
  return 0;
}

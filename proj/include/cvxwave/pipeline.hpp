#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "cvxwave/acquire.hpp"
#include "cvxwave/forward.hpp"
#include "cvxwave/objective.hpp"
#include "cvxwave/optimize.hpp"
#include "cvxwave/recon.hpp"

namespace cvxwave {

struct AcquireConfig {
  int N = 3;
  double T1 = 0.1;
  PickOptions pick;
  double noise = 0.0;
  std::uint64_t seed = 7;
  std::string tau = "pick"; ///< "pick" or "eikonal"

  nlohmann::json to_json() const;
  static AcquireConfig from_json(const nlohmann::json& j);
};

struct OptimizeConfig {
  MultilevelPlan plan = MultilevelPlan::parse("1/8,1/16");
  GDOptions gd;
  BaselineOptions baseline;
  double m_floor = 0.01;
  double c_floor = 0.1;
  /// Rescale (w_1..w_N) data so that the median boundary amplitude is 1 before minimizing.
  bool normalize_amplitude = true;

  nlohmann::json to_json() const;
  static OptimizeConfig from_json(const nlohmann::json& j);
};

/// Everything one end-to-end run needs. Unknown keys are rejected when reading.
struct RunConfig {
  std::string preset = "full"; ///< "full" or "reduced" forward geometry
  std::string phantom = "test1";
  double h = 1.0 / 16.0;       ///< forward (data) spacing
  nlohmann::json forward_overrides = nlohmann::json::object();
  AcquireConfig acquire;
  ObjectiveConfig objective;
  OptimizeConfig optimize;
  int threads = 1;

  ForwardConfig forward() const;
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

/// Phantom sampled on the Omega grid of the forward configuration (ramp width = its h).
ScalarField phantom_on_omega(const Phantom& ph, const ForwardConfig& fc);

BoundaryRecording simulate(const Phantom& ph, const ForwardConfig& fc);

/// Eikonal travel times on the Omega grid for coefficient c_omega (c = 1 elsewhere), computed on
/// a box spanning Omega and the source.
ScalarField eikonal_tau_on_omega(const ScalarField& c_omega, const ForwardConfig& fc);

/// Picks or eikonal times (per cfg.tau; eikonal needs the true coefficient), then projections.
CauchyProjection acquire_data(const BoundaryRecording& rec, const AcquireConfig& cfg,
                              const ScalarField* c_true = nullptr);

/// Median of sum_n s_n q_n over the boundary rows of q0.
double median_boundary_amplitude(const CauchyProjection& cp, const SystemCoeffs& k);

/// Copy with components 1..N of q0 and q1 multiplied by kappa (tau rows untouched).
CauchyProjection scale_amplitude(const CauchyProjection& cp, double kappa);

/// 1 / median_boundary_amplitude(data) when cfg.normalize_amplitude is set, else 1.
double amplitude_scale(const CauchyProjection& data, const OptimizeConfig& cfg);

struct InversionOutput {
  MultilevelResult result;
  ScalarField c;            ///< |grad tau|^2 on the finest level
  VecField start;           ///< coarsest-level start
  double J_start = 0.0;
  double kappa = 1.0;       ///< amplitude normalization applied to the w data
};

/// Multilevel minimization from the c = 1 baseline; `baseline` must come from the same forward
/// and acquisition settings with c = 1.
InversionOutput invert(const CauchyProjection& data, const CauchyProjection& baseline, const ObjectiveConfig& ocfg,
                       const OptimizeConfig& cfg);

/// c = 1 baseline projections for a forward configuration (picks or eikonal as in cfg, no noise).
CauchyProjection baseline_projection(const ForwardConfig& fc, const AcquireConfig& cfg);

struct ScenarioOutput {
  CauchyProjection data;
  InversionOutput inversion;
  ReconReport report;
};

/// phantom -> simulate -> (noise) -> acquire -> invert -> metrics.
ScenarioOutput run_scenario(const RunConfig& cfg);

} // namespace cvxwave

#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cvxwave/acquire.hpp"
#include "cvxwave/objective.hpp"

namespace cvxwave {

struct LevelPlan {
  double h = 0.125;
  double tol = 2e-2;  ///< stop once grad_norm drops below this
  int max_iter = 5000;
};

struct MultilevelPlan {
  std::vector<LevelPlan> levels{{0.125}, {0.0625}, {0.03125}};

  /// Parses "1/8,1/16" style lists; each spacing must halve the previous one.
  static MultilevelPlan parse(const std::string& text, double tol = 2e-2, int max_iter = 5000);
  void validate() const;
  nlohmann::json to_json() const;
};

struct GDOptions {
  double gamma0 = 0.1;      ///< first trial step of every iteration
  double armijo_c = 1e-4;   ///< sufficient-decrease constant
  int max_halvings = 40;
  bool project = false;     ///< restore amplitude >= m_floor after each step
  bool warm_step = false;   ///< start the search from twice the last accepted step instead of gamma0
  /// Step along grad / h^3 (L2 Riesz representative) instead of the plain dof gradient; the
  /// reported norm then approximates the continuous L2 norm of the gradient.
  bool l2_metric = false;
};

struct IterRecord {
  int level = 0;
  int iter = 0;
  double J = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
  double margin = 0.0;
};

struct LevelSummary {
  double h = 0.0;
  int iterations = 0;
  double wall_seconds = 0.0;
  bool converged = false;
  double J_start = 0.0, J_end = 0.0, grad_end = 0.0;
};

struct RunTrace {
  std::vector<IterRecord> iters;
  std::vector<LevelSummary> levels;

  void write_csv(const std::filesystem::path& path) const;
  /// Per-level summary; wall times only when `timing` is set so that the default is reproducible.
  nlohmann::json summary(bool timing = false) const;
};

/// Abstract descent problem on a flat vector. The search direction is grad / metric and the
/// reported norm is sqrt(grad.grad / metric).
struct DescentProblem {
  std::function<double(std::span<const double>)> value;
  std::function<double(std::span<const double>, std::vector<double>&)> value_grad;
  double metric = 1.0;
  std::function<void(std::vector<double>&)> project;       ///< optional
  std::function<double(std::span<const double>)> margin;   ///< optional feasibility margin
};

struct GDResult {
  std::vector<double> x;
  bool converged = false;
  int iterations = 0;
  double J = 0.0;
  double grad_norm = 0.0;
};

/// Gradient descent with backtracking line search (halving, Armijo condition). Throws
/// NumericalError when no step length in max_halvings halvings decreases J and the gradient is
/// still above tolerance; returns best-so-far with converged = false at the iteration cap.
GDResult gradient_descent(std::vector<double> x, const DescentProblem& prob, const LevelPlan& plan,
                          const GDOptions& opt, RunTrace* trace = nullptr, int level = 0);

struct LevelResult {
  VecField W;
  bool converged = false;
  int iterations = 0;
  double J = 0.0;
  double grad_norm = 0.0;
};

/// gradient_descent on the free dofs of W for the weighted functional of one mesh level.
LevelResult gd_level(const VecField& W0, const LevelData& data, const ObjectiveConfig& cfg, const SystemCoeffs& k,
                     const LevelPlan& plan, const GDOptions& opt = {}, RunTrace* trace = nullptr, int level = 0);

/// Minimal per-node correction of (w_1..w_N) at interior nodes whose amplitude is below m_floor.
/// Returns the number of nodes changed.
std::size_t project_amplitude(VecField& W, const SystemCoeffs& k);

/// Discrete harmonic extension of the boundary values of f (conjugate gradients on the
/// 7-point Laplacian; interior values of f are ignored).
ScalarField harmonic_extension(const ScalarField& f, double rel_tol = 1e-12, int max_iter = 10000);

struct BaselineOptions {
  /// Add the harmonic extension of (data - baseline) boundary differences so that the start is
  /// continuous up to the boundary; otherwise the data values simply overwrite the boundary.
  bool blend = true;
};

/// Start field on `level`: tau is |x - x0| corrected harmonically to the baseline boundary
/// travel times, w_n the harmonic extensions of the baseline boundary projections. Boundary
/// values are then taken from `data`.
VecField baseline_start(const Grid3& level, const CauchyProjection& baseline, const CauchyProjection& data,
                        const BaselineOptions& opt = {});

struct MultilevelResult {
  VecField W;                 ///< finest level
  std::vector<VecField> per_level;
  RunTrace trace;
  bool converged = false;
};

/// Coarse-to-fine minimization: each level starts from the trilinear refinement of the previous
/// minimizer with that level's boundary data imposed.
MultilevelResult multilevel(const VecField& W0, const CauchyProjection& data, const MultilevelPlan& plan,
                            const ObjectiveConfig& cfg, const SystemCoeffs& k, const GDOptions& opt = {});

} // namespace cvxwave

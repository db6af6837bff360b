#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "cvxwave/grid.hpp"
#include "cvxwave/objective.hpp"

namespace cvxwave {

/// Random u = sum_{p,q<=modes} a_pq sin(p pi x') sin(q pi y') * z (A - z)^2 * cubic(z), with
/// x' = (x + A/2)/A, normalized to unit discrete L2 norm. u and u_z vanish on the required faces
/// analytically; boundary nodes are set to exactly zero.
ScalarField sample_admissible_u(const Grid3& g, std::uint64_t seed, int modes = 3, double A = 1.0);

struct CarlemanTerms {
  double lhs = 0.0;  ///< int (lap u)^2 w
  double hess = 0.0; ///< sum_ij int u_ij^2 w
  double grad = 0.0; ///< int |grad u|^2 w
  double mass = 0.0; ///< int u^2 w
};

/// Weighted integrals with w = exp(2 lambda (z + b)^2), trapezoid weights over all nodes and
/// second-order one-sided derivatives on the boundary.
CarlemanTerms carleman_terms(const ScalarField& u, double lambda, double b);

/// lhs / (hess / lambda + lambda grad + lambda^3 mass). Requires lambda >= 1 and u != 0.
double carleman_ratio(const ScalarField& u, double lambda, double b);

struct CarlemanReport {
  std::vector<double> lambdas;
  std::vector<double> min_ratio;
  std::vector<int> samples;
  std::vector<std::uint64_t> worst_seed;
  double b = 0.1;
  double floor = 1e-3;
  double max_collapse = 0.5;
  bool pass = false;

  nlohmann::json to_json() const;
  std::string text() const;
};

/// Minimum ratio per lambda over `samples` admissible draws with seeds seed, seed+1, ...
/// PASS iff every minimum is >= floor and the last minimum is at least (1 - max_collapse) times
/// the first.
CarlemanReport carleman_sweep(const Grid3& g, const std::vector<double>& lambdas, int samples, std::uint64_t seed,
                              double b = 0.1, double floor = 1e-3, double max_collapse = 0.5);

/// J(x2) - J(x1) - <g1, x2 - x1>.
double bregman_gap(double J1, double J2, const VecField& g1, const VecField& W1, const VecField& W2);

struct ConvexityReport {
  int pairs = 0;
  int resampled = 0;
  double perturbation = 0.0;
  double min_gap = 0.0;
  double frac_nonneg = 0.0;
  double min_second_diff = 0.0;
  double floor = -1e-10;
  std::vector<double> gaps;
  std::vector<double> rel_gaps; ///< gap / J(W1)
  bool pass = false;

  nlohmann::json to_json() const;
  std::string text() const;
};

/// Pairs W1, W2 = base + admissible perturbations (each component scaled to `perturbation`
/// times its largest interior magnitude), both strictly feasible; infeasible draws are retried
/// with half the size, at most 20 times per pair.
ConvexityReport convexity_probe(const VecField& base, const LevelData& data, const ObjectiveConfig& cfg,
                                const SystemCoeffs& k, int pairs, std::uint64_t seed, double perturbation = 0.1,
                                double floor = -1e-10);

} // namespace cvxwave

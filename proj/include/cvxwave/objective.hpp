#pragma once

#include <vector>

#include <json.hpp>

#include "cvxwave/acquire.hpp"
#include "cvxwave/grid.hpp"
#include "cvxwave/system.hpp"

namespace cvxwave {

struct ObjectiveConfig {
  double lambda = 1.0;
  double b = 0.0;
  double beta = 0.0;    ///< weight of the squared second-difference penalty
  double sigma_N = 10.0;
  Feasibility mode = Feasibility::permissive;

  void validate(double A) const;
  nlohmann::json to_json() const;
  static ObjectiveConfig from_json(const nlohmann::json& j);
};

/// exp(2 lambda (z + b)^2).
double carleman_weight(double z, const ObjectiveConfig& cfg);

/// Boundary nodes are fixed in every component, interior nodes are free.
class DofMap {
public:
  explicit DofMap(const Grid3& g);
  bool is_free(std::size_t node) const { return free_[node] != 0; }
  std::size_t n_free_nodes() const noexcept { return n_free_; }
  const std::vector<std::size_t>& free_nodes() const noexcept { return list_; }

private:
  std::vector<char> free_;
  std::vector<std::size_t> list_;
  std::size_t n_free_ = 0;
};

/// Data of one mesh level: Dirichlet values (boundary entries of `dirichlet`) and q1 rows in
/// gamma0_nodes order.
struct LevelData {
  VecField dirichlet;
  std::vector<double> q1;

  static LevelData from(const CauchyProjection& cp, const Grid3& level);
  const Grid3& grid() const { return dirichlet.grid(); }
};

/// Copies the Dirichlet values onto the boundary of W.
void impose_dirichlet(VecField& W, const LevelData& data);

struct JParts {
  double interior = 0.0;
  double neumann = 0.0;
  double smooth = 0.0;
  double total() const noexcept { return interior + neumann + smooth; }
};

JParts eval_J_parts(const VecField& W, const LevelData& data, const ObjectiveConfig& cfg,
                    const SystemCoeffs& k);
double eval_J(const VecField& W, const LevelData& data, const ObjectiveConfig& cfg, const SystemCoeffs& k);

/// Exact gradient of eval_J with respect to nodal values; fixed (boundary) entries are zero.
/// When `J_out` is given it receives eval_J at W from the same pass.
VecField grad_J(const VecField& W, const LevelData& data, const ObjectiveConfig& cfg, const SystemCoeffs& k,
                double* J_out = nullptr);

/// Euclidean inner product over free dofs.
double dot_free(const VecField& a, const VecField& b);

/// Euclidean norm over free dofs; with l2 set, the norm of the Riesz representative,
/// sqrt(sum g^2 / h^3).
double grad_norm(const VecField& G, bool l2 = false);

} // namespace cvxwave

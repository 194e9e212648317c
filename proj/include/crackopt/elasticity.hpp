#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crackopt/fem.hpp"
#include "crackopt/material.hpp"
#include "crackopt/mesh.hpp"

namespace crackopt {

enum class Component { X = 0, Y = 1 };

/// Componentwise Dirichlet condition, linear in the load parameter:
/// prescribed = value + load_factor * wbar.
struct DirichletCondition {
  /// Boundary tag the condition applies to. Ignored when `point` is set.
  std::string tag;
  /// Selects the single node nearest to this location instead of a tag.
  std::optional<Point> point;
  Component component = Component::X;
  double value = 0.0;
  double load_factor = 0.0;
};

/// dof -> prescribed value
using ConstraintMap = std::map<int, double>;

/// Throws crackopt::Error for an unknown tag or conflicting prescriptions.
ConstraintMap resolve_constraints(const Mesh& mesh, std::span<const DirichletCondition> conditions,
                                  double wbar);

enum class DegradationRule {
  /// g evaluated at the element mean of the nodal damage.
  ElementMean,
  /// Element average of g(d) with d interpolated linearly (exact 3-point rule).
  Exact,
};

/// g(d) = (1 - d)^2 + k
inline double degradation(double d, double k) { return (1.0 - d) * (1.0 - d) + k; }

/// Per-element degradation factors. Throws if d leaves [0, 1].
ElementField degradation_factors(const Mesh& mesh, const ScalarField& d, double k,
                                 DegradationRule rule = DegradationRule::ElementMean);

/// Voigt strain of element `e`.
Voigt element_strain(const Mesh& mesh, int e, const VectorField& w);
Voigt element_strain(const ElementGeometry& geo, const Triangle& tri, const VectorField& w);

/// Displacement solver with cached sparsity pattern and symbolic
/// factorization; meshes passed to solve() must share the constructor mesh's
/// topology (deformed copies are fine).
class ElasticitySolver {
 public:
  ElasticitySolver(const Mesh& mesh, const StiffnessVoigt& stiffness);

  /// `factors` multiplies each element stiffness (empty span = undegraded).
  VectorField solve(const Mesh& mesh, const ConstraintMap& constraints,
                    std::span<const double> factors = {});

  /// Unconstrained stiffness matrix for the given factors.
  SparseMatrix stiffness_matrix(const Mesh& mesh, std::span<const double> factors = {}) const;

  const StiffnessVoigt& stiffness() const { return c_; }

 private:
  SparseSystem build(const Mesh& mesh, std::span<const double> factors) const;

  StiffnessVoigt c_;
  Assembler assembler_;
  LinearSolver solver_;
};

VectorField solve_displacement(const Mesh& mesh, const MaterialSpec& spec,
                               const ConstraintMap& constraints, const ScalarField* d = nullptr,
                               double k = 1e-7,
                               DegradationRule rule = DegradationRule::ElementMean);

/// sum_e area_e * factor_e * Psi_0(eps_e)
double bulk_energy(const Mesh& mesh, const StiffnessVoigt& c, const VectorField& w,
                   std::span<const double> factors = {});
double bulk_energy(const Mesh& mesh, const MaterialSpec& spec, const VectorField& w,
                   const ScalarField* d = nullptr, double k = 1e-7,
                   DegradationRule rule = DegradationRule::ElementMean);

/// Unconstrained internal force vector sum_e factor_e * area_e * B^T sigma.
VectorField internal_force(const Mesh& mesh, const StiffnessVoigt& c, const VectorField& w,
                           std::span<const double> factors = {});

/// Reaction force on the nodes of `tag`. Throws for an unknown tag.
Eigen::Vector2d boundary_force(const Mesh& mesh, const StiffnessVoigt& c, const VectorField& w,
                               const std::string& tag, std::span<const double> factors = {});
Eigen::Vector2d boundary_force(const Mesh& mesh, const MaterialSpec& spec, const VectorField& w,
                               const std::string& tag, const ScalarField* d = nullptr,
                               double k = 1e-7,
                               DegradationRule rule = DegradationRule::ElementMean);

}  // namespace crackopt

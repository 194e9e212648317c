#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "crackopt/mesh.hpp"

namespace crackopt {

/// Gradients of the three P1 hat functions of a triangle and its area.
struct ElementGeometry {
  std::array<Eigen::Vector2d, 3> grad;
  double area = 0.0;
};

/// Throws crackopt::Error for a triangle with non-positive area.
ElementGeometry grad_basis(const Point& a, const Point& b, const Point& c);
ElementGeometry grad_basis(const Mesh& mesh, int e);

using SparseMatrix = Eigen::SparseMatrix<double>;
using ElementMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 6, 6>;
using ElementVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 6, 1>;

/// Element kernel: fills the local matrix and load vector of element `e`.
/// Both arrive zeroed with size 3 * dofs_per_node.
using ElementKernel =
    std::function<void(int e, const ElementGeometry& geo, ElementMatrix& ke, ElementVector& fe)>;

struct SparseSystem {
  SparseMatrix matrix;
  Eigen::VectorXd rhs;
  /// dof -> prescribed value
  std::map<int, double> constraints;
  bool symmetric = true;

  /// Adds a prescription; throws crackopt::Error if the dof is already
  /// prescribed to a different value.
  void constrain(int dof, double value);
};

/// Scatter-add assembler with a fixed sparsity pattern, reusable for every
/// mesh that shares the topology it was built from. Assembly order is the
/// element order, so results are deterministic.
class Assembler {
 public:
  Assembler(const Mesh& mesh, int dofs_per_node);

  int dofs_per_node() const { return dpn_; }
  int dof_count() const { return static_cast<int>(pattern_.rows()); }
  const std::shared_ptr<const MeshTopology>& topology() const { return topo_; }

  SparseSystem assemble(const Mesh& mesh, const ElementKernel& kernel) const;

  /// Assembles only the load vector (kernel's matrix output is ignored).
  Eigen::VectorXd assemble_vector(const Mesh& mesh, const ElementKernel& kernel) const;

 private:
  std::shared_ptr<const MeshTopology> topo_;
  int dpn_;
  SparseMatrix pattern_;
  std::vector<int> slots_;
};

SparseSystem assemble(const Mesh& mesh, int dofs_per_node, const ElementKernel& kernel);

/// Symmetric elimination of the constrained dofs with right-hand-side lift.
/// Constrained rows/columns become identity rows; the pattern is unchanged.
void apply_dirichlet(SparseSystem& system);

/// Sparse direct solver that keeps the symbolic analysis while the sparsity
/// pattern stays the same. Symmetric systems use LDL^T, others LU.
class LinearSolver {
 public:
  LinearSolver();
  ~LinearSolver();
  LinearSolver(LinearSolver&&) noexcept;
  LinearSolver& operator=(LinearSolver&&) noexcept;

  /// Solves a system whose constraints were already eliminated. Throws
  /// SolverError on singularity or when the backward error check fails.
  Eigen::VectorXd solve(const SparseSystem& system);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One-shot: applies Dirichlet elimination to a copy and solves.
Eigen::VectorXd solve(const SparseSystem& system);

/// ||Ax - b||_inf / (||A||_inf ||x||_inf + ||b||_inf)
double backward_error(const SparseMatrix& a, const Eigen::VectorXd& x, const Eigen::VectorXd& b);

/// Element-mean of a nodal field.
double element_mean(const Mesh& mesh, int e, const ScalarField& f);

/// Area-weighted projection of elementwise-constant vectors onto nodes.
VectorField project_to_nodes(const Mesh& mesh, const std::vector<Eigen::Vector2d>& per_element);

}  // namespace crackopt

#include "crackopt/fem.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "crackopt/errors.hpp"

namespace crackopt {

ElementGeometry grad_basis(const Point& a, const Point& b, const Point& c) {
  const double det = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
  if (!(det > 0.0)) throw Error("degenerate or inverted triangle");
  ElementGeometry g;
  g.area = 0.5 * det;
  const double inv = 1.0 / det;
  g.grad[0] = Eigen::Vector2d(b.y() - c.y(), c.x() - b.x()) * inv;
  g.grad[1] = Eigen::Vector2d(c.y() - a.y(), a.x() - c.x()) * inv;
  g.grad[2] = Eigen::Vector2d(a.y() - b.y(), b.x() - a.x()) * inv;
  return g;
}

ElementGeometry grad_basis(const Mesh& mesh, int e) {
  const auto& t = mesh.triangle(e);
  return grad_basis(mesh.node(t[0]), mesh.node(t[1]), mesh.node(t[2]));
}

void SparseSystem::constrain(int dof, double value) {
  if (dof < 0 || dof >= matrix.rows()) throw Error("constrained dof out of range");
  const auto [it, inserted] = constraints.emplace(dof, value);
  if (!inserted && it->second != value) {
    throw Error("conflicting Dirichlet values on dof " + std::to_string(dof));
  }
}

// ---------------------------------------------------------------------------

Assembler::Assembler(const Mesh& mesh, int dofs_per_node)
    : topo_(mesh.topology()), dpn_(dofs_per_node) {
  const int ndof = dpn_ * static_cast<int>(mesh.node_count());
  const int local = 3 * dpn_;
  const auto& tris = topo_->triangles;

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(tris.size() * static_cast<std::size_t>(local * local));
  for (const auto& t : tris) {
    for (int a = 0; a < 3; ++a)
      for (int i = 0; i < dpn_; ++i)
        for (int b = 0; b < 3; ++b)
          for (int j = 0; j < dpn_; ++j)
            trip.emplace_back(dpn_ * t[a] + i, dpn_ * t[b] + j, 0.0);
  }
  pattern_.resize(ndof, ndof);
  pattern_.setFromTriplets(trip.begin(), trip.end());
  pattern_.makeCompressed();

  slots_.resize(tris.size() * static_cast<std::size_t>(local * local));
  const int* outer = pattern_.outerIndexPtr();
  const int* inner = pattern_.innerIndexPtr();
  std::size_t s = 0;
  for (const auto& t : tris) {
    std::array<int, 6> dofs{};
    for (int a = 0; a < 3; ++a)
      for (int i = 0; i < dpn_; ++i) dofs[static_cast<std::size_t>(dpn_ * a + i)] = dpn_ * t[a] + i;
    for (int r = 0; r < local; ++r) {
      for (int c = 0; c < local; ++c) {
        const int col = dofs[static_cast<std::size_t>(c)];
        const int row = dofs[static_cast<std::size_t>(r)];
        const int* first = inner + outer[col];
        const int* last = inner + outer[col + 1];
        const int* hit = std::lower_bound(first, last, row);
        slots_[s++] = static_cast<int>(hit - inner);
      }
    }
  }
}

SparseSystem Assembler::assemble(const Mesh& mesh, const ElementKernel& kernel) const {
  if (mesh.topology() != topo_) throw Error("assembler used with a foreign mesh topology");
  const int local = 3 * dpn_;
  SparseSystem sys;
  sys.matrix = pattern_;
  sys.rhs = Eigen::VectorXd::Zero(pattern_.rows());
  double* values = sys.matrix.valuePtr();
  ElementMatrix ke(local, local);
  ElementVector fe(local);
  std::size_t s = 0;
  for (int e = 0; e < static_cast<int>(mesh.element_count()); ++e) {
    const auto geo = grad_basis(mesh, e);
    ke.setZero();
    fe.setZero();
    kernel(e, geo, ke, fe);
    const auto& t = mesh.triangle(e);
    for (int r = 0; r < local; ++r) {
      for (int c = 0; c < local; ++c) values[slots_[s++]] += ke(r, c);
      sys.rhs(dpn_ * t[r / dpn_] + r % dpn_) += fe(r);
    }
  }
  return sys;
}

Eigen::VectorXd Assembler::assemble_vector(const Mesh& mesh, const ElementKernel& kernel) const {
  if (mesh.topology() != topo_) throw Error("assembler used with a foreign mesh topology");
  const int local = 3 * dpn_;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(pattern_.rows());
  ElementMatrix ke(local, local);
  ElementVector fe(local);
  for (int e = 0; e < static_cast<int>(mesh.element_count()); ++e) {
    const auto geo = grad_basis(mesh, e);
    ke.setZero();
    fe.setZero();
    kernel(e, geo, ke, fe);
    const auto& t = mesh.triangle(e);
    for (int r = 0; r < local; ++r) rhs(dpn_ * t[r / dpn_] + r % dpn_) += fe(r);
  }
  return rhs;
}

SparseSystem assemble(const Mesh& mesh, int dofs_per_node, const ElementKernel& kernel) {
  return Assembler(mesh, dofs_per_node).assemble(mesh, kernel);
}

void apply_dirichlet(SparseSystem& sys) {
  if (sys.constraints.empty()) return;
  const auto n = sys.matrix.rows();
  std::vector<char> fixed(static_cast<std::size_t>(n), 0);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  for (const auto& [dof, value] : sys.constraints) {
    fixed[static_cast<std::size_t>(dof)] = 1;
    g(dof) = value;
  }
  sys.rhs -= sys.matrix * g;
  for (int col = 0; col < sys.matrix.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(sys.matrix, col); it; ++it) {
      const auto row = it.row();
      if (fixed[static_cast<std::size_t>(row)] || fixed[static_cast<std::size_t>(col)]) {
        it.valueRef() = row == col ? 1.0 : 0.0;
      }
    }
  }
  for (const auto& [dof, value] : sys.constraints) sys.rhs(dof) = value;
}

double backward_error(const SparseMatrix& a, const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
  Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(a.rows());
  for (int col = 0; col < a.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(a, col); it; ++it) row_sums(it.row()) += std::abs(it.value());
  }
  const double denom = row_sums.maxCoeff() * x.lpNorm<Eigen::Infinity>() + b.lpNorm<Eigen::Infinity>();
  const double res = (a * x - b).lpNorm<Eigen::Infinity>();
  if (denom == 0.0) return res;
  return res / denom;
}

// ---------------------------------------------------------------------------

struct LinearSolver::Impl {
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  std::vector<int> outer;
  std::vector<int> inner;
  bool have_ldlt = false;
  bool have_lu = false;

  bool same_pattern(const SparseMatrix& a) const {
    return static_cast<std::size_t>(a.outerSize() + 1) == outer.size() &&
           static_cast<std::size_t>(a.nonZeros()) == inner.size() &&
           std::equal(outer.begin(), outer.end(), a.outerIndexPtr()) &&
           std::equal(inner.begin(), inner.end(), a.innerIndexPtr());
  }
  void remember(const SparseMatrix& a) {
    outer.assign(a.outerIndexPtr(), a.outerIndexPtr() + a.outerSize() + 1);
    inner.assign(a.innerIndexPtr(), a.innerIndexPtr() + a.nonZeros());
  }
};

LinearSolver::LinearSolver() : impl_(std::make_unique<Impl>()) {}
LinearSolver::~LinearSolver() = default;
LinearSolver::LinearSolver(LinearSolver&&) noexcept = default;
LinearSolver& LinearSolver::operator=(LinearSolver&&) noexcept = default;

Eigen::VectorXd LinearSolver::solve(const SparseSystem& sys) {
  const SparseMatrix& a = sys.matrix;
  if (a.rows() != a.cols() || a.rows() != sys.rhs.size()) throw SolverError("system size mismatch");
  if (!a.isCompressed()) throw SolverError("system matrix must be compressed");
  if (a.rows() == 0) return {};
  auto& im = *impl_;
  const bool reuse = im.same_pattern(a);
  if (!reuse) {
    im.remember(a);
    im.have_ldlt = im.have_lu = false;
  }

  Eigen::VectorXd x;
  if (sys.symmetric) {
    if (!im.have_ldlt) {
      im.ldlt.analyzePattern(a);
      im.have_ldlt = true;
    }
    im.ldlt.factorize(a);
    if (im.ldlt.info() != Eigen::Success) throw SolverError("singular matrix (LDL^T failed)");
    // Pivot test against the matching diagonal entry of A.
    const auto& perm = im.ldlt.permutationP().indices();
    const Eigen::VectorXd d = im.ldlt.vectorD();
    Eigen::VectorXd diag_p(a.rows());
    const Eigen::VectorXd diag = a.diagonal();
    for (Eigen::Index i = 0; i < a.rows(); ++i) diag_p(perm(i)) = diag(i);
    for (Eigen::Index k = 0; k < a.rows(); ++k) {
      if (!(d(k) > 1e-11 * std::abs(diag_p(k)))) {
        throw SolverError("singular matrix (vanishing pivot " + std::to_string(d(k)) + ")");
      }
    }
    x = im.ldlt.solve(sys.rhs);
  } else {
    if (!im.have_lu) {
      im.lu.analyzePattern(a);
      im.have_lu = true;
    }
    im.lu.factorize(a);
    if (im.lu.info() != Eigen::Success) {
      throw SolverError("singular matrix (LU failed: " + im.lu.lastErrorMessage() + ")");
    }
    x = im.lu.solve(sys.rhs);
  }
  if (!x.allFinite()) throw SolverError("linear solve produced non-finite values");
  const double berr = backward_error(a, x, sys.rhs);
  if (berr > 1e-10) {
    throw SolverError("linear solve failed the backward error check (" + std::to_string(berr) + ")");
  }
  return x;
}

Eigen::VectorXd solve(const SparseSystem& system) {
  SparseSystem copy = system;
  apply_dirichlet(copy);
  LinearSolver solver;
  return solver.solve(copy);
}

double element_mean(const Mesh& mesh, int e, const ScalarField& f) {
  const auto& t = mesh.triangle(e);
  return (f(t[0]) + f(t[1]) + f(t[2])) / 3.0;
}

VectorField project_to_nodes(const Mesh& mesh, const std::vector<Eigen::Vector2d>& per_element) {
  const auto n = static_cast<Eigen::Index>(mesh.node_count());
  VectorField out = VectorField::Zero(2 * n);
  Eigen::VectorXd weight = Eigen::VectorXd::Zero(n);
  for (int e = 0; e < static_cast<int>(mesh.element_count()); ++e) {
    const double area = mesh.signed_area(e);
    for (int a : mesh.triangle(e)) {
      out.segment<2>(2 * a) += area * per_element[static_cast<std::size_t>(e)];
      weight(a) += area;
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (weight(i) > 0.0) out.segment<2>(2 * i) /= weight(i);
  }
  return out;
}

}  // namespace crackopt

#include "crackopt/elasticity.hpp"

#include <cmath>

#include "crackopt/errors.hpp"

namespace crackopt {

ConstraintMap resolve_constraints(const Mesh& mesh, std::span<const DirichletCondition> conditions,
                                  double wbar) {
  ConstraintMap out;
  auto put = [&](int node, const DirichletCondition& bc) {
    const int dof = 2 * node + static_cast<int>(bc.component);
    const double value = bc.value + bc.load_factor * wbar;
    const auto [it, inserted] = out.emplace(dof, value);
    if (!inserted && it->second != value) {
      throw Error("conflicting Dirichlet values on node " + std::to_string(node));
    }
  };
  for (const auto& bc : conditions) {
    if (bc.point) {
      put(mesh.nearest_node(*bc.point), bc);
      continue;
    }
    const auto nodes = mesh.nodes_with_tag(bc.tag);
    if (nodes.empty()) throw Error("unknown boundary tag '" + bc.tag + "'");
    for (int node : nodes) put(node, bc);
  }
  return out;
}

ElementField degradation_factors(const Mesh& mesh, const ScalarField& d, double k,
                                 DegradationRule rule) {
  if (d.size() != static_cast<Eigen::Index>(mesh.node_count())) {
    throw Error("damage field size does not match the mesh");
  }
  if (d.minCoeff() < -1e-12 || d.maxCoeff() > 1.0 + 1e-12) {
    throw Error("damage field outside [0, 1]");
  }
  ElementField g(static_cast<Eigen::Index>(mesh.element_count()));
  for (int e = 0; e < static_cast<int>(mesh.element_count()); ++e) {
    const auto& t = mesh.triangle(e);
    if (rule == DegradationRule::ElementMean) {
      g(e) = degradation((d(t[0]) + d(t[1]) + d(t[2])) / 3.0, k);
    } else {
      // Edge-midpoint rule integrates quadratics exactly.
      const double m01 = 0.5 * (d(t[0]) + d(t[1]));
      const double m12 = 0.5 * (d(t[1]) + d(t[2]));
      const double m20 = 0.5 * (d(t[2]) + d(t[0]));
      g(e) = (degradation(m01, k) + degradation(m12, k) + degradation(m20, k)) / 3.0;
    }
  }
  return g;
}

Voigt element_strain(const ElementGeometry& geo, const Triangle& tri, const VectorField& w) {
  Voigt eps = Voigt::Zero();
  for (int a = 0; a < 3; ++a) {
    const double ux = w(2 * tri[a]);
    const double uy = w(2 * tri[a] + 1);
    const auto& g = geo.grad[static_cast<std::size_t>(a)];
    eps(0) += g.x() * ux;
    eps(1) += g.y() * uy;
    eps(2) += g.y() * ux + g.x() * uy;
  }
  return eps;
}

Voigt element_strain(const Mesh& mesh, int e, const VectorField& w) {
  return element_strain(grad_basis(mesh, e), mesh.triangle(e), w);
}

namespace {

using BMatrix = Eigen::Matrix<double, 3, 6>;

BMatrix strain_operator(const ElementGeometry& geo) {
  BMatrix b = BMatrix::Zero();
  for (int a = 0; a < 3; ++a) {
    const auto& g = geo.grad[static_cast<std::size_t>(a)];
    b(0, 2 * a) = g.x();
    b(1, 2 * a + 1) = g.y();
    b(2, 2 * a) = g.y();
    b(2, 2 * a + 1) = g.x();
  }
  return b;
}

double factor_of(std::span<const double> factors, int e) {
  return factors.empty() ? 1.0 : factors[static_cast<std::size_t>(e)];
}

void check_factors(const Mesh& mesh, std::span<const double> factors) {
  if (!factors.empty() && factors.size() != mesh.element_count()) {
    throw Error("element factor count does not match the mesh");
  }
}

}  // namespace

ElasticitySolver::ElasticitySolver(const Mesh& mesh, const StiffnessVoigt& stiffness)
    : c_(stiffness), assembler_(mesh, 2) {}

SparseSystem ElasticitySolver::build(const Mesh& mesh, std::span<const double> factors) const {
  check_factors(mesh, factors);
  const Eigen::Matrix3d& c = c_.matrix();
  return assembler_.assemble(mesh, [&](int e, const ElementGeometry& geo, ElementMatrix& ke,
                                       ElementVector&) {
    const BMatrix b = strain_operator(geo);
    ke.noalias() = (geo.area * factor_of(factors, e)) * (b.transpose() * c * b);
  });
}

SparseMatrix ElasticitySolver::stiffness_matrix(const Mesh& mesh,
                                                std::span<const double> factors) const {
  return build(mesh, factors).matrix;
}

VectorField ElasticitySolver::solve(const Mesh& mesh, const ConstraintMap& constraints,
                                    std::span<const double> factors) {
  SparseSystem sys = build(mesh, factors);
  for (const auto& [dof, value] : constraints) sys.constrain(dof, value);
  apply_dirichlet(sys);
  return solver_.solve(sys);
}

VectorField solve_displacement(const Mesh& mesh, const MaterialSpec& spec,
                               const ConstraintMap& constraints, const ScalarField* d, double k,
                               DegradationRule rule) {
  ElasticitySolver solver(mesh, effective_stiffness(spec));
  if (d == nullptr) return solver.solve(mesh, constraints);
  const ElementField g = degradation_factors(mesh, *d, k, rule);
  return solver.solve(mesh, constraints, std::span<const double>(g.data(), g.size()));
}

double bulk_energy(const Mesh& mesh, const StiffnessVoigt& c, const VectorField& w,
                   std::span<const double> factors) {
  check_factors(mesh, factors);
  double sum = 0.0;
  for (int e = 0; e < static_cast<int>(mesh.element_count()); ++e) {
    const auto geo = grad_basis(mesh, e);
    const Voigt eps = element_strain(geo, mesh.triangle(e), w);
    sum += geo.area * factor_of(factors, e) * energy_density(c, eps);
  }
  return sum;
}

double bulk_energy(const Mesh& mesh, const MaterialSpec& spec, const VectorField& w,
                   const ScalarField* d, double k, DegradationRule rule) {
  const StiffnessVoigt c = effective_stiffness(spec);
  if (d == nullptr) return bulk_energy(mesh, c, w);
  const ElementField g = degradation_factors(mesh, *d, k, rule);
  return bulk_energy(mesh, c, w, std::span<const double>(g.data(), g.size()));
}

VectorField internal_force(const Mesh& mesh, const StiffnessVoigt& c, const VectorField& w,
                           std::span<const double> factors) {
  check_factors(mesh, factors);
  VectorField f = VectorField::Zero(w.size());
  for (int e = 0; e < static_cast<int>(mesh.element_count()); ++e) {
    const auto geo = grad_basis(mesh, e);
    const auto& t = mesh.triangle(e);
    const Voigt sigma = c.stress(element_strain(geo, t, w));
    const double scale = geo.area * factor_of(factors, e);
    for (int a = 0; a < 3; ++a) {
      const auto& g = geo.grad[static_cast<std::size_t>(a)];
      f(2 * t[a]) += scale * (g.x() * sigma(0) + g.y() * sigma(2));
      f(2 * t[a] + 1) += scale * (g.y() * sigma(1) + g.x() * sigma(2));
    }
  }
  return f;
}

Eigen::Vector2d boundary_force(const Mesh& mesh, const StiffnessVoigt& c, const VectorField& w,
                               const std::string& tag, std::span<const double> factors) {
  const auto nodes = mesh.nodes_with_tag(tag);
  if (nodes.empty()) throw Error("unknown boundary tag '" + tag + "'");
  const VectorField f = internal_force(mesh, c, w, factors);
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  for (int n : nodes) sum += f.segment<2>(2 * n);
  return sum;
}

Eigen::Vector2d boundary_force(const Mesh& mesh, const MaterialSpec& spec, const VectorField& w,
                               const std::string& tag, const ScalarField* d, double k,
                               DegradationRule rule) {
  const StiffnessVoigt c = effective_stiffness(spec);
  if (d == nullptr) return boundary_force(mesh, c, w, tag);
  const ElementField g = degradation_factors(mesh, *d, k, rule);
  return boundary_force(mesh, c, w, tag, std::span<const double>(g.data(), g.size()));
}

}  // namespace crackopt

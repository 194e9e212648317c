#pragma once

#include <vector>

#include "crackopt/elasticity.hpp"
#include "crackopt/shapeopt.hpp"
#include "support.hpp"

namespace crackopt::testing {

struct DerivativeCheck {
  double analytic = 0.0;
  double central = 0.0;
  double relative_error() const {
    return std::abs(analytic - central) / std::max(std::abs(central), 1e-300);
  }
};

/// Random field on the movable nodes within `radius` of the crack tip,
/// fading linearly to zero at the radius.
inline VectorField tip_field(const Mesh& m, const std::vector<CrackCurve>& curves, double radius,
                             unsigned seed) {
  const std::vector<bool> movable = movable_nodes(m, curves);
  const Point tip = m.node(crack_tip(curves[0], m));
  VectorField w = random_vector(2 * static_cast<Eigen::Index>(m.node_count()), seed);
  for (int n = 0; n < static_cast<int>(m.node_count()); ++n) {
    const double r = (m.node(n) - tip).norm();
    const double f = movable[static_cast<std::size_t>(n)] && r < radius ? 1.0 - r / radius : 0.0;
    w.segment<2>(2 * n) *= f;
  }
  return w;
}

/// Analytic shape derivative against central differences of J with the
/// state re-solved on the perturbed meshes. SENT loading on `m`.
inline std::vector<DerivativeCheck> shape_derivative_fd(const Mesh& m, const MaterialSpec& spec,
                                                        double wbar, double nu, int count,
                                                        double h) {
  std::vector<CrackCurve> curves = extract_crack_curves(m);
  mark_active(curves, m, {});
  ShapeOptParams params;
  params.volume_weight = nu;
  const StiffnessVoigt c = effective_stiffness(spec);
  const ConstraintMap cons = resolve_constraints(m, sent_conditions(), wbar);
  ElasticitySolver solver(m, c);
  const VectorField w = solver.solve(m, cons);

  auto j_at = [&](const VectorField& W, double t) {
    const Mesh moved = deform(m, W, t);  // t > 0
    const VectorField wt = solver.solve(moved, cons);
    return objective(moved, c, wt, curves, spec.gc, params).total;
  };

  std::vector<DerivativeCheck> out;
  for (int k = 0; k < count; ++k) {
    const VectorField W = tip_field(m, curves, 0.25, 100u + static_cast<unsigned>(k));
    DerivativeCheck d;
    d.analytic = shape_derivative(m, c, w, curves, spec.gc, params, W);
    d.central = (j_at(W, h) - j_at(-W, h)) / (2.0 * h);
    out.push_back(d);
  }
  return out;
}

}  // namespace crackopt::testing

#include "crackopt/phasefield.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "crackopt/errors.hpp"
#include "crackopt/scenario.hpp"

namespace crackopt {

void PhaseFieldParams::validate() const {
  if (!(length_scale > 0.0)) throw ConfigError("phase-field length scale must be positive");
  if (!(gc > 0.0)) throw ConfigError("critical energy release rate must be positive");
  if (!(k > 0.0)) throw ConfigError("residual stiffness k must be positive");
  if (!(tol_stag > 0.0 && tol_stag < 1.0)) throw ConfigError("staggered tolerance must lie in (0, 1)");
  if (max_stag_iters <= 0) throw ConfigError("maximum staggered iterations must be positive");
}

HistoryField update_history(const HistoryField& h, const Mesh& mesh, const MaterialSpec& spec,
                            const VectorField& w) {
  const StiffnessVoigt c = effective_stiffness(spec);
  HistoryField out = h;
  for (int e = 0; e < static_cast<int>(mesh.element_count()); ++e) {
    const Strain eps = from_voigt(element_strain(mesh, e, w));
    out(e) = std::max(out(e), tensile_energy_density(spec, c, eps));
  }
  return out;
}

// ---------------------------------------------------------------------------

PhaseFieldSolver::PhaseFieldSolver(const Mesh& mesh, const PhaseFieldParams& params,
                                   std::vector<int> damaged_nodes)
    : params_(params), damaged_(std::move(damaged_nodes)), assembler_(mesh, 1) {
  params_.validate();
}

SparseSystem PhaseFieldSolver::build(const Mesh& mesh, const HistoryField& h) const {
  if (h.size() != static_cast<Eigen::Index>(mesh.element_count())) {
    throw Error("history field size does not match the mesh");
  }
  const double ls = params_.length_scale;
  const double reaction = params_.gc / ls;
  const double diffusion =
      params_.gradient == GradientCoefficient::GcLs ? params_.gc * ls : ls * ls;
  return assembler_.assemble(mesh, [&](int e, const ElementGeometry& geo, ElementMatrix& ke,
                                       ElementVector& fe) {
    const double he = h(e);
    const double mass = (reaction + 2.0 * he) * geo.area / 12.0;
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        ke(a, b) = mass * (a == b ? 2.0 : 1.0) +
                   diffusion * geo.area * geo.grad[static_cast<std::size_t>(a)].dot(
                                              geo.grad[static_cast<std::size_t>(b)]);
      }
      fe(a) = 2.0 * he * geo.area / 3.0;
    }
  });
}

SparseMatrix PhaseFieldSolver::system_matrix(const Mesh& mesh, const HistoryField& h) const {
  return build(mesh, h).matrix;
}

PhaseFieldSolution PhaseFieldSolver::solve(const Mesh& mesh, const HistoryField& h) {
  SparseSystem sys = build(mesh, h);
  for (int n : damaged_) sys.constrain(n, 1.0);
  apply_dirichlet(sys);
  PhaseFieldSolution out;
  out.d = solver_.solve(sys);
  for (Eigen::Index i = 0; i < out.d.size(); ++i) {
    const double clamped = std::clamp(out.d(i), 0.0, 1.0);
    out.clamp = std::max(out.clamp, std::abs(clamped - out.d(i)));
    out.d(i) = clamped;
  }
  return out;
}

PhaseFieldSolution solve_phasefield(const Mesh& mesh, const PhaseFieldParams& params,
                                    const HistoryField& h, std::span<const int> damaged_nodes) {
  PhaseFieldSolver solver(mesh, params, {damaged_nodes.begin(), damaged_nodes.end()});
  return solver.solve(mesh, h);
}

double crack_surface_functional(const Mesh& mesh, const ScalarField& d, double length_scale) {
  double sum = 0.0;
  for (int e = 0; e < static_cast<int>(mesh.element_count()); ++e) {
    const auto geo = grad_basis(mesh, e);
    const auto& t = mesh.triangle(e);
    const double d0 = d(t[0]);
    const double d1 = d(t[1]);
    const double d2 = d(t[2]);
    // integral of d^2 over the triangle for linear d
    const double sq = geo.area / 6.0 * (d0 * d0 + d1 * d1 + d2 * d2 + d0 * d1 + d1 * d2 + d2 * d0);
    const Eigen::Vector2d g = d0 * geo.grad[0] + d1 * geo.grad[1] + d2 * geo.grad[2];
    sum += sq / (2.0 * length_scale) + 0.5 * length_scale * geo.area * g.squaredNorm();
  }
  return sum;
}

double relative_change(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max(a.norm(), 1e-12);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<int> crack_nodes(const Mesh& mesh) {
  std::vector<int> out;
  for (const auto& be : mesh.boundary_edges()) {
    if (be.tag.rfind("crack", 0) == 0) {
      out.push_back(be.a);
      out.push_back(be.b);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

PhaseFieldModel::PhaseFieldModel(const Mesh& mesh, const MaterialSpec& spec,
                                 const PhaseFieldParams& params)
    : mesh_(mesh),
      spec_(spec),
      params_(params),
      damaged_(params.initial_crack_damage ? crack_nodes(mesh) : std::vector<int>{}),
      elastic_(mesh, effective_stiffness(spec)),
      pf_(mesh, params, damaged_) {}

PhaseFieldState PhaseFieldModel::initial_state() {
  PhaseFieldState s;
  const auto n = static_cast<Eigen::Index>(mesh_.node_count());
  s.w = VectorField::Zero(2 * n);
  s.h = HistoryField::Zero(static_cast<Eigen::Index>(mesh_.element_count()));
  s.d = damaged_.empty() ? ScalarField::Zero(n) : pf_.solve(mesh_, s.h).d;
  return s;
}

ElementField PhaseFieldModel::degradation(const ScalarField& d) const {
  return degradation_factors(mesh_, d, params_.k, params_.degradation);
}

StaggeredResult PhaseFieldModel::staggered_step(PhaseFieldState& state,
                                                const ConstraintMap& constraints) {
  StaggeredResult res;
  VectorField w_prev = state.w;
  ScalarField d_prev = state.d;
  for (int k = 1; k <= params_.max_stag_iters; ++k) {
    const ElementField g = degradation(d_prev);
    VectorField w = elastic_.solve(mesh_, constraints, std::span<const double>(g.data(), g.size()));
    state.h = update_history(state.h, mesh_, spec_, w);
    PhaseFieldSolution pf = pf_.solve(mesh_, state.h);
    res.iterations = k;
    res.errornorm = std::max(relative_change(w, w_prev), relative_change(pf.d, d_prev));
    res.clamp = std::max(res.clamp, pf.clamp);
    w_prev = std::move(w);
    d_prev = std::move(pf.d);
    if (res.errornorm <= params_.tol_stag) {
      res.converged = true;
      break;
    }
  }
  state.w = std::move(w_prev);
  state.d = std::move(d_prev);
  return res;
}

double PhaseFieldModel::bulk_energy(const PhaseFieldState& state) const {
  const ElementField g = degradation(state.d);
  return crackopt::bulk_energy(mesh_, stiffness(), state.w, std::span<const double>(g.data(), g.size()));
}

double PhaseFieldModel::fracture_energy(const PhaseFieldState& state) const {
  return params_.gc * crack_surface_functional(mesh_, state.d, params_.length_scale);
}

Eigen::Vector2d PhaseFieldModel::boundary_force(const PhaseFieldState& state,
                                                const std::string& tag) const {
  const ElementField g = degradation(state.d);
  return crackopt::boundary_force(mesh_, stiffness(), state.w, tag,
                                  std::span<const double>(g.data(), g.size()));
}

// ---------------------------------------------------------------------------

std::vector<StepRecord> run_phasefield(const Scenario& scenario, const Mesh& mesh,
                                       const StepObserver& observer) {
  if (!scenario.phasefield) throw ConfigError("scenario has no phase-field parameters");
  PhaseFieldParams params = *scenario.phasefield;
  params.gc = scenario.material.gc;
  PhaseFieldModel model(mesh, scenario.material, params);
  PhaseFieldState state = model.initial_state();

  std::vector<StepRecord> records;
  const int steps = scenario.step_count();
  for (int n = 1; n <= steps; ++n) {
    const double wbar = scenario.load.wbar(n);
    const ConstraintMap bcs = resolve_constraints(mesh, scenario.conditions, wbar);
    const StaggeredResult sr = model.staggered_step(state, bcs);

    StepRecord rec;
    rec.step = n;
    rec.wbar = wbar;
    rec.force = model.boundary_force(state, scenario.load.tag);
    rec.e_bulk = model.bulk_energy(state);
    rec.e_frac = model.fracture_energy(state);
    rec.e_total = rec.e_bulk + rec.e_frac;
    rec.stag_iters = sr.iterations;
    rec.errornorm = sr.errornorm;
    rec.clamp = sr.clamp;
    if (!sr.converged) {
      std::cerr << "warning: step " << n << " reached the staggered iteration limit (errornorm "
                << sr.errornorm << ")\n";
    }
    if (sr.clamp >= 1e-3) {
      std::cerr << "warning: step " << n << " clamped the phase field by " << sr.clamp << '\n';
    }
    records.push_back(rec);
    if (observer) {
      FieldSnapshot snap;
      snap.mesh = &model.mesh();
      snap.point_vectors = {{"w", &state.w}};
      snap.point_scalars = {{"d", &state.d}};
      snap.cell_scalars = {{"H", &state.h}};
      observer(records.back(), snap);
    }
  }
  return records;
}

}  // namespace crackopt

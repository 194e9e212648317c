#pragma once

#include <functional>
#include <span>
#include <vector>

#include "crackopt/elasticity.hpp"
#include "crackopt/fem.hpp"
#include "crackopt/material.hpp"
#include "crackopt/mesh.hpp"

namespace crackopt {

/// Coefficient of the gradient term in the phase-field equation.
enum class GradientCoefficient {
  /// Gc * l_s, from the weak form.
  GcLs,
  /// l_s^2, the coefficient as printed in the discrete residual.
  LsSquared,
};

struct PhaseFieldParams {
  double length_scale = 0.01;  // l_s, mm
  double gc = 1.0;             // N/mm
  double k = 1e-7;
  double tol_stag = 1e-3;
  int max_stag_iters = 100;
  GradientCoefficient gradient = GradientCoefficient::GcLs;
  DegradationRule degradation = DegradationRule::ElementMean;
  /// Prescribe d = 1 on the nodes of crack-tagged edges.
  bool initial_crack_damage = false;

  void validate() const;
};

/// Elementwise running maximum of the crack-driving energy density, N/mm^2.
using HistoryField = ElementField;

/// H_e <- max(H_e, Psi_0^+(eps_e))
HistoryField update_history(const HistoryField& h, const Mesh& mesh, const MaterialSpec& spec,
                            const VectorField& w);

struct PhaseFieldSolution {
  ScalarField d;
  /// Largest correction applied when clamping d into [0, 1].
  double clamp = 0.0;
};

/// Assembles and solves the phase-field equation, which is linear in d for a
/// fixed history. Keeps the factorization pattern between calls.
class PhaseFieldSolver {
 public:
  PhaseFieldSolver(const Mesh& mesh, const PhaseFieldParams& params,
                   std::vector<int> damaged_nodes = {});

  PhaseFieldSolution solve(const Mesh& mesh, const HistoryField& h);
  /// Unconstrained system matrix for a given history.
  SparseMatrix system_matrix(const Mesh& mesh, const HistoryField& h) const;

 private:
  SparseSystem build(const Mesh& mesh, const HistoryField& h) const;

  PhaseFieldParams params_;
  std::vector<int> damaged_;
  Assembler assembler_;
  LinearSolver solver_;
};

PhaseFieldSolution solve_phasefield(const Mesh& mesh, const PhaseFieldParams& params,
                                    const HistoryField& h, std::span<const int> damaged_nodes = {});

/// Integral of d^2/(2 l_s) + l_s/2 |grad d|^2, exact for P1 fields.
double crack_surface_functional(const Mesh& mesh, const ScalarField& d, double length_scale);

struct PhaseFieldState {
  VectorField w;
  ScalarField d;
  HistoryField h;
};

struct StaggeredResult {
  int iterations = 0;
  double errornorm = 0.0;
  bool converged = false;
  double clamp = 0.0;
};

/// Relative change ||a - b|| / max(||a||, 1e-12).
double relative_change(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Hybrid phase-field model on a fixed mesh: degraded linear elasticity
/// coupled to the history-driven phase-field equation, solved staggered.
class PhaseFieldModel {
 public:
  PhaseFieldModel(const Mesh& mesh, const MaterialSpec& spec, const PhaseFieldParams& params);

  const Mesh& mesh() const { return mesh_; }
  const MaterialSpec& material() const { return spec_; }
  const PhaseFieldParams& params() const { return params_; }
  const StiffnessVoigt& stiffness() const { return elastic_.stiffness(); }
  const std::vector<int>& damaged_nodes() const { return damaged_; }

  /// w = 0, H = 0 and d solving the phase-field equation with H = 0 (zero
  /// unless initial crack damage is enabled).
  PhaseFieldState initial_state();

  /// One load level of the staggered scheme, updating `state` in place.
  StaggeredResult staggered_step(PhaseFieldState& state, const ConstraintMap& constraints);

  ElementField degradation(const ScalarField& d) const;
  double bulk_energy(const PhaseFieldState& state) const;
  double fracture_energy(const PhaseFieldState& state) const;
  Eigen::Vector2d boundary_force(const PhaseFieldState& state, const std::string& tag) const;

 private:
  Mesh mesh_;
  MaterialSpec spec_;
  PhaseFieldParams params_;
  std::vector<int> damaged_;
  ElasticitySolver elastic_;
  PhaseFieldSolver pf_;
};

struct Scenario;
struct StepRecord;
struct FieldSnapshot;
using StepObserver = std::function<void(const StepRecord&, const FieldSnapshot&)>;

/// Load-stepping driver for the phase-field method.
std::vector<StepRecord> run_phasefield(const Scenario& scenario, const Mesh& mesh,
                                       const StepObserver& observer = {});

}  // namespace crackopt

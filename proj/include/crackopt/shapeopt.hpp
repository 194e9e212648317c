#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "crackopt/elasticity.hpp"
#include "crackopt/fem.hpp"
#include "crackopt/material.hpp"
#include "crackopt/mesh.hpp"

namespace crackopt {

/// Which crack nodes may move (the rest of the boundary is clamped).
struct ActiveRegion {
  enum class Kind { All, XGreaterThan, TipArclength };
  Kind kind = Kind::All;
  double value = 0.0;
};

struct ShapeOptParams {
  double volume_weight = 0.0;  // nu, N/mm^2
  double step_size = 1e-2;     // tau
  int max_inner_iters = 5000;  // k_max
  double eikonal_eps = 2e-3;
  double lambda_tilde = 10.0;
  double mu_tilde_crack = 5.0;
  double mu_tilde_outer = 1.0;
  ActiveRegion active;
  /// Tip release threshold (0 disables): the interior node in front of a
  /// crack tip becomes the new tip once its distance to the tip falls below
  /// this fraction of its mean distance to its other neighbours.
  double tip_release = 0.0;

  void validate() const;
};

/// Marks curve nodes as active according to `region`, evaluated on `mesh`.
void mark_active(std::vector<CrackCurve>& curves, const Mesh& mesh, const ActiveRegion& region);

/// Per node: may the node move? Interior nodes and active crack nodes can.
std::vector<bool> movable_nodes(const Mesh& mesh, const std::vector<CrackCurve>& curves);

struct ShapeObjective {
  double e_bulk = 0.0;
  double e_frac = 0.0;
  double e_vol = 0.0;
  double total = 0.0;
};

/// Gc times the crack length; each curve traces both faces of its crack, so
/// the crack length is half the curve length.
double fracture_energy(const Mesh& mesh, const std::vector<CrackCurve>& curves, double gc);

ShapeObjective objective(const Mesh& mesh, const StiffnessVoigt& c, const VectorField& w,
                         const std::vector<CrackCurve>& curves, double gc,
                         const ShapeOptParams& params);

/// Directional shape derivative dJ[W] of the objective at the state w.
/// Volume term in the energy-momentum form, crack term as the first
/// variation of the face polylines, volume penalty as a boundary flux.
double shape_derivative(const Mesh& mesh, const StiffnessVoigt& c, const VectorField& w,
                        const std::vector<CrackCurve>& curves, double gc,
                        const ShapeOptParams& params, const VectorField& W);

/// Nodal load vector r with r.W = dJ[W] for every P1 vector field W.
VectorField assemble_shape_gradient_rhs(const Mesh& mesh, const StiffnessVoigt& c,
                                        const VectorField& w,
                                        const std::vector<CrackCurve>& curves, double gc,
                                        const ShapeOptParams& params);

/// Second Lame parameter of the deformation metric: harmonic extension of
/// mu_crack on crack nodes and mu_outer on the remaining boundary, averaged
/// per element.
ElementField lame_extension(const Mesh& mesh, const std::vector<CrackCurve>& curves,
                            double mu_crack = 5.0, double mu_outer = 1.0);

/// Solves a(V, W) = rhs.W with an isotropic elasticity form (lambda_tilde,
/// elementwise mu) and V = 0 on all nodes that are not movable.
class DeformationSolver {
 public:
  explicit DeformationSolver(const Mesh& mesh);
  VectorField solve(const Mesh& mesh, const std::vector<bool>& movable, double lambda_tilde,
                    const ElementField& mu, const VectorField& rhs);

 private:
  Assembler assembler_;
  LinearSolver solver_;
};

VectorField solve_deformation(const Mesh& mesh, const std::vector<CrackCurve>& curves,
                              const ShapeOptParams& params, const VectorField& rhs);

struct EikonalResult {
  ScalarField phi;
  int iterations = 0;
  double residual = 0.0;
};

/// Stabilized Eikonal problem -eps Lap(phi) + |grad phi| = 1, phi = 0 on the
/// crack curves, natural condition elsewhere; damped Newton. Without an
/// initial guess the iteration starts from the linear transport problem
/// -eps Lap(phi) + b.grad(phi) = 1, b the unit gradient of the solution of
/// -Lap(phi) = 1. Throws SolverError after 100 iterations.
class EikonalSolver {
 public:
  explicit EikonalSolver(const Mesh& mesh);
  /// A warm start from `initial` that fails to converge is retried from
  /// the transport guess.
  EikonalResult solve(const Mesh& mesh, const std::vector<CrackCurve>& curves, double eps,
                      const ScalarField* initial = nullptr);

 private:
  EikonalResult newton(const Mesh& mesh, const std::vector<CrackCurve>& curves, double eps,
                       const ScalarField* initial);

  Assembler assembler_;
  LinearSolver sym_;
  LinearSolver lu_;
};

EikonalResult solve_eikonal(const Mesh& mesh, const std::vector<CrackCurve>& curves, double eps,
                            const ScalarField* initial = nullptr);

/// N = grad(phi), projected to nodes by area weighting (not renormalized).
VectorField extend_normal(const Mesh& mesh, const ScalarField& phi);

/// Zeroes V at nodes where V.N > 0 and at nodes that may not move.
VectorField project_irreversible(const VectorField& V, const VectorField& N,
                                 const std::vector<bool>& movable);

/// One crack-tip release. `tip` keeps the elements on the side of the curve
/// before it, `twin` (new, same position) takes the others and `ahead`
/// becomes the new tip.
struct TipRelease {
  int tip = -1;
  int ahead = -1;
  int twin = -1;
};

/// Splits the edge between the tip of each curve and the interior node in
/// front of it when that node is closer than `ratio` times its mean distance
/// to its other neighbours. Existing node indices are kept and twins are
/// appended. Nodes on the boundary are never released, so the body is not
/// separated. Returns the releases made (at most one per curve).
std::vector<TipRelease> release_crack_tips(Mesh& mesh, std::vector<CrackCurve>& curves,
                                           double ratio);

/// Outcome of the projected descent at one load level.
struct DescentResult {
  int accepted = 0;
  int iterations = 0;
  int releases = 0;
  /// Degenerate: the trial mesh is valid but its state system is singular.
  enum class Stop { NoIncrease, Inversion, Degenerate, ZeroDirection, IterationLimit } stop =
      Stop::NoIncrease;
};

/// Projected shape-gradient descent on a mesh whose crack curves are part of
/// the boundary. The mesh moves; its topology only changes through tip
/// releases (when enabled).
class ShapeOptimizer {
 public:
  ShapeOptimizer(const Mesh& mesh, const MaterialSpec& spec, const ShapeOptParams& params,
                 std::vector<CrackCurve> curves);

  const Mesh& mesh() const { return mesh_; }
  const VectorField& displacement() const { return w_; }
  const std::vector<CrackCurve>& curves() const { return curves_; }
  const std::vector<bool>& movable() const { return movable_; }
  const StiffnessVoigt& stiffness() const { return c_; }
  const ShapeObjective& current_objective() const { return j_; }
  const ScalarField& phi() const { return phi_; }
  const VectorField& normal() const { return normal_; }
  const VectorField& direction() const { return v_; }
  const ElementField& mu_tilde() const { return mu_; }

  /// Solves the state for the given constraints on the current mesh.
  void set_load(const ConstraintMap& constraints);

  /// Inner loop at the current load: step with -tau V while J strictly
  /// decreases. `on_accept`, if given, sees each accepted objective. Tip
  /// releases happen between steps and may raise J.
  DescentResult descend(const std::function<void(const ShapeObjective&)>& on_accept = {});

  ShapeObjective evaluate(const Mesh& mesh, const VectorField& w) const;

 private:
  bool release_tips();

  Mesh mesh_;
  MaterialSpec spec_;
  StiffnessVoigt c_;
  ShapeOptParams params_;
  std::vector<CrackCurve> curves_;
  std::vector<bool> movable_;
  ConstraintMap constraints_;
  ElasticitySolver state_solver_;
  DeformationSolver deformation_;
  EikonalSolver eikonal_;
  Assembler laplace_;
  LinearSolver laplace_solver_;
  VectorField w_;
  ShapeObjective j_;
  ScalarField phi_;
  VectorField normal_;
  VectorField v_;
  ElementField mu_;
};

struct Scenario;
struct StepRecord;
struct FieldSnapshot;
using StepObserver = std::function<void(const StepRecord&, const FieldSnapshot&)>;

/// Load-stepping driver for the shape-optimization method.
std::vector<StepRecord> run_shapeopt(const Scenario& scenario, const Mesh& mesh,
                                     const StepObserver& observer = {});

}  // namespace crackopt

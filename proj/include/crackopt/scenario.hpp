#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "crackopt/elasticity.hpp"
#include "crackopt/material.hpp"
#include "crackopt/mesh.hpp"
#include "crackopt/phasefield.hpp"
#include "crackopt/shapeopt.hpp"

namespace crackopt {

enum class Method { PhaseField, ShapeOpt };

/// Displacement-controlled schedule: load level n is n * increment for
/// n = 1 .. floor(max / increment).
struct LoadSchedule {
  /// Boundary whose reaction force is recorded.
  std::string tag;
  double increment = 0.0;  // mm
  double max = 0.0;        // mm

  int steps() const {
    if (!(increment > 0.0) || !(max > 0.0)) return 0;
    return static_cast<int>(std::floor(max / increment + 1e-9));
  }
  double wbar(int step) const { return step * increment; }
};

struct OutputOptions {
  std::string directory;
  /// Write field snapshots every N steps (0 disables snapshots).
  int snapshot_every = 0;
  bool polylines = true;
};

struct Scenario {
  std::string name;
  std::string mesh_path;
  Method method = Method::PhaseField;
  MaterialSpec material;
  /// Kinematic assumption recorded with the run; only plane strain is built.
  std::string kinematics = "plane_strain";
  std::optional<PhaseFieldParams> phasefield;
  std::optional<ShapeOptParams> shapeopt;
  std::vector<DirichletCondition> conditions;
  LoadSchedule load;
  OutputOptions output;
  /// Truncates the schedule when non-negative.
  int max_steps = -1;

  int step_count() const {
    const int n = load.steps();
    return max_steps >= 0 ? std::min(n, max_steps) : n;
  }
};

struct StepRecord {
  int step = 0;
  double wbar = 0.0;
  Eigen::Vector2d force = Eigen::Vector2d::Zero();
  double e_bulk = 0.0;
  double e_frac = 0.0;
  double e_vol = 0.0;
  double e_total = 0.0;
  // phase-field diagnostics
  int stag_iters = 0;
  double errornorm = 0.0;
  double clamp = 0.0;
  // shape-optimization diagnostics
  int inner_iters = 0;
  double crack_length = 0.0;
  /// Current crack curves (shape optimization only).
  std::vector<std::vector<Point>> crack_polylines;
};

/// Non-owning view of the fields available after a load step.
struct FieldSnapshot {
  const Mesh* mesh = nullptr;
  std::vector<std::pair<std::string, const Eigen::VectorXd*>> point_scalars;
  std::vector<std::pair<std::string, const Eigen::VectorXd*>> point_vectors;
  std::vector<std::pair<std::string, const Eigen::VectorXd*>> cell_scalars;
};

}  // namespace crackopt

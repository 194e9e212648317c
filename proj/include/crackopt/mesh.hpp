#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace crackopt {

using Point = Eigen::Vector2d;
using Triangle = std::array<int, 3>;

/// Nodal scalar coefficients (one per node).
using ScalarField = Eigen::VectorXd;
/// Nodal vector coefficients, interleaved as (x0, y0, x1, y1, ...).
using VectorField = Eigen::VectorXd;
/// Piecewise constant coefficients (one per triangle).
using ElementField = Eigen::VectorXd;

/// A boundary edge oriented so that the material lies on its left.
struct BoundaryEdge {
  int a = 0;
  int b = 0;
  std::string tag;
};

/// Connectivity shared between a mesh and all meshes deformed from it.
struct MeshTopology {
  std::vector<Triangle> triangles;
  std::vector<BoundaryEdge> boundary_edges;
  /// Boundary-edge indices incident to each node (empty for interior nodes).
  std::vector<std::vector<int>> node_boundary_edges;
  std::vector<bool> on_boundary;
};

/// Triangulated planar domain. Immutable; deformation yields a new mesh that
/// shares the topology of the original.
class Mesh {
 public:
  /// Validates the input and orients boundary edges. Throws MeshError naming
  /// the offending element or node.
  Mesh(std::vector<Point> nodes, std::vector<Triangle> triangles,
       std::vector<BoundaryEdge> boundary_edges);

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t element_count() const { return topo_->triangles.size(); }

  const std::vector<Point>& nodes() const { return nodes_; }
  const Point& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  const std::vector<Triangle>& triangles() const { return topo_->triangles; }
  const Triangle& triangle(int e) const {
    return topo_->triangles[static_cast<std::size_t>(e)];
  }
  const std::vector<BoundaryEdge>& boundary_edges() const {
    return topo_->boundary_edges;
  }
  const std::shared_ptr<const MeshTopology>& topology() const { return topo_; }
  bool on_boundary(int node) const {
    return topo_->on_boundary[static_cast<std::size_t>(node)];
  }

  double signed_area(int e) const;
  double total_area() const;

  bool has_tag(std::string_view tag) const;
  /// Distinct edge tags in first-appearance order.
  std::vector<std::string> tags() const;
  /// Sorted node indices touched by edges carrying `tag`.
  std::vector<int> nodes_with_tag(std::string_view tag) const;
  /// Index of the node closest to `p`.
  int nearest_node(const Point& p) const;

  /// Same topology, new coordinates. Throws InversionError if any triangle
  /// ends up with non-positive area.
  Mesh with_nodes(std::vector<Point> nodes) const;

 private:
  Mesh(std::shared_ptr<const MeshTopology> topo, std::vector<Point> nodes);
  void check_areas() const;

  std::shared_ptr<const MeshTopology> topo_;
  std::vector<Point> nodes_;
};

enum class MeshFormat { Native };

Mesh load_mesh(const std::string& path, MeshFormat format = MeshFormat::Native);
Mesh read_mesh(std::istream& in);
void write_mesh(std::ostream& out, const Mesh& mesh);
void save_mesh(const std::string& path, const Mesh& mesh);

/// x <- x + tau * V(x) for every node.
Mesh deform(const Mesh& mesh, const VectorField& V, double tau);

struct QualityReport {
  double min_angle_deg = 0.0;
  double min_area = 0.0;
  /// Longest edge times perimeter over 4*sqrt(3)*area; 1 for equilateral.
  double aspect_max = 0.0;
};

QualityReport quality_report(const Mesh& mesh);

/// Open crack curve lying on the boundary, as an ordered node path that
/// follows the boundary orientation.
struct CrackCurve {
  std::vector<int> path;
  /// Path positions where one smooth piece ends and the next starts.
  std::vector<int> segment_breaks;
  /// Per path node: true if the node belongs to the moving part of the curve.
  std::vector<bool> active;

  std::size_t size() const { return path.size(); }
  int start() const { return path.front(); }
  int end() const { return path.back(); }
};

/// Chains every boundary edge whose tag begins with `tag_prefix` into open
/// curves. Each connected chain becomes one curve; all nodes start active.
std::vector<CrackCurve> extract_crack_curves(const Mesh& mesh,
                                             std::string_view tag_prefix = "crack");

std::vector<Point> curve_points(const CrackCurve& curve, const Mesh& mesh);

double polyline_length(std::span<const Point> pts);
double curve_length(const CrackCurve& curve, const Mesh& mesh);

/// Signed turning angle over mean adjacent segment length at interior
/// vertices (positive for left turns), zero at the two ends.
std::vector<double> polyline_curvature(std::span<const Point> pts);
std::vector<double> discrete_curvature(const CrackCurve& curve, const Mesh& mesh);

/// Crack tip: the curve node farthest from the midpoint of the endpoints.
int crack_tip(const CrackCurve& curve, const Mesh& mesh);

}  // namespace crackopt

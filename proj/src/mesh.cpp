#include "crackopt/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "crackopt/errors.hpp"

namespace crackopt {

namespace {

double cross(const Point& u, const Point& v) { return u.x() * v.y() - u.y() * v.x(); }

double triangle_signed_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * cross(b - a, c - a);
}

std::uint64_t edge_key(int a, int b) {
  const auto lo = static_cast<std::uint64_t>(std::min(a, b));
  const auto hi = static_cast<std::uint64_t>(std::max(a, b));
  return (lo << 32) | hi;
}

struct EdgeUse {
  int count = 0;
  int from = 0;  // orientation as seen by the (first) owning triangle
  int to = 0;
};

std::string edge_name(int a, int b) {
  return "(" + std::to_string(a) + ", " + std::to_string(b) + ")";
}

}  // namespace

Mesh::Mesh(std::vector<Point> nodes, std::vector<Triangle> triangles,
           std::vector<BoundaryEdge> boundary_edges)
    : nodes_(std::move(nodes)) {
  const int n = static_cast<int>(nodes_.size());
  for (int i = 0; i < n; ++i) {
    if (!nodes_[static_cast<std::size_t>(i)].allFinite()) {
      throw MeshError("node " + std::to_string(i) + " has non-finite coordinates");
    }
  }

  std::unordered_map<std::uint64_t, EdgeUse> edges;
  edges.reserve(triangles.size() * 2);
  for (std::size_t e = 0; e < triangles.size(); ++e) {
    const auto& t = triangles[e];
    for (int k = 0; k < 3; ++k) {
      if (t[k] < 0 || t[k] >= n) {
        throw MeshError("element " + std::to_string(e) + " references node " +
                        std::to_string(t[k]) + " out of range");
      }
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      throw MeshError("element " + std::to_string(e) + " repeats a node");
    }
    const double area = triangle_signed_area(nodes_[t[0]], nodes_[t[1]], nodes_[t[2]]);
    if (!(area > 0.0)) {
      throw MeshError("element " + std::to_string(e) +
                      " is inverted or degenerate (signed area " + std::to_string(area) + ")");
    }
    for (int k = 0; k < 3; ++k) {
      const int a = t[k];
      const int b = t[(k + 1) % 3];
      auto& use = edges[edge_key(a, b)];
      if (use.count == 0) {
        use.from = a;
        use.to = b;
      }
      if (++use.count > 2) {
        throw MeshError("edge " + edge_name(a, b) + " is shared by more than two elements (element " +
                        std::to_string(e) + ")");
      }
    }
  }

  auto topo = std::make_shared<MeshTopology>();
  topo->triangles = std::move(triangles);
  topo->node_boundary_edges.resize(static_cast<std::size_t>(n));
  topo->on_boundary.assign(static_cast<std::size_t>(n), false);

  std::unordered_map<std::uint64_t, int> listed;
  for (std::size_t i = 0; i < boundary_edges.size(); ++i) {
    auto& be = boundary_edges[i];
    if (be.a < 0 || be.a >= n || be.b < 0 || be.b >= n) {
      throw MeshError("boundary edge " + std::to_string(i) + " references a node out of range");
    }
    if (be.tag.empty()) {
      throw MeshError("boundary edge " + std::to_string(i) + " has no tag");
    }
    const auto key = edge_key(be.a, be.b);
    const auto it = edges.find(key);
    if (it == edges.end()) {
      throw MeshError("boundary edge " + edge_name(be.a, be.b) + " is not an element edge");
    }
    if (it->second.count != 1) {
      throw MeshError("boundary edge " + edge_name(be.a, be.b) + " is an interior edge");
    }
    if (!listed.emplace(key, static_cast<int>(i)).second) {
      throw MeshError("boundary edge " + edge_name(be.a, be.b) + " is listed twice");
    }
    be.a = it->second.from;
    be.b = it->second.to;
  }
  for (const auto& [key, use] : edges) {
    if (use.count == 1 && !listed.contains(key)) {
      throw MeshError("boundary edge " + edge_name(use.from, use.to) + " carries no tag");
    }
  }

  topo->boundary_edges = std::move(boundary_edges);
  for (std::size_t i = 0; i < topo->boundary_edges.size(); ++i) {
    const auto& be = topo->boundary_edges[i];
    topo->node_boundary_edges[static_cast<std::size_t>(be.a)].push_back(static_cast<int>(i));
    topo->node_boundary_edges[static_cast<std::size_t>(be.b)].push_back(static_cast<int>(i));
    topo->on_boundary[static_cast<std::size_t>(be.a)] = true;
    topo->on_boundary[static_cast<std::size_t>(be.b)] = true;
  }
  for (int i = 0; i < n; ++i) {
    const auto deg = topo->node_boundary_edges[static_cast<std::size_t>(i)].size();
    if (deg != 0 && deg != 2) {
      throw MeshError("non-manifold boundary at node " + std::to_string(i) + " (" +
                      std::to_string(deg) + " boundary edges)");
    }
  }
  topo_ = std::move(topo);
}

Mesh::Mesh(std::shared_ptr<const MeshTopology> topo, std::vector<Point> nodes)
    : topo_(std::move(topo)), nodes_(std::move(nodes)) {}

double Mesh::signed_area(int e) const {
  const auto& t = triangle(e);
  return triangle_signed_area(nodes_[t[0]], nodes_[t[1]], nodes_[t[2]]);
}

double Mesh::total_area() const {
  double sum = 0.0;
  for (int e = 0; e < static_cast<int>(element_count()); ++e) sum += signed_area(e);
  return sum;
}

bool Mesh::has_tag(std::string_view tag) const {
  return std::any_of(boundary_edges().begin(), boundary_edges().end(),
                     [&](const BoundaryEdge& be) { return be.tag == tag; });
}

std::vector<std::string> Mesh::tags() const {
  std::vector<std::string> out;
  for (const auto& be : boundary_edges()) {
    if (std::find(out.begin(), out.end(), be.tag) == out.end()) out.push_back(be.tag);
  }
  return out;
}

std::vector<int> Mesh::nodes_with_tag(std::string_view tag) const {
  std::vector<int> out;
  for (const auto& be : boundary_edges()) {
    if (be.tag == tag) {
      out.push_back(be.a);
      out.push_back(be.b);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

int Mesh::nearest_node(const Point& p) const {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const double d = (nodes_[i] - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

void Mesh::check_areas() const {
  for (int e = 0; e < static_cast<int>(element_count()); ++e) {
    if (!(signed_area(e) > 0.0)) {
      throw InversionError("element " + std::to_string(e) + " inverted by mesh update", e);
    }
  }
}

Mesh Mesh::with_nodes(std::vector<Point> nodes) const {
  if (nodes.size() != nodes_.size()) {
    throw std::invalid_argument("with_nodes: node count mismatch");
  }
  Mesh out(topo_, std::move(nodes));
  out.check_areas();
  return out;
}

Mesh deform(const Mesh& mesh, const VectorField& V, double tau) {
  if (V.size() != 2 * static_cast<Eigen::Index>(mesh.node_count())) {
    throw std::invalid_argument("deform: vector field size does not match the mesh");
  }
  if (tau < 0.0) throw std::invalid_argument("deform: negative step size");
  std::vector<Point> nodes = mesh.nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    nodes[i] += tau * V.segment<2>(2 * static_cast<Eigen::Index>(i));
  }
  return mesh.with_nodes(std::move(nodes));
}

// ---------------------------------------------------------------------------
// I/O

namespace {

std::string expect_header(std::istream& in, const std::string& keyword, std::size_t& count,
                          int& line_no) {
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    if (word != keyword || !(ls >> count)) {
      throw MeshError("line " + std::to_string(line_no) + ": expected '" + keyword + " <count>'");
    }
    return word;
  }
  throw MeshError("unexpected end of file, expected '" + keyword + "'");
}

std::istringstream next_record(std::istream& in, int& line_no, const char* what) {
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    return std::istringstream(line);
  }
  throw MeshError(std::string("unexpected end of file while reading ") + what);
}

}  // namespace

Mesh read_mesh(std::istream& in) {
  int line_no = 0;
  std::size_t count = 0;

  expect_header(in, "nodes", count, line_no);
  std::vector<Point> nodes(count);
  for (auto& p : nodes) {
    auto ls = next_record(in, line_no, "nodes");
    if (!(ls >> p.x() >> p.y())) {
      throw MeshError("line " + std::to_string(line_no) + ": malformed node record");
    }
  }

  expect_header(in, "triangles", count, line_no);
  std::vector<Triangle> tris(count);
  for (auto& t : tris) {
    auto ls = next_record(in, line_no, "triangles");
    if (!(ls >> t[0] >> t[1] >> t[2])) {
      throw MeshError("line " + std::to_string(line_no) + ": malformed triangle record");
    }
  }

  expect_header(in, "edges", count, line_no);
  std::vector<BoundaryEdge> edges(count);
  for (auto& be : edges) {
    auto ls = next_record(in, line_no, "edges");
    if (!(ls >> be.a >> be.b >> be.tag)) {
      throw MeshError("line " + std::to_string(line_no) + ": malformed edge record");
    }
  }
  return Mesh(std::move(nodes), std::move(tris), std::move(edges));
}

Mesh load_mesh(const std::string& path, MeshFormat format) {
  if (format != MeshFormat::Native) throw MeshError("unsupported mesh format");
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file '" + path + "'");
  try {
    return read_mesh(in);
  } catch (const MeshError& e) {
    throw MeshError(path + ": " + e.what());
  }
}

void write_mesh(std::ostream& out, const Mesh& mesh) {
  out << std::setprecision(17);
  out << "nodes " << mesh.node_count() << '\n';
  for (const auto& p : mesh.nodes()) out << p.x() << ' ' << p.y() << '\n';
  out << "triangles " << mesh.element_count() << '\n';
  for (const auto& t : mesh.triangles()) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "edges " << mesh.boundary_edges().size() << '\n';
  for (const auto& be : mesh.boundary_edges()) out << be.a << ' ' << be.b << ' ' << be.tag << '\n';
}

void save_mesh(const std::string& path, const Mesh& mesh) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write mesh file '" + path + "'");
  write_mesh(out, mesh);
}

// ---------------------------------------------------------------------------
// Quality

QualityReport quality_report(const Mesh& mesh) {
  QualityReport r;
  r.min_angle_deg = 180.0;
  r.min_area = std::numeric_limits<double>::infinity();
  for (int e = 0; e < static_cast<int>(mesh.element_count()); ++e) {
    const auto& t = mesh.triangle(e);
    const Point& a = mesh.node(t[0]);
    const Point& b = mesh.node(t[1]);
    const Point& c = mesh.node(t[2]);
    const std::array<double, 3> len = {(b - c).norm(), (c - a).norm(), (a - b).norm()};
    const double area = mesh.signed_area(e);
    for (int k = 0; k < 3; ++k) {
      const double opp = len[k];
      const double s1 = len[(k + 1) % 3];
      const double s2 = len[(k + 2) % 3];
      const double cosang = std::clamp((s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2), -1.0, 1.0);
      r.min_angle_deg = std::min(r.min_angle_deg, std::acos(cosang) * 180.0 / std::numbers::pi);
    }
    r.min_area = std::min(r.min_area, area);
    const double lmax = *std::max_element(len.begin(), len.end());
    const double perim = len[0] + len[1] + len[2];
    r.aspect_max = std::max(r.aspect_max, lmax * perim / (4.0 * std::sqrt(3.0) * area));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Crack curves

std::vector<CrackCurve> extract_crack_curves(const Mesh& mesh, std::string_view tag_prefix) {
  const auto n = mesh.node_count();
  std::vector<int> next(n, -1);
  std::vector<int> prev(n, -1);
  for (const auto& be : mesh.boundary_edges()) {
    if (be.tag.rfind(tag_prefix, 0) != 0) continue;
    next[static_cast<std::size_t>(be.a)] = be.b;
    prev[static_cast<std::size_t>(be.b)] = be.a;
  }
  std::vector<bool> used(n, false);
  std::vector<CrackCurve> curves;
  auto trace = [&](int start) {
    CrackCurve c;
    int cur = start;
    c.path.push_back(cur);
    used[static_cast<std::size_t>(cur)] = true;
    while (next[static_cast<std::size_t>(cur)] >= 0) {
      cur = next[static_cast<std::size_t>(cur)];
      c.path.push_back(cur);
      if (used[static_cast<std::size_t>(cur)]) break;  // closed chain
      used[static_cast<std::size_t>(cur)] = true;
    }
    for (int i = 1; i + 1 < static_cast<int>(c.path.size()); ++i) c.segment_breaks.push_back(i);
    c.active.assign(c.path.size(), true);
    curves.push_back(std::move(c));
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (next[i] >= 0 && prev[i] < 0) trace(static_cast<int>(i));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (next[i] >= 0 && !used[i]) trace(static_cast<int>(i));
  }
  return curves;
}

std::vector<Point> curve_points(const CrackCurve& curve, const Mesh& mesh) {
  std::vector<Point> pts;
  pts.reserve(curve.path.size());
  for (int i : curve.path) pts.push_back(mesh.node(i));
  return pts;
}

double polyline_length(std::span<const Point> pts) {
  double len = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) len += (pts[i] - pts[i - 1]).norm();
  return len;
}

double curve_length(const CrackCurve& curve, const Mesh& mesh) {
  const auto pts = curve_points(curve, mesh);
  return polyline_length(pts);
}

std::vector<double> polyline_curvature(std::span<const Point> pts) {
  if (pts.size() < 3) throw std::invalid_argument("curvature needs at least three points");
  std::vector<double> kappa(pts.size(), 0.0);
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    const Point t0 = pts[i] - pts[i - 1];
    const Point t1 = pts[i + 1] - pts[i];
    const double l0 = t0.norm();
    const double l1 = t1.norm();
    if (l0 == 0.0 || l1 == 0.0) {
      throw Error("zero-length segment at curve vertex " + std::to_string(i));
    }
    const double angle = std::atan2(cross(t0, t1), t0.dot(t1));
    kappa[i] = angle / (0.5 * (l0 + l1));
  }
  return kappa;
}

std::vector<double> discrete_curvature(const CrackCurve& curve, const Mesh& mesh) {
  const auto pts = curve_points(curve, mesh);
  return polyline_curvature(pts);
}

int crack_tip(const CrackCurve& curve, const Mesh& mesh) {
  const Point mouth = 0.5 * (mesh.node(curve.start()) + mesh.node(curve.end()));
  int best = curve.start();
  double best_d = -1.0;
  for (int i : curve.path) {
    const double d = (mesh.node(i) - mouth).squaredNorm();
    if (d > best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

}  // namespace crackopt

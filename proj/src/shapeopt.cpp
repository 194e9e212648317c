#include "crackopt/shapeopt.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include <Eigen/Dense>

#include "crackopt/errors.hpp"
#include "crackopt/scenario.hpp"

namespace crackopt {

void ShapeOptParams::validate() const {
  if (!std::isfinite(volume_weight) || volume_weight < 0.0) {
    throw ConfigError("volume weight must be finite and non-negative");
  }
  if (!(step_size > 0.0)) throw ConfigError("shape-optimization step size must be positive");
  if (max_inner_iters <= 0) throw ConfigError("maximum inner iterations must be positive");
  if (!(eikonal_eps > 0.0)) throw ConfigError("Eikonal stabilization must be positive");
  if (!(lambda_tilde > 0.0) || !(mu_tilde_crack > 0.0) || !(mu_tilde_outer > 0.0)) {
    throw ConfigError("deformation Lame parameters must be positive");
  }
  if (!(tip_release >= 0.0 && tip_release < 1.0)) {
    throw ConfigError("tip release ratio must lie in [0, 1)");
  }
  if (active.kind != ActiveRegion::Kind::All && !std::isfinite(active.value)) {
    throw ConfigError("active crack region needs a finite value");
  }
}

namespace {

bool is_crack_tag(const std::string& tag) { return tag.rfind("crack", 0) == 0; }

Eigen::Matrix2d to_tensor(const Voigt& s) {
  Eigen::Matrix2d m;
  m << s(0), s(2), s(2), s(1);
  return m;
}

Eigen::Matrix2d displacement_gradient(const ElementGeometry& geo, const Triangle& t,
                                      const VectorField& w) {
  Eigen::Matrix2d g = Eigen::Matrix2d::Zero();
  for (int a = 0; a < 3; ++a) {
    g += w.segment<2>(2 * t[a]) * geo.grad[static_cast<std::size_t>(a)].transpose();
  }
  return g;
}

std::vector<Eigen::Vector2d> unit_tangents(const std::vector<Point>& pts) {
  std::vector<Eigen::Vector2d> t;
  t.reserve(pts.empty() ? 0 : pts.size() - 1);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const Eigen::Vector2d d = pts[i + 1] - pts[i];
    const double len = d.norm();
    if (!(len > 0.0)) throw Error("zero-length crack segment");
    t.push_back(d / len);
  }
  return t;
}

std::vector<bool> crack_node_mask(const Mesh& mesh, const std::vector<CrackCurve>& curves) {
  std::vector<bool> mask(mesh.node_count(), false);
  for (const auto& c : curves) {
    for (int n : c.path) mask[static_cast<std::size_t>(n)] = true;
  }
  return mask;
}

void check_curves(const std::vector<CrackCurve>& curves) {
  if (curves.empty()) throw Error("no crack curve given");
}

ElementField harmonic_extension(const Mesh& mesh, const std::vector<CrackCurve>& curves,
                                double mu_crack, double mu_outer, const Assembler& assembler,
                                LinearSolver& solver) {
  check_curves(curves);
  SparseSystem sys = assembler.assemble(mesh, [](int, const ElementGeometry& geo,
                                                 ElementMatrix& ke, ElementVector&) {
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        ke(a, b) = geo.area * geo.grad[static_cast<std::size_t>(a)].dot(
                                  geo.grad[static_cast<std::size_t>(b)]);
      }
    }
  });
  const std::vector<bool> crack = crack_node_mask(mesh, curves);
  for (int n = 0; n < static_cast<int>(mesh.node_count()); ++n) {
    if (crack[static_cast<std::size_t>(n)]) {
      sys.constrain(n, mu_crack);
    } else if (mesh.on_boundary(n)) {
      sys.constrain(n, mu_outer);
    }
  }
  apply_dirichlet(sys);
  const Eigen::VectorXd nodal = solver.solve(sys);
  ElementField mu(static_cast<Eigen::Index>(mesh.element_count()));
  for (int e = 0; e < static_cast<int>(mesh.element_count()); ++e) {
    mu(e) = element_mean(mesh, e, nodal);
  }
  return mu;
}

}  // namespace

void mark_active(std::vector<CrackCurve>& curves, const Mesh& mesh, const ActiveRegion& region) {
  for (auto& c : curves) {
    c.active.assign(c.size(), true);
    if (region.kind == ActiveRegion::Kind::XGreaterThan) {
      for (std::size_t i = 0; i < c.size(); ++i) c.active[i] = mesh.node(c.path[i]).x() > region.value;
    } else if (region.kind == ActiveRegion::Kind::TipArclength) {
      const int tip = crack_tip(c, mesh);
      std::vector<double> s(c.size(), 0.0);
      std::size_t tip_pos = 0;
      for (std::size_t i = 0; i < c.size(); ++i) {
        if (i > 0) s[i] = s[i - 1] + (mesh.node(c.path[i]) - mesh.node(c.path[i - 1])).norm();
        if (c.path[i] == tip) tip_pos = i;
      }
      for (std::size_t i = 0; i < c.size(); ++i) {
        c.active[i] = std::abs(s[i] - s[tip_pos]) <= region.value;
      }
    }
  }
}

std::vector<bool> movable_nodes(const Mesh& mesh, const std::vector<CrackCurve>& curves) {
  std::vector<bool> out(mesh.node_count(), false);
  for (int n = 0; n < static_cast<int>(mesh.node_count()); ++n) out[static_cast<std::size_t>(n)] = !mesh.on_boundary(n);
  const auto& topo = *mesh.topology();
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (!c.active.empty() && !c.active[i]) continue;
      const int n = c.path[i];
      bool only_crack = true;
      for (int be : topo.node_boundary_edges[static_cast<std::size_t>(n)]) {
        only_crack = only_crack && is_crack_tag(topo.boundary_edges[static_cast<std::size_t>(be)].tag);
      }
      if (only_crack) out[static_cast<std::size_t>(n)] = true;
    }
  }
  return out;
}

double fracture_energy(const Mesh& mesh, const std::vector<CrackCurve>& curves, double gc) {
  double len = 0.0;
  for (const auto& c : curves) len += curve_length(c, mesh);
  return 0.5 * gc * len;
}

ShapeObjective objective(const Mesh& mesh, const StiffnessVoigt& c, const VectorField& w,
                         const std::vector<CrackCurve>& curves, double gc,
                         const ShapeOptParams& params) {
  ShapeObjective j;
  j.e_bulk = bulk_energy(mesh, c, w);
  j.e_frac = fracture_energy(mesh, curves, gc);
  j.e_vol = params.volume_weight * mesh.total_area();
  j.total = j.e_bulk + j.e_frac + j.e_vol;
  return j;
}

double shape_derivative(const Mesh& mesh, const StiffnessVoigt& c, const VectorField& w,
                        const std::vector<CrackCurve>& curves, double gc,
                        const ShapeOptParams& params, const VectorField& W) {
  double bulk = 0.0;
  for (int e = 0; e < static_cast<int>(mesh.element_count()); ++e) {
    const auto geo = grad_basis(mesh, e);
    const auto& t = mesh.triangle(e);
    const Voigt eps = element_strain(geo, t, w);
    const Eigen::Matrix2d sigma = to_tensor(c.stress(eps));
    const Eigen::Matrix2d gw = displacement_gradient(geo, t, w);
    const Eigen::Matrix2d gW = displacement_gradient(geo, t, W);
    const Eigen::Matrix2d sym = 0.5 * (gw * gW + (gw * gW).transpose());
    bulk += geo.area * (-(sym.cwiseProduct(sigma)).sum() + gW.trace() * energy_density(c, eps));
  }

  double line = 0.0;
  for (const auto& curve : curves) {
    const auto pts = curve_points(curve, mesh);
    const auto tan = unit_tangents(pts);
    for (std::size_t i = 0; i < tan.size(); ++i) {
      const Eigen::Vector2d dW = W.segment<2>(2 * curve.path[i + 1]) - W.segment<2>(2 * curve.path[i]);
      line += tan[i].dot(dW);
    }
  }

  double flux = 0.0;
  if (params.volume_weight != 0.0) {
    for (const auto& be : mesh.boundary_edges()) {
      const Eigen::Vector2d d = mesh.node(be.b) - mesh.node(be.a);
      const Eigen::Vector2d n_len(d.y(), -d.x());
      flux += n_len.dot(0.5 * (W.segment<2>(2 * be.a) + W.segment<2>(2 * be.b)));
    }
  }
  return bulk + 0.5 * gc * line + params.volume_weight * flux;
}

VectorField assemble_shape_gradient_rhs(const Mesh& mesh, const StiffnessVoigt& c,
                                        const VectorField& w,
                                        const std::vector<CrackCurve>& curves, double gc,
                                        const ShapeOptParams& params) {
  VectorField r = VectorField::Zero(static_cast<Eigen::Index>(2 * mesh.node_count()));
  for (int e = 0; e < static_cast<int>(mesh.element_count()); ++e) {
    const auto geo = grad_basis(mesh, e);
    const auto& t = mesh.triangle(e);
    const Voigt eps = element_strain(geo, t, w);
    const Voigt sv = c.stress(eps);
    const Eigen::Matrix2d gw = displacement_gradient(geo, t, w);
    const Eigen::Matrix2d tensor = sv.dot(eps) * 0.5 * Eigen::Matrix2d::Identity() -
                                   gw.transpose() * to_tensor(sv) +
                                   params.volume_weight * Eigen::Matrix2d::Identity();
    for (int a = 0; a < 3; ++a) {
      r.segment<2>(2 * t[a]) += geo.area * tensor * geo.grad[static_cast<std::size_t>(a)];
    }
  }
  for (const auto& curve : curves) {
    const auto tan = unit_tangents(curve_points(curve, mesh));
    for (std::size_t i = 0; i < tan.size(); ++i) {
      r.segment<2>(2 * curve.path[i]) -= 0.5 * gc * tan[i];
      r.segment<2>(2 * curve.path[i + 1]) += 0.5 * gc * tan[i];
    }
  }
  return r;
}

ElementField lame_extension(const Mesh& mesh, const std::vector<CrackCurve>& curves,
                            double mu_crack, double mu_outer) {
  Assembler assembler(mesh, 1);
  LinearSolver solver;
  return harmonic_extension(mesh, curves, mu_crack, mu_outer, assembler, solver);
}

// ---------------------------------------------------------------------------

DeformationSolver::DeformationSolver(const Mesh& mesh) : assembler_(mesh, 2) {}

VectorField DeformationSolver::solve(const Mesh& mesh, const std::vector<bool>& movable,
                                     double lambda_tilde, const ElementField& mu,
                                     const VectorField& rhs) {
  if (mu.size() != static_cast<Eigen::Index>(mesh.element_count())) {
    throw Error("Lame field size does not match the mesh");
  }
  SparseSystem sys = assembler_.assemble(mesh, [&](int e, const ElementGeometry& geo,
                                                   ElementMatrix& ke, ElementVector&) {
    const Eigen::Matrix3d c = isotropic_stiffness(lambda_tilde, mu(e));
    Eigen::Matrix<double, 3, 6> b = Eigen::Matrix<double, 3, 6>::Zero();
    for (int a = 0; a < 3; ++a) {
      const auto& g = geo.grad[static_cast<std::size_t>(a)];
      b(0, 2 * a) = g.x();
      b(1, 2 * a + 1) = g.y();
      b(2, 2 * a) = g.y();
      b(2, 2 * a + 1) = g.x();
    }
    ke.noalias() = geo.area * (b.transpose() * c * b);
  });
  sys.rhs = rhs;
  for (int n = 0; n < static_cast<int>(mesh.node_count()); ++n) {
    if (movable[static_cast<std::size_t>(n)]) continue;
    sys.constrain(2 * n, 0.0);
    sys.constrain(2 * n + 1, 0.0);
  }
  apply_dirichlet(sys);
  return solver_.solve(sys);
}

VectorField solve_deformation(const Mesh& mesh, const std::vector<CrackCurve>& curves,
                              const ShapeOptParams& params, const VectorField& rhs) {
  const ElementField mu =
      lame_extension(mesh, curves, params.mu_tilde_crack, params.mu_tilde_outer);
  DeformationSolver solver(mesh);
  return solver.solve(mesh, movable_nodes(mesh, curves), params.lambda_tilde, mu, rhs);
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kEikonalTol = 1e-8;
constexpr int kEikonalMaxIters = 100;
constexpr double kGradientFloor = 1e-12;

Eigen::Vector2d element_gradient(const ElementGeometry& geo, const Triangle& t,
                                 const ScalarField& phi) {
  return phi(t[0]) * geo.grad[0] + phi(t[1]) * geo.grad[1] + phi(t[2]) * geo.grad[2];
}

double free_norm(Eigen::VectorXd r, const std::map<int, double>& constraints) {
  for (const auto& [dof, value] : constraints) r(dof) = 0.0;
  return r.norm();
}

}  // namespace

EikonalSolver::EikonalSolver(const Mesh& mesh) : assembler_(mesh, 1) {}

EikonalResult EikonalSolver::solve(const Mesh& mesh, const std::vector<CrackCurve>& curves,
                                   double eps, const ScalarField* initial) {
  if (initial != nullptr) {
    try {
      return newton(mesh, curves, eps, initial);
    } catch (const SolverError&) {
    }
  }
  return newton(mesh, curves, eps, nullptr);
}

EikonalResult EikonalSolver::newton(const Mesh& mesh, const std::vector<CrackCurve>& curves,
                                    double eps, const ScalarField* initial) {
  check_curves(curves);
  if (!(eps > 0.0)) throw Error("Eikonal stabilization must be positive");
  std::map<int, double> zero;
  for (const auto& c : curves) {
    for (int n : c.path) zero[n] = 0.0;
  }
  auto constrained = [&](SparseSystem sys, bool symmetric) {
    sys.symmetric = symmetric;
    sys.constraints = zero;
    apply_dirichlet(sys);
    return sys;
  };

  EikonalResult out;
  if (initial != nullptr && initial->size() == static_cast<Eigen::Index>(mesh.node_count())) {
    out.phi = *initial;
    for (const auto& [n, v] : zero) out.phi(n) = v;
  } else {
    const ScalarField poisson = sym_.solve(constrained(
        assembler_.assemble(mesh, [](int, const ElementGeometry& geo, ElementMatrix& ke,
                                     ElementVector& fe) {
          for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
              ke(a, b) = geo.area * geo.grad[static_cast<std::size_t>(a)].dot(
                                        geo.grad[static_cast<std::size_t>(b)]);
            }
            fe(a) = geo.area / 3.0;
          }
        }),
        true));
    // Transport along the Poisson gradient direction gives a guess with
    // unit slope.
    out.phi = lu_.solve(constrained(
        assembler_.assemble(mesh, [&](int e, const ElementGeometry& geo, ElementMatrix& ke,
                                      ElementVector& fe) {
          const Eigen::Vector2d g = element_gradient(geo, mesh.triangle(e), poisson);
          const double gn = g.norm();
          const Eigen::Vector2d dir = gn > kGradientFloor ? Eigen::Vector2d(g / gn)
                                                          : Eigen::Vector2d::Zero();
          for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
              const auto& gb = geo.grad[static_cast<std::size_t>(b)];
              ke(a, b) = eps * geo.area * geo.grad[static_cast<std::size_t>(a)].dot(gb) +
                         geo.area / 3.0 * dir.dot(gb);
            }
            fe(a) = geo.area / 3.0;
          }
        }),
        false));
  }

  // fe holds the negative residual, ke the Jacobian.
  auto newton_system = [&](const ScalarField& phi) {
    return assembler_.assemble(mesh, [&](int e, const ElementGeometry& geo, ElementMatrix& ke,
                                         ElementVector& fe) {
      const Eigen::Vector2d g = element_gradient(geo, mesh.triangle(e), phi);
      const double gn = std::sqrt(g.squaredNorm() + kGradientFloor * kGradientFloor);
      const Eigen::Vector2d dir = g / gn;
      for (int a = 0; a < 3; ++a) {
        const auto& ga = geo.grad[static_cast<std::size_t>(a)];
        for (int b = 0; b < 3; ++b) {
          const auto& gb = geo.grad[static_cast<std::size_t>(b)];
          ke(a, b) = eps * geo.area * ga.dot(gb) + geo.area / 3.0 * dir.dot(gb);
        }
        fe(a) = -(eps * geo.area * ga.dot(g) + geo.area / 3.0 * (gn - 1.0));
      }
    });
  };
  auto residual_norm = [&](const ScalarField& phi) {
    return free_norm(newton_system(phi).rhs, zero);
  };

  SparseSystem sys = newton_system(out.phi);
  out.residual = free_norm(sys.rhs, zero);
  while (!(out.residual < kEikonalTol)) {
    if (out.iterations == kEikonalMaxIters) {
      throw SolverError("Eikonal Newton iteration did not converge (residual " +
                        std::to_string(out.residual) + ")");
    }
    ++out.iterations;
    const ScalarField delta = lu_.solve(constrained(std::move(sys), false));
    double step = 1.0;
    ScalarField trial = out.phi + delta;
    double r = residual_norm(trial);
    while (!(r < out.residual) && step > 1e-10) {
      step *= 0.5;
      trial = out.phi + step * delta;
      r = residual_norm(trial);
    }
    if (!(r < out.residual)) {
      throw SolverError("Eikonal Newton line search failed (residual " +
                        std::to_string(out.residual) + ")");
    }
    out.phi = std::move(trial);
    sys = newton_system(out.phi);
    out.residual = free_norm(sys.rhs, zero);
  }
  return out;
}

EikonalResult solve_eikonal(const Mesh& mesh, const std::vector<CrackCurve>& curves, double eps,
                            const ScalarField* initial) {
  EikonalSolver solver(mesh);
  return solver.solve(mesh, curves, eps, initial);
}

VectorField extend_normal(const Mesh& mesh, const ScalarField& phi) {
  std::vector<Eigen::Vector2d> grads(mesh.element_count());
  for (int e = 0; e < static_cast<int>(mesh.element_count()); ++e) {
    grads[static_cast<std::size_t>(e)] = element_gradient(grad_basis(mesh, e), mesh.triangle(e), phi);
  }
  return project_to_nodes(mesh, grads);
}

VectorField project_irreversible(const VectorField& V, const VectorField& N,
                                 const std::vector<bool>& movable) {
  if (V.size() != N.size() || V.size() != 2 * static_cast<Eigen::Index>(movable.size())) {
    throw Error("field sizes do not match in projection");
  }
  VectorField out = V;
  for (std::size_t n = 0; n < movable.size(); ++n) {
    const auto i = static_cast<Eigen::Index>(2 * n);
    if (!movable[n] || V.segment<2>(i).dot(N.segment<2>(i)) > 0.0) out.segment<2>(i).setZero();
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Interior node in front of the tip at path position i that is due for
// release, or -1.
int release_candidate(const Mesh& mesh, const CrackCurve& c, std::size_t i,
                      const std::vector<std::vector<int>>& node_elems, double ratio) {
  const int tip = c.path[i];
  const Point& pt = mesh.node(tip);
  const Eigen::Vector2d u = (mesh.node(c.path[i - 1]) - pt).normalized();
  const Eigen::Vector2d l = (mesh.node(c.path[i + 1]) - pt).normalized();
  Eigen::Vector2d ahead = -(u + l);
  if (ahead.norm() < 1e-3) return -1;  // no corner: not a tip
  ahead.normalize();

  int best = -1;
  double best_q = ratio;
  for (int e : node_elems[static_cast<std::size_t>(tip)]) {
    for (int x : mesh.triangle(e)) {
      if (x == tip || mesh.on_boundary(x)) continue;
      const Eigen::Vector2d d = mesh.node(x) - pt;
      const double dist = d.norm();
      if (d.dot(ahead) <= 0.5 * dist) continue;
      double sum = 0.0;
      int count = 0;
      for (int f : node_elems[static_cast<std::size_t>(x)]) {
        for (int y : mesh.triangle(f)) {
          if (y == x || y == tip) continue;
          sum += (mesh.node(y) - mesh.node(x)).norm();
          ++count;
        }
      }
      // Each neighbour is seen from both elements sharing the edge; the mean
      // is unaffected.
      const double q = dist / (sum / count);
      if (q < best_q) {
        best_q = q;
        best = x;
      }
    }
  }
  return best;
}

}  // namespace

std::vector<TipRelease> release_crack_tips(Mesh& mesh, std::vector<CrackCurve>& curves,
                                           double ratio) {
  std::vector<TipRelease> out;
  if (!(ratio > 0.0)) return out;
  for (auto& c : curves) {
    std::vector<std::vector<int>> node_elems(mesh.node_count());
    for (int e = 0; e < static_cast<int>(mesh.element_count()); ++e) {
      for (int v : mesh.triangle(e)) node_elems[static_cast<std::size_t>(v)].push_back(e);
    }
    const int tip = crack_tip(c, mesh);
    const auto pos = static_cast<std::size_t>(
        std::find(c.path.begin(), c.path.end(), tip) - c.path.begin());
    if (pos == 0 || pos + 1 >= c.size()) continue;
    if (!c.active.empty() && !c.active[pos]) continue;
    const int x = release_candidate(mesh, c, pos, node_elems, ratio);
    if (x < 0) continue;

    // Walk the element fan around the tip from the edge (prev, tip) up to
    // the edge (tip, x); those elements keep the tip node.
    const int prev = c.path[pos - 1];
    const int next = c.path[pos + 1];
    const auto& fan = node_elems[static_cast<std::size_t>(tip)];
    auto third = [&](int e, int a) {
      for (int v : mesh.triangle(e)) {
        if (v != tip && v != a) return v;
      }
      return -1;
    };
    auto has = [&](int e, int v) {
      const auto& t = mesh.triangle(e);
      return t[0] == v || t[1] == v || t[2] == v;
    };
    std::vector<bool> keep(mesh.element_count(), false);
    int cur = -1;
    for (int e : fan) {
      if (has(e, prev)) cur = e;
    }
    int entry = prev;
    bool reached = false;
    for (std::size_t guard = 0; cur >= 0 && guard < fan.size(); ++guard) {
      keep[static_cast<std::size_t>(cur)] = true;
      const int exit = third(cur, entry);
      if (exit == x) {
        reached = true;
        break;
      }
      if (exit == next) break;
      int nxt = -1;
      for (int e : fan) {
        if (e != cur && has(e, exit)) nxt = e;
      }
      cur = nxt;
      entry = exit;
    }
    if (!reached) throw MeshError("crack tip " + std::to_string(tip) + " has a broken element fan");

    std::vector<Point> nodes = mesh.nodes();
    const int twin = static_cast<int>(nodes.size());
    nodes.push_back(nodes[static_cast<std::size_t>(tip)]);
    std::vector<Triangle> tris = mesh.triangles();
    for (int e : fan) {
      if (keep[static_cast<std::size_t>(e)]) continue;
      for (int& v : tris[static_cast<std::size_t>(e)]) {
        if (v == tip) v = twin;
      }
    }
    std::vector<BoundaryEdge> edges = mesh.boundary_edges();
    std::string tag_prev = "crack";
    std::string tag_next = "crack";
    for (auto& be : edges) {
      const bool with_prev = (be.a == tip && be.b == prev) || (be.a == prev && be.b == tip);
      const bool with_next = (be.a == tip && be.b == next) || (be.a == next && be.b == tip);
      if (with_prev) tag_prev = be.tag;
      if (with_next) {
        tag_next = be.tag;
        (be.a == tip ? be.a : be.b) = twin;
      }
    }
    edges.push_back({tip, x, tag_prev});
    edges.push_back({x, twin, tag_next});
    mesh = Mesh(std::move(nodes), std::move(tris), std::move(edges));

    c.path.insert(c.path.begin() + static_cast<std::ptrdiff_t>(pos) + 1, {x, twin});
    if (!c.active.empty()) {
      c.active.insert(c.active.begin() + static_cast<std::ptrdiff_t>(pos) + 1, 2, c.active[pos]);
    }
    c.segment_breaks.clear();
    for (int i = 1; i + 1 < static_cast<int>(c.size()); ++i) c.segment_breaks.push_back(i);
    out.push_back({tip, x, twin});
  }
  return out;
}

// ---------------------------------------------------------------------------

ShapeOptimizer::ShapeOptimizer(const Mesh& mesh, const MaterialSpec& spec,
                               const ShapeOptParams& params, std::vector<CrackCurve> curves)
    : mesh_(mesh),
      spec_(spec),
      c_(effective_stiffness(spec)),
      params_(params),
      curves_(std::move(curves)),
      movable_(movable_nodes(mesh, curves_)),
      state_solver_(mesh, c_),
      deformation_(mesh),
      eikonal_(mesh),
      laplace_(mesh, 1),
      w_(VectorField::Zero(static_cast<Eigen::Index>(2 * mesh.node_count()))) {
  params_.validate();
  check_curves(curves_);
  j_ = evaluate(mesh_, w_);
}

ShapeObjective ShapeOptimizer::evaluate(const Mesh& mesh, const VectorField& w) const {
  return objective(mesh, c_, w, curves_, spec_.gc, params_);
}

bool ShapeOptimizer::release_tips() {
  const auto released = release_crack_tips(mesh_, curves_, params_.tip_release);
  if (released.empty()) return false;
  if (phi_.size() > 0) {
    phi_.conservativeResize(static_cast<Eigen::Index>(mesh_.node_count()));
    for (const auto& r : released) phi_(r.twin) = phi_(r.tip);
  }
  movable_ = movable_nodes(mesh_, curves_);
  state_solver_ = ElasticitySolver(mesh_, c_);
  deformation_ = DeformationSolver(mesh_);
  eikonal_ = EikonalSolver(mesh_);
  laplace_ = Assembler(mesh_, 1);
  laplace_solver_ = LinearSolver();
  w_ = state_solver_.solve(mesh_, constraints_);
  j_ = evaluate(mesh_, w_);
  return true;
}

void ShapeOptimizer::set_load(const ConstraintMap& constraints) {
  constraints_ = constraints;
  w_ = state_solver_.solve(mesh_, constraints_);
  j_ = evaluate(mesh_, w_);
}

DescentResult ShapeOptimizer::descend(const std::function<void(const ShapeObjective&)>& on_accept) {
  DescentResult res;
  res.stop = DescentResult::Stop::IterationLimit;
  while (res.iterations < params_.max_inner_iters) {
    ++res.iterations;
    if (params_.tip_release > 0.0 && release_tips()) ++res.releases;
    const VectorField rhs = assemble_shape_gradient_rhs(mesh_, c_, w_, curves_, spec_.gc, params_);
    mu_ = harmonic_extension(mesh_, curves_, params_.mu_tilde_crack, params_.mu_tilde_outer,
                             laplace_, laplace_solver_);
    const VectorField v = deformation_.solve(mesh_, movable_, params_.lambda_tilde, mu_, rhs);
    const EikonalResult eik =
        eikonal_.solve(mesh_, curves_, params_.eikonal_eps, phi_.size() > 0 ? &phi_ : nullptr);
    phi_ = eik.phi;
    normal_ = extend_normal(mesh_, phi_);
    v_ = project_irreversible(v, normal_, movable_);
    if (v_.isZero(0.0)) {
      res.stop = DescentResult::Stop::ZeroDirection;
      break;
    }
    std::optional<Mesh> trial;
    try {
      trial.emplace(deform(mesh_, -v_, params_.step_size));
    } catch (const InversionError&) {
      res.stop = DescentResult::Stop::Inversion;
      break;
    }
    VectorField w;
    try {
      w = state_solver_.solve(*trial, constraints_);
    } catch (const SolverError&) {
      res.stop = DescentResult::Stop::Degenerate;
      break;
    }
    const ShapeObjective j = evaluate(*trial, w);
    if (!(j.total < j_.total)) {
      res.stop = DescentResult::Stop::NoIncrease;
      break;
    }
    mesh_ = std::move(*trial);
    w_ = std::move(w);
    j_ = j;
    ++res.accepted;
    if (on_accept) on_accept(j_);
  }
  return res;
}

// ---------------------------------------------------------------------------

std::vector<StepRecord> run_shapeopt(const Scenario& scenario, const Mesh& mesh,
                                     const StepObserver& observer) {
  if (!scenario.shapeopt) throw ConfigError("scenario has no shape-optimization parameters");
  const ShapeOptParams& params = *scenario.shapeopt;
  std::vector<CrackCurve> curves = extract_crack_curves(mesh);
  if (curves.empty()) throw ConfigError("mesh has no crack-tagged boundary edges");
  mark_active(curves, mesh, params.active);
  ShapeOptimizer opt(mesh, scenario.material, params, std::move(curves));

  std::vector<StepRecord> records;
  const int steps = scenario.step_count();
  for (int n = 1; n <= steps; ++n) {
    const double wbar = scenario.load.wbar(n);
    opt.set_load(resolve_constraints(mesh, scenario.conditions, wbar));
    const DescentResult dr = opt.descend();
    if (dr.stop == DescentResult::Stop::IterationLimit) {
      std::cerr << "warning: step " << n << " reached the inner iteration limit\n";
    }

    const ShapeObjective& j = opt.current_objective();
    StepRecord rec;
    rec.step = n;
    rec.wbar = wbar;
    rec.force = boundary_force(opt.mesh(), opt.stiffness(), opt.displacement(), scenario.load.tag);
    rec.e_bulk = j.e_bulk;
    rec.e_frac = j.e_frac;
    rec.e_vol = j.e_vol;
    rec.e_total = j.total;
    rec.inner_iters = dr.accepted;
    for (const auto& c : opt.curves()) {
      rec.crack_length += curve_length(c, opt.mesh());
      rec.crack_polylines.push_back(curve_points(c, opt.mesh()));
    }
    records.push_back(rec);
    if (observer) {
      FieldSnapshot snap;
      snap.mesh = &opt.mesh();
      snap.point_vectors = {{"w", &opt.displacement()}};
      if (opt.phi().size() > 0) {
        snap.point_scalars = {{"phi", &opt.phi()}};
        snap.point_vectors.emplace_back("V", &opt.direction());
        snap.point_vectors.emplace_back("N", &opt.normal());
        snap.cell_scalars = {{"mu_tilde", &opt.mu_tilde()}};
      }
      observer(records.back(), snap);
    }
  }
  return records;
}

}  // namespace crackopt

#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "crackopt/elasticity.hpp"
#include "crackopt/material.hpp"
#include "crackopt/mesh.hpp"
#include "fixtures.hpp"

namespace crackopt::testing {

inline double deg(double d) { return d * std::numbers::pi / 180.0; }

inline Mesh two_triangle_square() {
  return Mesh({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2}, {0, 2, 3}},
              {{0, 1, "bottom"}, {1, 2, "right"}, {2, 3, "top"}, {3, 0, "left"}});
}

inline Mesh triangle(const Point& a, const Point& b, const Point& c) {
  return Mesh({a, b, c}, {{0, 1, 2}}, {{0, 1, "edge"}, {1, 2, "edge"}, {2, 0, "edge"}});
}

/// Coarse SENT-like plate (a couple of hundred elements).
inline Mesh small_sent() {
  meshgen::SentOptions o;
  o.h_fine = 0.08;
  o.h_coarse = 0.25;
  o.x_fine_from = 0.3;
  o.band = 0.2;
  o.ratio = 1.5;
  o.mouth_half_width = 0.02;
  return meshgen::sent(o);
}

inline Eigen::Matrix3d sent_c_ref() {
  Eigen::Matrix3d c;
  c << 65e3, 20e3, 0, 20e3, 260e3, 0, 0, 0, 30e3;
  return c;
}

inline MaterialSpec sent_material(double theta_deg) {
  MaterialSpec s;
  s.elasticity = AnisotropicElasticity{sent_c_ref(), deg(theta_deg)};
  s.gc = 1.0;
  return s;
}

inline MaterialSpec isotropic_material(double lambda = 121.15e3, double mu = 80.77e3,
                                       double gc = 2.7) {
  MaterialSpec s;
  s.elasticity = IsotropicElasticity{lambda, mu};
  s.gc = gc;
  return s;
}

/// Bottom edge held in y, bottom-left corner in x, top edge pulled by wbar.
inline std::vector<DirichletCondition> sent_conditions() {
  std::vector<DirichletCondition> bc(3);
  bc[0].tag = "bottom";
  bc[0].component = Component::Y;
  bc[1].point = Point(0.0, 0.0);
  bc[1].component = Component::X;
  bc[2].tag = "top";
  bc[2].component = Component::Y;
  bc[2].load_factor = 1.0;
  return bc;
}

/// Every boundary node prescribed to A x.
inline ConstraintMap linear_boundary(const Mesh& mesh, const Eigen::Matrix2d& a) {
  ConstraintMap c;
  for (int n = 0; n < static_cast<int>(mesh.node_count()); ++n) {
    if (!mesh.on_boundary(n)) continue;
    const Eigen::Vector2d u = a * mesh.node(n);
    c[2 * n] = u.x();
    c[2 * n + 1] = u.y();
  }
  return c;
}

inline Eigen::VectorXd random_vector(Eigen::Index n, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = u(gen);
  return v;
}

}  // namespace crackopt::testing

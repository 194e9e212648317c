#pragma once

#include <variant>

#include <Eigen/Core>

namespace crackopt {

/// Voigt strain (eps_xx, eps_yy, 2 eps_xy) or stress (s_xx, s_yy, s_xy).
using Voigt = Eigen::Vector3d;
using Strain = Eigen::Matrix2d;

/// Symmetric positive definite 3x3 plane stiffness in Voigt notation.
/// Units follow whatever the caller supplies; the library works in N/mm^2.
class StiffnessVoigt {
 public:
  /// Throws crackopt::Error unless `c` is symmetric (1e-12 relative) and
  /// positive definite.
  explicit StiffnessVoigt(const Eigen::Matrix3d& c);

  const Eigen::Matrix3d& matrix() const { return c_; }
  double operator()(int i, int j) const { return c_(i, j); }
  Voigt stress(const Voigt& strain) const { return c_ * strain; }

 private:
  Eigen::Matrix3d c_;
};

struct IsotropicElasticity {
  double lambda = 0.0;
  double mu = 0.0;
};

struct AnisotropicElasticity {
  Eigen::Matrix3d c_ref = Eigen::Matrix3d::Zero();
  /// Orientation of the reference axes, radians in [0, pi].
  double theta = 0.0;
};

struct MaterialSpec {
  std::variant<IsotropicElasticity, AnisotropicElasticity> elasticity;
  /// Critical energy release rate, N/mm.
  double gc = 1.0;

  bool isotropic() const { return std::holds_alternative<IsotropicElasticity>(elasticity); }
  /// Throws crackopt::ConfigError on a violated invariant.
  void validate() const;
};

/// Voigt rotation matrix P(theta).
Eigen::Matrix3d rotation_matrix(double theta);

/// C rotated by theta: P C P^T. With engineering shear, P^T is the strain
/// transformation, so this is the energy-preserving rotation and leaves
/// isotropic stiffness unchanged.
Eigen::Matrix3d rotate_stiffness(const Eigen::Matrix3d& c, double theta);

/// Plane-strain isotropic stiffness from the Lame constants.
Eigen::Matrix3d isotropic_stiffness(double lambda, double mu);

StiffnessVoigt effective_stiffness(const MaterialSpec& spec);

Voigt to_voigt(const Strain& eps);
Strain from_voigt(const Voigt& eps_v);

/// 1/2 eps_v . C . eps_v
double energy_density(const StiffnessVoigt& c, const Voigt& eps_v);

/// Crack-driving energy. Isotropic: K/2 <tr eps>_+^2 + mu eps_dev:eps_dev
/// with the 2D bulk modulus K = lambda + mu. Anisotropic: the full density.
double tensile_energy_density(const MaterialSpec& spec, const Strain& eps);

/// Same as above with a precomputed effective stiffness (used by assembly
/// loops to avoid rebuilding C per element).
double tensile_energy_density(const MaterialSpec& spec, const StiffnessVoigt& c,
                              const Strain& eps);

}  // namespace crackopt

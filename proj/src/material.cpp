#include "crackopt/material.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "crackopt/errors.hpp"

namespace crackopt {

StiffnessVoigt::StiffnessVoigt(const Eigen::Matrix3d& c) : c_(c) {
  const double scale = c.cwiseAbs().maxCoeff();
  if (!c.allFinite() || scale == 0.0) throw Error("stiffness matrix is zero or non-finite");
  if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw Error("stiffness matrix is not symmetric");
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(0.5 * (c + c.transpose()),
                                                            Eigen::EigenvaluesOnly);
  if (!(eig.eigenvalues().minCoeff() > 0.0)) {
    throw Error("stiffness matrix is not positive definite");
  }
}

void MaterialSpec::validate() const {
  if (!(gc > 0.0)) throw ConfigError("critical energy release rate must be positive");
  if (const auto* iso = std::get_if<IsotropicElasticity>(&elasticity)) {
    if (!(iso->lambda > 0.0) || !(iso->mu > 0.0)) {
      throw ConfigError("Lame constants must be positive");
    }
    return;
  }
  const auto& an = std::get<AnisotropicElasticity>(elasticity);
  if (!(an.theta >= 0.0 && an.theta <= std::numbers::pi)) {
    throw ConfigError("orientation angle must lie in [0, pi]");
  }
  try {
    StiffnessVoigt{an.c_ref};
  } catch (const Error& e) {
    throw ConfigError(std::string("reference stiffness: ") + e.what());
  }
}

Eigen::Matrix3d rotation_matrix(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Eigen::Matrix3d p;
  p << c * c, s * s, -2.0 * c * s,
       s * s, c * c, 2.0 * c * s,
       c * s, -c * s, c * c - s * s;
  return p;
}

Eigen::Matrix3d rotate_stiffness(const Eigen::Matrix3d& c, double theta) {
  const Eigen::Matrix3d p = rotation_matrix(theta);
  const Eigen::Matrix3d r = p * c * p.transpose();
  return 0.5 * (r + r.transpose());
}

Eigen::Matrix3d isotropic_stiffness(double lambda, double mu) {
  Eigen::Matrix3d c;
  c << lambda + 2.0 * mu, lambda, 0.0,
       lambda, lambda + 2.0 * mu, 0.0,
       0.0, 0.0, mu;
  return c;
}

StiffnessVoigt effective_stiffness(const MaterialSpec& spec) {
  if (const auto* iso = std::get_if<IsotropicElasticity>(&spec.elasticity)) {
    return StiffnessVoigt(isotropic_stiffness(iso->lambda, iso->mu));
  }
  const auto& an = std::get<AnisotropicElasticity>(spec.elasticity);
  return StiffnessVoigt(rotate_stiffness(an.c_ref, an.theta));
}

Voigt to_voigt(const Strain& eps) {
  return {eps(0, 0), eps(1, 1), eps(0, 1) + eps(1, 0)};
}

Strain from_voigt(const Voigt& eps_v) {
  Strain e;
  e << eps_v(0), 0.5 * eps_v(2), 0.5 * eps_v(2), eps_v(1);
  return e;
}

double energy_density(const StiffnessVoigt& c, const Voigt& eps_v) {
  return 0.5 * eps_v.dot(c.matrix() * eps_v);
}

double tensile_energy_density(const MaterialSpec& spec, const StiffnessVoigt& c,
                              const Strain& eps) {
  if (const auto* iso = std::get_if<IsotropicElasticity>(&spec.elasticity)) {
    const double bulk = iso->lambda + iso->mu;
    const double tr = eps.trace();
    const double tr_pos = std::max(tr, 0.0);
    const Strain dev = eps - 0.5 * tr * Strain::Identity();
    return 0.5 * bulk * tr_pos * tr_pos + iso->mu * dev.cwiseProduct(dev).sum();
  }
  return energy_density(c, to_voigt(eps));
}

double tensile_energy_density(const MaterialSpec& spec, const Strain& eps) {
  return tensile_energy_density(spec, effective_stiffness(spec), eps);
}

}  // namespace crackopt

#pragma once

#include <cmath>

#include <Eigen/Core>
#include <Eigen/LU>

#include "contarm/arm_model.hpp"
#include "contarm/errors.hpp"
#include "contarm/linalg.hpp"

namespace contarm {

/// Lower bound on θ for anything that inverts J_vψ (5°).
inline constexpr double kThetaEstMin = 0.087;

/// Step for the central differences of the J_vψ pseudoinverse.
inline constexpr double kPinvDerivativeStep = 1e-6;

inline constexpr double kTensionResidualTol = 1e-9;

using Matrix2d = Eigen::Matrix2d;
using Matrix4d = Eigen::Matrix4d;

/// Stored bending energy of the backbone, θ²·E_p·I_p/(2L).
inline double elastic_energy(const ArmParameters& params, const Configuration& psi) {
  return psi.theta() * psi.theta() * params.bending_stiffness() / 2.0;
}

/// ∇E = (θ·E_p·I_p/L, 0).
inline Eigen::Vector2d grad_elastic_energy(const ArmParameters& params, const Configuration& psi) {
  return {psi.theta() * params.bending_stiffness(), 0.0};
}

/// Hessian of the elastic energy; only the (θ, θ) entry is nonzero.
inline Matrix2d energy_hessian(const ArmParameters& params) {
  Matrix2d h = Matrix2d::Zero();
  h(0, 0) = params.bending_stiffness();
  return h;
}

inline Matrix4d tendon_stiffness_matrix(const ArmParameters& params) {
  return Eigen::Vector4d::Constant(params.tendon_stiffness()).asDiagonal();
}

/// F* = ∇E − J_qψᵀ·τ.
inline Eigen::Vector2d generalized_force(const ArmParameters& params, const Configuration& psi,
                                         const Eigen::Vector4d& tau) {
  return grad_elastic_energy(params, psi) - jacobian_q_psi(params, psi).transpose() * tau;
}

struct TensionSolution {
  Eigen::Vector4d tau = Eigen::Vector4d::Zero();
  double residual = 0.0;
  /// Set when any tension is negative. Tensions are never clamped.
  bool has_slack = false;
};

/// Minimum-norm τ with J_qψᵀτ = ∇E − J_xψᵀ·w_ext. Throws ResidualTooLarge when
/// the wrench cannot be balanced by the tendons.
inline TensionSolution solve_tendon_tensions(const ArmParameters& params, const Configuration& psi,
                                             const Vector6d& w_ext) {
  const Eigen::Matrix<double, 2, 4> a = jacobian_q_psi(params, psi).transpose();
  const Eigen::Vector2d b =
      grad_elastic_energy(params, psi) - jacobian_x_psi(params, psi).transpose() * w_ext;
  TensionSolution out;
  out.tau = pseudoinverse(a) * b;
  out.residual = (a * out.tau - b).norm();
  if (!(out.residual <= kTensionResidualTol)) {
    throw ResidualTooLarge("tendon tensions cannot balance the wrench: residual " +
                           std::to_string(out.residual) + " N·m");
  }
  out.has_slack = (out.tau.array() < 0.0).any();
  return out;
}

/// The tension-dependent ("active") term [∂J_qψᵀ/∂ψ]·τ, assembled column-wise as
/// [∂J_qψᵀ/∂θ·τ, ∂J_qψᵀ/∂δ·τ].
inline Matrix2d active_stiffness_term(const ArmParameters& params, const Configuration& psi,
                                      const Eigen::Vector4d& tau) {
  const double r = params.pitch_radius;
  double sum_sin = 0.0, sum_cos = 0.0;
  for (int i = 0; i < kTendonCount; ++i) {
    const double phase = psi.delta() + i * ArmParameters::tendon_division;
    sum_sin += std::sin(phase) * tau(i);
    sum_cos += std::cos(phase) * tau(i);
  }
  Matrix2d m;
  // column θ: ∂/∂θ of rows (r cos, −rθ sin)
  m(0, 0) = 0.0;
  m(1, 0) = -r * sum_sin;
  // column δ
  m(0, 1) = -r * sum_sin;
  m(1, 1) = -r * psi.theta() * sum_cos;
  return m;
}

/// K_ψ = H_ψ − [∂J_qψᵀ/∂ψ]τ − J_qψᵀ·K_q·J_qψ.
///
/// Note that with the prototype parameters the tendon term dominates H_ψ, so
/// K_ψ(0,0) is negative. The expression is kept as written.
inline Matrix2d stiffness_config(const ArmParameters& params, const Configuration& psi,
                                 const Eigen::Vector4d& tau = Eigen::Vector4d::Zero()) {
  const Matrix42 jq = jacobian_q_psi(params, psi);
  return energy_hessian(params) - active_stiffness_term(params, psi, tau) -
         jq.transpose() * tendon_stiffness_matrix(params) * jq;
}

/// (J_vψᵀ)†, mapping generalized forces to tip forces.
inline Matrix32 force_map(const ArmParameters& params, const Configuration& psi) {
  return pseudoinverse_fixed(jacobian_v_psi(params, psi).transpose());
}

/// σ₂/σ₁ of J_vψ.
inline double jv_condition_ratio(const ArmParameters& params, const Configuration& psi) {
  const Eigen::VectorXd s = singular_values(jacobian_v_psi(params, psi));
  return s(0) > 0.0 ? s(1) / s(0) : 0.0;
}

/// Throws unless J_vψ can be inverted at psi.
inline void require_full_rank(const ArmParameters& params, const Configuration& psi,
                              double theta_min = kThetaEstMin) {
  if (psi.theta() < theta_min) {
    throw NearStraightConfiguration("near-straight configuration: theta " +
                                    std::to_string(psi.theta()) + " rad is below " +
                                    std::to_string(theta_min) + " rad");
  }
  if (jv_condition_ratio(params, psi) < kPinvRelativeCutoff) {
    throw RankDeficient("near-straight configuration: J_v_psi is rank deficient");
  }
}

/// ∂(J_vψᵀ)†/∂ψ_k by central differences, k = 0 (θ) or 1 (δ).
inline Matrix32 force_map_derivative(const ArmParameters& params, const Configuration& psi, int k,
                                     double h = kPinvDerivativeStep) {
  Eigen::Vector2d step = Eigen::Vector2d::Zero();
  step(k) = h;
  const Configuration plus(psi.theta() + step(0), psi.delta() + step(1));
  const Configuration minus(psi.theta() - step(0), psi.delta() - step(1));
  return (force_map(params, plus) - force_map(params, minus)) / (2.0 * h);
}

struct StiffnessBundle {
  Matrix2d H_psi;
  Matrix4d K_q;
  Matrix2d K_psi;
  Eigen::Matrix3d K_X;
};

/// K_X = [∂(J_vψᵀ)†/∂ψ]F*·J_vψ† + (J_vψᵀ)†·K_ψ·J_vψ†.
/// `f_star` is the generalized force entering the tensor term; pass zero to drop it.
inline Eigen::Matrix3d stiffness_task(const ArmParameters& params, const Configuration& psi,
                                      const Eigen::Vector4d& tau, const Eigen::Vector2d& f_star,
                                      double theta_min = kThetaEstMin) {
  require_full_rank(params, psi, theta_min);
  const Matrix32 jv = jacobian_v_psi(params, psi);
  const Matrix23 jv_pinv = pseudoinverse_fixed(jv);
  const Matrix32 jvt_pinv = pseudoinverse_fixed(jv.transpose());
  Eigen::Matrix3d kx = jvt_pinv * stiffness_config(params, psi, tau) * jv_pinv;
  if (!f_star.isZero(0.0)) {
    Matrix32 tensor_times_f;
    tensor_times_f.col(0) = force_map_derivative(params, psi, 0) * f_star;
    tensor_times_f.col(1) = force_map_derivative(params, psi, 1) * f_star;
    kx += tensor_times_f * jv_pinv;
  }
  return kx;
}

/// Overload taking a tip force; F* = J_vψᵀ·F_ext.
inline Eigen::Matrix3d stiffness_task_with_force(const ArmParameters& params,
                                                 const Configuration& psi,
                                                 const Eigen::Vector4d& tau,
                                                 const Eigen::Vector3d& f_ext,
                                                 double theta_min = kThetaEstMin) {
  const Eigen::Vector2d f_star = jacobian_v_psi(params, psi).transpose() * f_ext;
  return stiffness_task(params, psi, tau, f_star, theta_min);
}

/// Configuration-space pieces always; K_X only when `with_task` (requires full rank).
inline StiffnessBundle stiffness_bundle(const ArmParameters& params, const Configuration& psi,
                                        const Eigen::Vector4d& tau, bool with_task = true,
                                        const Eigen::Vector3d& f_ext = Eigen::Vector3d::Zero(),
                                        double theta_min = kThetaEstMin) {
  StiffnessBundle b;
  b.H_psi = energy_hessian(params);
  b.K_q = tendon_stiffness_matrix(params);
  b.K_psi = stiffness_config(params, psi, tau);
  b.K_X = with_task ? stiffness_task_with_force(params, psi, tau, f_ext, theta_min)
                    : Eigen::Matrix3d::Zero();
  return b;
}

}  // namespace contarm

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "contarm/arm_model.hpp"
#include "contarm/errors.hpp"
#include "contarm/imu_log.hpp"
#include "contarm/linalg.hpp"
#include "contarm/statics.hpp"

namespace contarm {

/// Raw rotations with a larger Gram/determinant error than this are rejected
/// rather than re-orthonormalized.
inline constexpr double kRotationRepairTol = 1e-3;

/// sin(θ̄) below which the bending plane angle is reported as ambiguous.
inline constexpr double kProjectionAmbiguityTol = 1e-6;

namespace detail {

inline Eigen::Matrix3d checked_rotation(const Eigen::Matrix3d& r, const char* what) {
  if (!r.allFinite() || orthonormality_error(r) > kRotationRepairTol) {
    throw NonOrthonormal(std::string(what) + " is not a rotation matrix");
  }
  const Eigen::Matrix3d fixed = nearest_rotation(r);
  if (orthonormality_error(fixed) > 1e-6) {
    throw NonOrthonormal(std::string(what) + " could not be re-orthonormalized");
  }
  return fixed;
}

}  // namespace detail

/// Expresses a world-frame orientation in the arm base frame: R_offsetᵀ·R_world.
inline Eigen::Matrix3d world_to_base(const Eigen::Matrix3d& r_world, const Eigen::Matrix3d& r_offset) {
  const Eigen::Matrix3d w = detail::checked_rotation(r_world, "R_world");
  const Eigen::Matrix3d o = detail::checked_rotation(r_offset, "R_offset");
  return nearest_rotation(o.transpose() * w);
}

inline std::vector<OrientationMeasurement> to_base_frame(
    const std::vector<OrientationMeasurement>& samples, const Eigen::Matrix3d& r_offset) {
  std::vector<OrientationMeasurement> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back({s.timestamp, world_to_base(s.rotation, r_offset)});
  return out;
}

struct ProjectedConfiguration {
  double theta_bar = 0.0;
  double delta_bar = 0.0;
  /// True when the bending plane is undefined (θ̄ ≈ 0 or π); delta_bar is then 0.
  bool ambiguous = false;
};

/// θ̄ = acos(r₃₃), δ̄ = atan2(r₂₃, r₁₃).
inline ProjectedConfiguration project_to_configuration(const Eigen::Matrix3d& r) {
  ProjectedConfiguration p;
  p.theta_bar = std::acos(std::clamp(r(2, 2), -1.0, 1.0));
  if (std::sin(p.theta_bar) < kProjectionAmbiguityTol) {
    p.ambiguous = true;
    p.delta_bar = 0.0;
  } else {
    p.delta_bar = std::atan2(r(1, 2), r(0, 2));
  }
  return p;
}

struct DeformationMeasurement {
  double theta_bar = 0.0;
  double delta_bar = 0.0;
  Eigen::Vector2d delta_psi = Eigen::Vector2d::Zero();  // measured − reference
};

struct ForceEstimate {
  Eigen::Vector2d F_star_hat = Eigen::Vector2d::Zero();
  Eigen::Vector3d F_ext_hat = Eigen::Vector3d::Zero();
  double condition_sigma_ratio = 0.0;
  DeformationMeasurement deformation;
  std::size_t samples_used = 0;
  /// Set when the requested window exceeded the number of samples.
  bool window_clamped = false;
};

/// F̂* = K_ψ·Δψ̄ and F̂_ext = (J_vψᵀ)†·F̂*, with K_ψ and J_vψ evaluated at psi_ref.
inline ForceEstimate estimate_force_from_deformation(const ArmParameters& params,
                                                     const Configuration& psi_ref,
                                                     const Eigen::Vector4d& tau,
                                                     const Eigen::Vector2d& delta_psi,
                                                     double theta_min = kThetaEstMin) {
  require_full_rank(params, psi_ref, theta_min);
  ForceEstimate est;
  est.deformation.delta_psi = delta_psi;
  est.deformation.theta_bar = psi_ref.theta() + delta_psi(0);
  est.deformation.delta_bar = wrap_angle(psi_ref.delta() + delta_psi(1));
  est.F_star_hat = stiffness_config(params, psi_ref, tau) * delta_psi;
  est.F_ext_hat = force_map(params, psi_ref) * est.F_star_hat;
  est.condition_sigma_ratio = jv_condition_ratio(params, psi_ref);
  return est;
}

/// Averages the last `window` projected samples (δ differences are wrapped
/// before averaging), then estimates the tip force. `samples` must already be
/// in the base frame.
inline ForceEstimate estimate_force(const ArmParameters& params, const Configuration& psi_ref,
                                    const Eigen::Vector4d& tau,
                                    const std::vector<OrientationMeasurement>& samples,
                                    std::size_t window, double theta_min = kThetaEstMin) {
  require_full_rank(params, psi_ref, theta_min);
  if (samples.empty()) throw EmptyLog("IMU log contains no samples");
  if (window == 0) throw InvalidArgument("averaging window must be at least 1");
  const std::size_t used = std::min(window, samples.size());
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  for (std::size_t i = samples.size() - used; i < samples.size(); ++i) {
    const ProjectedConfiguration p = project_to_configuration(samples[i].rotation);
    sum(0) += p.theta_bar - psi_ref.theta();
    sum(1) += wrap_angle(p.delta_bar - psi_ref.delta());
  }
  ForceEstimate est =
      estimate_force_from_deformation(params, psi_ref, tau, sum / static_cast<double>(used), theta_min);
  est.samples_used = used;
  est.window_clamped = window > samples.size();
  return est;
}

}  // namespace contarm

#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Core>

#include "contarm/errors.hpp"
#include "contarm/linalg.hpp"

namespace contarm {

/// Below this bending angle the closed forms (which divide by theta) are
/// replaced with their straight-configuration limits.
inline constexpr double kThetaSmall = 1e-6;

inline constexpr int kTendonCount = 4;

/// Geometric and material constants of a single four-tendon segment. SI units.
struct ArmParameters {
  double backbone_length;   // L [m]
  double pitch_radius;      // r [m]
  double backbone_youngs;   // E_p [Pa]
  double backbone_inertia;  // I_p [m^4]
  double tendon_youngs;     // E_T [Pa]
  double tendon_area;       // A [m^2]

  /// Angular spacing of the tendons on the pitch circle.
  static constexpr double tendon_division = std::numbers::pi / 2.0;

  /// Prototype values: L = 222 mm, r = 12 mm, E_p = 82 GPa, E_T = 2.34 GPa,
  /// I_p = 0.2485 mm^4, A = 0.2642 mm^2.
  static ArmParameters prototype() {
    return ArmParameters{0.222, 0.012, 82e9, 0.2485e-12, 2.34e9, 0.2642e-6};
  }

  /// Throws InvalidArgument unless every field is finite and strictly positive.
  void validate() const {
    const std::array<std::pair<const char*, double>, 6> fields{{
        {"backbone_length", backbone_length},
        {"pitch_radius", pitch_radius},
        {"backbone_youngs", backbone_youngs},
        {"backbone_inertia", backbone_inertia},
        {"tendon_youngs", tendon_youngs},
        {"tendon_area", tendon_area},
    }};
    for (const auto& [name, value] : fields) {
      if (!std::isfinite(value) || value <= 0.0) {
        throw InvalidArgument(std::string("arm parameter ") + name + " must be positive, got " +
                              std::to_string(value));
      }
    }
  }

  /// E_p·I_p/L, the bending stiffness of the backbone [N·m/rad].
  double bending_stiffness() const { return backbone_youngs * backbone_inertia / backbone_length; }

  /// E_T·A/L, the axial stiffness of one tendon [N/m].
  double tendon_stiffness() const { return tendon_youngs * tendon_area / backbone_length; }
};

/// Wraps an angle to (−π, π].
inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::remainder(a, two_pi);  // [−π, π]
  if (w <= -std::numbers::pi) w += two_pi;
  return w;
}

/// Configuration space point ψ = (θ, δ). θ ∈ [0, π) is validated, δ is wrapped.
/// At θ = 0 the bending plane is undefined and every output is δ-independent.
class Configuration {
 public:
  Configuration() = default;
  Configuration(double theta, double delta) : theta_(theta), delta_(wrap_angle(delta)) {
    if (!std::isfinite(theta) || !std::isfinite(delta)) {
      throw InvalidArgument("configuration angles must be finite");
    }
    if (theta < 0.0 || theta >= std::numbers::pi) {
      throw InvalidArgument("bending angle theta must lie in [0, pi), got " + std::to_string(theta));
    }
  }

  double theta() const { return theta_; }
  double delta() const { return delta_; }
  Eigen::Vector2d vector() const { return {theta_, delta_}; }

  /// ψ + Δψ, re-validated.
  Configuration offset(const Eigen::Vector2d& d) const {
    return Configuration(theta_ + d(0), delta_ + d(1));
  }

 private:
  double theta_ = 0.0;
  double delta_ = 0.0;
};

/// Tendon displacements, 0-based internally. Positive = shortened on the arm side.
struct TendonDisplacements {
  Eigen::Vector4d q = Eigen::Vector4d::Zero();
};

/// Pose of the end-disk frame {G} in the base frame {B}.
struct Transform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d position = Eigen::Vector3d::Zero();

  Eigen::Matrix4d homogeneous() const {
    Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
    t.topLeftCorner<3, 3>() = rotation;
    t.topRightCorner<3, 1>() = position;
    return t;
  }
};

using Matrix42 = Eigen::Matrix<double, 4, 2>;
using Matrix32 = Eigen::Matrix<double, 3, 2>;
using Matrix23 = Eigen::Matrix<double, 2, 3>;
using Matrix62 = Eigen::Matrix<double, 6, 2>;
using Vector6d = Eigen::Matrix<double, 6, 1>;

struct JacobianSet {
  Matrix42 J_q_psi;  // configuration → tendon displacement rates
  Matrix32 J_v_psi;  // configuration → tip linear velocity
  Matrix32 J_w_psi;  // configuration → tip angular velocity
  Matrix62 J_x_psi;  // [J_v; J_w]
};

/// ᵇT_g = RotZ(δ) · [RotY(θ), ¹p_e] · RotZ(−δ), with ¹p_e = (L/θ)(1 − cosθ, 0, sinθ).
/// The rotation has no singularity and is always evaluated in closed form; the
/// position switches to its straight limit (0, 0, L) below kThetaSmall.
inline Transform forward_kinematics(const ArmParameters& params, const Configuration& psi) {
  const double L = params.backbone_length;
  const double theta = psi.theta();
  const Eigen::Matrix3d rz = rot_z(psi.delta());
  const double cd = std::cos(psi.delta()), sd = std::sin(psi.delta());
  const double half_sin = std::sin(0.5 * theta);
  const double vers = -2.0 * half_sin * half_sin;  // cosθ − 1
  const double st = std::sin(theta);
  Transform t;
  // RotZ(δ)·RotY(θ)·RotZ(−δ) expanded, so θ = 0 gives exactly I for every δ
  t.rotation << 1.0 + cd * cd * vers, sd * cd * vers, cd * st,
                sd * cd * vers, 1.0 + sd * sd * vers, sd * st,
                -cd * st, -sd * st, 1.0 + vers;
  t.rotation.array() += 0.0;  // drop signed zeros
  if (theta < kThetaSmall) {
    t.position = Eigen::Vector3d(0.0, 0.0, L);
    return t;
  }
  // 1 − cosθ written as 2 sin²(θ/2) to avoid cancellation at small θ
  const Eigen::Vector3d p_in_plane =
      (L / theta) * Eigen::Vector3d(2.0 * half_sin * half_sin, 0.0, st);
  t.position = rz * p_in_plane;
  return t;
}

/// q_i = r·cos(δ + iβ)·θ, i = 0..3.
inline TendonDisplacements inverse_kinematics(const ArmParameters& params, const Configuration& psi) {
  TendonDisplacements out;
  for (int i = 0; i < kTendonCount; ++i) {
    out.q(i) = params.pitch_radius *
               std::cos(psi.delta() + i * ArmParameters::tendon_division) * psi.theta();
  }
  return out;
}

inline Matrix42 jacobian_q_psi(const ArmParameters& params, const Configuration& psi) {
  const double r = params.pitch_radius;
  Matrix42 j;
  for (int i = 0; i < kTendonCount; ++i) {
    const double phase = psi.delta() + i * ArmParameters::tendon_division;
    j(i, 0) = r * std::cos(phase);
    j(i, 1) = -r * std::sin(phase) * psi.theta();
  }
  return j;
}

/// Derivative of the tip position with respect to (θ, δ). Straight-configuration
/// limits: first column → (L/2)(cosδ, sinδ, 0), second column → 0.
inline Matrix32 jacobian_v_psi(const ArmParameters& params, const Configuration& psi) {
  const double L = params.backbone_length;
  const double theta = psi.theta();
  const double cd = std::cos(psi.delta());
  const double sd = std::sin(psi.delta());
  Matrix32 j = Matrix32::Zero();
  if (theta < kThetaSmall) {
    j(0, 0) = 0.5 * L * cd;
    j(1, 0) = 0.5 * L * sd;
    return j;
  }
  const double st = std::sin(theta), ct = std::cos(theta);
  const double hs = std::sin(0.5 * theta);
  const double one_minus_cos = 2.0 * hs * hs;
  const double t2 = theta * theta;
  const double radial = (theta * st - one_minus_cos) / t2;
  const double axial = (theta * ct - st) / t2;
  const double chord = one_minus_cos / theta;
  j << L * cd * radial, -L * sd * chord,
       L * sd * radial,  L * cd * chord,
       L * axial,        0.0;
  return j;
}

inline Matrix32 jacobian_w_psi(const Configuration& psi) {
  const double st = std::sin(psi.theta()), ct = std::cos(psi.theta());
  const double sd = std::sin(psi.delta()), cd = std::cos(psi.delta());
  Matrix32 j;
  j << -sd, -cd * st,
        cd, -sd * st,
       0.0, 1.0 - ct;
  return j;
}

inline Matrix62 jacobian_x_psi(const ArmParameters& params, const Configuration& psi) {
  Matrix62 j;
  j.topRows<3>() = jacobian_v_psi(params, psi);
  j.bottomRows<3>() = jacobian_w_psi(psi);
  return j;
}

inline JacobianSet jacobians(const ArmParameters& params, const Configuration& psi) {
  JacobianSet set;
  set.J_q_psi = jacobian_q_psi(params, psi);
  set.J_v_psi = jacobian_v_psi(params, psi);
  set.J_w_psi = jacobian_w_psi(psi);
  set.J_x_psi.topRows<3>() = set.J_v_psi;
  set.J_x_psi.bottomRows<3>() = set.J_w_psi;
  return set;
}

}  // namespace contarm

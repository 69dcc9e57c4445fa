#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/LU>

#include "contarm/arm_model.hpp"
#include "contarm/errors.hpp"
#include "contarm/imu_log.hpp"
#include "contarm/statics.hpp"

namespace contarm {

inline constexpr double kSingularStiffnessDet = 1e-14;
inline constexpr double kSyntheticSampleRateHz = 100.0;

struct LoadCase {
  Configuration psi_ref;
  Eigen::Vector3d force = Eigen::Vector3d::Zero();  // tip force, base frame [N]
  Eigen::Vector4d tau = Eigen::Vector4d::Zero();
  double noise_std = 0.0;  // per-axis orientation noise [rad]
  std::uint64_t seed = 0;
  std::size_t samples = 1;

  void validate() const {
    if (samples < 1) throw InvalidArgument("load case needs at least one sample");
    if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
      throw InvalidArgument("noise_std must be finite and non-negative");
    }
    if (!force.allFinite() || !tau.allFinite()) throw InvalidArgument("force and tau must be finite");
  }
};

struct Deflection {
  Eigen::Vector2d delta_psi = Eigen::Vector2d::Zero();
  Configuration psi_loaded;
};

/// Linearized deflection under a small tip force: Δψ = K_ψ⁻¹·J_vψᵀ·F.
inline Eigen::Vector2d deflection_delta(const ArmParameters& params, const Configuration& psi_ref,
                                        const Eigen::Vector4d& tau, const Eigen::Vector3d& force,
                                        double theta_min = kThetaEstMin) {
  require_full_rank(params, psi_ref, theta_min);
  const Matrix2d k = stiffness_config(params, psi_ref, tau);
  if (!(std::abs(k.determinant()) > kSingularStiffnessDet)) {
    throw SingularStiffness("configuration stiffness is singular (det " +
                            std::to_string(k.determinant()) + ")");
  }
  const Eigen::Vector2d f_star = jacobian_v_psi(params, psi_ref).transpose() * force;
  return k.partialPivLu().solve(f_star);
}

/// Deflection plus the loaded configuration ψ_ref + Δψ (which must stay in range).
inline Deflection simulate_deflection(const ArmParameters& params, const LoadCase& c,
                                      double theta_min = kThetaEstMin) {
  c.validate();
  Deflection d;
  d.delta_psi = deflection_delta(params, c.psi_ref, c.tau, c.force, theta_min);
  d.psi_loaded = c.psi_ref.offset(d.delta_psi);
  return d;
}

/// FK orientation at the loaded configuration, sampled at 100 Hz with
/// independent per-axis rotation noise. Deterministic for a given seed.
inline std::vector<OrientationMeasurement> synthesize_imu_log(const ArmParameters& params,
                                                              const LoadCase& c,
                                                              double theta_min = kThetaEstMin) {
  const Deflection d = simulate_deflection(params, c, theta_min);
  const Eigen::Matrix3d truth = forward_kinematics(params, d.psi_loaded).rotation;
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> noise(0.0, c.noise_std);
  std::vector<OrientationMeasurement> log;
  log.reserve(c.samples);
  for (std::size_t i = 0; i < c.samples; ++i) {
    OrientationMeasurement m;
    m.timestamp = static_cast<double>(i) / kSyntheticSampleRateHz;
    if (c.noise_std > 0.0) {
      const Eigen::Vector3d rv(noise(rng), noise(rng), noise(rng));
      const double angle = rv.norm();
      const Eigen::Matrix3d perturb =
          angle > 0.0 ? Eigen::AngleAxisd(angle, rv / angle).toRotationMatrix()
                      : Eigen::Matrix3d::Identity();
      m.rotation = perturb * truth;
    } else {
      m.rotation = truth;
    }
    log.push_back(m);
  }
  return log;
}

enum class LoadDirection { inward, outward };

struct SweepSpec {
  double theta_start = 0.0, theta_stop = 0.0, theta_step = 0.0;  // [rad]
  double delta = 0.0;                                            // [rad]
  LoadDirection direction = LoadDirection::inward;
  double load_start = 0.0, load_stop = 0.0, load_step = 0.0;  // [N]

  void validate() const {
    if (!(theta_step > 0.0) || !(load_step > 0.0)) throw InvalidArgument("sweep steps must be positive");
    if (!(theta_start <= theta_stop) || !(load_start <= load_stop)) {
      throw InvalidArgument("sweep ranges must be non-empty (start <= stop)");
    }
  }
};

/// Inclusive arithmetic grid start, start+step, ..., ≤ stop.
inline std::vector<double> grid(double start, double stop, double step) {
  const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = start + static_cast<double>(k) * step;
  return out;
}

/// Unit in-plane direction perpendicular to the end-disk normal. Inward points
/// toward increasing θ.
inline Eigen::Vector3d radial_load_direction(const Configuration& psi, LoadDirection dir) {
  const double ct = std::cos(psi.theta()), st = std::sin(psi.theta());
  const Eigen::Vector3d inward(ct * std::cos(psi.delta()), ct * std::sin(psi.delta()), -st);
  return dir == LoadDirection::inward ? inward : Eigen::Vector3d(-inward);
}

struct SweepRow {
  double theta = 0.0;
  double load = 0.0;
  double displacement = 0.0;  // ‖J_vψ·Δψ‖ [m]
  Eigen::Matrix3d K_X = Eigen::Matrix3d::Zero();
};

/// Load–deflection table over a θ × load grid (τ = 0).
inline std::vector<SweepRow> stiffness_sweep(const ArmParameters& params, const SweepSpec& spec,
                                             double theta_min = kThetaEstMin) {
  spec.validate();
  std::vector<SweepRow> rows;
  for (const double theta : grid(spec.theta_start, spec.theta_stop, spec.theta_step)) {
    const Configuration psi(theta, spec.delta);
    const Eigen::Vector3d dir = radial_load_direction(psi, spec.direction);
    const Matrix32 jv = jacobian_v_psi(params, psi);
    for (const double load : grid(spec.load_start, spec.load_stop, spec.load_step)) {
      const Eigen::Vector3d force = load * dir;
      const Eigen::Vector2d dpsi =
          deflection_delta(params, psi, Eigen::Vector4d::Zero(), force, theta_min);
      SweepRow row;
      row.theta = theta;
      row.load = load;
      row.displacement = (jv * dpsi).norm();
      row.K_X = stiffness_task_with_force(params, psi, Eigen::Vector4d::Zero(), force, theta_min);
      rows.push_back(row);
    }
  }
  return rows;
}

inline constexpr const char* kSweepCsvHeader = "theta_rad,load_N,disp_m,kxx,kxz,kzx,kzz";

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << kSweepCsvHeader << '\n';
  for (const auto& r : rows) {
    const double fields[] = {r.theta, r.load, r.displacement, r.K_X(0, 0), r.K_X(0, 2), r.K_X(2, 0),
                             r.K_X(2, 2)};
    for (std::size_t i = 0; i < std::size(fields); ++i) {
      if (i) os << ',';
      detail::format_double(os, fields[i]);
    }
    os << '\n';
  }
}

inline void write_sweep_csv_file(const std::string& path, const std::vector<SweepRow>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write sweep table '" + path + "'");
  write_sweep_csv(out, rows);
  if (!out) throw InvalidArgument("failed writing sweep table '" + path + "'");
}

}  // namespace contarm

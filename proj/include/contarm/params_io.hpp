#pragma once

#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <string>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "contarm/arm_model.hpp"
#include "contarm/errors.hpp"
#include "contarm/load_sim.hpp"
#include "contarm/statics.hpp"

namespace contarm {

inline constexpr double kDegToRad = std::numbers::pi / 180.0;
inline constexpr double kRadToDeg = 180.0 / std::numbers::pi;

/// Parameter file contents after conversion to SI. File units are operator
/// units: mm, GPa, mm^4, mm^2 and degrees.
struct ParameterFile {
  ArmParameters params = ArmParameters::prototype();
  std::optional<Eigen::Matrix3d> r_offset;
  double theta_est_min = kThetaEstMin;  // [rad]
};

namespace detail {

inline double required_positive(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw InvalidArgument(std::string("parameter file is missing '") + key + "'");
  const auto& v = j.at(key);
  if (!v.is_number()) throw InvalidArgument(std::string("parameter '") + key + "' must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x) || x <= 0.0) {
    throw InvalidArgument(std::string("parameter '") + key + "' must be positive");
  }
  return x;
}

inline Eigen::Matrix3d matrix3_from_json(const nlohmann::json& j, const char* key) {
  if (!j.is_array() || j.size() != 3) throw InvalidArgument(std::string(key) + " must be a 3x3 array");
  Eigen::Matrix3d m;
  for (int r = 0; r < 3; ++r) {
    const auto& row = j[r];
    if (!row.is_array() || row.size() != 3) {
      throw InvalidArgument(std::string(key) + " must be a 3x3 array");
    }
    for (int c = 0; c < 3; ++c) {
      if (!row[c].is_number()) throw InvalidArgument(std::string(key) + " entries must be numbers");
      m(r, c) = row[c].get<double>();
    }
  }
  return m;
}

inline nlohmann::json read_json_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument(std::string("cannot open ") + what + " '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(std::string(what) + " '" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace detail

inline ParameterFile parse_parameter_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("parameter file must hold a JSON object");
  ParameterFile pf;
  pf.params.backbone_length = detail::required_positive(j, "L_mm") * 1e-3;
  pf.params.pitch_radius = detail::required_positive(j, "r_mm") * 1e-3;
  pf.params.backbone_youngs = detail::required_positive(j, "Ep_GPa") * 1e9;
  pf.params.tendon_youngs = detail::required_positive(j, "ET_GPa") * 1e9;
  pf.params.backbone_inertia = detail::required_positive(j, "Ip_mm4") * 1e-12;
  pf.params.tendon_area = detail::required_positive(j, "A_mm2") * 1e-6;
  pf.params.validate();
  if (j.contains("R_offset")) pf.r_offset = detail::matrix3_from_json(j.at("R_offset"), "R_offset");
  if (j.contains("theta_est_min_deg")) {
    pf.theta_est_min = detail::required_positive(j, "theta_est_min_deg") * kDegToRad;
  }
  return pf;
}

inline ParameterFile load_parameter_file(const std::string& path) {
  return parse_parameter_json(detail::read_json_file(path, "parameter file"));
}

/// Calibration file: {"R_offset": [[...], [...], [...]]}.
inline Eigen::Matrix3d load_calibration(const std::string& path) {
  const nlohmann::json j = detail::read_json_file(path, "calibration file");
  if (!j.is_object() || !j.contains("R_offset")) {
    throw InvalidArgument("calibration file '" + path + "' has no R_offset");
  }
  return detail::matrix3_from_json(j.at("R_offset"), "R_offset");
}

/// Sweep file: {"theta_deg": {"start","stop","step"}, "delta_deg", "direction":
/// "inward"|"outward", "load_N": {"start","stop","step"}}.
inline SweepSpec parse_sweep_spec_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("sweep spec must hold a JSON object");
  auto range = [&](const char* key, double scale, double& start, double& stop, double& step) {
    if (!j.contains(key) || !j.at(key).is_object()) {
      throw InvalidArgument(std::string("sweep spec needs object '") + key + "'");
    }
    const auto& r = j.at(key);
    for (const char* f : {"start", "stop", "step"}) {
      if (!r.contains(f) || !r.at(f).is_number()) {
        throw InvalidArgument(std::string("sweep spec '") + key + "." + f + "' must be a number");
      }
    }
    start = r.at("start").get<double>() * scale;
    stop = r.at("stop").get<double>() * scale;
    step = r.at("step").get<double>() * scale;
  };
  SweepSpec spec;
  range("theta_deg", kDegToRad, spec.theta_start, spec.theta_stop, spec.theta_step);
  range("load_N", 1.0, spec.load_start, spec.load_stop, spec.load_step);
  if (j.contains("delta_deg")) {
    if (!j.at("delta_deg").is_number()) throw InvalidArgument("sweep spec 'delta_deg' must be a number");
    spec.delta = j.at("delta_deg").get<double>() * kDegToRad;
  }
  const std::string dir = j.value("direction", std::string("inward"));
  if (dir == "inward") {
    spec.direction = LoadDirection::inward;
  } else if (dir == "outward") {
    spec.direction = LoadDirection::outward;
  } else {
    throw InvalidArgument("sweep direction must be 'inward' or 'outward', got '" + dir + "'");
  }
  spec.validate();
  return spec;
}

inline SweepSpec load_sweep_spec(const std::string& path) {
  return parse_sweep_spec_json(detail::read_json_file(path, "sweep spec"));
}

}  // namespace contarm

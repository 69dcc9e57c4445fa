#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "contarm/errors.hpp"
#include "contarm/linalg.hpp"

namespace contarm {

/// One end-disk orientation sample, expressed in whatever frame the log uses
/// (world for raw sensor data, base after `to_base_frame`).
struct OrientationMeasurement {
  double timestamp = 0.0;  // [s]
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
};

inline constexpr std::string_view kImuLogHeader = "imu-log,v1";

/// Accepted deviation of a raw quaternion norm (or rotation-matrix Gram error) before renormalizing.
inline constexpr double kQuaternionNormTol = 1e-3;

/// Scalar-first unit quaternion → rotation matrix.
inline Eigen::Matrix3d quaternion_to_rotation(double w, double x, double y, double z) {
  return Eigen::Quaterniond(w, x, y, z).normalized().toRotationMatrix();
}

/// Rotation → scalar-first quaternion with w ≥ 0.
inline Eigen::Vector4d rotation_to_quaternion(const Eigen::Matrix3d& r) {
  Eigen::Quaterniond q(r);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  return {q.w(), q.x(), q.y(), q.z()};
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline double parse_field(std::string_view field, std::size_t line, std::size_t column) {
  field = trim(field);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size() ||
      !std::isfinite(value)) {
    throw MalformedRow(line, "field " + std::to_string(column) + " is not a finite number: '" +
                                 std::string(field) + "'");
  }
  return value;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

inline void format_double(std::ostream& os, double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  os.write(buf, ptr - buf);
}

}  // namespace detail

/// Reads an `imu-log,v1` CSV. Rows are either `t,qw,qx,qy,qz` or
/// `t,r11,r12,r13,r21,r22,r23,r31,r32,r33`. Blank lines are skipped; a stream
/// with no content at all yields an empty log.
inline std::vector<OrientationMeasurement> parse_imu_log(std::istream& in) {
  std::vector<OrientationMeasurement> samples;
  std::string raw;
  std::size_t line = 0;
  if (!std::getline(in, raw)) return samples;
  ++line;
  if (detail::trim(raw) != kImuLogHeader) {
    throw UnsupportedVersion("line 1: expected header '" + std::string(kImuLogHeader) +
                             "', got '" + std::string(detail::trim(raw)) + "'");
  }
  while (std::getline(in, raw)) {
    ++line;
    const std::string_view text = detail::trim(raw);
    if (text.empty()) continue;
    const auto fields = detail::split(text, ',');
    OrientationMeasurement m;
    m.timestamp = detail::parse_field(fields[0], line, 1);
    if (fields.size() == 5) {
      double q[4];
      for (int i = 0; i < 4; ++i) q[i] = detail::parse_field(fields[i + 1], line, i + 2);
      const double norm = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
      if (std::abs(norm - 1.0) > kQuaternionNormTol) {
        throw MalformedRow(line, "quaternion norm " + std::to_string(norm) + " is not unit");
      }
      m.rotation = quaternion_to_rotation(q[0], q[1], q[2], q[3]);
    } else if (fields.size() == 10) {
      Eigen::Matrix3d r;
      for (int i = 0; i < 9; ++i) r(i / 3, i % 3) = detail::parse_field(fields[i + 1], line, i + 2);
      if (orthonormality_error(r) > kQuaternionNormTol) {
        throw MalformedRow(line, "rotation matrix is not orthonormal");
      }
      m.rotation = nearest_rotation(r);
    } else {
      throw MalformedRow(line, "expected 5 or 10 fields, got " + std::to_string(fields.size()));
    }
    if (!samples.empty() && m.timestamp < samples.back().timestamp) {
      throw NonMonotonicTimestamps("line " + std::to_string(line) + ": timestamp " +
                                   std::to_string(m.timestamp) + " precedes " +
                                   std::to_string(samples.back().timestamp));
    }
    samples.push_back(m);
  }
  return samples;
}

inline std::vector<OrientationMeasurement> parse_imu_log_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open IMU log '" + path + "'");
  return parse_imu_log(in);
}

/// Writes quaternion rows using shortest round-trip number formatting.
inline void write_imu_log(std::ostream& os, const std::vector<OrientationMeasurement>& samples) {
  os << kImuLogHeader << '\n';
  for (const auto& s : samples) {
    const Eigen::Vector4d q = rotation_to_quaternion(s.rotation);
    detail::format_double(os, s.timestamp);
    for (int i = 0; i < 4; ++i) {
      os << ',';
      detail::format_double(os, q(i));
    }
    os << '\n';
  }
}

inline void write_imu_log_file(const std::string& path,
                               const std::vector<OrientationMeasurement>& samples) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write IMU log '" + path + "'");
  write_imu_log(out, samples);
  if (!out) throw InvalidArgument("failed writing IMU log '" + path + "'");
}

/// Sample store shared by one producer and one consumer. `snapshot()` returns
/// a consistent copy, so an estimate never sees a half-appended log.
class ImuSampleBuffer {
 public:
  void append(const OrientationMeasurement& m) {
    std::lock_guard lock(mutex_);
    if (!samples_.empty() && m.timestamp < samples_.back().timestamp) {
      throw NonMonotonicTimestamps("appended timestamp " + std::to_string(m.timestamp) +
                                   " precedes " + std::to_string(samples_.back().timestamp));
    }
    samples_.push_back(m);
  }

  std::vector<OrientationMeasurement> snapshot() const {
    std::lock_guard lock(mutex_);
    return samples_;
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return samples_.size();
  }

 private:
  mutable std::mutex mutex_;
  std::vector<OrientationMeasurement> samples_;
};

}  // namespace contarm

#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Core>
#include <Eigen/SVD>

namespace contarm {

/// Relative cutoff below which singular values are treated as zero.
inline constexpr double kPinvRelativeCutoff = 1e-8;

/// Moore-Penrose pseudoinverse through a full SVD. Singular values below
/// `relative_cutoff * sigma_max` are dropped.
inline Eigen::MatrixXd pseudoinverse(const Eigen::MatrixXd& m,
                                     double relative_cutoff = kPinvRelativeCutoff) {
  if (m.size() == 0) return Eigen::MatrixXd::Zero(m.cols(), m.rows());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double cutoff = relative_cutoff * (s.size() > 0 ? s(0) : 0.0);
  Eigen::VectorXd s_inv = Eigen::VectorXd::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff && s(i) > 0.0) s_inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * s_inv.asDiagonal() * svd.matrixU().transpose();
}

/// Fixed-size convenience wrapper; the result has the transposed shape.
template <typename Derived>
Eigen::Matrix<double, Derived::ColsAtCompileTime, Derived::RowsAtCompileTime> pseudoinverse_fixed(
    const Eigen::MatrixBase<Derived>& m, double relative_cutoff = kPinvRelativeCutoff) {
  return pseudoinverse(Eigen::MatrixXd(m), relative_cutoff);
}

/// Singular values in descending order.
inline Eigen::VectorXd singular_values(const Eigen::MatrixXd& m) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues();
}

inline Eigen::Matrix3d rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d r;
  r << c, -s, 0,
       s,  c, 0,
       0,  0, 1;
  return r;
}

inline Eigen::Matrix3d rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d r;
  r <<  c, 0, s,
        0, 1, 0,
       -s, 0, c;
  return r;
}

inline Eigen::Matrix3d skew(const Eigen::Vector3d& w) {
  Eigen::Matrix3d s;
  s <<     0, -w.z(),  w.y(),
       w.z(),      0, -w.x(),
      -w.y(),  w.x(),      0;
  return s;
}

/// Largest absolute entry of RᵀR − I, together with |det R − 1|.
inline double orthonormality_error(const Eigen::Matrix3d& r) {
  const double gram = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return std::max(gram, std::abs(r.determinant() - 1.0));
}

inline bool is_rotation(const Eigen::Matrix3d& r, double tol = 1e-6) {
  return orthonormality_error(r) <= tol;
}

/// Closest rotation in the Frobenius sense (polar factor U·Vᵀ).
inline Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  return u * v.transpose();
}

}  // namespace contarm

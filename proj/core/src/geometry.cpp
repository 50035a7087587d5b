#include "usrecon/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace usrecon {

RigidPose RigidPose::inverse() const {
  RigidPose out;
  out.R = R.transpose();
  out.t = -(out.R * t);
  return out;
}

RigidPose RigidPose::compose(const RigidPose& other) const {
  RigidPose out;
  out.R = R * other.R;
  out.t = R * other.t + t;
  return out;
}

RigidPose RigidPose::from_quaternion(double qw, double qx, double qy, double qz,
                                     const Vec3& t) {
  Eigen::Quaterniond q(qw, qx, qy, qz);
  if (std::abs(q.norm() - 1.0) > 1e-6) {
    throw std::invalid_argument("quaternion is not unit norm");
  }
  RigidPose out;
  out.R = q.normalized().toRotationMatrix();
  out.t = t;
  return out;
}

Eigen::Vector4d RigidPose::quaternion() const {
  Eigen::Quaterniond q(R);
  if (q.w() < 0) q.coeffs() = -q.coeffs();
  return Eigen::Vector4d(q.w(), q.x(), q.y(), q.z());
}

bool RigidPose::rotation_valid(double tol) const {
  double ortho = (R * R.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(R.determinant() - 1.0) <= tol;
}

Vec6 PoseParam::as_vector() const {
  Vec6 v;
  v << omega, tau;
  return v;
}

PoseParam PoseParam::from_vector(const Vec6& v) {
  PoseParam p;
  p.omega = v.head<3>();
  p.tau = v.tail<3>();
  return p;
}

Mat3 hat(const Vec3& w) {
  Mat3 m;
  m << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return m;
}

Mat3 so3_exp(const Vec3& omega) {
  double theta = omega.norm();
  Mat3 W = hat(omega);
  double a, b;  // R = I + a*W + b*W^2
  if (theta < 1e-6) {
    double t2 = theta * theta;
    a = 1.0 - t2 / 6.0;
    b = 0.5 - t2 / 24.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / (theta * theta);
  }
  return Mat3::Identity() + a * W + b * W * W;
}

Vec3 so3_log(const Mat3& R) {
  Eigen::AngleAxisd aa(R);
  return aa.angle() * aa.axis();
}

Mat3 so3_right_jacobian(const Vec3& omega) {
  double theta = omega.norm();
  Mat3 W = hat(omega);
  double c1, c2;  // Jr = I - c1*W + c2*W^2
  if (theta < 1e-6) {
    double t2 = theta * theta;
    c1 = 0.5 - t2 / 24.0;
    c2 = 1.0 / 6.0 - t2 / 120.0;
  } else {
    double t2 = theta * theta;
    c1 = (1.0 - std::cos(theta)) / t2;
    c2 = (theta - std::sin(theta)) / (t2 * theta);
  }
  return Mat3::Identity() - c1 * W + c2 * W * W;
}

RigidPose exp_map(const PoseParam& delta, const RigidPose& base) {
  RigidPose out;
  out.R = so3_exp(delta.omega) * base.R;
  out.t = base.t + delta.tau;
  return out;
}

double geodesic_angle(const Mat3& Ra, const Mat3& Rb) {
  return Eigen::AngleAxisd(Mat3(Ra.transpose() * Rb)).angle();
}

FrameGeometry FrameGeometry::from_pose(const RigidPose& pose, double d_pixel) {
  if (!(d_pixel > 0)) throw std::invalid_argument("d_pixel must be positive");
  FrameGeometry g;
  g.origin = pose.t;
  g.u = pose.R.col(0);
  g.v = pose.R.col(1);
  g.normal = g.u.cross(g.v);
  g.d_pixel = d_pixel;
  return g;
}

Vec3 pixel_to_world(double w, double h, const RigidPose& pose, double d_pixel) {
  return pose.R * Vec3(w * d_pixel, h * d_pixel, 0.0) + pose.t;
}

Vec3 pixel_to_world(int w, int h, int width, int height, const RigidPose& pose,
                    double d_pixel) {
  if (w < 0 || w >= width || h < 0 || h >= height) {
    throw std::out_of_range("pixel index outside image bounds");
  }
  return pixel_to_world(static_cast<double>(w), static_cast<double>(h), pose,
                        d_pixel);
}

double plane_distance(const FrameGeometry& fi, const FrameGeometry& fj) {
  return std::abs((fj.origin - fi.origin).dot(fi.normal));
}

double plane_angle(const RigidPose& pi, const RigidPose& pj) {
  return geodesic_angle(pi.R, pj.R);
}

}  // namespace usrecon

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace usrecon {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;

// Rigid transform applied as p' = R * p + t.
struct RigidPose {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return R * p + t; }
  RigidPose inverse() const;
  // this ∘ other: (this * other).apply(p) == this->apply(other.apply(p))
  RigidPose compose(const RigidPose& other) const;

  // Hamilton convention, scalar first. Throws std::invalid_argument unless
  // |q| == 1 within 1e-6; the quaternion is renormalized before use.
  static RigidPose from_quaternion(double qw, double qx, double qy, double qz,
                                   const Vec3& t);
  // Returns (qw, qx, qy, qz) with qw >= 0.
  Eigen::Vector4d quaternion() const;

  bool rotation_valid(double tol = 1e-9) const;
};

// Additive pose update in so(3) x R^3. Rotation and translation parts are
// decoupled: the update never mixes them.
struct PoseParam {
  Vec3 omega = Vec3::Zero();
  Vec3 tau = Vec3::Zero();

  Vec6 as_vector() const;
  static PoseParam from_vector(const Vec6& v);
};

Mat3 hat(const Vec3& w);

// Rodrigues formula; series expansion below ||omega|| = 1e-6.
Mat3 so3_exp(const Vec3& omega);

// Principal log, ||result|| in [0, pi].
Vec3 so3_log(const Mat3& R);

// Right Jacobian of SO(3): Exp(omega + d) ≈ Exp(omega) * Exp(Jr(omega) * d).
Mat3 so3_right_jacobian(const Vec3& omega);

// Refined pose: rotation Exp(omega) * base.R (delta on the left), translation
// base.t + tau.
RigidPose exp_map(const PoseParam& delta, const RigidPose& base);

// Geodesic angle between two rotations, in [0, pi].
double geodesic_angle(const Mat3& Ra, const Mat3& Rb);

// In-plane frame basis derived from a pose: origin is the world position of
// pixel (0, 0), u/v are the world directions of the pixel axes, normal = u x v.
struct FrameGeometry {
  Vec3 origin = Vec3::Zero();
  Vec3 u = Vec3::UnitX();
  Vec3 v = Vec3::UnitY();
  Vec3 normal = Vec3::UnitZ();
  double d_pixel = 1.0;

  static FrameGeometry from_pose(const RigidPose& pose, double d_pixel);
};

// World position of pixel (w, h): pose applied to (w*d_pixel, h*d_pixel, 0).
Vec3 pixel_to_world(double w, double h, const RigidPose& pose, double d_pixel);

// Bounds-checked variant; throws std::out_of_range unless 0 <= w < width and
// 0 <= h < height.
Vec3 pixel_to_world(int w, int h, int width, int height, const RigidPose& pose,
                    double d_pixel);

// Out-of-plane offset of frame j's origin as seen from frame i: |(o_j - o_i) . n_i|.
double plane_distance(const FrameGeometry& fi, const FrameGeometry& fj);

// Geodesic angle between the two frame orientations.
double plane_angle(const RigidPose& pi, const RigidPose& pj);

}  // namespace usrecon

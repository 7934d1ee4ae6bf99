#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace briar {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Joint indices of one leg, proximal to distal.
enum JointIndex : int { kAbAd = 0, kHip = 1, kKnee = 2 };

/// Leg indices. Diagonal pairs (FL, BR) and (FR, BL) trot together.
enum LegId : int { kFrontLeft = 0, kFrontRight = 1, kBackLeft = 2, kBackRight = 3 };
constexpr int kNumLegs = 4;
constexpr const char* kLegNames[kNumLegs] = {"fl", "fr", "bl", "br"};

inline bool finite(const Vec3& v) { return v.allFinite(); }

/// Kinematic, inertial and friction description of one 3-DOF leg modeled as
/// an independent serial chain rooted at the torso frame.
///
/// Chain convention (zero configuration): the ab/ad joint sits at
/// `hip_position` and rotates about torso x. Its link extends laterally by
/// link_lengths[0] * y_sign to the hip pitch joint. Hip and knee rotate about
/// torso y; upper and lower links extend straight down (-z) by
/// link_lengths[1] and link_lengths[2]. Positive hip/knee rotation moves the
/// distal end toward -x (backward).
struct LegModel {
  std::array<double, 3> link_lengths{0.10, 0.206, 0.206};  // m
  std::array<double, 3> link_masses{0.6, 0.8, 0.25};       // kg
  std::array<Vec3, 3> link_com_offsets{
      Vec3(0.0, 0.05, 0.0),    // in link-0 frame (y scaled by y_sign below)
      Vec3(0.0, 0.0, -0.103),  // in link-1 frame
      Vec3(0.0, 0.0, -0.103)}; // in link-2 frame
  std::array<Mat3, 3> link_inertias{rod_inertia_y(0.6, 0.10),
                                    rod_inertia_z(0.8, 0.206),
                                    rod_inertia_z(0.25, 0.206)};
  std::array<double, 3> friction_dry{0.30, 0.30, 0.44};      // c, N*m
  std::array<double, 3> friction_viscous{0.01, 0.01, 0.01};  // d, N*m*s/rad
  std::array<double, 3> joint_lower{-0.8, -3.0, -2.9};       // rad
  std::array<double, 3> joint_upper{0.8, 3.0, 2.9};          // rad
  std::array<double, 3> velocity_limit{20.0, 20.0, 20.0};    // rad/s
  std::array<double, 3> torque_limit{20.0, 20.0, 20.0};      // N*m
  Vec3 hip_position{0.19, 0.055, 0.0};  // leg root in torso frame, m
  double y_sign = 1.0;                  // +1 left legs, -1 right legs
  double gravity = 9.81;                // m/s^2 along torso -z
  double friction_smoothing = 0.01;     // v_eps for tanh(qdot/v_eps), rad/s

  /// Thin rod of mass m and length l along the local z axis.
  static Mat3 rod_inertia_z(double m, double l) {
    Mat3 inertia = Mat3::Zero();
    const double tr = m * l * l / 12.0;
    inertia(0, 0) = tr;
    inertia(1, 1) = tr;
    inertia(2, 2) = 0.5 * m * 0.02 * 0.02;  // 2 cm shaft radius
    return inertia;
  }

  /// Thin rod along the local y axis (the ab/ad offset link).
  static Mat3 rod_inertia_y(double m, double l) {
    Mat3 inertia = Mat3::Zero();
    const double tr = m * l * l / 12.0;
    inertia(0, 0) = tr;
    inertia(1, 1) = 0.5 * m * 0.02 * 0.02;
    inertia(2, 2) = tr;
    return inertia;
  }

  void validate() const {
    for (int i = 0; i < 3; ++i) {
      if (!(link_lengths[i] > 0.0)) throw std::invalid_argument("link_lengths must be > 0");
      if (!(link_masses[i] > 0.0)) throw std::invalid_argument("link_masses must be > 0");
      if (!(friction_dry[i] >= 0.0)) throw std::invalid_argument("friction_dry must be >= 0");
      if (!(friction_viscous[i] >= 0.0)) throw std::invalid_argument("friction_viscous must be >= 0");
      if (!(joint_lower[i] < joint_upper[i])) throw std::invalid_argument("joint limits: lower must be < upper");
      if (!(velocity_limit[i] > 0.0)) throw std::invalid_argument("velocity_limit must be > 0");
      if (!(torque_limit[i] > 0.0)) throw std::invalid_argument("torque_limit must be > 0");
      if (!link_inertias[i].allFinite() ||
          (link_inertias[i] - link_inertias[i].transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw std::invalid_argument("link_inertias must be finite and symmetric");
      Eigen::SelfAdjointEigenSolver<Mat3> es(link_inertias[i]);
      if (es.eigenvalues().minCoeff() <= 0.0)
        throw std::invalid_argument("link_inertias must be positive definite");
    }
    if (std::abs(std::abs(y_sign) - 1.0) > 1e-12) throw std::invalid_argument("y_sign must be +1 or -1");
  }

  /// COM offset of link 0 with the lateral component mirrored by y_sign.
  Vec3 com_offset(int link) const {
    Vec3 c = link_com_offsets[static_cast<size_t>(link)];
    if (link == 0) c.y() *= y_sign;
    return c;
  }

  /// Vector from a link's joint to its distal end, in the link frame.
  Vec3 link_tip_offset(int link) const {
    switch (link) {
      case 0: return Vec3(0.0, y_sign * link_lengths[0], 0.0);
      case 1: return Vec3(0.0, 0.0, -link_lengths[1]);
      case 2: return Vec3(0.0, 0.0, -link_lengths[2]);
      default: throw std::out_of_range("link index must be 0..2");
    }
  }
};

/// Measured joint state of one leg.
struct JointState {
  Vec3 q = Vec3::Zero();     // rad
  Vec3 qdot = Vec3::Zero();  // rad/s

  bool is_finite() const { return q.allFinite() && qdot.allFinite(); }
};

/// A pure point force applied somewhere along a link, torso frame.
struct ContactForce {
  int link_index = 2;
  double fraction_along_link = 1.0;  // 0 at the link's joint, 1 at its tip
  Vec3 force = Vec3::Zero();         // N

  void validate() const {
    if (link_index < 0 || link_index > 2) throw std::invalid_argument("ContactForce: link_index out of range");
    if (!(fraction_along_link >= 0.0 && fraction_along_link <= 1.0))
      throw std::invalid_argument("ContactForce: fraction_along_link must be in [0,1]");
    if (!force.allFinite()) throw std::invalid_argument("ContactForce: non-finite force");
  }
};

}  // namespace briar

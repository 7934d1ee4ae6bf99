#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "briar/leg_model.hpp"

namespace briar {

/// World (= torso) frame kinematics of one leg at a given configuration.
struct LegFrames {
  std::array<Vec3, 3> joint_origin;   // o_j
  std::array<Vec3, 3> joint_axis;     // a_j, unit
  std::array<Mat3, 3> link_rotation;  // R_j (link frame to torso)
  std::array<Vec3, 3> link_com;       // COM of each link
  std::array<Vec3, 3> link_tip;       // distal end of each link
  Vec3 foot;                          // == link_tip[2]
};

inline Mat3 rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << 1, 0, 0, 0, c, -s, 0, s, c;
  return r;
}

inline Mat3 rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << c, 0, s, 0, 1, 0, -s, 0, c;
  return r;
}

inline Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return s;
}

/// Pose of every link frame plus the foot point, torso frame.
inline LegFrames forward_kinematics(const LegModel& model, const Vec3& q) {
  if (!q.allFinite()) throw std::invalid_argument("forward_kinematics: non-finite q");
  LegFrames f;
  f.joint_origin[0] = model.hip_position;
  f.joint_axis[0] = Vec3::UnitX();
  f.link_rotation[0] = rot_x(q[0]);
  f.link_tip[0] = f.joint_origin[0] + f.link_rotation[0] * model.link_tip_offset(0);

  f.joint_origin[1] = f.link_tip[0];
  f.joint_axis[1] = f.link_rotation[0] * Vec3::UnitY();
  f.link_rotation[1] = f.link_rotation[0] * rot_y(q[1]);
  f.link_tip[1] = f.joint_origin[1] + f.link_rotation[1] * model.link_tip_offset(1);

  f.joint_origin[2] = f.link_tip[1];
  f.joint_axis[2] = f.link_rotation[1] * Vec3::UnitY();
  f.link_rotation[2] = f.link_rotation[1] * rot_y(q[2]);
  f.link_tip[2] = f.joint_origin[2] + f.link_rotation[2] * model.link_tip_offset(2);

  for (int i = 0; i < 3; ++i) f.link_com[i] = f.joint_origin[i] + f.link_rotation[i] * model.com_offset(i);
  f.foot = f.link_tip[2];
  return f;
}

/// Point on a link at `fraction` of the way from its joint to its tip.
inline Vec3 link_point(const LegModel& model, const LegFrames& f, int link_index, double fraction) {
  if (link_index < 0 || link_index > 2) throw std::invalid_argument("link_point: link_index out of range");
  return f.joint_origin[link_index] + f.link_rotation[link_index] * (fraction * model.link_tip_offset(link_index));
}

/// 3x3 linear-velocity Jacobian of a point on a link. Columns for joints
/// distal to the contact link are zero.
inline Mat3 point_jacobian(const LegModel& model, const Vec3& q, int link_index, double fraction) {
  if (link_index < 0 || link_index > 2) throw std::invalid_argument("point_jacobian: link_index out of range");
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw std::invalid_argument("point_jacobian: fraction must be in [0,1]");
  const LegFrames f = forward_kinematics(model, q);
  const Vec3 p = link_point(model, f, link_index, fraction);
  Mat3 jac = Mat3::Zero();
  for (int j = 0; j <= link_index; ++j) jac.col(j) = f.joint_axis[j].cross(p - f.joint_origin[j]);
  return jac;
}

inline Mat3 foot_jacobian(const LegModel& model, const Vec3& q) {
  return point_jacobian(model, q, 2, 1.0);
}

namespace detail {

/// Per-link world Jacobians and rotated inertias plus their exact partials
/// with respect to each joint coordinate. The partials use the chain rules
///   da_j/dq_k = a_k x a_j            (k < j)
///   do_j/dq_k = a_k x (o_j - o_k)    (k < j)
///   dx_i/dq_k = a_k x (x_i - o_k)    (k <= i)
///   dW_i/dq_k = [a_k] W_i - W_i [a_k] (k <= i)
/// so the Christoffel construction below is exact to roundoff.
struct InertiaKinematics {
  std::array<Mat3, 3> jv;                  // COM linear Jacobians
  std::array<Mat3, 3> jw;                  // angular Jacobians
  std::array<Mat3, 3> w;                   // R I R^T per link
  std::array<std::array<Mat3, 3>, 3> djv;  // djv[k][i] = d(jv_i)/dq_k
  std::array<std::array<Mat3, 3>, 3> djw;
  std::array<std::array<Mat3, 3>, 3> dw;
};

inline InertiaKinematics inertia_kinematics(const LegModel& model, const Vec3& q) {
  const LegFrames f = forward_kinematics(model, q);
  InertiaKinematics k;

  std::array<std::array<Vec3, 3>, 3> da{};  // da[k][j] = d(a_j)/dq_k
  std::array<std::array<Vec3, 3>, 3> dorg{};  // dorg[k][j] = d(o_j)/dq_k
  std::array<std::array<Vec3, 3>, 3> dx{};  // dx[k][i] = d(x_i)/dq_k
  for (int kq = 0; kq < 3; ++kq)
    for (int j = 0; j < 3; ++j) {
      da[kq][j] = (kq < j) ? Vec3(f.joint_axis[kq].cross(f.joint_axis[j])) : Vec3::Zero();
      dorg[kq][j] = (kq < j) ? Vec3(f.joint_axis[kq].cross(f.joint_origin[j] - f.joint_origin[kq])) : Vec3::Zero();
      dx[kq][j] = (kq <= j) ? Vec3(f.joint_axis[kq].cross(f.link_com[j] - f.joint_origin[kq])) : Vec3::Zero();
    }

  for (int i = 0; i < 3; ++i) {
    k.jv[i].setZero();
    k.jw[i].setZero();
    for (int j = 0; j <= i; ++j) {
      k.jv[i].col(j) = f.joint_axis[j].cross(f.link_com[i] - f.joint_origin[j]);
      k.jw[i].col(j) = f.joint_axis[j];
    }
    k.w[i] = f.link_rotation[i] * model.link_inertias[i] * f.link_rotation[i].transpose();
    for (int kq = 0; kq < 3; ++kq) {
      k.djv[kq][i].setZero();
      k.djw[kq][i].setZero();
      for (int j = 0; j <= i; ++j) {
        k.djv[kq][i].col(j) =
            da[kq][j].cross(f.link_com[i] - f.joint_origin[j]) + f.joint_axis[j].cross(dx[kq][i] - dorg[kq][j]);
        k.djw[kq][i].col(j) = da[kq][j];
      }
      if (kq <= i) {
        const Mat3 ax = skew(f.joint_axis[kq]);
        k.dw[kq][i] = ax * k.w[i] - k.w[i] * ax;
      } else {
        k.dw[kq][i].setZero();
      }
    }
  }
  return k;
}

}  // namespace detail

/// Joint-space inertia matrix M(q). Symmetric positive definite.
inline Mat3 mass_matrix(const LegModel& model, const Vec3& q) {
  const detail::InertiaKinematics k = detail::inertia_kinematics(model, q);
  Mat3 m = Mat3::Zero();
  for (int i = 0; i < 3; ++i)
    m += model.link_masses[i] * k.jv[i].transpose() * k.jv[i] + k.jw[i].transpose() * k.w[i] * k.jw[i];
  return 0.5 * (m + m.transpose());
}

/// Exact partial derivatives dM/dq_k, k = 0..2.
inline std::array<Mat3, 3> mass_matrix_partials(const LegModel& model, const Vec3& q) {
  const detail::InertiaKinematics k = detail::inertia_kinematics(model, q);
  std::array<Mat3, 3> dm;
  for (int kq = 0; kq < 3; ++kq) {
    Mat3 d = Mat3::Zero();
    for (int i = 0; i < 3; ++i) {
      const double m = model.link_masses[i];
      d += m * (k.djv[kq][i].transpose() * k.jv[i] + k.jv[i].transpose() * k.djv[kq][i]);
      d += k.djw[kq][i].transpose() * k.w[i] * k.jw[i] + k.jw[i].transpose() * k.dw[kq][i] * k.jw[i] +
           k.jw[i].transpose() * k.w[i] * k.djw[kq][i];
    }
    dm[kq] = 0.5 * (d + d.transpose());
  }
  return dm;
}

/// Time derivative of M along qdot.
inline Mat3 mass_matrix_derivative(const LegModel& model, const Vec3& q, const Vec3& qdot) {
  const std::array<Mat3, 3> dm = mass_matrix_partials(model, q);
  Mat3 mdot = Mat3::Zero();
  for (int kq = 0; kq < 3; ++kq) mdot += dm[kq] * qdot[kq];
  return mdot;
}

/// Coriolis/centrifugal matrix built from the Christoffel symbols of M, so
/// that Mdot = C + C^T holds exactly.
inline Mat3 christoffel_matrix(const LegModel& model, const Vec3& q, const Vec3& qdot) {
  if (!q.allFinite() || !qdot.allFinite()) throw std::invalid_argument("christoffel_matrix: non-finite input");
  const std::array<Mat3, 3> dm = mass_matrix_partials(model, q);
  Mat3 c = Mat3::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int kq = 0; kq < 3; ++kq)
        c(i, j) += 0.5 * (dm[kq](i, j) + dm[j](i, kq) - dm[i](j, kq)) * qdot[kq];
  return c;
}

/// Gravity torque vector G(q) = dU/dq with U the summed link potential.
inline Vec3 gravity_vector(const LegModel& model, const Vec3& q) {
  const LegFrames f = forward_kinematics(model, q);
  Vec3 g = Vec3::Zero();
  for (int j = 0; j < 3; ++j)
    for (int i = j; i < 3; ++i) {
      const Vec3 dcom = f.joint_axis[j].cross(f.link_com[i] - f.joint_origin[j]);
      g[j] += model.link_masses[i] * model.gravity * dcom.z();
    }
  return g;
}

/// Potential energy of the leg, J (datum at torso z = 0).
inline double potential_energy(const LegModel& model, const Vec3& q) {
  const LegFrames f = forward_kinematics(model, q);
  double u = 0.0;
  for (int i = 0; i < 3; ++i) u += model.link_masses[i] * model.gravity * f.link_com[i].z();
  return u;
}

/// Kinetic energy 0.5 qdot^T M qdot, J.
inline double kinetic_energy(const LegModel& model, const Vec3& q, const Vec3& qdot) {
  return 0.5 * qdot.dot(mass_matrix(model, q) * qdot);
}

/// Signed joint friction torque, smooth tanh approximation of
/// -c sign(qdot) - d qdot. Odd in qdot; negative work for any motion.
inline Vec3 friction_torque(const LegModel& model, const Vec3& qdot) {
  if (!qdot.allFinite()) throw std::invalid_argument("friction_torque: non-finite qdot");
  Vec3 tau;
  for (int i = 0; i < 3; ++i)
    tau[i] = -model.friction_dry[i] * std::tanh(qdot[i] / model.friction_smoothing) -
             model.friction_viscous[i] * qdot[i];
  return tau;
}

/// Sum of J_c^T F over the given contacts.
inline Vec3 external_torque_from_contacts(const LegModel& model, const Vec3& q,
                                          const std::vector<ContactForce>& contacts) {
  Vec3 tau = Vec3::Zero();
  for (const ContactForce& c : contacts) {
    c.validate();
    tau += point_jacobian(model, q, c.link_index, c.fraction_along_link).transpose() * c.force;
  }
  return tau;
}

/// Stiff unilateral penalty torque near the joint limits, keeping the
/// dynamics smooth instead of clamping q.
inline Vec3 joint_limit_torque(const LegModel& model, const JointState& state, double stiffness = 400.0,
                               double damping = 4.0) {
  Vec3 tau = Vec3::Zero();
  for (int i = 0; i < 3; ++i) {
    if (state.q[i] > model.joint_upper[i])
      tau[i] = -stiffness * (state.q[i] - model.joint_upper[i]) - damping * std::max(0.0, state.qdot[i]);
    else if (state.q[i] < model.joint_lower[i])
      tau[i] = -stiffness * (state.q[i] - model.joint_lower[i]) - damping * std::min(0.0, state.qdot[i]);
  }
  return tau;
}

/// Joint accelerations from M qddot + C qdot + G - tau_m - tau_f = tau_ext.
/// tau_f enters with its signed value from friction_torque.
inline Vec3 forward_dynamics(const LegModel& model, const JointState& state, const Vec3& tau_m,
                             const Vec3& tau_ext) {
  if (!state.is_finite() || !tau_m.allFinite() || !tau_ext.allFinite())
    throw std::invalid_argument("forward_dynamics: non-finite input");
  const Mat3 m = mass_matrix(model, state.q);
  const Mat3 c = christoffel_matrix(model, state.q, state.qdot);
  const Vec3 g = gravity_vector(model, state.q);
  const Vec3 tau_f = friction_torque(model, state.qdot);
  return m.ldlt().solve(tau_m + tau_f + tau_ext - c * state.qdot - g);
}

/// One explicit-midpoint step of the leg dynamics with torques held constant
/// over the step. Keeps passive energy drift well below the 1% bound that a
/// first-order update misses at 1 kHz.
inline JointState integrate_leg(const LegModel& model, const JointState& state, const Vec3& tau_m,
                                const Vec3& tau_ext, double dt) {
  const Vec3 qdd0 = forward_dynamics(model, state, tau_m, tau_ext);
  JointState mid;
  mid.q = state.q + 0.5 * dt * state.qdot;
  mid.qdot = state.qdot + 0.5 * dt * qdd0;
  const Vec3 qdd_mid = forward_dynamics(model, mid, tau_m, tau_ext);
  JointState next;
  next.q = state.q + dt * (state.qdot + 0.5 * dt * qdd_mid);
  next.qdot = state.qdot + dt * qdd_mid;
  return next;
}

}  // namespace briar

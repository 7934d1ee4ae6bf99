#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "briar/gait.hpp"
#include "briar/leg_dynamics.hpp"
#include "briar/momentum_observer.hpp"

namespace briar {

struct ControlGains {
  Vec3 kp_swing{120.0, 180.0, 180.0};
  Vec3 kd_swing{2.0, 4.0, 4.0};
  Vec3 kp_stance{150.0, 250.0, 250.0};
  Vec3 kd_stance{3.0, 6.0, 6.0};
  double retract_hip_velocity = 15.0;  // rad/s, positive retracts (up/back)
  double retract_hip_gain = 3.0;       // N*m per rad/s of velocity error
  double retract_knee_torque = 2.0;    // N*m of forward shank pressure
  double retract_abad_kp = 60.0;
  double retract_abad_kd = 1.5;
  double advance_speed = 3.0;   // m/s, horizontal extension profile
  double advance_accel = 60.0;  // m/s^2
  double descend_speed = 2.5;   // m/s
  double descend_accel = 60.0;  // m/s^2
  double stance_press = 58.9;   // N, downward stance preload (half bodyweight)
};

struct JointCommand {
  enum class Mode { Torque, Velocity, Position };
  Mode mode = Mode::Torque;
  double target = 0.0;           // rad (Position) or rad/s (Velocity)
  double target_velocity = 0.0;  // rad/s, Position mode only
  double kp = 0.0;
  double kd = 0.0;
  double feedforward = 0.0;  // N*m
};

struct LegCommand {
  std::array<JointCommand, 3> joints{};

  /// Realized motor torques: control law, torque limit, and a free-speed
  /// guard (the motor cannot accelerate a joint past its velocity limit).
  Vec3 evaluate(const LegModel& model, const JointState& state) const {
    Vec3 tau;
    for (int i = 0; i < 3; ++i) {
      const JointCommand& c = joints[i];
      double t = c.feedforward;
      switch (c.mode) {
        case JointCommand::Mode::Torque:
          break;
        case JointCommand::Mode::Velocity:
          t += c.kd * (c.target - state.qdot[i]);
          break;
        case JointCommand::Mode::Position:
          t += c.kp * (c.target - state.q[i]) + c.kd * (c.target_velocity - state.qdot[i]);
          break;
      }
      const double lim = model.torque_limit[i];
      t = std::clamp(t, -lim, lim);
      if (state.qdot[i] > model.velocity_limit[i]) t = std::min(t, 0.0);
      if (state.qdot[i] < -model.velocity_limit[i]) t = std::max(t, 0.0);
      tau[i] = t;
    }
    return tau;
  }
};

/// Per-leg gait + reaction controller. Owns the reaction state machine, the
/// swing plan and the stance hold; emits one LegCommand per tick.
class LegController {
 public:
  struct Output {
    LegCommand command;
    Vec3 foot_target_world = Vec3::Zero();  // planned foot point (world)
    bool workspace_clamped = false;
    bool entered_swing = false;
    bool entered_stance = false;
  };

  LegController() = default;
  LegController(int leg, const LegModel* model, const GaitConfig& gait, const StrategyConfig& strategy,
                const ControlGains& gains)
      : leg_(leg), model_(model), gait_(gait), strategy_(strategy), gains_(gains) {}

  const ReactionState& reaction() const { return reaction_; }
  int retract_entries() const { return retract_entries_; }
  const Vec3& foothold() const { return foothold_; }

  void initialize(double t, const Vec3& body_position, const JointState& state) {
    const Phase phase = gait_phase(t, gait_, leg_);
    prev_kind_ = phase.kind;
    reaction_ = ReactionState{};
    const Vec3 foot = body_position + forward_kinematics(*model_, state.q).foot;
    if (phase.kind == PhaseKind::Stance) {
      foothold_ = foot;
      foothold_.z() = 0.0;
    } else {
      liftoff_foot_ = foot;
      foothold_ = plan_foothold(body_position);
    }
    prev_q_target_valid_ = false;
  }

  /// One control tick. Throws if the reaction machinery is asked to run
  /// while the leg is in stance (reaction_update is a swing-phase operation).
  Output update(double t, const Vec3& body_position, const JointState& state, const StuckVerdict& verdict,
                double dt) {
    const Phase phase = gait_phase(t, gait_, leg_);
    Output out;
    if (phase.kind != prev_kind_) {
      if (phase.kind == PhaseKind::Swing) {
        out.entered_swing = true;
        begin_swing(body_position, state);
      } else {
        out.entered_stance = true;
        begin_stance(body_position, state);
      }
      prev_kind_ = phase.kind;
    }

    if (phase.kind == PhaseKind::Swing)
      swing_update(phase, body_position, state, verdict, dt, out);
    else
      stance_update(body_position, state, out);
    return out;
  }

  /// Swing-phase reaction step exposed for direct use; invalid in stance.
  Output reaction_update(double t, const Vec3& body_position, const JointState& state,
                         const StuckVerdict& verdict, double dt) {
    const Phase phase = gait_phase(t, gait_, leg_);
    if (phase.kind != PhaseKind::Swing)
      throw std::logic_error("reaction_update called during stance");
    return update(t, body_position, state, verdict, dt);
  }

 private:
  Vec3 plan_foothold(const Vec3& body_position) const {
    const double v = gait_.body_speed_cmd;
    Vec3 fh = body_position + model_->hip_position;
    fh.x() += v * (gait_.swing_duration() + 0.25 * gait_.period);
    fh.y() += model_->y_sign * model_->link_lengths[0];
    fh.z() = 0.0;
    return fh;
  }

  void begin_swing(const Vec3& body_position, const JointState& state) {
    liftoff_foot_ = body_position + forward_kinematics(*model_, state.q).foot;
    foothold_ = plan_foothold(body_position);
    reaction_.mode = ReactionMode::Nominal;
    reaction_.retract_elapsed = 0.0;
    carryover_latched_ = false;
    if (strategy_.reaction_enabled && (strategy_.retract_every_swing || reaction_.carryover_stuck)) {
      reaction_.mode = ReactionMode::Retract;
      ++retract_entries_;
      retract_abad_hold_ = state.q[0];
    }
    reaction_.carryover_stuck = false;
    prev_q_target_valid_ = false;
  }

  void begin_stance(const Vec3& body_position, const JointState& state) {
    foothold_ = body_position + forward_kinematics(*model_, state.q).foot;
    foothold_.z() = 0.0;
    reaction_.mode = ReactionMode::Nominal;
    reaction_.retract_elapsed = 0.0;
    prev_q_target_valid_ = false;
  }

  void swing_update(const Phase& phase, const Vec3& body_position, const JointState& state,
                    const StuckVerdict& verdict, double dt, Output& out) {
    const double swing_duration = gait_.swing_duration();
    const double elapsed = phase.fraction * swing_duration;
    const double remaining = swing_duration - elapsed;
    const Vec3 foot_world = body_position + forward_kinematics(*model_, state.q).foot;

    if (!carryover_latched_ && remaining <= gait_.t_down) {
      reaction_.carryover_stuck = verdict.stuck;
      carryover_latched_ = true;
    }

    if (strategy_.reaction_enabled) {
      const ReactionMode before = reaction_.mode;
      const ReactionEvents ev = reaction_transition(reaction_, verdict, elapsed, swing_duration, gait_, dt);
      if (ev.entered_retract) {
        ++retract_entries_;
        retract_abad_hold_ = state.q[0];
        prev_q_target_valid_ = false;
      }
      if (ev.entered_advance) {
        extend_target_ = foot_world;
        extend_speed_ = 0.0;
        prev_q_target_valid_ = false;
      }
      (void)before;
      if (reaction_.mode == ReactionMode::ExtendAdvance) {
        advance_profile_step(dt);
        const double horiz_profile = (extend_target_.head<2>() - foothold_.head<2>()).norm();
        const double horiz_actual = (foot_world.head<2>() - foothold_.head<2>()).norm();
        if ((horiz_profile < 1e-4 && horiz_actual < 0.008) || remaining < gait_.t_down) {
          reaction_.mode = ReactionMode::ExtendDescend;
          extend_speed_ = 0.0;
        }
      } else if (reaction_.mode == ReactionMode::ExtendDescend) {
        descend_profile_step(dt);
      }
    }

    switch (reaction_.mode) {
      case ReactionMode::Nominal: {
        const Vec3 target = nominal_swing_target(phase.fraction, swing_gait_config(), liftoff_foot_, foothold_);
        out.foot_target_world = target;
        track_foot_target(target, body_position, state, gains_.kp_swing, gains_.kd_swing, 0.0, dt, out);
        break;
      }
      case ReactionMode::Retract:
        out.foot_target_world = foot_world;
        retract_command(state, out);
        break;
      case ReactionMode::ExtendAdvance:
      case ReactionMode::ExtendDescend:
        out.foot_target_world = extend_target_;
        track_foot_target(extend_target_, body_position, state, gains_.kp_swing, gains_.kd_swing, 0.0, dt, out);
        break;
    }
  }

  void stance_update(const Vec3& body_position, const JointState& state, Output& out) {
    out.foot_target_world = foothold_;
    track_foot_target(foothold_, body_position, state, gains_.kp_stance, gains_.kd_stance,
                      gains_.stance_press, ik_dt_hint_, out);
  }

  GaitConfig swing_gait_config() const {
    GaitConfig c = gait_;
    c.step_height = strategy_.step_height;
    return c;
  }

  void advance_profile_step(double dt) {
    Eigen::Vector2d to_go = foothold_.head<2>() - extend_target_.head<2>();
    const double dist = to_go.norm();
    if (dist < 1e-9) return;
    const double brake = std::sqrt(2.0 * gains_.advance_accel * dist);
    extend_speed_ = std::min({extend_speed_ + gains_.advance_accel * dt, gains_.advance_speed, brake});
    const double step = std::min(extend_speed_ * dt, dist);
    extend_target_.head<2>() += to_go / dist * step;
  }

  void descend_profile_step(double dt) {
    extend_target_.head<2>() = foothold_.head<2>();
    const double to_go = extend_target_.z() - foothold_.z();
    if (to_go <= 0.0) return;
    const double brake = std::sqrt(2.0 * gains_.descend_accel * to_go);
    extend_speed_ = std::min({extend_speed_ + gains_.descend_accel * dt, gains_.descend_speed, brake});
    extend_target_.z() -= std::min(extend_speed_ * dt, to_go);
  }

  void retract_command(const JointState& state, Output& out) {
    LegCommand& cmd = out.command;
    cmd.joints[kAbAd].mode = JointCommand::Mode::Position;
    cmd.joints[kAbAd].target = retract_abad_hold_;
    cmd.joints[kAbAd].kp = gains_.retract_abad_kp;
    cmd.joints[kAbAd].kd = gains_.retract_abad_kd;
    cmd.joints[kHip].mode = JointCommand::Mode::Velocity;
    cmd.joints[kHip].target = gains_.retract_hip_velocity;
    cmd.joints[kHip].kd = gains_.retract_hip_gain;
    cmd.joints[kKnee].mode = JointCommand::Mode::Torque;
    // forward shank pressure: negative about the +y knee axis
    cmd.joints[kKnee].feedforward = -gains_.retract_knee_torque;
    const Vec3 comp = gravity_vector(*model_, state.q) - friction_torque(*model_, state.qdot);
    cmd.joints[kAbAd].feedforward = comp[kAbAd];
    cmd.joints[kHip].feedforward = comp[kHip];
  }

  void track_foot_target(const Vec3& target_world, const Vec3& body_position, const JointState& state,
                         const Vec3& kp, const Vec3& kd, double press, double dt, Output& out) {
    const IkResult ik = leg_ik(*model_, target_world - body_position, strategy_.knee_forward);
    out.workspace_clamped = ik.clamped;
    Vec3 q_target = ik.q;
    Vec3 qd_target = Vec3::Zero();
    if (prev_q_target_valid_ && dt > 0.0) qd_target = (q_target - prev_q_target_) / dt;
    prev_q_target_ = q_target;
    prev_q_target_valid_ = true;
    ik_dt_hint_ = dt;

    Vec3 ff = gravity_vector(*model_, state.q) - friction_torque(*model_, state.qdot);
    if (press > 0.0) ff += foot_jacobian(*model_, state.q).transpose() * Vec3(0.0, 0.0, -press);

    for (int i = 0; i < 3; ++i) {
      JointCommand& c = out.command.joints[i];
      c.mode = JointCommand::Mode::Position;
      c.target = q_target[i];
      c.target_velocity = qd_target[i];
      c.kp = kp[i];
      c.kd = kd[i];
      c.feedforward = ff[i];
    }
  }

  int leg_ = 0;
  const LegModel* model_ = nullptr;
  GaitConfig gait_;
  StrategyConfig strategy_;
  ControlGains gains_;

  PhaseKind prev_kind_ = PhaseKind::Stance;
  ReactionState reaction_;
  bool carryover_latched_ = false;
  int retract_entries_ = 0;
  Vec3 liftoff_foot_ = Vec3::Zero();
  Vec3 foothold_ = Vec3::Zero();
  Vec3 extend_target_ = Vec3::Zero();
  double extend_speed_ = 0.0;
  double retract_abad_hold_ = 0.0;
  Vec3 prev_q_target_ = Vec3::Zero();
  bool prev_q_target_valid_ = false;
  double ik_dt_hint_ = 1e-3;
};

}  // namespace briar

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "briar/leg_dynamics.hpp"
#include "briar/leg_model.hpp"
#include "briar/momentum_observer.hpp"

namespace briar {

/// Trot gait timing. Diagonal pairs (FL, BR) and (FR, BL) alternate with a
/// fixed 50% duty factor.
struct GaitConfig {
  double period = 0.54;        // s
  double duty_factor = 0.5;    // fixed
  double step_height = 0.07;   // m
  double body_speed_cmd = 0.5; // m/s
  double body_height = 0.27;   // m
  double t_down = 0.12;        // s, extension deadline margin

  double swing_duration() const { return period * (1.0 - duty_factor); }

  void validate() const {
    if (!(period >= 0.31)) throw std::invalid_argument("gait period must be >= 0.31 s");
    if (std::abs(duty_factor - 0.5) > 1e-9) throw std::invalid_argument("duty_factor is fixed at 0.5");
    if (!(step_height > 0.0)) throw std::invalid_argument("step_height must be > 0");
    if (!(body_speed_cmd >= 0.0)) throw std::invalid_argument("body_speed_cmd must be >= 0");
    if (!(body_height > 0.0 && body_height <= 0.5)) throw std::invalid_argument("body_height out of range");
    if (!(t_down > 0.0 && t_down < swing_duration())) throw std::invalid_argument("t_down must be in (0, swing)");
  }
};

enum class PhaseKind { Stance, Swing };

struct Phase {
  PhaseKind kind = PhaseKind::Stance;
  double fraction = 0.0;  // [0,1) within the current phase
};

inline double leg_phase_offset(int leg) {
  return (leg == kFrontLeft || leg == kBackRight) ? 0.0 : 0.5;
}

/// Phase of one leg at time t. Front-left starts in stance at t = 0.
inline Phase gait_phase(double t, const GaitConfig& cfg, int leg) {
  if (t < 0.0) throw std::invalid_argument("gait_phase: t must be >= 0");
  double cycle = std::fmod(t / cfg.period + leg_phase_offset(leg), 1.0);
  if (cycle < 0.0) cycle += 1.0;
  Phase p;
  if (cycle < cfg.duty_factor) {
    p.kind = PhaseKind::Stance;
    p.fraction = cycle / cfg.duty_factor;
  } else {
    p.kind = PhaseKind::Swing;
    p.fraction = (cycle - cfg.duty_factor) / (1.0 - cfg.duty_factor);
  }
  return p;
}

inline double smoothstep(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

/// Swing-foot position target: smooth arc from liftoff to the next foothold
/// with apex clearance step_height above the chord and zero endpoint
/// velocities.
inline Vec3 nominal_swing_target(double fraction, const GaitConfig& cfg, const Vec3& liftoff,
                                 const Vec3& foothold) {
  fraction = std::clamp(fraction, 0.0, 1.0);
  const double s = smoothstep(fraction);
  Vec3 p = liftoff + s * (foothold - liftoff);
  const double apex = 0.5 * (liftoff.z() + foothold.z()) + cfg.step_height;
  if (fraction < 0.5)
    p.z() = liftoff.z() + smoothstep(2.0 * fraction) * (apex - liftoff.z());
  else
    p.z() = apex + smoothstep(2.0 * fraction - 1.0) * (foothold.z() - apex);
  return p;
}

/// Closed-form leg inverse kinematics. knee_forward selects the mirrored
/// knee branch. Targets outside the reachable shell are projected onto it
/// and flagged.
struct IkResult {
  Vec3 q = Vec3::Zero();
  bool clamped = false;
};

inline IkResult leg_ik(const LegModel& model, const Vec3& target_torso, bool knee_forward = false) {
  IkResult out;
  const Vec3 p = target_torso - model.hip_position;
  const double l0 = model.link_lengths[0], l1 = model.link_lengths[1], l2 = model.link_lengths[2];
  const double offset = model.y_sign * l0;

  const double radial = std::hypot(p.y(), p.z());
  const double phi = std::atan2(p.z(), p.y());
  if (radial < std::abs(offset)) out.clamped = true;
  const double alpha = std::acos(std::clamp(offset / std::max(radial, std::abs(offset)), -1.0, 1.0));
  auto wrap = [](double a) {
    while (a > M_PI) a -= 2.0 * M_PI;
    while (a <= -M_PI) a += 2.0 * M_PI;
    return a;
  };
  const double qa = wrap(phi + alpha), qb = wrap(phi - alpha);
  out.q[0] = (std::abs(qa) <= std::abs(qb)) ? qa : qb;

  const double u = p.x();
  double w = -p.y() * std::sin(out.q[0]) + p.z() * std::cos(out.q[0]);
  double r = std::hypot(u, w);
  const double r_max = (l1 + l2) * 0.9999;
  const double r_min = std::abs(l1 - l2) + 1e-6;
  double ru = u, rw = w;
  if (r > r_max || r < r_min) {
    out.clamped = true;
    const double scale = std::clamp(r, r_min, r_max) / std::max(r, 1e-12);
    ru *= scale;
    rw *= scale;
    r = std::clamp(r, r_min, r_max);
  }
  const double cos_gamma = std::clamp((l1 * l1 + l2 * l2 - r * r) / (2.0 * l1 * l2), -1.0, 1.0);
  const double gamma = std::acos(cos_gamma);
  out.q[2] = knee_forward ? (M_PI - gamma) : -(M_PI - gamma);
  const double k1 = l1 + l2 * std::cos(out.q[2]);
  const double k2 = l2 * std::sin(out.q[2]);
  out.q[1] = wrap(std::atan2(-ru, -rw) - std::atan2(k2, k1));
  return out;
}

/// Walking strategies compared in the experiments.
enum class Strategy { Default, HighStep, KneeForward, AlwaysRetract, Reactive };

struct StrategyConfig {
  Strategy kind = Strategy::Reactive;
  double step_height = 0.07;     // m (0.20 for high stepping)
  bool knee_forward = false;     // mirrored leg posture
  bool reaction_enabled = false; // retract/extend machinery active
  bool retract_every_swing = false;
};

inline Strategy parse_strategy(const std::string& name) {
  if (name == "default") return Strategy::Default;
  if (name == "high_step") return Strategy::HighStep;
  if (name == "knee_forward") return Strategy::KneeForward;
  if (name == "always_retract") return Strategy::AlwaysRetract;
  if (name == "reactive") return Strategy::Reactive;
  throw std::invalid_argument("unknown strategy '" + name +
                              "' (expected default|high_step|knee_forward|always_retract|reactive)");
}

inline const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Default: return "default";
    case Strategy::HighStep: return "high_step";
    case Strategy::KneeForward: return "knee_forward";
    case Strategy::AlwaysRetract: return "always_retract";
    case Strategy::Reactive: return "reactive";
  }
  return "?";
}

/// Strategy presets. The default step height comes from the gait config;
/// high stepping raises it to 0.20 m.
inline StrategyConfig baseline_strategy(Strategy kind, double default_step_height = 0.07) {
  StrategyConfig c;
  c.kind = kind;
  c.step_height = default_step_height;
  switch (kind) {
    case Strategy::Default:
      break;
    case Strategy::HighStep:
      c.step_height = 0.20;
      break;
    case Strategy::KneeForward:
      c.knee_forward = true;
      break;
    case Strategy::AlwaysRetract:
      c.reaction_enabled = true;
      c.retract_every_swing = true;
      break;
    case Strategy::Reactive:
      c.reaction_enabled = true;
      break;
  }
  return c;
}

inline StrategyConfig baseline_strategy(const std::string& name, double default_step_height = 0.07) {
  return baseline_strategy(parse_strategy(name), default_step_height);
}

/// Swing reaction modes. Transitions follow
/// Nominal -> Retract -> ExtendAdvance -> ExtendDescend -> (touchdown),
/// with Retract re-entry from either Extend mode on a new stuck verdict.
enum class ReactionMode { Nominal = 0, Retract = 1, ExtendAdvance = 2, ExtendDescend = 3 };

inline const char* reaction_mode_name(ReactionMode m) {
  switch (m) {
    case ReactionMode::Nominal: return "nominal";
    case ReactionMode::Retract: return "retract";
    case ReactionMode::ExtendAdvance: return "extend_advance";
    case ReactionMode::ExtendDescend: return "extend_descend";
  }
  return "?";
}

struct ReactionState {
  ReactionMode mode = ReactionMode::Nominal;
  bool stuck = false;
  double retract_elapsed = 0.0;   // s in the current Retract bout
  bool carryover_stuck = false;   // latched at t_down for the next swing
};

constexpr double kMinRetractDuration = 0.1;  // s

/// Reaction state-machine events produced by one transition step.
struct ReactionEvents {
  bool entered_retract = false;
  bool entered_advance = false;
  bool entered_descend = false;
};

/// Pure mode-transition core, advanced once per control tick during swing.
/// `elapsed` is time into the swing; Retract entry is blocked when less than
/// t_down + the minimum retract duration remains, so retraction bouts always
/// satisfy their minimum and descent always starts by the deadline (the
/// stuck flag is still latched for carryover).
inline ReactionEvents reaction_transition(ReactionState& rs, const StuckVerdict& verdict, double elapsed,
                                          double swing_duration, const GaitConfig& cfg, double dt) {
  ReactionEvents ev;
  const double remaining = swing_duration - elapsed;
  rs.stuck = verdict.stuck;
  const bool can_enter_retract = remaining >= cfg.t_down + kMinRetractDuration;

  switch (rs.mode) {
    case ReactionMode::Nominal:
      if (verdict.stuck && can_enter_retract) {
        rs.mode = ReactionMode::Retract;
        rs.retract_elapsed = 0.0;
        ev.entered_retract = true;
      }
      break;
    case ReactionMode::Retract:
      rs.retract_elapsed += dt;
      if (remaining < cfg.t_down ||
          (!verdict.stuck && rs.retract_elapsed >= kMinRetractDuration)) {
        rs.mode = ReactionMode::ExtendAdvance;
        ev.entered_advance = true;
      }
      break;
    case ReactionMode::ExtendAdvance:
      if (verdict.stuck && can_enter_retract) {
        rs.mode = ReactionMode::Retract;
        rs.retract_elapsed = 0.0;
        ev.entered_retract = true;
      }
      break;
    case ReactionMode::ExtendDescend:
      if (verdict.stuck && can_enter_retract) {
        rs.mode = ReactionMode::Retract;
        rs.retract_elapsed = 0.0;
        ev.entered_retract = true;
      }
      break;
  }
  return ev;
}

}  // namespace briar

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "briar/leg_controller.hpp"
#include "support/oracles.hpp"

using namespace briar;

TEST_CASE("gait_phase: trot conventions") {
  GaitConfig cfg;
  const Phase p0 = gait_phase(0.0, cfg, kFrontLeft);
  REQUIRE(p0.kind == PhaseKind::Stance);
  REQUIRE(p0.fraction == 0.0);

  const Phase p_half = gait_phase(0.27, cfg, kFrontLeft);
  REQUIRE(p_half.kind == PhaseKind::Swing);

  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> tdist(0.0, 50.0);
  for (int i = 0; i < 1000; ++i) {
    const double t = tdist(rng);
    const Phase fl = gait_phase(t, cfg, kFrontLeft);
    const Phase br = gait_phase(t, cfg, kBackRight);
    const Phase fr = gait_phase(t, cfg, kFrontRight);
    const Phase bl = gait_phase(t, cfg, kBackLeft);
    REQUIRE(fl.kind == br.kind);
    REQUIRE(fl.fraction == Catch::Approx(br.fraction).margin(1e-12));
    REQUIRE(fr.kind == bl.kind);
    REQUIRE((fl.kind != fr.kind));
    REQUIRE(fl.fraction >= 0.0);
    REQUIRE(fl.fraction < 1.0);
  }
}

TEST_CASE("gait config validation") {
  GaitConfig cfg;
  cfg.validate();
  cfg.period = 0.30;
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = GaitConfig{};
  cfg.duty_factor = 0.6;
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("nominal swing target: endpoints and apex") {
  GaitConfig cfg;
  const Vec3 liftoff(0.1, 0.05, 0.0);
  const Vec3 foothold(0.37, 0.05, 0.0);
  REQUIRE((nominal_swing_target(0.0, cfg, liftoff, foothold) - liftoff).norm() < 1e-12);
  REQUIRE((nominal_swing_target(1.0, cfg, liftoff, foothold) - foothold).norm() < 1e-12);
  const Vec3 apex = nominal_swing_target(0.5, cfg, liftoff, foothold);
  REQUIRE(apex.z() == Catch::Approx(cfg.step_height).margin(1e-12));
  // zero endpoint velocity: targets barely move near the ends
  const Vec3 near_start = nominal_swing_target(0.01, cfg, liftoff, foothold);
  REQUIRE((near_start - liftoff).norm() < 1e-3);
}

TEST_CASE("leg inverse kinematics round-trips through forward kinematics") {
  std::mt19937_64 rng(77);
  for (double y_sign : {1.0, -1.0}) {
    LegModel m;
    m.y_sign = y_sign;
    m.hip_position = Vec3(0.19, y_sign * 0.055, 0.0);
    for (int trial = 0; trial < 300; ++trial) {
      Vec3 q;
      std::uniform_real_distribution<double> abad(-0.6, 0.6), hip(-1.2, 1.2), knee(0.3, 2.6);
      q << abad(rng), hip(rng), -knee(rng);
      const Vec3 target = forward_kinematics(m, q).foot;
      const IkResult ik = leg_ik(m, target, false);
      REQUIRE_FALSE(ik.clamped);
      REQUIRE((forward_kinematics(m, ik.q).foot - target).norm() < 1e-9);

      // mirrored branch reaches the same point with the knee flipped
      const IkResult ik_fwd = leg_ik(m, target, true);
      REQUIRE((forward_kinematics(m, ik_fwd.q).foot - target).norm() < 1e-9);
      REQUIRE(ik_fwd.q[kKnee] > 0.0);
      REQUIRE(ik.q[kKnee] < 0.0);
    }
  }
}

TEST_CASE("leg inverse kinematics clamps unreachable targets") {
  LegModel m;
  const Vec3 too_far = m.hip_position + Vec3(0, m.y_sign * m.link_lengths[0], 0) +
                       Vec3(0, 0, -(m.link_lengths[1] + m.link_lengths[2] + 0.1));
  const IkResult ik = leg_ik(m, too_far, false);
  REQUIRE(ik.clamped);
  const double reach = (forward_kinematics(m, ik.q).foot - too_far).norm();
  REQUIRE(reach < 0.12);  // projected to the boundary, not wild
}

TEST_CASE("baseline_strategy presets") {
  REQUIRE(baseline_strategy("default").step_height == Catch::Approx(0.07));
  REQUIRE_FALSE(baseline_strategy("default").reaction_enabled);
  REQUIRE(baseline_strategy("high_step").step_height == Catch::Approx(0.20));
  REQUIRE(baseline_strategy("knee_forward").knee_forward);
  REQUIRE(baseline_strategy("always_retract").retract_every_swing);
  REQUIRE(baseline_strategy("reactive").reaction_enabled);
  REQUIRE_FALSE(baseline_strategy("reactive").retract_every_swing);
  REQUIRE_THROWS_AS(baseline_strategy("bounding"), std::invalid_argument);
}

TEST_CASE("reaction transition core") {
  GaitConfig cfg;
  const double swing = cfg.swing_duration();
  StuckVerdict stuck;
  stuck.stuck = true;
  StuckVerdict free;

  SECTION("stuck verdict enters retract when time allows") {
    ReactionState rs;
    const ReactionEvents ev = reaction_transition(rs, stuck, 0.3 * swing, swing, cfg, 1e-3);
    REQUIRE(ev.entered_retract);
    REQUIRE(rs.mode == ReactionMode::Retract);
  }

  SECTION("retract entry is blocked too close to the deadline") {
    ReactionState rs;
    const double elapsed = swing - cfg.t_down - 0.5 * kMinRetractDuration;
    reaction_transition(rs, stuck, elapsed, swing, cfg, 1e-3);
    REQUIRE(rs.mode == ReactionMode::Nominal);
  }

  SECTION("retract persists for its minimum duration") {
    ReactionState rs;
    rs.mode = ReactionMode::Retract;
    rs.retract_elapsed = 0.0;
    double elapsed = 0.05 * swing;
    for (int i = 0; i < 50; ++i) {  // 0.05 s of free verdicts
      reaction_transition(rs, free, elapsed, swing, cfg, 1e-3);
      elapsed += 1e-3;
    }
    REQUIRE(rs.mode == ReactionMode::Retract);
    for (int i = 0; i < 51; ++i) {
      reaction_transition(rs, free, elapsed, swing, cfg, 1e-3);
      elapsed += 1e-3;
    }
    REQUIRE(rs.mode == ReactionMode::ExtendAdvance);
  }

  SECTION("deadline forces extension even while stuck") {
    ReactionState rs;
    rs.mode = ReactionMode::Retract;
    rs.retract_elapsed = 0.02;
    const double elapsed = swing - cfg.t_down + 1e-4;
    reaction_transition(rs, stuck, elapsed, swing, cfg, 1e-3);
    REQUIRE(rs.mode == ReactionMode::ExtendAdvance);
  }

  SECTION("re-entry to retract from extend on a new stuck verdict") {
    ReactionState rs;
    rs.mode = ReactionMode::ExtendAdvance;
    reaction_transition(rs, stuck, 0.3 * swing, swing, cfg, 1e-3);
    REQUIRE(rs.mode == ReactionMode::Retract);
  }
}

TEST_CASE("leg command evaluation: torque limit and free-speed guard") {
  LegModel m;
  JointState s;
  LegCommand cmd;
  cmd.joints[kHip].mode = JointCommand::Mode::Position;
  cmd.joints[kHip].target = 10.0;  // far away -> saturates
  cmd.joints[kHip].kp = 1000.0;
  Vec3 tau = cmd.evaluate(m, s);
  REQUIRE(tau[kHip] == Catch::Approx(m.torque_limit[kHip]));

  s.qdot[kHip] = m.velocity_limit[kHip] + 1.0;
  tau = cmd.evaluate(m, s);
  REQUIRE(tau[kHip] == 0.0);  // cannot push past free speed
}

namespace {

struct ControllerHarness {
  LegModel model;
  GaitConfig gait;
  ControlGains gains;
  LegController ctrl;
  JointState state;
  double t = 0.0;

  explicit ControllerHarness(const StrategyConfig& strategy, double period = 0.54) {
    gait.period = period;
    state.q = leg_ik(model, model.hip_position + Vec3(0, model.y_sign * 0.10, -gait.body_height), false).q;
    ctrl = LegController(kFrontLeft, &model, gait, strategy, gains);
    ctrl.initialize(0.0, Vec3(0, 0, gait.body_height), state);
  }

  LegController::Output step(const StuckVerdict& verdict) {
    const auto out = ctrl.update(t, Vec3(0, 0, gait.body_height), state, verdict, 1e-3);
    t += 1e-3;
    return out;
  }

  Phase phase() const { return gait_phase(t, gait, kFrontLeft); }
};

}  // namespace

TEST_CASE("controller: stuck verdict mid-swing issues the retraction command") {
  // period long enough that a fraction-0.3 trigger leaves room for a full
  // retraction bout plus the extension deadline
  ControllerHarness h(baseline_strategy("reactive"), 0.70);
  StuckVerdict free;
  while (!(h.phase().kind == PhaseKind::Swing && h.phase().fraction >= 0.3)) h.step(free);
  StuckVerdict stuck;
  stuck.stuck = true;
  const auto out = h.step(stuck);
  REQUIRE(h.ctrl.reaction().mode == ReactionMode::Retract);
  const JointCommand& hip = out.command.joints[kHip];
  REQUIRE(hip.mode == JointCommand::Mode::Velocity);
  REQUIRE(hip.target == Catch::Approx(15.0));
  const JointCommand& knee = out.command.joints[kKnee];
  REQUIRE(knee.mode == JointCommand::Mode::Torque);
  REQUIRE(std::abs(knee.feedforward) == Catch::Approx(2.0));
}

TEST_CASE("controller: carryover starts the next swing retracting") {
  ControllerHarness h(baseline_strategy("reactive"));
  StuckVerdict free;
  StuckVerdict stuck;
  stuck.stuck = true;
  // free through stance and most of the swing; stuck only once the entry
  // gate has closed, so the verdict can only be latched at t_down
  const double swing = h.gait.swing_duration();
  auto remaining = [&] { return swing - h.phase().fraction * swing; };
  while (!(h.phase().kind == PhaseKind::Swing && remaining() < h.gait.t_down + kMinRetractDuration))
    h.step(free);
  while (h.phase().kind == PhaseKind::Swing) {
    h.step(stuck);
    REQUIRE(h.ctrl.reaction().mode == ReactionMode::Nominal);  // entry blocked
  }
  // through the stance; the first swing tick must come up retracting
  const int entries_before = h.ctrl.retract_entries();
  LegController::Output out;
  do {
    out = h.step(free);
  } while (!out.entered_swing);
  REQUIRE(h.ctrl.reaction().mode == ReactionMode::Retract);
  REQUIRE(h.ctrl.retract_entries() == entries_before + 1);
}

TEST_CASE("controller: always_retract begins every swing retracting") {
  ControllerHarness h(baseline_strategy("always_retract"));
  StuckVerdict free;
  while (h.t < 0.275) h.step(free);
  REQUIRE(h.ctrl.reaction().mode == ReactionMode::Retract);
}

TEST_CASE("controller: default strategy ignores stuck verdicts") {
  ControllerHarness h(baseline_strategy("default"));
  StuckVerdict stuck;
  stuck.stuck = true;
  while (h.t < 0.40) h.step(stuck);
  REQUIRE(h.ctrl.reaction().mode == ReactionMode::Nominal);
  REQUIRE(h.ctrl.retract_entries() == 0);
}

TEST_CASE("controller: reaction_update during stance is invalid") {
  ControllerHarness h(baseline_strategy("reactive"));
  StuckVerdict free;
  REQUIRE_THROWS_AS(h.ctrl.reaction_update(0.1, Vec3(0, 0, 0.27), h.state, free, 1e-3),
                    std::logic_error);
}

TEST_CASE("controller: stance tracks the world-fixed foothold in the moving torso frame") {
  LegModel model;
  GaitConfig gait;
  ControlGains gains;
  LegController ctrl(kFrontLeft, &model, gait, baseline_strategy("default"), gains);
  JointState state;
  state.q = leg_ik(model, model.hip_position + Vec3(0, model.y_sign * 0.10, -gait.body_height), false).q;
  Vec3 body(0, 0, gait.body_height);
  ctrl.initialize(0.0, body, state);
  StuckVerdict free;
  const auto out0 = ctrl.update(0.0, body, state, free, 1e-3);
  body.x() += 0.5 * 1e-3;  // body advances at 0.5 m/s
  const auto out1 = ctrl.update(1e-3, body, state, free, 1e-3);
  // the foothold stays fixed in the world
  REQUIRE((out1.foot_target_world - out0.foot_target_world).norm() < 1e-12);
  // its torso-frame coordinate recedes at body speed
  const Vec3 torso0 = out0.foot_target_world - Vec3(0, 0, gait.body_height);
  const Vec3 torso1 = out1.foot_target_world - body;
  REQUIRE(torso1.x() - torso0.x() == Catch::Approx(-0.5e-3).margin(1e-12));
}

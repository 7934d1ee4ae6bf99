#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "briar/momentum_observer.hpp"
#include "support/oracles.hpp"

using namespace briar;

namespace {

// Holds the leg rigidly at q (a stiff position hold in steady state): the
// motor torque balances gravity minus whatever external torque is applied,
// and the observer sees only q, qdot = 0 and tau_m.
struct ClampedHarness {
  LegModel model;
  JointState state;
  ObserverState obs;

  explicit ClampedHarness(const Vec3& q) {
    state.q = q;
    obs = observer_reset(model, state);
    obs.reset_window_remaining = 0.0;
  }

  void step(const Vec3& tau_ext, double dt) {
    const Vec3 tau_m = gravity_vector(model, state.q) - tau_ext;
    obs = observer_step(obs, model, state, tau_m, dt);
  }
};

}  // namespace

TEST_CASE("observer reset: zero residual, momentum latched to the measurement") {
  const LegModel m;
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    JointState s;
    s.q = oracles::random_q_within(m, rng);
    s.qdot = oracles::random_vec(rng, -8.0, 8.0);
    const ObserverState obs = observer_reset(m, s);
    REQUIRE(obs.r.norm() == 0.0);
    REQUIRE(obs.reset_window_remaining == Catch::Approx(0.030));
    REQUIRE((obs.p_hat - mass_matrix(m, s.q) * s.qdot).cwiseAbs().maxCoeff() < 1e-12);
  }
  JointState rest;
  rest.q = Vec3(0.1, 0.5, -1.0);
  REQUIRE(observer_reset(m, rest).p_hat.norm() == 0.0);
}

TEST_CASE("observer: clamped leg with no disturbance keeps zero residual") {
  ClampedHarness h(Vec3(0.1, 0.7, -1.4));
  for (int i = 0; i < 1000; ++i) h.step(Vec3::Zero(), 1e-3);
  REQUIRE(h.obs.r.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("observer: step disturbance follows the first-order response") {
  ClampedHarness h(Vec3(0.0, 0.8, -1.5));
  const Vec3 tau_ext(0.0, 1.0, 1.0);
  const double dt = 1e-3;
  const double gain = h.obs.gain[0];
  for (int n = 1; n <= 400; ++n) {
    h.step(tau_ext, dt);
    const double t = n * dt;
    for (int j = 0; j < 3; ++j) {
      const double expected = tau_ext[j] * (1.0 - std::exp(-gain * t));
      REQUIRE(std::abs(h.obs.r[j] - expected) < 0.02);  // 2% of the 1 N*m step
    }
  }
}

TEST_CASE("observer: doubling the gain halves the 95% settling time") {
  auto settle_ticks = [](double gain) {
    ClampedHarness h(Vec3(0.0, 0.8, -1.5));
    h.obs.gain = Vec3::Constant(gain);
    const Vec3 tau_ext(0.0, 2.0, 0.0);
    for (int n = 1; n <= 4000; ++n) {
      h.step(tau_ext, 1e-3);
      if (h.obs.r[kHip] >= 0.95 * tau_ext[kHip]) return n;
    }
    return -1;
  };
  const int t25 = settle_ticks(25.0);
  const int t50 = settle_ticks(50.0);
  REQUIRE(t25 > 0);
  REQUIRE(t50 > 0);
  const double ratio = static_cast<double>(t25) / static_cast<double>(t50);
  REQUIRE(ratio == Catch::Approx(2.0).epsilon(0.10));
}

TEST_CASE("observer: reset window pins the residual to zero and re-latches momentum") {
  const LegModel m;
  JointState s;
  s.q = Vec3(0.0, 0.6, -1.2);
  s.qdot = Vec3(0.5, -1.0, 2.0);
  ObserverState obs = observer_reset(m, s);
  // even with a wildly wrong torque the window keeps r at zero
  for (int i = 0; i < 30; ++i) {
    obs = observer_step(obs, m, s, Vec3(5, 5, 5), 1e-3);
    REQUIRE(obs.r.norm() == 0.0);
    REQUIRE((obs.p_hat - mass_matrix(m, s.q) * s.qdot).cwiseAbs().maxCoeff() < 1e-12);
  }
  REQUIRE(obs.reset_window_remaining == Catch::Approx(0.0).margin(1e-12));
  obs = observer_step(obs, m, s, Vec3(5, 5, 5), 1e-3);
  REQUIRE(obs.r.norm() > 0.0);  // window closed, normal updates resume
}

TEST_CASE("observer: rejects non-finite input and bad dt") {
  const LegModel m;
  JointState s;
  s.q = Vec3(0.0, 0.5, -1.0);
  ObserverState obs;
  REQUIRE_THROWS_AS(observer_step(obs, m, s, Vec3(0, 0, 0), 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(observer_step(obs, m, s, Vec3(0, 0, 0), 0.01), std::invalid_argument);
  s.qdot[1] = std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(observer_step(obs, m, s, Vec3(0, 0, 0), 1e-3), ObserverFault);
}

TEST_CASE("classify_stuck: threshold rule and directionality") {
  ObserverState obs;
  obs.r = Vec3(0.0, 2.5, 0.0);
  StuckVerdict v = classify_stuck(obs, 2.0);
  REQUIRE(v.stuck);
  REQUIRE(v.hip_triggered);
  REQUIRE_FALSE(v.knee_triggered);

  obs.r = Vec3(0.0, -5.0, -5.0);
  REQUIRE_FALSE(classify_stuck(obs, 2.0).stuck);

  obs.r = Vec3(3.0, 1.9, 1.9);  // ab/ad not thresholded, others below
  REQUIRE_FALSE(classify_stuck(obs, 2.0).stuck);
}

TEST_CASE("classify_stuck: stuck iff a triggering joint exists, monotone in r") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> comp(-6.0, 6.0), bump(0.0, 4.0);
  for (int trial = 0; trial < 500; ++trial) {
    ObserverState obs;
    obs.r = Vec3(comp(rng), comp(rng), comp(rng));
    const StuckVerdict v = classify_stuck(obs, 2.0);
    REQUIRE(v.stuck == (v.hip_triggered || v.knee_triggered));

    ObserverState larger = obs;
    larger.r[kHip] += bump(rng);
    larger.r[kKnee] += bump(rng);
    if (v.stuck) REQUIRE(classify_stuck(larger, 2.0).stuck);
  }
}

#pragma once

#include <stdexcept>

#include "briar/leg_dynamics.hpp"

namespace briar {

/// Momentum-based observer fault: non-finite measurement or torque reached
/// the estimator. The simulation aborts the run and records the diagnostic.
struct ObserverFault : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Per-leg observer state. The residual r is a first-order estimate of the
/// external joint torque: with gain K (1/s) it converges as 1 - e^{-K t}.
struct ObserverState {
  Vec3 p_hat = Vec3::Zero();          // generalized momentum estimate
  Vec3 r = Vec3::Zero();              // residual external torque estimate, N*m
  Vec3 gain = Vec3::Constant(25.0);   // K_O diagonal, 1/s
  double reset_window_remaining = 0;  // s, counts down after stance->swing
  double friction_scale = 1.0;        // estimated/actual friction ratio knob
};

constexpr double kObserverResetWindow = 0.030;  // s

/// Classification outcome against the reaction threshold. Only hip and knee
/// are thresholded, positive side only; negative residuals come from
/// rear-surface contacts that do not impede progress.
struct StuckVerdict {
  bool stuck = false;
  bool hip_triggered = false;
  bool knee_triggered = false;
  double threshold = 2.0;  // N*m
};

/// Re-latch the observer onto the measured momentum. Called at every
/// stance->swing transition so stance loads do not corrupt early-swing
/// estimates.
inline ObserverState observer_reset(const LegModel& model, const JointState& state,
                                    const ObserverState& previous = ObserverState{}) {
  if (!state.is_finite()) throw ObserverFault("observer_reset: non-finite state");
  ObserverState next = previous;
  next.p_hat = mass_matrix(model, state.q) * state.qdot;
  next.r.setZero();
  next.reset_window_remaining = kObserverResetWindow;
  return next;
}

/// One discrete observer update at the control tick.
///
/// beta_hat = G - C^T qdot; p_hat += dt (tau_m + tau_f_hat - beta_hat + r);
/// r = K (M qdot - p_hat). The friction estimate is included so dry friction
/// does not register as external torque. While the reset window is open the
/// update is replaced by the reset semantics and the window decremented.
inline ObserverState observer_step(const ObserverState& obs, const LegModel& model, const JointState& state,
                                   const Vec3& tau_m, double dt) {
  if (!(dt > 0.0) || dt > 0.005) throw std::invalid_argument("observer_step: dt must be in (0, 0.005]");
  if (!state.is_finite() || !tau_m.allFinite() || !obs.p_hat.allFinite() || !obs.r.allFinite())
    throw ObserverFault("observer_step: non-finite input");

  if (obs.reset_window_remaining > 0.0) {
    ObserverState next = obs;
    next.p_hat = mass_matrix(model, state.q) * state.qdot;
    next.r.setZero();
    next.reset_window_remaining = std::max(0.0, obs.reset_window_remaining - dt);
    return next;
  }

  const Mat3 c = christoffel_matrix(model, state.q, state.qdot);
  const Vec3 beta_hat = gravity_vector(model, state.q) - c.transpose() * state.qdot;
  const Vec3 tau_f_hat = obs.friction_scale * friction_torque(model, state.qdot);
  ObserverState next = obs;
  next.p_hat = obs.p_hat + dt * (tau_m + tau_f_hat - beta_hat + obs.r);
  next.r = obs.gain.asDiagonal() * (mass_matrix(model, state.q) * state.qdot - next.p_hat);
  return next;
}

/// Threshold test on the positive hip/knee residuals.
inline StuckVerdict classify_stuck(const ObserverState& obs, double threshold = 2.0) {
  StuckVerdict v;
  v.threshold = threshold;
  v.hip_triggered = obs.r[kHip] > threshold;
  v.knee_triggered = obs.r[kKnee] > threshold;
  v.stuck = v.hip_triggered || v.knee_triggered;
  return v;
}

}  // namespace briar

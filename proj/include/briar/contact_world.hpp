#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <variant>
#include <vector>

#include "briar/leg_dynamics.hpp"
#include "briar/leg_model.hpp"

namespace briar {

// Obstacles are horizontal line segments strung across the walkway. A leg
// that walks through one drags it along the travel direction; the obstacle
// resists with a force along its horizontal normal, never pulling (no
// adhesion). Cords are quasi-static: no internal dynamics, no sag, and no
// vertical deflection mode — a descending foot passes a cord line without
// hooking it, matching the assumption that obstacles slide off leg surfaces.

/// Two-stiffness elastic cord: k1 up to knee_deflection, k2 beyond.
struct ElasticCord {
  Vec3 anchor_a{0, -0.4, 0.15};
  Vec3 anchor_b{0, 0.4, 0.15};
  double rest_length = 1.2;      // m, descriptive
  double k1 = 250.0;             // N/m
  double k2 = 70.0;              // N/m
  double knee_deflection = 0.08; // m
};

/// Inextensible-ish rope: slack until the wrapped path exceeds slack_length,
/// then stiff.
struct Rope {
  Vec3 anchor_a{0, -0.4, 0.15};
  Vec3 anchor_b{0, 0.4, 0.15};
  double slack_length = 0.85;  // m
  double k_taut = 5000.0;      // N/m
};

/// Very stiff penalty contact standing in for a rigid beam.
struct RigidBar {
  Vec3 anchor_a{0, -0.4, 0.15};
  Vec3 anchor_b{0, 0.4, 0.15};
  double k = 50000.0;    // N/m
  double damping = 80.0; // N*s/m along the normal
};

/// Thin wire that snaps once its tension exceeds break_force.
struct BreakableWire {
  Vec3 anchor_a{0, -0.4, 0.15};
  Vec3 anchor_b{0, 0.4, 0.15};
  double k = 400.0;         // N/m
  double break_force = 5.0; // N
  bool broken = false;
};

using Obstacle = std::variant<ElasticCord, Rope, RigidBar, BreakableWire>;

inline const Vec3& obstacle_anchor_a(const Obstacle& o) {
  return std::visit([](const auto& v) -> const Vec3& { return v.anchor_a; }, o);
}
inline const Vec3& obstacle_anchor_b(const Obstacle& o) {
  return std::visit([](const auto& v) -> const Vec3& { return v.anchor_b; }, o);
}

/// Piecewise-linear cord force at the contact: k1 x up to the knee point,
/// then k1*knee + k2*(x - knee). Continuous at the knee.
inline double cord_tension(double deflection, double k1, double k2, double knee_deflection) {
  if (deflection < 0.0) throw std::invalid_argument("cord_tension: negative deflection");
  if (deflection <= knee_deflection) return k1 * deflection;
  return k1 * knee_deflection + k2 * (deflection - knee_deflection);
}

inline double cord_tension(double deflection, const ElasticCord& c) {
  return cord_tension(deflection, c.k1, c.k2, c.knee_deflection);
}

/// World-frame link segments of one leg (torso pose already applied).
struct LegWorldGeometry {
  std::array<Vec3, 3> seg_start;
  std::array<Vec3, 3> seg_end;
  Vec3 foot;
};

inline LegWorldGeometry leg_world_geometry(const LegFrames& frames, const Vec3& body_position) {
  LegWorldGeometry g;
  for (int i = 0; i < 3; ++i) {
    g.seg_start[i] = body_position + frames.joint_origin[i];
    g.seg_end[i] = body_position + frames.link_tip[i];
  }
  g.foot = body_position + frames.foot;
  return g;
}

namespace detail {

/// Leg surface sample where the leg material crosses the obstacle's height:
/// the foremost crossing along the obstacle's horizontal normal.
struct CrossSection {
  bool spanning = false;
  int link = -1;
  double fraction = 0.0;
  double deflection = 0.0;  // (point - anchor_a) . normal
  Vec3 point = Vec3::Zero();
};

struct ObstacleFrame {
  Vec3 a;
  Vec3 dir;     // unit along the segment
  Vec3 normal;  // horizontal, normal.x > 0
  double len;
  double z;
};

inline ObstacleFrame obstacle_frame(const Obstacle& o) {
  ObstacleFrame f;
  f.a = obstacle_anchor_a(o);
  const Vec3 b = obstacle_anchor_b(o);
  if (std::abs(f.a.z() - b.z()) > 1e-9)
    throw std::invalid_argument("obstacle anchors must be at equal height");
  Vec3 d = b - f.a;
  f.len = d.norm();
  if (f.len < 1e-9) throw std::invalid_argument("obstacle anchors coincide");
  f.dir = d / f.len;
  Vec3 n = f.dir.cross(Vec3::UnitZ());
  if (n.norm() < 1e-9) throw std::invalid_argument("obstacle segment must be horizontal");
  n.normalize();
  if (n.x() < 0.0) n = -n;
  f.normal = n;
  f.z = f.a.z();
  return f;
}

inline CrossSection cross_section(const ObstacleFrame& of, const LegWorldGeometry& leg) {
  CrossSection best;
  for (int link = 0; link < 3; ++link) {
    const Vec3& p1 = leg.seg_start[link];
    const Vec3& p2 = leg.seg_end[link];
    const double dz = p2.z() - p1.z();
    if ((p1.z() - of.z) * (p2.z() - of.z) > 0.0) continue;  // link does not span the height
    double s = (std::abs(dz) < 1e-12) ? 0.0 : (of.z - p1.z()) / dz;
    s = std::clamp(s, 0.0, 1.0);
    const Vec3 x = p1 + s * (p2 - p1);
    const double along = (x - of.a).dot(of.dir);
    if (along < 0.0 || along > of.len) continue;  // beside the obstacle span
    const double deflection = (x - of.a).dot(of.normal);
    if (!best.spanning || deflection > best.deflection) {
      best.spanning = true;
      best.link = link;
      best.fraction = s;
      best.deflection = deflection;
      best.point = x;
    }
  }
  return best;
}

}  // namespace detail

/// Per-(obstacle, leg) hook state. A leg engages an obstacle when its
/// surface crosses the obstacle line from behind while spanning its height,
/// and releases when it either lifts every link above the line (the obstacle
/// slides off the bottom of the leg) or backs out behind the line.
struct Engagement {
  bool engaged = false;
  bool prev_spanning = false;
  double prev_deflection = 0.0;
  double deflection_rate = 0.0;  // m/s, for penalty damping
};

struct ObstacleCourse {
  std::vector<Obstacle> obstacles;
  double course_length = 3.9;  // m
  std::vector<std::array<Engagement, kNumLegs>> engagement;

  void validate() const {
    if (!(course_length > 0.0)) throw std::invalid_argument("course_length must be > 0");
    for (const Obstacle& o : obstacles) {
      const detail::ObstacleFrame f = detail::obstacle_frame(o);  // throws on bad geometry
      if (f.z < 0.0 || f.z > 0.35) throw std::invalid_argument("obstacle height must be within [0, 0.35] m");
      std::visit(
          [](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ElasticCord>) {
              if (!(v.k1 > 0.0) || !(v.k2 > 0.0)) throw std::invalid_argument("cord stiffness must be > 0");
              if (!(v.knee_deflection > 0.0)) throw std::invalid_argument("knee_deflection must be > 0");
            } else if constexpr (std::is_same_v<T, Rope>) {
              if (!(v.k_taut > 0.0)) throw std::invalid_argument("rope k_taut must be > 0");
              if (!(v.slack_length > 0.0)) throw std::invalid_argument("rope slack_length must be > 0");
            } else if constexpr (std::is_same_v<T, RigidBar>) {
              if (!(v.k > 0.0)) throw std::invalid_argument("bar stiffness must be > 0");
              if (v.damping < 0.0) throw std::invalid_argument("bar damping must be >= 0");
            } else if constexpr (std::is_same_v<T, BreakableWire>) {
              if (!(v.k > 0.0)) throw std::invalid_argument("wire stiffness must be > 0");
              if (!(v.break_force > 0.0)) throw std::invalid_argument("wire break_force must be > 0");
            }
          },
          o);
    }
  }

  void reset_engagement() { engagement.assign(obstacles.size(), {}); }

  bool any_engaged(size_t obstacle_index) const {
    for (const Engagement& e : engagement[obstacle_index])
      if (e.engaged) return true;
    return false;
  }
};

/// Force magnitude along -normal for a given obstacle at deflection x.
inline double obstacle_force_magnitude(const Obstacle& o, const detail::ObstacleFrame& frame,
                                       const Vec3& contact_point, double deflection, double deflection_rate) {
  if (deflection <= 0.0) return 0.0;
  return std::visit(
      [&](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ElasticCord>) {
          return cord_tension(deflection, v);
        } else if constexpr (std::is_same_v<T, Rope>) {
          const Vec3 b = frame.a + frame.dir * frame.len;
          const double path = (contact_point - frame.a).norm() + (b - contact_point).norm();
          if (path <= v.slack_length) return 0.0;
          const double tension = v.k_taut * (path - v.slack_length);
          const Vec3 pull = (frame.a - contact_point).normalized() + (b - contact_point).normalized();
          return std::max(0.0, tension * pull.dot(-frame.normal));
        } else if constexpr (std::is_same_v<T, RigidBar>) {
          return std::max(0.0, v.k * deflection + v.damping * deflection_rate);
        } else {  // BreakableWire
          return v.broken ? 0.0 : v.k * deflection;
        }
      },
      o);
}

/// Contact forces currently exerted on each leg, torso-aligned axes.
/// Only engaged (obstacle, leg) pairs produce forces; forces are unilateral.
inline std::array<std::vector<ContactForce>, kNumLegs> compute_contacts(
    const ObstacleCourse& course, const std::array<LegWorldGeometry, kNumLegs>& legs) {
  std::array<std::vector<ContactForce>, kNumLegs> out;
  for (size_t oi = 0; oi < course.obstacles.size(); ++oi) {
    const detail::ObstacleFrame frame = detail::obstacle_frame(course.obstacles[oi]);
    for (int leg = 0; leg < kNumLegs; ++leg) {
      const Engagement& eng = course.engagement[oi][leg];
      if (!eng.engaged) continue;
      const detail::CrossSection cs = detail::cross_section(frame, legs[leg]);
      if (!cs.spanning || cs.deflection <= 0.0) continue;
      const double mag =
          obstacle_force_magnitude(course.obstacles[oi], frame, cs.point, cs.deflection, eng.deflection_rate);
      if (mag <= 0.0) continue;
      ContactForce c;
      c.link_index = cs.link;
      c.fraction_along_link = cs.fraction;
      c.force = -mag * frame.normal;
      out[leg].push_back(c);
    }
  }
  return out;
}

/// Advance obstacle state one tick: hook/release bookkeeping and wire
/// breakage (irreversible).
inline void update_obstacles(ObstacleCourse& course, const std::array<LegWorldGeometry, kNumLegs>& legs,
                             const std::array<std::vector<ContactForce>, kNumLegs>& contacts, double dt) {
  (void)contacts;
  for (size_t oi = 0; oi < course.obstacles.size(); ++oi) {
    const detail::ObstacleFrame frame = detail::obstacle_frame(course.obstacles[oi]);
    double total_tension = 0.0;
    for (int leg = 0; leg < kNumLegs; ++leg) {
      Engagement& eng = course.engagement[oi][leg];
      const detail::CrossSection cs = detail::cross_section(frame, legs[leg]);
      if (eng.engaged) {
        if (!cs.spanning || cs.deflection <= 0.0) {
          eng.engaged = false;
          eng.deflection_rate = 0.0;
        } else {
          eng.deflection_rate = (dt > 0.0) ? (cs.deflection - eng.prev_deflection) / dt : 0.0;
          total_tension +=
              obstacle_force_magnitude(course.obstacles[oi], frame, cs.point, cs.deflection, eng.deflection_rate);
        }
      } else if (cs.spanning && eng.prev_spanning && eng.prev_deflection <= 0.0 && cs.deflection > 0.0) {
        eng.engaged = true;
        eng.deflection_rate = 0.0;
      }
      eng.prev_spanning = cs.spanning;
      eng.prev_deflection = cs.deflection;
    }
    if (auto* wire = std::get_if<BreakableWire>(&course.obstacles[oi]); wire && !wire->broken) {
      if (total_tension > wire->break_force) {
        wire->broken = true;
        for (Engagement& eng : course.engagement[oi]) eng.engaged = false;
      }
    }
  }
}

/// Sum of backward (-x) obstacle force components across all legs, N.
inline double total_backward_force(const std::array<std::vector<ContactForce>, kNumLegs>& contacts) {
  double f = 0.0;
  for (const auto& leg : contacts)
    for (const ContactForce& c : leg) f += std::max(0.0, -c.force.x());
  return f;
}

}  // namespace briar

#pragma once

// Initial trajectories: double-circular flight and straight flight.

#include "seeopt/model.hpp"
#include "seeopt/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

namespace seeopt {

/// Nearest even integer; odd integers (exact midpoints) round down.
inline int f_even(double x) {
    if (!(x >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "f_even expects a nonnegative argument");
    }
    const double h = 0.5 * x;
    const double fl = std::floor(h);
    return 2 * static_cast<int>(h - fl > 0.5 ? fl + 1.0 : fl);
}

/// Geometry actually used by double_circular.
struct CircularPlan {
    int N_c = 0;         // slots per circle
    int N_s = 0;         // straight-segment slots
    int ramp = 0;        // slots of speed change at each end of the straight segment
    double V_c = 0.0;    // circle speed
    double V_s = 0.0;    // cruise speed on the straight segment
    double radius = 0.0; // nominal radius V_c N_c dt / (2 pi laps)
    int laps = 1;
};

namespace detail {

inline Vec2 rotate(const Vec2& u, double th) {
    const double c = std::cos(th), s = std::sin(th);
    return {c * u.x() - s * u.y(), s * u.x() + c * u.y()};
}

// Appends slots with the given sample velocities v[1..]; the current last velocity is v[0].
inline void append_motion(Trajectory& t, const std::vector<Vec2>& next_v, double dt) {
    for (const Vec2& v1 : next_v) {
        const Vec2 v0 = t.v.back();
        const Vec2 a = (v1 - v0) / dt;
        t.q.push_back(t.q.back() + v0 * dt + 0.5 * a * dt * dt);
        t.v.push_back(v1);
        t.a.push_back(a);
    }
}

inline void append_circle(Trajectory& t, const Vec2& dir, double speed, int slots, int laps, double dt) {
    const double th = 2.0 * std::numbers::pi * laps / slots;
    std::vector<Vec2> vs(slots);
    for (int k = 1; k <= slots; ++k) {
        vs[k - 1] = speed * rotate(dir, th * k);
    }
    vs.back() = speed * dir;
    append_motion(t, vs, dt);
}

inline double circle_accel(double speed, int slots, int laps, double dt) {
    return 2.0 * speed * std::sin(std::numbers::pi * laps / slots) / dt;
}

// Cruise speed and ramp length covering `length` in `slots` slots, starting and ending at v_c.
inline bool straight_speeds(double length, int slots, double v_c, double accel, double dt, double& v_s, int& ramp) {
    ramp = 0;
    for (int it = 0; it < 64; ++it) {
        if (slots - ramp <= 0 || 2 * ramp > slots) {
            return false;
        }
        v_s = (length / dt - ramp * v_c) / (slots - ramp);
        const int need = static_cast<int>(std::ceil(std::abs(v_s - v_c) / (accel * dt) - 1e-12));
        if (need <= ramp) {
            return true;
        }
        ramp = need;
    }
    return false;
}

inline Trajectory build_plan(const NodeLayout& layout, const UavLimits& limits, const CircularPlan& p) {
    const double dt = limits.delta_t;
    const Vec2 dir = (layout.q_F - layout.q_0).normalized();
    Trajectory t;
    t.q.push_back(layout.q_0);
    t.v.push_back(p.V_c * dir);
    append_circle(t, dir, p.V_c, p.N_c, p.laps, dt);

    std::vector<Vec2> vs;
    for (int k = 1; k <= p.N_s; ++k) {
        double sp = p.V_s;
        if (k <= p.ramp) {
            sp = p.V_c + (p.V_s - p.V_c) * k / p.ramp;
        } else if (k >= p.N_s - p.ramp) {
            sp = p.V_s + (p.V_c - p.V_s) * (k - (p.N_s - p.ramp)) / std::max(p.ramp, 1);
        }
        vs.push_back(sp * dir);
    }
    append_motion(t, vs, dt);
    // The straight segment lands on q_F up to rounding.
    t.q.back() = layout.q_F;
    append_circle(t, dir, p.V_c, p.N_c, p.laps, dt);
    t.q.back() = layout.q_F;
    t.v.back() = t.v.front();
    return t;
}

}  // namespace detail

/// Chooses the circle/straight split. Constant speed when it fits; otherwise the
/// circles fly slower than the straight segment and the speed changes on short ramps.
inline CircularPlan plan_double_circular(const NodeLayout& layout, const UavLimits& limits, const InitParams& ip,
                                         const EnergyParams& ep = {}) {
    const int N = limits.N;
    const double dt = limits.delta_t;
    const double L = (layout.q_F - layout.q_0).norm();
    const int laps = std::max(ip.laps, 1);
    const double acc = ip.accel_margin * limits.a_max;
    if (!(L > 0.0)) {
        throw Error(ErrorCode::InfeasibleGeometry, "q_0 and q_F coincide");
    }
    const double v_target = ip.speed > 0.0 ? ip.speed : ip.speed_fraction * limits.V_max;
    if (v_target > limits.V_max) {
        throw Error(ErrorCode::InvalidArgument, "initializer speed exceeds V_max");
    }

    CircularPlan p;
    p.laps = laps;
    p.N_s = f_even(L / (v_target * dt));
    if ((N - p.N_s) % 2 != 0) {
        p.N_s += 1;
    }
    p.N_c = (N - p.N_s) / 2;
    if (p.N_s >= 1 && p.N_c > laps) {
        p.V_c = p.V_s = L / (p.N_s * dt);
        if (p.V_s <= limits.V_max && detail::circle_accel(p.V_c, p.N_c, laps, dt) <= acc) {
            p.radius = p.V_c * p.N_c * dt / (2.0 * std::numbers::pi * laps);
            return p;
        }
    }
    if (ip.speed > 0.0) {
        std::ostringstream os;
        os << "speed " << ip.speed << " m/s cannot close the double-circular path in " << N << " slots";
        throw Error(ErrorCode::InfeasibleGeometry, os.str());
    }

    // Mixed-speed search over the circle length; the cheapest plan wins.
    double best = std::numeric_limits<double>::infinity();
    CircularPlan chosen;
    for (int nc = laps + 2; 2 * nc < N; ++nc) {
        CircularPlan c;
        c.laps = laps;
        c.N_c = nc;
        c.N_s = N - 2 * nc;
        const double v_acc = acc * dt / (2.0 * std::sin(std::numbers::pi * laps / nc));
        c.V_c = std::min({v_target, v_acc, limits.V_max});
        if (c.V_c < 1.0) {
            continue;
        }
        if (!detail::straight_speeds(L, c.N_s, c.V_c, acc, dt, c.V_s, c.ramp) || c.V_s > limits.V_max ||
            c.V_s < 1.0) {
            continue;
        }
        const Trajectory t = detail::build_plan(layout, limits, c);
        double e = 0.0;
        for (int k = 0; k < N; ++k) {
            e += propulsion_power(ep, t.v[k], t.a[k]);
        }
        if (e < best) {
            best = e;
            chosen = c;
        }
    }
    if (!std::isfinite(best)) {
        std::ostringstream os;
        os << "no double-circular path covers " << L << " m in " << N << " slots within V_max and a_max";
        throw Error(ErrorCode::InfeasibleGeometry, os.str());
    }
    chosen.radius = chosen.V_c * chosen.N_c * dt / (2.0 * std::numbers::pi * laps);
    return chosen;
}

inline Trajectory double_circular(const NodeLayout& layout, const UavLimits& limits, const InitParams& ip = {},
                                  const EnergyParams& ep = {}) {
    const CircularPlan p = plan_double_circular(layout, limits, ip, ep);
    const Trajectory t = detail::build_plan(layout, limits, p);
    for (const Vec2& a : t.a) {
        if (a.norm() > limits.a_max * (1.0 + 1e-12)) {
            throw Error(ErrorCode::AccelerationExceeded, "double-circular acceleration exceeds a_max");
        }
    }
    return t;
}

/// Constant-velocity flight from q_0 to q_F.
inline Trajectory straight_flight(const NodeLayout& layout, const UavLimits& limits) {
    const int N = limits.N;
    const Vec2 v = (layout.q_F - layout.q_0) / (N * limits.delta_t);
    if (v.norm() > limits.V_max) {
        throw Error(ErrorCode::InfeasibleGeometry, "straight flight needs more than V_max");
    }
    if (v.norm() < kDefaultSpeedFloor) {
        throw Error(ErrorCode::InfeasibleGeometry, "straight flight is slower than the speed floor");
    }
    Trajectory t;
    for (int k = 0; k <= N; ++k) {
        const double s = static_cast<double>(k) / N;
        t.q.push_back((1.0 - s) * layout.q_0 + s * layout.q_F);
        t.v.push_back(v);
    }
    t.a.assign(N, Vec2::Zero());
    return t;
}

}  // namespace seeopt

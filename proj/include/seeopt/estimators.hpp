#pragma once

// First-order Taylor bounds used by the successive convex approximation.
// Every bound is affine in its argument and touches the true function at the
// expansion point. Derivatives of log2 carry the 1/ln2 factor.

#include "seeopt/model.hpp"
#include "seeopt/types.hpp"

#include <cmath>
#include <vector>

namespace seeopt {

/// Affine map value + slope * (x - ref).
struct AffineBound {
    double value = 0.0;
    double slope = 0.0;
    double ref = 0.0;

    double operator()(double x) const { return value + slope * (x - ref); }
};

/// Over-estimator of the concave map p -> log2(1 + h p) at p_ref.
inline AffineBound log2_gain_upper(double h, double p_ref) {
    return {std::log2(1.0 + h * p_ref), h / (kLn2 * (1.0 + h * p_ref)), p_ref};
}

/// Under-estimator of the convex map u -> log2(1 + c / u) at u_ref > 0.
/// Returned as A - B (u - u_ref), i.e. slope = -B.
inline AffineBound log2_inv_ratio_lower(double c, double u_ref) {
    const double A = std::log2(1.0 + c / u_ref);
    const double B = c / (kLn2 * u_ref * (u_ref + c));
    return {A, -B, u_ref};
}

/// Affine under-estimator of q -> ||q - w||^2 + H^2 (or of ||v||^2 with w = 0, H = 0).
struct PlanarQuadLower {
    double value = 0.0;  // at the reference point
    Vec2 gradient = Vec2::Zero();
    Vec2 ref = Vec2::Zero();

    double operator()(const Vec2& q) const { return value + gradient.dot(q - ref); }
};

inline PlanarQuadLower squared_distance_lower(const Vec2& q_ref, const Vec2& w, double H) {
    return {(q_ref - w).squaredNorm() + H * H, 2.0 * (q_ref - w), q_ref};
}

inline PlanarQuadLower speed_squared_lower(const Vec2& v_ref) {
    return {v_ref.squaredNorm(), 2.0 * v_ref, v_ref};
}

/// Expansion point of one outer iteration.
struct TaylorPoint {
    std::vector<double> p_s_ref;
    std::vector<double> p_r_ref;
    std::vector<Vec2> q_ref;  // 0..N
    std::vector<Vec2> v_ref;  // 0..N
    std::vector<Vec2> a_ref;  // 0..N-1, start value only
    std::vector<double> u_rd_ref;
    std::vector<double> u_sr_ref;

    /// Expansion at a design with slack references on the true squared distances.
    static TaylorPoint at(const NodeLayout& layout, const Trajectory& traj, const PowerAllocation& pwr) {
        TaylorPoint tp;
        tp.p_s_ref = pwr.p_s;
        tp.p_r_ref = pwr.p_r;
        tp.q_ref = traj.q;
        tp.v_ref = traj.v;
        tp.a_ref = traj.a;
        const std::size_t n = traj.a.size();
        tp.u_rd_ref.resize(n);
        tp.u_sr_ref.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            tp.u_rd_ref[k] = squared_distance(traj.q[k + 1], layout.w_D, layout.H);
            tp.u_sr_ref[k] = squared_distance(traj.q[k + 1], layout.w_S, layout.H);
        }
        return tp;
    }
};

/// Noise-normalized gains at a fixed trajectory (1/W).
struct PowerCoefficients {
    std::vector<double> h_rd;
    std::vector<double> h_re;
    std::vector<double> h_sr;
    double h_se = 0.0;
};

inline PowerCoefficients power_coefficients(const NodeLayout& layout, const ChannelParams& cp,
                                            const std::vector<Vec2>& q) {
    const std::size_t n = q.size() - 1;
    const double g0 = cp.gamma_0();
    PowerCoefficients c;
    c.h_rd.resize(n);
    c.h_re.resize(n);
    c.h_sr.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        c.h_rd[k] = g0 / squared_distance(q[k + 1], layout.w_D, layout.H);
        c.h_re[k] = g0 / squared_distance(q[k + 1], layout.w_E, layout.H);
        c.h_sr[k] = g0 / squared_distance(q[k + 1], layout.w_S, layout.H);
    }
    c.h_se = ground_gain_normalized(cp, layout);
    return c;
}

struct PowerOverEstimators {
    std::vector<AffineBound> re_ub;  // relay -> eavesdropper, in p_r
    std::vector<AffineBound> se_ub;  // source -> eavesdropper, in p_s
};

inline PowerOverEstimators power_over_estimators(const TaylorPoint& tp, const PowerCoefficients& c) {
    const std::size_t n = tp.p_r_ref.size();
    PowerOverEstimators out;
    out.re_ub.resize(n);
    out.se_ub.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        out.re_ub[k] = log2_gain_upper(c.h_re[k], tp.p_r_ref[k]);
        out.se_ub[k] = log2_gain_upper(c.h_se, tp.p_s_ref[k]);
    }
    return out;
}

struct TrajectoryUnderEstimators {
    std::vector<PlanarQuadLower> re_lb;  // in q[k+1]
    std::vector<PlanarQuadLower> v_lb;   // in v[k]
    std::vector<AffineBound> rd_lb;      // in u_rd[k]
    std::vector<AffineBound> sr_lb;      // in u_sr[k]
};

/// Bounds for the trajectory step at powers `pwr` (already updated this iteration).
inline TrajectoryUnderEstimators trajectory_under_estimators(const TaylorPoint& tp, const NodeLayout& layout,
                                                             const ChannelParams& cp, const PowerAllocation& pwr) {
    const std::size_t n = tp.u_rd_ref.size();
    const double g0 = cp.gamma_0();
    TrajectoryUnderEstimators out;
    out.re_lb.resize(n);
    out.v_lb.resize(n);
    out.rd_lb.resize(n);
    out.sr_lb.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        out.re_lb[k] = squared_distance_lower(tp.q_ref[k + 1], layout.w_E, layout.H);
        out.v_lb[k] = speed_squared_lower(tp.v_ref[k]);
        out.rd_lb[k] = log2_inv_ratio_lower(g0 * pwr.p_r[k], tp.u_rd_ref[k]);
        out.sr_lb[k] = log2_inv_ratio_lower(g0 * pwr.p_s[k], tp.u_sr_ref[k]);
    }
    return out;
}

}  // namespace seeopt

#pragma once

// Evaluation of the relaying system model: geometry, channel gains, rates,
// secrecy throughput, information causality, propulsion energy and the SEE
// objective. Slot k = 0..N-1 of every per-slot sequence uses position q[k+1]
// and the motion pair (v[k], a[k]).

#include "seeopt/types.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace seeopt {

inline constexpr double kLn2 = std::numbers::ln2;

struct Distances {
    double d_SR;
    double d_RD;
    double d_RE;
    double d_SE;
};

inline double squared_distance(const Vec2& q, const Vec2& w, double H) {
    return (q - w).squaredNorm() + H * H;
}

inline Distances distances(const NodeLayout& layout, const Vec2& q) {
    return {std::sqrt(squared_distance(q, layout.w_S, layout.H)),
            std::sqrt(squared_distance(q, layout.w_D, layout.H)),
            std::sqrt(squared_distance(q, layout.w_E, layout.H)),
            (layout.w_S - layout.w_E).norm()};
}

struct ChannelGains {
    double h_SR;
    double h_RD;
    double h_RE;
    double h_SE;
};

/// Ground-to-ground S->E gain. Constant over slots since zeta_SE is fixed.
inline double ground_gain(const ChannelParams& cp, const NodeLayout& layout) {
    const double d_se = (layout.w_S - layout.w_E).norm();
    return cp.K * cp.zeta_SE * cp.beta_0 * std::pow(d_se, -cp.alpha);
}

/// Noise-normalized S->E gain (1/W).
inline double ground_gain_normalized(const ChannelParams& cp, const NodeLayout& layout) {
    return ground_gain(cp, layout) / cp.sigma2;
}

inline ChannelGains channel_gains(const ChannelParams& cp, const NodeLayout& layout, const Vec2& q) {
    return {cp.beta_0 / squared_distance(q, layout.w_S, layout.H),
            cp.beta_0 / squared_distance(q, layout.w_D, layout.H),
            cp.beta_0 / squared_distance(q, layout.w_E, layout.H), ground_gain(cp, layout)};
}

namespace detail {

inline void require_slots(std::size_t expected, std::size_t got, const char* what) {
    if (expected != got) {
        std::ostringstream os;
        os << what << " has " << got << " entries, expected " << expected;
        throw Error(ErrorCode::DimensionMismatch, os.str());
    }
}

inline void check_design_dims(const Trajectory& traj, const Schedule& sched, const PowerAllocation& pwr) {
    const std::size_t n = traj.a.size();
    require_slots(n + 1, traj.q.size(), "trajectory.q");
    require_slots(n + 1, traj.v.size(), "trajectory.v");
    require_slots(n, sched.lambda.size(), "schedule.lambda");
    require_slots(n, pwr.p_s.size(), "power.p_s");
    require_slots(n, pwr.p_r.size(), "power.p_r");
}

}  // namespace detail

/// Rates with an explicit reference SNR gamma_0 (1/W) and normalized S->E gain.
inline RateProfile link_rates(double gamma_0, double h_se_hat, const NodeLayout& layout, const Trajectory& traj,
                              const Schedule& sched, const PowerAllocation& pwr) {
    detail::check_design_dims(traj, sched, pwr);
    const std::size_t n = traj.a.size();
    RateProfile r;
    r.r_SR.resize(n);
    r.r_SE.resize(n);
    r.r_RD.resize(n);
    r.r_RE.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const Vec2& q = traj.q[k + 1];
        const double lam = sched.lambda[k];
        const double ps = pwr.p_s[k];
        const double pr = pwr.p_r[k];
        r.r_SR[k] = lam * std::log2(1.0 + gamma_0 * ps / squared_distance(q, layout.w_S, layout.H));
        r.r_SE[k] = lam * std::log2(1.0 + h_se_hat * ps);
        r.r_RD[k] = (1.0 - lam) * std::log2(1.0 + gamma_0 * pr / squared_distance(q, layout.w_D, layout.H));
        r.r_RE[k] = (1.0 - lam) * std::log2(1.0 + gamma_0 * pr / squared_distance(q, layout.w_E, layout.H));
    }
    return r;
}

inline RateProfile link_rates(const ChannelParams& cp, const NodeLayout& layout, const Trajectory& traj,
                              const Schedule& sched, const PowerAllocation& pwr) {
    return link_rates(cp.gamma_0(), ground_gain_normalized(cp, layout), layout, traj, sched, pwr);
}

struct SecrecyThroughput {
    double R_sec_sr;  // bits
    double R_sec_rd;  // bits
};

inline SecrecyThroughput secrecy_throughput(const RateProfile& rates, double B, double delta_t) {
    double sr = 0.0;
    double rd = 0.0;
    for (std::size_t k = 0; k < rates.size(); ++k) {
        sr += std::max(rates.r_SR[k] - rates.r_SE[k], 0.0);
        rd += std::max(rates.r_RD[k] - rates.r_RE[k], 0.0);
    }
    return {B * delta_t * sr, B * delta_t * rd};
}

/// slack[0] = -r_RD[0]; slack[k] = sum_{j<k} [r_SR - r_SE]^+ - sum_{1<=j<=k} r_RD[j].
/// Negative entries are causality violations (bits/s/Hz).
inline std::vector<double> causality_residuals(const RateProfile& rates) {
    const std::size_t n = rates.size();
    std::vector<double> slack(n);
    if (n == 0) {
        return slack;
    }
    slack[0] = -rates.r_RD[0];
    double received = 0.0;
    double forwarded = rates.r_RD[0];
    for (std::size_t k = 1; k < n; ++k) {
        received += std::max(rates.r_SR[k - 1] - rates.r_SE[k - 1], 0.0);
        forwarded += rates.r_RD[k];
        slack[k] = received - forwarded;
    }
    return slack;
}

inline constexpr double kDefaultSpeedFloor = 0.1;

/// Level-flight-plus-manoeuvre power of one slot (W).
inline double propulsion_power(const EnergyParams& ep, const Vec2& v, const Vec2& a) {
    const double speed = v.norm();
    return ep.c1 * speed * speed * speed + (ep.c2 / speed) * (1.0 + a.squaredNorm() / (ep.g * ep.g));
}

struct PropulsionEnergy {
    double E_total;
    std::vector<double> per_slot;
    double delta_k;
};

inline PropulsionEnergy propulsion_energy(const EnergyParams& ep, const Trajectory& traj, double delta_t,
                                          double v_floor = kDefaultSpeedFloor) {
    const std::size_t n = traj.a.size();
    detail::require_slots(n + 1, traj.v.size(), "trajectory.v");
    for (std::size_t k = 0; k < traj.v.size(); ++k) {
        if (traj.v[k].norm() < v_floor) {
            std::ostringstream os;
            os << "speed " << traj.v[k].norm() << " m/s at index " << k << " is below " << v_floor;
            throw Error(ErrorCode::SpeedUnderflow, os.str());
        }
    }
    PropulsionEnergy out{0.0, std::vector<double>(n), 0.0};
    for (std::size_t k = 0; k < n; ++k) {
        out.per_slot[k] = delta_t * propulsion_power(ep, traj.v[k], traj.a[k]);
        out.E_total += out.per_slot[k];
    }
    if (n > 0) {
        // Change of kinetic energy between the first and final velocity samples.
        out.delta_k = 0.5 * ep.mass * (traj.v[n].squaredNorm() - traj.v[0].squaredNorm());
    }
    out.E_total += out.delta_k;
    return out;
}

/// B * sum(r_RD - r_RE) / sum(power) in bits/J. Per-slot differences are
/// clamped at zero only when `clamped` is set.
inline double see_objective(const RateProfile& rates, const EnergyParams& ep, const Trajectory& traj, double B,
                            bool clamped = false) {
    detail::require_slots(rates.size(), traj.a.size(), "trajectory.a");
    double num = 0.0;
    for (std::size_t k = 0; k < rates.size(); ++k) {
        const double d = rates.r_RD[k] - rates.r_RE[k];
        num += clamped ? std::max(d, 0.0) : d;
    }
    double den = 0.0;
    for (std::size_t k = 0; k < traj.a.size(); ++k) {
        den += propulsion_power(ep, traj.v[k], traj.a[k]);
    }
    if (!(den > 0.0)) {
        throw Error(ErrorCode::ZeroEnergy, "propulsion energy is not positive");
    }
    return B * num / den;
}

struct Violation {
    std::string constraint;
    int index;        // worst slot / sample, -1 for aggregate constraints
    double amount;    // how far outside the feasible set
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool feasible() const { return violations.empty(); }
    bool has(const std::string& name) const {
        return std::any_of(violations.begin(), violations.end(),
                           [&](const Violation& v) { return v.constraint == name; });
    }
};

namespace detail {

struct WorstTracker {
    std::string name;
    int index = -1;
    double amount = 0.0;
    bool hit = false;

    void offer(int i, double excess, double tol) {
        if (excess > tol && (!hit || excess > amount)) {
            hit = true;
            index = i;
            amount = excess;
        }
    }
    void flush(ValidationReport& rep) const {
        if (hit) {
            rep.violations.push_back({name, index, amount});
        }
    }
};

}  // namespace detail

/// Checks the motion, power-budget, scheduling and causality constraints.
/// An empty schedule skips the scheduling and causality checks.
inline ValidationReport validate_design(const NodeLayout& layout, const ChannelParams& cp, const UavLimits& limits,
                                        const Trajectory& traj, const Schedule& sched, const PowerAllocation& pwr,
                                        const Tolerances& tol = {}) {
    const std::size_t n = traj.a.size();
    if (static_cast<int>(n) != limits.N) {
        throw Error(ErrorCode::DimensionMismatch, "trajectory has " + std::to_string(n) + " slots, scenario has " +
                                                      std::to_string(limits.N));
    }
    detail::require_slots(n + 1, traj.q.size(), "trajectory.q");
    detail::require_slots(n + 1, traj.v.size(), "trajectory.v");
    detail::require_slots(n, pwr.p_s.size(), "power.p_s");
    detail::require_slots(n, pwr.p_r.size(), "power.p_r");
    const bool with_schedule = !sched.lambda.empty();
    if (with_schedule) {
        detail::require_slots(n, sched.lambda.size(), "schedule.lambda");
    }

    ValidationReport rep;
    const double dt = limits.delta_t;
    const double kt = tol.kin_tol;

    detail::WorstTracker initial{"initial_location"}, final_loc{"final_location"}, pos{"position_update"},
        vel{"velocity_update"}, closure{"velocity_closure"}, vmax{"max_speed"}, amax{"max_acceleration"};
    initial.offer(0, (traj.q[0] - layout.q_0).norm(), kt);
    final_loc.offer(static_cast<int>(n), (traj.q[n] - layout.q_F).norm(), kt);
    for (std::size_t k = 0; k < n; ++k) {
        const Vec2 q_next = traj.q[k] + traj.v[k] * dt + 0.5 * traj.a[k] * dt * dt;
        pos.offer(static_cast<int>(k), (traj.q[k + 1] - q_next).norm(), kt);
        vel.offer(static_cast<int>(k), (traj.v[k + 1] - (traj.v[k] + traj.a[k] * dt)).norm(), kt);
        amax.offer(static_cast<int>(k), traj.a[k].norm() - limits.a_max, kt);
    }
    closure.offer(0, (traj.v[0] - traj.v[n]).norm(), kt);
    for (std::size_t k = 0; k <= n; ++k) {
        vmax.offer(static_cast<int>(k), traj.v[k].norm() - limits.V_max, kt);
    }
    for (const auto* t : {&initial, &final_loc, &pos, &vel, &closure, &vmax, &amax}) {
        t->flush(rep);
    }

    detail::WorstTracker ps_neg{"source_power_nonnegative"}, pr_neg{"relay_power_nonnegative"},
        ps_avg{"source_power_budget"}, pr_avg{"relay_power_budget"};
    double sum_s = 0.0;
    double sum_r = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        ps_neg.offer(static_cast<int>(k), -pwr.p_s[k], 0.0);
        pr_neg.offer(static_cast<int>(k), -pwr.p_r[k], 0.0);
        sum_s += pwr.p_s[k];
        sum_r += pwr.p_r[k];
    }
    const double nn = static_cast<double>(n);
    ps_avg.offer(-1, sum_s / nn - limits.P_s_bar, tol.rel_tol * std::max(limits.P_s_bar, 1e-12));
    pr_avg.offer(-1, sum_r / nn - limits.P_r_bar, tol.rel_tol * std::max(limits.P_r_bar, 1e-12));
    for (const auto* t : {&ps_neg, &pr_neg, &ps_avg, &pr_avg}) {
        t->flush(rep);
    }

    if (with_schedule) {
        detail::WorstTracker lam{"schedule_bounds"}, caus{"information_causality"};
        for (std::size_t k = 0; k < n; ++k) {
            const double l = sched.lambda[k];
            lam.offer(static_cast<int>(k), std::max(-l, l - 1.0), 0.0);
        }
        const RateProfile rates = link_rates(cp, layout, traj, sched, pwr);
        const std::vector<double> slack = causality_residuals(rates);
        double scale = 1.0;
        for (double r : rates.r_RD) {
            scale = std::max(scale, r);
        }
        for (std::size_t k = 0; k < n; ++k) {
            caus.offer(static_cast<int>(k), -slack[k], tol.rel_tol * scale);
        }
        lam.flush(rep);
        caus.flush(rep);
    }
    return rep;
}

}  // namespace seeopt

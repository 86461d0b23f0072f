#pragma once

// Block-coordinate ascent: schedule, then powers, then trajectory, until the
// secrecy energy efficiency settles.

#include "seeopt/estimators.hpp"
#include "seeopt/model.hpp"
#include "seeopt/power.hpp"
#include "seeopt/scheduling.hpp"
#include "seeopt/trajectory.hpp"
#include "seeopt/types.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace seeopt {

struct DesignEvaluation {
    double see = 0.0;          // bits/J, unclamped numerator
    double see_clamped = 0.0;  // per-slot differences clamped at zero
    double secrecy_bits_sr = 0.0;
    double secrecy_bits_rd = 0.0;
    double numerator_bits = 0.0;  // B dt sum (r_RD - r_RE)
    double energy = 0.0;          // J, including the kinetic term
    RateProfile rates;
    std::vector<double> causality;  // slack per slot, bits/s/Hz
    double max_causality_violation = 0.0;
    std::vector<double> slot_energy;
};

inline DesignEvaluation evaluate_design(const Scenario& sc, const Design& d) {
    if (static_cast<int>(d.trajectory.a.size()) != sc.limits.N) {
        throw Error(ErrorCode::DimensionMismatch, "design has " + std::to_string(d.trajectory.a.size()) +
                                                      " slots, scenario has " + std::to_string(sc.limits.N));
    }
    DesignEvaluation ev;
    ev.rates = link_rates(sc.channel, sc.layout, d.trajectory, d.schedule, d.power);
    const SecrecyThroughput st = secrecy_throughput(ev.rates, sc.channel.B, sc.limits.delta_t);
    ev.secrecy_bits_sr = st.R_sec_sr;
    ev.secrecy_bits_rd = st.R_sec_rd;
    const PropulsionEnergy pe = propulsion_energy(sc.energy, d.trajectory, sc.limits.delta_t, sc.algo.v_floor);
    ev.energy = pe.E_total;
    ev.slot_energy = pe.per_slot;
    ev.see = see_objective(ev.rates, sc.energy, d.trajectory, sc.channel.B);
    ev.see_clamped = see_objective(ev.rates, sc.energy, d.trajectory, sc.channel.B, true);
    double num = 0.0;
    for (std::size_t k = 0; k < ev.rates.size(); ++k) {
        num += ev.rates.r_RD[k] - ev.rates.r_RE[k];
    }
    ev.numerator_bits = sc.channel.B * sc.limits.delta_t * num;
    ev.causality = causality_residuals(ev.rates);
    for (double s : ev.causality) {
        ev.max_causality_violation = std::max(ev.max_causality_violation, -s);
    }
    return ev;
}

struct IterationRecord {
    int iter = 0;
    double see = 0.0;
    double numerator_bits = 0.0;
    double energy = 0.0;
    double max_causality_violation = 0.0;
    double surrogate_see = 0.0;  // trajectory-step lower bound, 0 when skipped
    std::string schedule_status;
    std::string power_status;
    std::string trajectory_status;
    int dinkelbach_iterations = 0;
    double t_schedule = 0.0;  // seconds
    double t_power = 0.0;
    double t_trajectory = 0.0;
};

struct SolveReport {
    std::vector<IterationRecord> iterations;
    bool converged = false;
    std::string stop_reason;
    Design design;   // relaxed schedule
    Design rounded;  // sub-slot rounded schedule
    double see = 0.0;
    double rounded_see = 0.0;
    double initial_see = 0.0;  // uniform powers, first schedule
};

struct OptimizeOptions {
    bool optimize_trajectory = true;
    bool optimize_resources = true;  // scheduling and powers; off = one schedule at the initial powers
    std::function<void(const IterationRecord&)> on_iteration;
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline std::string status_text(convex::Status s, bool accepted) {
    std::string out = convex::to_string(s);
    if (!accepted) {
        out += "/kept";
    }
    return out;
}

// Caps relay power at what the forwarding slack s needs at the new position.
inline void tighten_relay_power(const Scenario& sc, const Trajectory& t, const std::vector<double>& s,
                                const Schedule& sched, PowerAllocation& p) {
    const double g0 = sc.channel.gamma_0();
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (sched.lambda[k] >= 1.0) {
            continue;
        }
        const double h = g0 / squared_distance(t.q[k + 1], sc.layout.w_D, sc.layout.H);
        p.p_r[k] = std::min(p.p_r[k], std::expm1(s[k] * kLn2) / h);
    }
}

}  // namespace detail

inline Design initial_design(const Scenario& sc, const Trajectory& traj) {
    Design d;
    d.trajectory = traj;
    d.power.p_s.assign(sc.limits.N, sc.limits.P_s_bar);
    d.power.p_r.assign(sc.limits.N, sc.limits.P_r_bar);
    d.schedule.eta = sc.algo.eta;
    return d;
}

/// Runs the alternating ascent from `init`. The schedule of `init` may be empty.
inline SolveReport optimize(const Scenario& sc, const Design& init, const OptimizeOptions& opts = {}) {
    using clock = std::chrono::steady_clock;
    const AlgorithmParams& algo = sc.algo;
    if (!(algo.epsilon > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
    }
    {
        const ValidationReport rep =
            validate_design(sc.layout, sc.channel, sc.limits, init.trajectory, Schedule{}, init.power);
        if (!rep.feasible()) {
            const Violation& v = rep.violations.front();
            throw Error(ErrorCode::InfeasibleInitialDesign,
                        v.constraint + " violated by " + std::to_string(v.amount) + " at index " + std::to_string(v.index));
        }
    }

    const double tol_ipm = std::min(algo.solver_tol, 1e-8);
    Design cur = init;
    cur.schedule.eta = algo.eta;
    SolveReport rep;
    double prev_see = 0.0;
    bool have_prev = false;
    int stall = 0;

    for (int it = 1; it <= algo.max_outer; ++it) {
        IterationRecord rec;
        rec.iter = it;
        const PowerCoefficients h = power_coefficients(sc.layout, sc.channel, cur.trajectory.q);

        // Schedule.
        auto t0 = clock::now();
        if (opts.optimize_resources || cur.schedule.lambda.empty()) {
            const SchedulingResult sr = solve_scheduling(scheduling_coefficients(h, cur.power), 1e-10, algo.eta);
            const bool ok = sr.status == convex::Status::Optimal;
            if (ok) {
                cur.schedule = sr.schedule;
            } else if (cur.schedule.lambda.empty()) {
                throw Error(ErrorCode::SubproblemFailure,
                            "iteration " + std::to_string(it) + ": scheduling returned " + convex::to_string(sr.status));
            }
            rec.schedule_status = detail::status_text(sr.status, ok);
        } else {
            rec.schedule_status = "frozen";
        }
        rec.t_schedule = detail::seconds_since(t0);

        // Powers.
        t0 = clock::now();
        if (opts.optimize_resources) {
            const TaylorPoint tp = TaylorPoint::at(sc.layout, cur.trajectory, cur.power);
            const PowerResult pr = solve_power(cur.schedule, tp, h, sc.limits, tol_ipm);
            const bool ok = pr.status == convex::Status::Optimal;
            if (ok) {
                cur.power = pr.power;
            }
            rec.power_status = detail::status_text(pr.status, ok);
        } else {
            rec.power_status = "frozen";
        }
        rec.t_power = detail::seconds_since(t0);

        // Trajectory.
        t0 = clock::now();
        if (opts.optimize_trajectory) {
            const double before = evaluate_design(sc, cur).see;
            const TaylorPoint tp = TaylorPoint::at(sc.layout, cur.trajectory, cur.power);
            const TrajectoryResult tr =
                solve_trajectory(cur.schedule, cur.power, tp, sc.layout, sc.channel, sc.limits, sc.energy, algo);
            rec.dinkelbach_iterations = tr.dinkelbach_iterations;
            bool accepted = false;
            if (tr.ok) {
                Design trial = cur;
                trial.trajectory = tr.trajectory;
                detail::tighten_relay_power(sc, trial.trajectory, tr.slacks.s, trial.schedule, trial.power);
                const ValidationReport vr = validate_design(sc.layout, sc.channel, sc.limits, trial.trajectory,
                                                            trial.schedule, trial.power);
                double after = -1.0;
                if (vr.feasible()) {
                    after = evaluate_design(sc, trial).see;
                }
                if (vr.feasible() && after >= before - 10.0 * algo.solver_tol * std::max(1.0, std::abs(before))) {
                    cur = trial;
                    accepted = true;
                    rec.surrogate_see = tr.surrogate_see;
                }
            }
            rec.trajectory_status = std::string(to_string(tr.dinkelbach_status)) + "/" +
                                    convex::to_string(tr.solver_status) + (accepted ? "" : "/kept");
        } else {
            rec.trajectory_status = "frozen";
        }
        rec.t_trajectory = detail::seconds_since(t0);

        const DesignEvaluation ev = evaluate_design(sc, cur);
        rec.see = ev.see;
        rec.numerator_bits = ev.numerator_bits;
        rec.energy = ev.energy;
        rec.max_causality_violation = ev.max_causality_violation;
        rep.iterations.push_back(rec);
        if (it == 1) {
            rep.initial_see = ev.see;
        }
        if (opts.on_iteration) {
            opts.on_iteration(rec);
        }

        if (have_prev) {
            const double change = std::abs(ev.see - prev_see) / std::max(prev_see, algo.epsilon);
            if (change <= algo.epsilon) {
                rep.converged = true;
                rep.stop_reason = "converged";
                break;
            }
            const double gain = (ev.see - prev_see) / std::max(prev_see, algo.epsilon);
            stall = gain < 0.1 * algo.epsilon ? stall + 1 : 0;
            if (stall >= algo.stall_limit) {
                rep.stop_reason = "stalled";
                break;
            }
        }
        prev_see = ev.see;
        have_prev = true;
    }
    if (rep.stop_reason.empty()) {
        rep.stop_reason = "max_outer";
    }

    rep.design = cur;
    rep.see = rep.iterations.empty() ? 0.0 : rep.iterations.back().see;
    rep.rounded = cur;
    rep.rounded.schedule = round_schedule(cur.schedule, algo.eta).reconstructed();
    rep.rounded_see = evaluate_design(sc, rep.rounded).see;
    return rep;
}

}  // namespace seeopt

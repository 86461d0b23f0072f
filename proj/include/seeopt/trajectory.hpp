#pragma once

// Trajectory step: slack reformulation with affine under-estimators, solved as a
// concave-over-convex fractional program by Dinkelbach iteration.

#include "seeopt/convex.hpp"
#include "seeopt/dinkelbach.hpp"
#include "seeopt/estimators.hpp"
#include "seeopt/model.hpp"
#include "seeopt/types.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace seeopt {

struct TrajectorySlacks {
    std::vector<double> u_rd;
    std::vector<double> u_re;
    std::vector<double> u_sr;
    std::vector<double> tau;
    std::vector<double> s;
};

struct TrajectoryResult {
    bool ok = false;
    Trajectory trajectory;
    TrajectorySlacks slacks;
    convex::Status solver_status = convex::Status::NumericalTrouble;
    DinkelbachStatus dinkelbach_status = DinkelbachStatus::SubproblemFailure;
    int dinkelbach_iterations = 0;
    int solver_iterations = 0;
    double numerator = 0.0;    // sum (1 - lambda)(s - log2(1 + gamma p_r / u_re)), bits/s/Hz
    double denominator = 0.0;  // sum c1 |v|^3 + c2 (1 + |a|^2/g^2) / tau, W
    double surrogate_see = 0.0;        // B * numerator / denominator
    double surrogate_see_start = 0.0;  // same bound at the expansion point
    std::vector<double> mu_trace;
};

namespace detail {

// Largest forwarding rates at the expansion point that keep the linearized chain feasible.
inline std::vector<double> greedy_forward(const std::vector<double>& lam, const std::vector<double>& cap,
                                          const std::vector<double>& secrecy) {
    const std::size_t n = lam.size();
    std::vector<double> budget(n);  // received before slot k
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (k > 0) {
            acc += lam[k - 1] * secrecy[k - 1];
        }
        budget[k] = acc;
    }
    for (std::size_t k = n; k-- > 1;) {
        budget[k - 1] = std::min(budget[k - 1], budget[k]);
    }
    std::vector<double> s(n, 0.0);
    double used = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double w = 1.0 - lam[k];
        if (w <= 0.0 || cap[k] <= 0.0) {
            continue;
        }
        const double room = std::max(0.0, budget[k] - used);
        s[k] = std::min(cap[k], room / w);
        used += w * s[k];
    }
    return s;
}

}  // namespace detail

inline TrajectoryResult solve_trajectory(const Schedule& sched, const PowerAllocation& pwr, const TaylorPoint& tp,
                                         const NodeLayout& layout, const ChannelParams& cp, const UavLimits& limits,
                                         const EnergyParams& ep, const AlgorithmParams& algo) {
    const int n = static_cast<int>(sched.lambda.size());
    detail::require_slots(n + 1, tp.q_ref.size(), "expansion q");
    detail::require_slots(n + 1, tp.v_ref.size(), "expansion v");
    detail::require_slots(n, tp.a_ref.size(), "expansion a");
    detail::require_slots(n, pwr.p_r.size(), "power.p_r");

    const auto& lam = sched.lambda;
    const double g0 = cp.gamma_0();
    const double h_se = ground_gain_normalized(cp, layout);
    const double dt = limits.delta_t;
    const TrajectoryUnderEstimators lb = trajectory_under_estimators(tp, layout, cp, pwr);

    std::vector<bool> fwd(n), rcv(n);
    std::vector<double> rse(n), cap(n), sec0(n), ure0(n);
    for (int k = 0; k < n; ++k) {
        fwd[k] = (1.0 - lam[k]) > 0.0 && pwr.p_r[k] > 0.0;
        rcv[k] = lam[k] > 0.0 && pwr.p_s[k] > 0.0 && k + 1 < n;
        rse[k] = std::log2(1.0 + h_se * pwr.p_s[k]);
        cap[k] = fwd[k] ? lb.rd_lb[k].value : 0.0;
        sec0[k] = rcv[k] ? lb.sr_lb[k].value - rse[k] : 0.0;
        ure0[k] = squared_distance(tp.q_ref[k + 1], layout.w_E, layout.H);
    }
    const std::vector<double> s0 = detail::greedy_forward(lam, cap, sec0);

    double u_scale = 0.0;
    double rate_scale = 1.0;
    for (int k = 0; k < n; ++k) {
        u_scale += tp.u_rd_ref[k] + tp.u_sr_ref[k];
        rate_scale = std::max(rate_scale, cap[k]);
    }
    u_scale = std::max(u_scale / (2.0 * n), layout.H * layout.H);

    auto numerator_of = [&](const std::vector<double>& s, const std::vector<double>& ure) {
        double f = 0.0;
        for (int k = 0; k < n; ++k) {
            if (fwd[k]) {
                f += (1.0 - lam[k]) * (s[k] - std::log2(1.0 + g0 * pwr.p_r[k] / ure[k]));
            }
        }
        return f;
    };
    auto denominator_of = [&](const std::vector<Vec2>& v, const std::vector<Vec2>& a, const std::vector<double>& tau) {
        double d = 0.0;
        for (int k = 0; k < n; ++k) {
            const double sp = v[k].norm();
            d += ep.c1 * sp * sp * sp + ep.c2 * (1.0 + a[k].squaredNorm() / (ep.g * ep.g)) / tau[k];
        }
        return d;
    };

    std::vector<double> tau0(n);
    for (int k = 0; k < n; ++k) {
        tau0[k] = std::clamp(tp.v_ref[k].norm(), algo.v_floor, limits.V_max);
    }
    const double N0 = numerator_of(s0, ure0);
    const double D0 = denominator_of(tp.v_ref, tp.a_ref, tau0);

    TrajectoryResult out;
    out.surrogate_see_start = D0 > 0.0 ? cp.B * N0 / D0 : 0.0;

    // Nothing forwarded: keep the expansion point.
    if (std::none_of(fwd.begin(), fwd.end(), [](bool f) { return f; })) {
        out.ok = true;
        out.solver_status = convex::Status::Optimal;
        out.dinkelbach_status = DinkelbachStatus::Converged;
        out.trajectory.q = tp.q_ref;
        out.trajectory.v = tp.v_ref;
        out.trajectory.a = tp.a_ref;
        out.slacks.u_rd = tp.u_rd_ref;
        out.slacks.u_re = ure0;
        out.slacks.u_sr = tp.u_sr_ref;
        out.slacks.tau = tau0;
        out.slacks.s.assign(n, 0.0);
        out.denominator = D0;
        return out;
    }

    // Variable layout, shared by every parametric solve.
    struct Index {
        int q, v, a, urd, ure, usr, tau, s, cum;
    } ix{};

    auto build = [&](double mu) {
        convex::Program prog;
        ix.q = prog.add_variables("q", 2 * (n + 1), -convex::kInf, convex::kInf, 0.0, 100.0);
        ix.v = prog.add_variables("v", 2 * (n + 1), -convex::kInf, convex::kInf, 0.0, 10.0);
        ix.a = prog.add_variables("a", 2 * n, -convex::kInf, convex::kInf, 0.0, 1.0);
        ix.urd = prog.add_variables("u_rd", n, layout.H * layout.H, convex::kInf, u_scale, u_scale);
        ix.ure = prog.add_variables("u_re", n, 0.0, convex::kInf, u_scale, u_scale);
        ix.usr = prog.add_variables("u_sr", n, layout.H * layout.H, convex::kInf, u_scale, u_scale);
        ix.tau = prog.add_variables("tau", n, algo.v_floor, limits.V_max, 10.0, 10.0);
        ix.s = prog.add_variables("s", n, 0.0, convex::kInf, 1.0, 1.0);
        ix.cum = prog.add_variables("cumulative", n, 0.0, convex::kInf, rate_scale, rate_scale);

        for (int k = 0; k <= n; ++k) {
            for (int d = 0; d < 2; ++d) {
                prog.set_start(ix.q + 2 * k + d, tp.q_ref[k][d]);
                prog.set_start(ix.v + 2 * k + d, tp.v_ref[k][d]);
                if (k < n) {
                    prog.set_start(ix.a + 2 * k + d, tp.a_ref[k][d]);
                }
            }
        }
        for (int d = 0; d < 2; ++d) {
            prog.fix(ix.q + d, layout.q_0[d]);
            prog.fix(ix.q + 2 * n + d, layout.q_F[d]);
        }

        for (int k = 0; k < n; ++k) {
            const int qx = ix.q + 2 * (k + 1);
            prog.set_start(ix.tau + k, tau0[k] * (1.0 - 1e-6));
            if (fwd[k]) {
                prog.set_start(ix.urd + k, tp.u_rd_ref[k]);
                prog.set_start(ix.ure + k, ure0[k] * (1.0 - 1e-6));
                prog.set_start(ix.s + k, s0[k]);

                convex::Function grd;
                grd.add(convex::squared_norm({qx, qx + 1}, {layout.w_D.x(), layout.w_D.y()}))
                    .add(ix.urd + k, -1.0)
                    .offset(layout.H * layout.H);
                prog.add_inequality(std::move(grd));

                const PlanarQuadLower& re = lb.re_lb[k];
                convex::Function gre;
                gre.add(ix.ure + k, 1.0)
                    .add(qx, -re.gradient.x())
                    .add(qx + 1, -re.gradient.y())
                    .offset(-(re.value - re.gradient.dot(re.ref)));
                prog.add_inequality(std::move(gre));

                const AffineBound& rd = lb.rd_lb[k];
                convex::Function gs;
                gs.add(ix.s + k, 1.0).add(ix.urd + k, -rd.slope).offset(-(rd.value - rd.slope * rd.ref));
                prog.add_inequality(std::move(gs));

                const double w = 1.0 - lam[k];
                prog.objective().add(ix.s + k, -w).add(convex::Log2InvRatio{ix.ure + k, g0 * pwr.p_r[k], w});
            } else {
                prog.fix(ix.urd + k, tp.u_rd_ref[k]);
                prog.fix(ix.ure + k, ure0[k]);
                prog.fix(ix.s + k, 0.0);
            }
            if (rcv[k]) {
                prog.set_start(ix.usr + k, tp.u_sr_ref[k]);
                convex::Function gsr;
                gsr.add(convex::squared_norm({qx, qx + 1}, {layout.w_S.x(), layout.w_S.y()}))
                    .add(ix.usr + k, -1.0)
                    .offset(layout.H * layout.H);
                prog.add_inequality(std::move(gsr));
            } else {
                prog.fix(ix.usr + k, tp.u_sr_ref[k]);
            }

            // tau^2 <= |v_m|^2 + 2 v_m . (v - v_m)
            const PlanarQuadLower& vl = lb.v_lb[k];
            const int vx = ix.v + 2 * k;
            convex::Function gt;
            gt.add(convex::squared_norm({ix.tau + k}, {0.0}))
                .add(vx, -vl.gradient.x())
                .add(vx + 1, -vl.gradient.y())
                .offset(-(vl.value - vl.gradient.dot(vl.ref)));
            prog.add_inequality(std::move(gt));

            convex::Function gv;
            gv.add(convex::squared_norm({vx, vx + 1}, {0.0, 0.0})).offset(-limits.V_max * limits.V_max);
            prog.add_inequality(std::move(gv));

            const int ax = ix.a + 2 * k;
            convex::Function ga;
            ga.add(convex::squared_norm({ax, ax + 1}, {0.0, 0.0})).offset(-limits.a_max * limits.a_max);
            prog.add_inequality(std::move(ga));

            if (mu > 0.0) {
                prog.objective().add(convex::NormCubed{{vx, vx + 1}, mu * ep.c1});
                prog.objective().add(
                    convex::QuadOverLin{{ax, ax + 1}, ix.tau + k, ep.c2, ep.c2 / (ep.g * ep.g), mu});
            }

            // Kinematics.
            for (int d = 0; d < 2; ++d) {
                prog.add_equality({{ix.q + 2 * (k + 1) + d, 1.0},
                                   {ix.q + 2 * k + d, -1.0},
                                   {vx + d, -dt},
                                   {ax + d, -0.5 * dt * dt}},
                                  0.0);
                prog.add_equality({{ix.v + 2 * (k + 1) + d, 1.0}, {vx + d, -1.0}, {ax + d, -dt}}, 0.0);
            }

            // Cumulative chain c_k = c_{k-1} + lambda_{k-1} sec_{k-1} - (1 - lambda_k) s_k.
            convex::LinearExpr row{{ix.cum + k, 1.0}, {ix.s + k, 1.0 - lam[k]}};
            double rhs = 0.0;
            if (k > 0) {
                row.emplace_back(ix.cum + k - 1, -1.0);
                const int j = k - 1;
                if (rcv[j]) {
                    const AffineBound& sr = lb.sr_lb[j];
                    row.emplace_back(ix.usr + j, -lam[j] * sr.slope);
                    rhs = lam[j] * (sr.value - sr.slope * sr.ref - rse[j]);
                }
            }
            prog.add_equality(std::move(row), rhs);
        }
        for (int d = 0; d < 2; ++d) {
            prog.add_equality({{ix.v + d, 1.0}, {ix.v + 2 * n + d, -1.0}}, 0.0);
        }
        return prog;
    };

    auto unpack_v = [&](const std::vector<double>& x, int base, int count) {
        std::vector<Vec2> out(count);
        for (int k = 0; k < count; ++k) {
            out[k] = Vec2(x[base + 2 * k], x[base + 2 * k + 1]);
        }
        return out;
    };
    auto slice = [&](const std::vector<double>& x, int base) {
        return std::vector<double>(x.begin() + base, x.begin() + base + n);
    };

    int solver_iters = 0;
    convex::Status last_status = convex::Status::Optimal;
    auto solve = [&](double mu) -> std::optional<FractionalPoint<std::vector<double>>> {
        const convex::Program prog = build(std::max(mu, 0.0) / cp.B);
        const convex::Result r = convex::solve(prog, {algo.solver_tol, 400});
        solver_iters += r.iterations;
        last_status = r.status;
        if (!r.optimal()) {
            return std::nullopt;
        }
        const std::vector<Vec2> v = unpack_v(r.x, ix.v, n + 1);
        const std::vector<Vec2> a = unpack_v(r.x, ix.a, n);
        const double num = numerator_of(slice(r.x, ix.s), slice(r.x, ix.ure));
        const double den = denominator_of(v, a, slice(r.x, ix.tau));
        return FractionalPoint<std::vector<double>>{r.x, cp.B * num, den};
    };

    // The ratio is carried in bits/J, the unit of the efficiency itself.
    const double mu0 = std::max(0.0, out.surrogate_see_start);
    const auto dk = dinkelbach<std::vector<double>>(solve, mu0, algo.dinkelbach_tol, algo.dinkelbach_max_iter);
    out.dinkelbach_status = dk.status;
    out.dinkelbach_iterations = dk.iterations;
    out.solver_iterations = solver_iters;
    out.solver_status = last_status;
    out.mu_trace = dk.mu_trace;
    if (!dk.solution) {
        return out;
    }
    // MaxIter still carries a feasible improving point.
    out.ok = dk.status == DinkelbachStatus::Converged || dk.status == DinkelbachStatus::MaxIter;

    const std::vector<double>& x = dk.solution->x;
    out.trajectory.q = unpack_v(x, ix.q, n + 1);
    out.trajectory.v = unpack_v(x, ix.v, n + 1);
    out.trajectory.a = unpack_v(x, ix.a, n);
    out.slacks.u_rd = slice(x, ix.urd);
    out.slacks.u_re = slice(x, ix.ure);
    out.slacks.u_sr = slice(x, ix.usr);
    out.slacks.tau = slice(x, ix.tau);
    out.slacks.s = slice(x, ix.s);
    for (double& s : out.slacks.s) {
        s = std::max(0.0, s);
    }
    out.numerator = dk.solution->numerator / cp.B;
    out.denominator = dk.solution->denominator;
    out.surrogate_see = dk.solution->numerator / out.denominator;
    return out;
}

}  // namespace seeopt

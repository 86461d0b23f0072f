#pragma once

// Source/relay power allocation for a fixed schedule and trajectory, with the
// eavesdropper rates replaced by their affine over-estimators.

#include "seeopt/convex.hpp"
#include "seeopt/estimators.hpp"
#include "seeopt/model.hpp"
#include "seeopt/types.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace seeopt {

struct PowerResult {
    PowerAllocation power;
    std::vector<double> r_rd;  // relay rate slack
    convex::Status status = convex::Status::NumericalTrouble;
    double surrogate = 0.0;  // sum (1 - lambda)(r_rd - re_ub(p_r))
    double kkt_residual = 0.0;
    int iterations = 0;
};

/// Secrecy objective with exact eavesdropper rates, for fixed schedule and gains.
inline double power_objective(const Schedule& sched, const PowerCoefficients& h, const PowerAllocation& pwr) {
    double f = 0.0;
    for (std::size_t k = 0; k < sched.lambda.size(); ++k) {
        f += (1.0 - sched.lambda[k]) *
             (std::log2(1.0 + h.h_rd[k] * pwr.p_r[k]) - std::log2(1.0 + h.h_re[k] * pwr.p_r[k]));
    }
    return f;
}

inline PowerResult solve_power(const Schedule& sched, const TaylorPoint& tp, const PowerCoefficients& h,
                               const UavLimits& limits, double tol = 1e-9) {
    const int n = static_cast<int>(sched.lambda.size());
    detail::require_slots(n, h.h_rd.size(), "power coefficients");
    detail::require_slots(n, tp.p_s_ref.size(), "expansion p_s");
    detail::require_slots(n, tp.p_r_ref.size(), "expansion p_r");
    const PowerOverEstimators ub = power_over_estimators(tp, h);
    const auto& lam = sched.lambda;

    const double tot_s = n * limits.P_s_bar;
    const double tot_r = n * limits.P_r_bar;
    const double ps_scale = std::max(limits.P_s_bar, 1e-9);
    const double pr_scale = std::max(limits.P_r_bar, 1e-9);

    convex::Program prog;
    const int ps = prog.add_variables("p_s", n, 0.0, tot_s, limits.P_s_bar, ps_scale);
    const int pr = prog.add_variables("p_r", n, 0.0, tot_r, limits.P_r_bar, pr_scale);
    const int rd = prog.add_variables("r_rd", n, 0.0, convex::kInf, 1.0);
    const int sec = prog.add_variables("secrecy", n, -convex::kInf, convex::kInf, 0.0);

    double rate_scale = 1.0;
    for (int k = 0; k < n; ++k) {
        rate_scale = std::max(rate_scale, std::log2(1.0 + h.h_rd[k] * tot_r));
    }
    const int cum = prog.add_variables("cumulative", n, 0.0, convex::kInf, rate_scale, rate_scale);

    for (int k = 0; k < n; ++k) {
        const bool no_source = lam[k] <= 0.0 || limits.P_s_bar <= 0.0 || h.h_sr[k] <= h.h_se;
        const bool no_relay = lam[k] >= 1.0 || limits.P_r_bar <= 0.0;
        prog.set_start(ps + k, std::clamp(tp.p_s_ref[k], 0.0, tot_s));
        prog.set_start(pr + k, std::clamp(tp.p_r_ref[k], 0.0, tot_r));

        if (no_relay) {
            prog.fix(pr + k, 0.0);
            prog.fix(rd + k, 0.0);
        } else {
            prog.set_start(rd + k, 0.5 * std::log2(1.0 + h.h_rd[k] * std::max(tp.p_r_ref[k], pr_scale)));
            convex::Function g;
            g.add(rd + k, 1.0).add(convex::NegLog2Affine{pr + k, h.h_rd[k], 1.0});
            prog.add_inequality(std::move(g));
        }

        if (lam[k] <= 0.0) {
            // Not a receive slot.
            prog.fix(sec + k, 0.0);
        } else if (no_source) {
            prog.fix(ps + k, 0.0);
            prog.fix(sec + k, -ub.se_ub[k](0.0));
        } else {
            const AffineBound& se = ub.se_ub[k];
            convex::Function g;
            g.add(sec + k, 1.0)
                .add(convex::NegLog2Affine{ps + k, h.h_sr[k], 1.0})
                .add(ps + k, se.slope)
                .offset(se.value - se.slope * se.ref);
            prog.add_inequality(std::move(g));
        }

        convex::LinearExpr row{{cum + k, 1.0}, {rd + k, 1.0 - lam[k]}};
        if (k > 0) {
            row.emplace_back(cum + k - 1, -1.0);
            row.emplace_back(sec + k - 1, -lam[k - 1]);
        }
        prog.add_equality(std::move(row), 0.0);

        // Maximize (1 - lambda)(r_rd - re_ub(p_r)); constants dropped.
        prog.objective().add(rd + k, -(1.0 - lam[k])).add(pr + k, (1.0 - lam[k]) * ub.re_ub[k].slope);
    }

    convex::LinearExpr bs, br;
    for (int k = 0; k < n; ++k) {
        bs.emplace_back(ps + k, 1.0);
        br.emplace_back(pr + k, 1.0);
    }
    prog.add_linear_le(std::move(bs), tot_s, ps_scale);
    prog.add_linear_le(std::move(br), tot_r, pr_scale);

    const convex::Result r = convex::solve(prog, {tol, 300});
    PowerResult res;
    res.status = r.status;
    res.kkt_residual = r.kkt_residual;
    res.iterations = r.iterations;
    if (!r.optimal()) {
        return res;
    }
    res.power.p_s = r["p_s"];
    res.power.p_r = r["p_r"];
    res.r_rd = r["r_rd"];
    for (int k = 0; k < n; ++k) {
        res.power.p_s[k] = std::max(0.0, res.power.p_s[k]);
        res.power.p_r[k] = std::max(0.0, res.power.p_r[k]);
        // Drop relay power the rate slack cannot use.
        if (h.h_rd[k] > 0.0) {
            res.power.p_r[k] = std::min(res.power.p_r[k], std::expm1(res.r_rd[k] * kLn2) / h.h_rd[k]);
        }
        res.surrogate += (1.0 - lam[k]) * (res.r_rd[k] - ub.re_ub[k](res.power.p_r[k]));
    }
    return res;
}

}  // namespace seeopt

#pragma once

// Relaxed reception/forwarding schedule for fixed powers and trajectory, and
// its sub-slot rounding.

#include "seeopt/convex.hpp"
#include "seeopt/estimators.hpp"
#include "seeopt/model.hpp"
#include "seeopt/types.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace seeopt {

/// Per-slot LP coefficients, all in bits/s/Hz.
struct SchedulingCoefficients {
    std::vector<double> forward;  // log2(1 + h_RD p_r), rate if the slot forwards
    std::vector<double> gain;     // forward minus the eavesdropper's rate
    std::vector<double> secrecy;  // [log2(1 + h_SR p_s) - log2(1 + h_SE p_s)]^+

    std::size_t size() const { return gain.size(); }
};

inline SchedulingCoefficients scheduling_coefficients(const PowerCoefficients& h, const PowerAllocation& pwr) {
    const std::size_t n = h.h_rd.size();
    SchedulingCoefficients c;
    c.forward.resize(n);
    c.gain.resize(n);
    c.secrecy.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        c.forward[k] = std::log2(1.0 + h.h_rd[k] * pwr.p_r[k]);
        c.gain[k] = c.forward[k] - std::log2(1.0 + h.h_re[k] * pwr.p_r[k]);
        // Slots leaking more than they deliver contribute nothing.
        c.secrecy[k] = std::max(0.0, std::log2(1.0 + h.h_sr[k] * pwr.p_s[k]) - std::log2(1.0 + h.h_se * pwr.p_s[k]));
    }
    return c;
}

struct SchedulingResult {
    Schedule schedule;
    convex::Status status = convex::Status::NumericalTrouble;
    double objective = 0.0;  // sum (1 - lambda) gain
    double kkt_residual = 0.0;
    int iterations = 0;
};

/// Maximizes sum (1 - lambda_k) gain_k over 0 <= lambda <= 1 subject to the
/// cumulative causality chain
///   c_k = c_{k-1} + lambda_{k-1} secrecy_{k-1} - (1 - lambda_k) forward_k >= 0, c_{-1} = 0.
inline SchedulingResult solve_scheduling(const SchedulingCoefficients& c, double tol = 1e-9, int eta = 1) {
    const int n = static_cast<int>(c.size());
    SchedulingResult res;
    res.schedule.eta = eta;
    if (n == 0) {
        res.status = convex::Status::Optimal;
        return res;
    }

    double rate_scale = 0.0;
    for (int k = 0; k < n; ++k) {
        rate_scale = std::max({rate_scale, c.forward[k], c.secrecy[k]});
    }
    rate_scale = std::max(rate_scale, 1e-3);

    convex::Program prog;
    const int lam = prog.add_variables("lambda", n, 0.0, 1.0, 0.5);
    const int cum = prog.add_variables("cumulative", n, 0.0, convex::kInf, rate_scale, rate_scale);

    for (int k = 0; k < n; ++k) {
        // Forwarding at a loss is never useful, nor is forwarding nothing.
        if (c.gain[k] <= 0.0 || c.forward[k] <= 0.0) {
            prog.fix(lam + k, 1.0);
        }
        convex::LinearExpr row{{cum + k, 1.0}, {lam + k, -c.forward[k]}};
        if (k > 0) {
            row.emplace_back(cum + k - 1, -1.0);
            row.emplace_back(lam + k - 1, -c.secrecy[k - 1]);
        }
        prog.add_equality(std::move(row), -c.forward[k]);
        prog.objective().add(lam + k, c.gain[k]);
    }
    prog.fix(lam, 1.0);  // nothing has been received before the first slot

    const convex::Result r = convex::solve(prog, {tol, 300});
    res.status = r.status;
    res.kkt_residual = r.kkt_residual;
    res.iterations = r.iterations;
    if (!r.optimal()) {
        return res;
    }
    res.schedule.lambda = r["lambda"];
    for (double& l : res.schedule.lambda) {
        l = std::clamp(l, 0.0, 1.0);
        if (l > 1.0 - 1e-7) {
            l = 1.0;
        }
    }
    // Small lambdas are trimmed only when the chain keeps its slack.
    for (int k = 0; k < n; ++k) {
        if (res.schedule.lambda[k] < 1e-7) {
            res.schedule.lambda[k] = 0.0;
        }
    }
    double cumulative = 0.0;
    bool ok = true;
    for (int k = 0; k < n; ++k) {
        if (k > 0) {
            cumulative += res.schedule.lambda[k - 1] * c.secrecy[k - 1];
        }
        cumulative -= (1.0 - res.schedule.lambda[k]) * c.forward[k];
        ok = ok && cumulative >= -1e-12 * rate_scale * n;
    }
    if (!ok) {
        res.schedule.lambda = r["lambda"];
        for (double& l : res.schedule.lambda) {
            l = std::clamp(l, 0.0, 1.0);
        }
    }
    for (int k = 0; k < n; ++k) {
        res.objective += (1.0 - res.schedule.lambda[k]) * c.gain[k];
    }
    return res;
}

struct RoundedSchedule {
    std::vector<int> Lambda1;  // reception sub-slots
    std::vector<int> Lambda2;  // forwarding sub-slots
    int eta = 1;

    Schedule reconstructed() const {
        Schedule s;
        s.eta = eta;
        s.lambda.reserve(Lambda1.size());
        for (int l : Lambda1) {
            s.lambda.push_back(static_cast<double>(l) / eta);
        }
        return s;
    }
};

/// Lambda1 = nearest integer to eta * lambda (halves round up), Lambda2 = eta - Lambda1.
inline RoundedSchedule round_schedule(const Schedule& relaxed, int eta) {
    if (eta < 1) {
        throw Error(ErrorCode::InvalidArgument, "eta must be a positive integer");
    }
    RoundedSchedule out;
    out.eta = eta;
    for (double l : relaxed.lambda) {
        const int l1 = std::clamp(static_cast<int>(std::floor(eta * l + 0.5)), 0, eta);
        out.Lambda1.push_back(l1);
        out.Lambda2.push_back(eta - l1);
    }
    return out;
}

}  // namespace seeopt

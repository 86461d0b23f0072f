#pragma once

#include <optional>
#include <vector>

namespace seeopt {

template <class X>
struct FractionalPoint {
    X x;
    double numerator = 0.0;
    double denominator = 1.0;
};

enum class DinkelbachStatus { Converged, MaxIter, NonpositiveDenominator, SubproblemFailure };

inline const char* to_string(DinkelbachStatus s) {
    switch (s) {
        case DinkelbachStatus::Converged: return "Converged";
        case DinkelbachStatus::MaxIter: return "MaxIter";
        case DinkelbachStatus::NonpositiveDenominator: return "NonpositiveDenominator";
        case DinkelbachStatus::SubproblemFailure: return "SubproblemFailure";
    }
    return "Unknown";
}

template <class X>
struct DinkelbachResult {
    DinkelbachStatus status = DinkelbachStatus::SubproblemFailure;
    double mu = 0.0;  // final ratio
    std::optional<FractionalPoint<X>> solution;
    std::vector<double> mu_trace;  // parameter used at each iteration
    std::vector<double> F_trace;   // N(x_k) - mu_k D(x_k)
    int iterations = 0;
};

/// Maximizes N(x) / D(x) for concave N and convex, positive D.
///
/// `solve(mu)` must return the maximizer of N(x) - mu D(x) (with its N and D
/// values) or std::nullopt on failure. Iterates mu <- N(x_k) / D(x_k) from
/// mu0 and stops once N(x_k) - mu_k D(x_k) <= tol * D(x_k).
template <class X, class Solve>
DinkelbachResult<X> dinkelbach(Solve&& solve, double mu0, double tol, int max_iter) {
    DinkelbachResult<X> res;
    double mu = mu0;
    res.mu = mu0;
    for (int k = 0; k < max_iter; ++k) {
        std::optional<FractionalPoint<X>> pt = solve(mu);
        res.iterations = k + 1;
        if (!pt) {
            res.status = DinkelbachStatus::SubproblemFailure;
            return res;
        }
        if (!(pt->denominator > 0.0)) {
            res.status = DinkelbachStatus::NonpositiveDenominator;
            return res;
        }
        const double F = pt->numerator - mu * pt->denominator;
        res.mu_trace.push_back(mu);
        res.F_trace.push_back(F);
        const double ratio = pt->numerator / pt->denominator;
        res.solution = std::move(pt);
        res.mu = ratio;
        if (F <= tol * res.solution->denominator) {
            res.status = DinkelbachStatus::Converged;
            return res;
        }
        mu = ratio;
    }
    res.status = DinkelbachStatus::MaxIter;
    return res;
}

}  // namespace seeopt

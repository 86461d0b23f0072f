#pragma once

// Reference designs: straight flight and double-circular flight, trajectory frozen.

#include "seeopt/init.hpp"
#include "seeopt/optimizer.hpp"
#include "seeopt/types.hpp"

#include <string>

namespace seeopt {

enum class BenchmarkKind { SFw, DCFwo };

inline const char* to_string(BenchmarkKind k) { return k == BenchmarkKind::SFw ? "sfw" : "dcfwo"; }

inline BenchmarkKind parse_benchmark_kind(const std::string& s) {
    if (s == "sfw" || s == "SFw") {
        return BenchmarkKind::SFw;
    }
    if (s == "dcfwo" || s == "DCFwo") {
        return BenchmarkKind::DCFwo;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown benchmark '" + s + "' (expected sfw or dcfwo)");
}

struct BenchmarkOptions {
    /// DCFwo only: evaluate the initial design with one schedule and uniform powers.
    bool freeze_resources = false;
    std::function<void(const IterationRecord&)> on_iteration;
};

inline Trajectory benchmark_trajectory(const Scenario& sc, BenchmarkKind kind) {
    return kind == BenchmarkKind::SFw ? straight_flight(sc.layout, sc.limits)
                                      : double_circular(sc.layout, sc.limits, sc.init, sc.energy);
}

inline SolveReport run_benchmark(const Scenario& sc, BenchmarkKind kind, const BenchmarkOptions& bo = {}) {
    OptimizeOptions o;
    o.optimize_trajectory = false;
    o.optimize_resources = !(kind == BenchmarkKind::DCFwo && bo.freeze_resources);
    o.on_iteration = bo.on_iteration;
    return optimize(sc, initial_design(sc, benchmark_trajectory(sc, kind)), o);
}

/// The proposed design from the double-circular start.
inline SolveReport run_proposed(const Scenario& sc, std::function<void(const IterationRecord&)> cb = {}) {
    OptimizeOptions o;
    o.on_iteration = std::move(cb);
    return optimize(sc, initial_design(sc, double_circular(sc.layout, sc.limits, sc.init, sc.energy)), o);
}

}  // namespace seeopt

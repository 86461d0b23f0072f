#pragma once

// Run artifacts: trajectory.csv, convergence.csv, causality.csv and summary.json.
// Numbers carry 12 significant digits.

#include "seeopt/optimizer.hpp"
#include "seeopt/types.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace seeopt {

inline std::string fmt12(double x) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.12g", x == 0.0 ? 0.0 : x);  // no "-0"
    return buf;
}

inline double round12(double x) { return std::stod(fmt12(x)); }

struct RunInfo {
    std::string label;
    std::string mode;  // proposed, sfw, dcfwo, dcfwo-frozen
    unsigned seed = 0;
    double wall_time_s = 0.0;
};

namespace detail {

inline void write_rows(const std::filesystem::path& p, const std::string& header,
                       const std::vector<std::vector<double>>& rows) {
    std::ofstream out(p, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::InvalidArgument, "cannot write " + p.string());
    }
    out << header << "\n";
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (!std::isfinite(r[i])) {
                throw Error(ErrorCode::SubproblemFailure, "non-finite value in " + p.filename().string());
            }
            out << (i ? "," : "") << fmt12(r[i]);
        }
        out << "\n";
    }
    if (!out) {
        throw Error(ErrorCode::InvalidArgument, "write to " + p.string() + " failed");
    }
}

}  // namespace detail

inline const char* kTrajectoryHeader =
    "n,x,y,vx,vy,ax,ay,lambda,p_s,p_r,r_SR,r_SE,r_RD,r_RE,energy";
inline const char* kConvergenceHeader = "iter,see,numerator,energy";
inline const char* kCausalityHeader = "n,received_bits,forwarded_bits,slack_bits";

/// Row n = 1..N: position q[n], velocity v[n], acceleration a[n-1] and the slot-n quantities.
inline std::vector<std::vector<double>> trajectory_rows(const Scenario& sc, const Design& d, const DesignEvaluation& ev) {
    std::vector<std::vector<double>> rows;
    const Trajectory& t = d.trajectory;
    for (int k = 0; k < t.slots(); ++k) {
        rows.push_back({double(k + 1), t.q[k + 1].x(), t.q[k + 1].y(), t.v[k + 1].x(), t.v[k + 1].y(), t.a[k].x(),
                        t.a[k].y(), d.schedule.lambda[k], d.power.p_s[k], d.power.p_r[k], ev.rates.r_SR[k],
                        ev.rates.r_SE[k], ev.rates.r_RD[k], ev.rates.r_RE[k], ev.slot_energy[k]});
    }
    (void)sc;
    return rows;
}

/// Cumulative secrecy bits received through slot n-1 against bits forwarded through slot n.
inline std::vector<std::vector<double>> causality_rows(const Scenario& sc, const DesignEvaluation& ev) {
    const double bits = sc.channel.B * sc.limits.delta_t;
    std::vector<std::vector<double>> rows;
    double received = 0.0, forwarded = 0.0;
    for (std::size_t k = 0; k < ev.rates.size(); ++k) {
        if (k > 0) {
            received += bits * std::max(0.0, ev.rates.r_SR[k - 1] - ev.rates.r_SE[k - 1]);
        }
        forwarded += bits * ev.rates.r_RD[k];
        rows.push_back({double(k + 1), received, forwarded, received - forwarded});
    }
    return rows;
}

inline nlohmann::ordered_json summary_record(const Scenario& sc, const SolveReport& rep, const RunInfo& info) {
    const DesignEvaluation ev = evaluate_design(sc, rep.design);
    nlohmann::ordered_json j;
    j["label"] = info.label;
    j["mode"] = info.mode;
    j["seed"] = info.seed;
    j["horizon_s"] = round12(sc.limits.horizon());
    j["slots"] = sc.limits.N;
    j["eta"] = sc.algo.eta;
    j["see_bits_per_joule"] = round12(rep.see);
    j["see_kbits_per_joule"] = round12(rep.see / 1e3);
    j["rounded_see_kbits_per_joule"] = round12(rep.rounded_see / 1e3);
    j["initial_see_kbits_per_joule"] = round12(rep.initial_see / 1e3);
    j["secrecy_bits"] = round12(ev.numerator_bits);
    j["received_secrecy_bits"] = round12(ev.secrecy_bits_sr);
    j["forwarded_secrecy_bits"] = round12(ev.secrecy_bits_rd);
    j["energy_joules"] = round12(ev.energy);
    j["max_causality_violation"] = round12(ev.max_causality_violation);
    j["iterations"] = rep.iterations.size();
    j["converged"] = rep.converged;
    j["stop_reason"] = rep.stop_reason;
    j["wall_time_s"] = round12(info.wall_time_s);
    return j;
}

/// Writes the four artifact files into `dir`, creating it if needed.
inline void write_artifacts(const std::filesystem::path& dir, const Scenario& sc, const SolveReport& rep,
                            const RunInfo& info) {
    std::filesystem::create_directories(dir);
    const DesignEvaluation ev = evaluate_design(sc, rep.design);
    detail::write_rows(dir / "trajectory.csv", kTrajectoryHeader, trajectory_rows(sc, rep.design, ev));
    std::vector<std::vector<double>> conv;
    for (const IterationRecord& r : rep.iterations) {
        conv.push_back({double(r.iter), r.see, r.numerator_bits, r.energy});
    }
    detail::write_rows(dir / "convergence.csv", kConvergenceHeader, conv);
    detail::write_rows(dir / "causality.csv", kCausalityHeader, causality_rows(sc, ev));
    std::ofstream js(dir / "summary.json", std::ios::binary);
    js << summary_record(sc, rep, info).dump(2) << "\n";
    if (!js) {
        throw Error(ErrorCode::InvalidArgument, "write to " + (dir / "summary.json").string() + " failed");
    }
}

}  // namespace seeopt

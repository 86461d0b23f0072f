// seeopt command-line front end.

#include "seeopt/artifacts.hpp"
#include "seeopt/benchmark.hpp"
#include "seeopt/scenario.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace seeopt;

namespace {

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

LogLevel log_level() {
    const char* env = std::getenv("SEE_OPT_LOG");
    if (!env) {
        return LogLevel::Info;
    }
    const std::string s = env;
    if (s == "error") {
        return LogLevel::Error;
    }
    if (s == "debug") {
        return LogLevel::Debug;
    }
    return LogLevel::Info;
}

void log(LogLevel at, const std::string& msg) {
    static const LogLevel level = log_level();
    if (at <= level) {
        std::cerr << msg << "\n";
    }
}

struct Common {
    std::string scenario;
    std::string out = "out";
    std::optional<double> t_horizon;
    std::optional<int> eta;
    std::optional<int> max_outer;
    std::optional<unsigned> seed;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--scenario", c.scenario, "scenario file (default: built-in parameters)");
    cmd->add_option("--out", c.out, "output directory")->capture_default_str();
    cmd->add_option("--t-horizon", c.t_horizon, "flight time T in seconds");
    cmd->add_option("--eta", c.eta, "sub-slots per slot used when rounding the schedule");
    cmd->add_option("--max-outer", c.max_outer, "outer iteration limit");
    cmd->add_option("--seed", c.seed, "run seed recorded in the summary");
}

Scenario load(const Common& c) {
    Scenario sc = c.scenario.empty() ? Scenario{} : load_scenario(c.scenario);
    if (c.t_horizon) {
        set_horizon(sc, *c.t_horizon);
    }
    if (c.eta) {
        sc.algo.eta = *c.eta;
    }
    if (c.max_outer) {
        sc.algo.max_outer = *c.max_outer;
    }
    if (c.seed) {
        sc.seed = *c.seed;
    }
    check_scenario(sc);
    return sc;
}

std::function<void(const IterationRecord&)> iteration_logger(const std::string& tag) {
    return [tag](const IterationRecord& r) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "[%s] iter %d  SEE %.6f kbits/J  energy %.3f J  %s | %s | %s", tag.c_str(), r.iter,
                      r.see / 1e3, r.energy, r.schedule_status.c_str(), r.power_status.c_str(),
                      r.trajectory_status.c_str());
        log(LogLevel::Debug, buf);
    };
}

struct Run {
    SolveReport report;
    RunInfo info;
};

Run run_mode(const Scenario& sc, const std::string& mode) {
    const auto t0 = std::chrono::steady_clock::now();
    Run r;
    const std::string tag = sc.label + "/" + mode + "/T=" + fmt12(sc.limits.horizon());
    if (mode == "proposed") {
        r.report = run_proposed(sc, iteration_logger(tag));
    } else {
        BenchmarkOptions bo;
        bo.freeze_resources = mode == "dcfwo-frozen";
        bo.on_iteration = iteration_logger(tag);
        r.report = run_benchmark(sc, mode == "sfw" ? BenchmarkKind::SFw : BenchmarkKind::DCFwo, bo);
    }
    r.info = {sc.label, mode, sc.seed,
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()};
    char buf[256];
    std::snprintf(buf, sizeof buf, "[%s] SEE %.6f kbits/J (rounded %.6f) after %zu iterations, %s", tag.c_str(),
                  r.report.see / 1e3, r.report.rounded_see / 1e3, r.report.iterations.size(),
                  r.report.stop_reason.c_str());
    log(LogLevel::Info, buf);
    return r;
}

void write_run(const fs::path& dir, const Scenario& sc, const Run& r) {
    write_artifacts(dir, sc, r.report, r.info);
    std::ofstream(dir / "scenario.txt", std::ios::binary) << serialize_scenario(sc);
}

int exit_for(const SolveReport& rep) { return rep.converged ? 0 : 2; }

void write_table(const fs::path& p, const std::string& header, const std::vector<std::string>& rows) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << header << "\n";
    for (const auto& r : rows) {
        out << r << "\n";
    }
    if (!out) {
        throw Error(ErrorCode::InvalidArgument, "cannot write " + p.string());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Secrecy energy efficiency optimizer for a fixed-wing UAV relay"};
    app.require_subcommand(1);

    Common c_opt, c_bench, c_t2, c_sweep, c_val;
    auto* opt = app.add_subcommand("optimize", "optimize trajectory, schedule and powers");
    add_common(opt, c_opt);

    auto* bench = app.add_subcommand("benchmark", "run a reference design");
    add_common(bench, c_bench);
    std::string kind;
    bool frozen = false;
    bench->add_option("--benchmark", kind, "sfw or dcfwo")->required()->check(CLI::IsMember({"sfw", "dcfwo"}));
    bench->add_flag("--frozen-resources", frozen, "dcfwo only: keep uniform powers and the first schedule");

    auto* t2 = app.add_subcommand("table2", "compare the three designs over several horizons");
    add_common(t2, c_t2);
    std::vector<double> horizons{100, 150, 200, 250, 300, 350, 400, 450};
    t2->add_option("--horizons", horizons, "flight times in seconds")->delimiter(',')->capture_default_str();

    auto* sweep = app.add_subcommand("sweep-power", "SEE against the average source power budget");
    add_common(sweep, c_sweep);
    std::vector<double> powers{0, 5, 10, 15, 20};
    sweep->add_option("--powers-dbm", powers, "source power budgets in dBm")->delimiter(',')->capture_default_str();

    auto* val = app.add_subcommand("validate", "parse a scenario and check the initial trajectory");
    add_common(val, c_val);
    bool print = false;
    val->add_flag("--print", print, "write the normalized scenario to stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*opt) {
            const Scenario sc = load(c_opt);
            const Run r = run_mode(sc, "proposed");
            write_run(c_opt.out, sc, r);
            return exit_for(r.report);
        }
        if (*bench) {
            const Scenario sc = load(c_bench);
            const std::string mode = kind == "dcfwo" && frozen ? "dcfwo-frozen" : kind;
            if (frozen && kind != "dcfwo") {
                throw Error(ErrorCode::InvalidArgument, "--frozen-resources applies to dcfwo only");
            }
            const Run r = run_mode(sc, mode);
            write_run(c_bench.out, sc, r);
            return exit_for(r.report);
        }
        if (*t2) {
            const Scenario base = load(c_t2);
            std::vector<std::string> rows;
            int code = 0;
            for (double T : horizons) {
                Scenario sc = base;
                set_horizon(sc, T);
                double see[3];
                const char* modes[3] = {"proposed", "dcfwo", "sfw"};
                for (int m = 0; m < 3; ++m) {
                    const Run r = run_mode(sc, modes[m]);
                    write_run(fs::path(c_t2.out) / ("T" + fmt12(T)) / modes[m], sc, r);
                    see[m] = r.report.see / 1e3;
                    code = std::max(code, exit_for(r.report));
                }
                const bool ordered = see[0] > see[1] && see[1] > see[2];
                rows.push_back(fmt12(T) + "," + fmt12(see[0]) + "," + fmt12(see[1]) + "," + fmt12(see[2]) + "," +
                               (ordered ? "1" : "0"));
                if (!ordered) {
                    log(LogLevel::Error, "T=" + fmt12(T) + ": ordering proposed > dcfwo > sfw does not hold");
                }
            }
            write_table(fs::path(c_t2.out) / "table2.csv", "T_s,proposed_kbits_per_joule,dcfwo_kbits_per_joule,sfw_kbits_per_joule,ordered", rows);
            return code;
        }
        if (*sweep) {
            const Scenario base = load(c_sweep);
            std::vector<std::string> rows;
            int code = 0;
            for (double p : powers) {
                Scenario sc = base;
                sc.limits.P_s_bar = dbm_to_watt(p);
                const Run r = run_mode(sc, "proposed");
                write_run(fs::path(c_sweep.out) / ("ps" + fmt12(p) + "dbm"), sc, r);
                rows.push_back(fmt12(p) + "," + fmt12(r.report.see / 1e3));
                code = std::max(code, exit_for(r.report));
            }
            write_table(fs::path(c_sweep.out) / "sweep_power.csv", "ps_bar_dbm,see_kbits_per_joule", rows);
            return code;
        }
        if (*val) {
            const Scenario sc = load(c_val);
            const Trajectory t = double_circular(sc.layout, sc.limits, sc.init, sc.energy);
            const ValidationReport rep = validate_design(sc.layout, sc.channel, sc.limits, t, Schedule{},
                                                         initial_design(sc, t).power);
            if (!rep.feasible()) {
                const Violation& v = rep.violations.front();
                throw Error(ErrorCode::InfeasibleInitialDesign,
                            v.constraint + " violated by " + fmt12(v.amount) + " at index " + std::to_string(v.index));
            }
            if (print) {
                std::cout << serialize_scenario(sc);
            }
            log(LogLevel::Info, "scenario ok: " + std::to_string(sc.limits.N) + " slots, initial trajectory feasible");
            return 0;
        }
    } catch (const Error& e) {
        log(LogLevel::Error, std::string("error: ") + e.what());
        return 1;
    } catch (const std::exception& e) {
        log(LogLevel::Error, std::string("error: ") + e.what());
        return 1;
    }
    return 1;
}

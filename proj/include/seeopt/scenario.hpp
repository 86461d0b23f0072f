#pragma once

// Scenario files: flat `key = value` text, one entry per line, `#` starts a comment.
// Units live in the key names. Power and noise levels are given in dBm (or W),
// the reference gain in dB.

#include "seeopt/types.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace seeopt {

namespace detail {

struct ScenarioKey {
    const char* key;
    std::function<double(const Scenario&)> get;
    std::function<void(Scenario&, double)> set;
    bool integer = false;
};

inline const std::vector<ScenarioKey>& scenario_keys() {
    // Keys with unit conversions (dBm, dB, horizon) are handled separately.
#define SEEOPT_KEY(name, field) \
    {name, [](const Scenario& s) { return static_cast<double>(s.field); }, [](Scenario& s, double x) { s.field = x; }, false}
#define SEEOPT_IKEY(name, field) \
    {name, [](const Scenario& s) { return static_cast<double>(s.field); }, [](Scenario& s, double x) { s.field = static_cast<decltype(s.field)>(x); }, true}
    static const std::vector<ScenarioKey> keys = {
        SEEOPT_KEY("ws_x_m", layout.w_S.x()),
        SEEOPT_KEY("ws_y_m", layout.w_S.y()),
        SEEOPT_KEY("wd_x_m", layout.w_D.x()),
        SEEOPT_KEY("wd_y_m", layout.w_D.y()),
        SEEOPT_KEY("we_x_m", layout.w_E.x()),
        SEEOPT_KEY("we_y_m", layout.w_E.y()),
        SEEOPT_KEY("altitude_m", layout.H),
        SEEOPT_KEY("q0_x_m", layout.q_0.x()),
        SEEOPT_KEY("q0_y_m", layout.q_0.y()),
        SEEOPT_KEY("qf_x_m", layout.q_F.x()),
        SEEOPT_KEY("qf_y_m", layout.q_F.y()),
        SEEOPT_KEY("bandwidth_hz", channel.B),
        SEEOPT_KEY("rician_k", channel.K),
        SEEOPT_KEY("pathloss_exponent", channel.alpha),
        SEEOPT_KEY("zeta_se", channel.zeta_SE),
        SEEOPT_KEY("c1_kg_per_m", energy.c1),
        SEEOPT_KEY("c2_kg_m3_per_s4", energy.c2),
        SEEOPT_KEY("gravity_m_per_s2", energy.g),
        SEEOPT_KEY("mass_kg", energy.mass),
        SEEOPT_KEY("v_max_m_per_s", limits.V_max),
        SEEOPT_KEY("a_max_m_per_s2", limits.a_max),
        SEEOPT_KEY("slot_s", limits.delta_t),
        SEEOPT_KEY("init_speed_m_per_s", init.speed),
        SEEOPT_IKEY("init_laps", init.laps),
        SEEOPT_KEY("init_speed_fraction", init.speed_fraction),
        SEEOPT_KEY("init_accel_margin", init.accel_margin),
        SEEOPT_KEY("epsilon", algo.epsilon),
        SEEOPT_KEY("solver_tol", algo.solver_tol),
        SEEOPT_KEY("tol_dink", algo.dinkelbach_tol),
        SEEOPT_IKEY("dinkelbach_max_iter", algo.dinkelbach_max_iter),
        SEEOPT_IKEY("eta", algo.eta),
        SEEOPT_IKEY("max_outer", algo.max_outer),
        SEEOPT_IKEY("stall_limit", algo.stall_limit),
        SEEOPT_KEY("v_floor_m_per_s", algo.v_floor),
    };
#undef SEEOPT_KEY
#undef SEEOPT_IKEY
    return keys;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::string format_double(double x) {
    if (std::isinf(x)) {
        return x < 0 ? "-inf" : "inf";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);  // shortest exact form
    return std::string(buf, res.ptr);
}

inline double parse_number(const std::string& text, int line, const std::string& key) {
    const std::string t = trim(text);
    if (t == "-inf" || t == "-Inf" || t == "-INF") {
        return -std::numeric_limits<double>::infinity();
    }
    double x = 0.0;
    const char* first = t.data();
    const char* last = first + t.size();
    if (*first == '+') {
        ++first;
    }
    const auto [ptr, ec] = std::from_chars(first, last, x);
    if (t.empty() || ec != std::errc() || ptr != last || !std::isfinite(x)) {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": bad number '" + t + "' for " + key);
    }
    return x;
}


// Quantities written in dB/dBm, with a linear fallback key for exact round trips.
struct UnitPair {
    const char* log_key;
    const char* lin_key;
    double (*to_linear)(double);
    double (*to_log)(double);
    double& (*field)(Scenario&);
};

inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

inline const std::vector<UnitPair>& unit_pairs() {
    static const std::vector<UnitPair> pairs = {
        {"beta0_db", "beta0_linear", db_to_linear, linear_to_db, [](Scenario& s) -> double& { return s.channel.beta_0; }},
        {"sigma2_dbm", "sigma2_w", dbm_to_watt, watt_to_dbm, [](Scenario& s) -> double& { return s.channel.sigma2; }},
        {"ps_bar_dbm", "ps_bar_w", dbm_to_watt, watt_to_dbm, [](Scenario& s) -> double& { return s.limits.P_s_bar; }},
        {"pr_bar_dbm", "pr_bar_w", dbm_to_watt, watt_to_dbm, [](Scenario& s) -> double& { return s.limits.P_r_bar; }},
    };
    return pairs;
}

inline const UnitPair* find_unit_pair(const std::string& key) {
    for (const auto& u : unit_pairs()) {
        if (key == u.log_key || key == u.lin_key) {
            return &u;
        }
    }
    return nullptr;
}

// Log-scale value that maps back onto `x` exactly, if one exists next to the rounded value.
inline bool exact_log(const UnitPair& u, double x, double& out) {
    out = u.to_log(x);
    if (u.to_linear(out) == x) {
        return true;
    }
    double up = out, dn = out;
    for (int i = 0; i < 8; ++i) {
        up = std::nextafter(up, std::numeric_limits<double>::infinity());
        dn = std::nextafter(dn, -std::numeric_limits<double>::infinity());
        if (u.to_linear(up) == x) {
            out = up;
            return true;
        }
        if (u.to_linear(dn) == x) {
            out = dn;
            return true;
        }
    }
    return false;
}

}  // namespace detail

/// Rejects physically meaningless values. Messages name the key.
inline void check_scenario(const Scenario& sc) {
    auto need = [](bool ok, const std::string& what) {
        if (!ok) {
            throw Error(ErrorCode::ParseError, what);
        }
    };
    need(sc.layout.H > 0.0, "altitude_m must be positive");
    need(sc.channel.B > 0.0, "bandwidth_hz must be positive");
    need(sc.channel.beta_0 > 0.0, "beta0_db must be finite");
    need(sc.channel.sigma2 > 0.0, "sigma2_dbm must be finite");
    need(sc.channel.K >= 0.0, "rician_k must be nonnegative");
    need(sc.channel.alpha > 0.0, "pathloss_exponent must be positive");
    need(sc.channel.zeta_SE >= 0.0, "zeta_se must be nonnegative");
    need(sc.energy.c1 > 0.0 && sc.energy.c2 > 0.0, "c1_kg_per_m and c2_kg_m3_per_s4 must be positive");
    need(sc.energy.g > 0.0, "gravity_m_per_s2 must be positive");
    need(sc.energy.mass >= 0.0, "mass_kg must be nonnegative");
    need(sc.limits.V_max > 0.0, "v_max_m_per_s must be positive");
    need(sc.limits.a_max > 0.0, "a_max_m_per_s2 must be positive");
    need(sc.limits.delta_t > 0.0, "slot_s must be positive");
    need(sc.limits.N >= 2, "horizon_s must span at least two slots");
    need(sc.limits.P_s_bar >= 0.0 && sc.limits.P_r_bar >= 0.0, "power budgets must be nonnegative");
    need(sc.init.speed >= 0.0 && sc.init.speed <= sc.limits.V_max, "init_speed_m_per_s must lie in [0, v_max]");
    need(sc.init.laps >= 1, "init_laps must be at least 1");
    need(sc.init.speed_fraction > 0.0 && sc.init.speed_fraction <= 1.0, "init_speed_fraction must lie in (0, 1]");
    need(sc.init.accel_margin > 0.0 && sc.init.accel_margin <= 1.0, "init_accel_margin must lie in (0, 1]");
    need(sc.algo.epsilon > 0.0, "epsilon must be positive");
    need(sc.algo.solver_tol > 0.0, "solver_tol must be positive");
    need(sc.algo.dinkelbach_tol > 0.0, "tol_dink must be positive");
    need(sc.algo.dinkelbach_max_iter >= 1, "dinkelbach_max_iter must be at least 1");
    need(sc.algo.eta >= 1, "eta must be at least 1");
    need(sc.algo.max_outer >= 1, "max_outer must be at least 1");
    need(sc.algo.stall_limit >= 1, "stall_limit must be at least 1");
    need(sc.algo.v_floor > 0.0, "v_floor_m_per_s must be positive");
}

/// Sets the horizon; throws unless it is a whole number of slots.
inline void set_horizon(Scenario& sc, double T) {
    const double n = T / sc.limits.delta_t;
    const double r = std::round(n);
    if (!(T > 0.0) || std::abs(n - r) > 1e-9 * std::max(1.0, r) || r > 1e7) {
        throw Error(ErrorCode::ParseError, "horizon_s = " + detail::format_double(T) + " is not a whole number of slots");
    }
    sc.limits.N = static_cast<int>(r);
}

inline Scenario parse_scenario(std::istream& in) {
    Scenario sc;
    std::set<std::string> seen;
    std::optional<double> horizon;
    std::string raw;
    int line = 0;
    auto fail = [&](const std::string& msg) { throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + msg); };
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string body = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (body.empty()) {
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            fail("expected 'key = value'");
        }
        const std::string key = detail::trim(body.substr(0, eq));
        const std::string val = detail::trim(body.substr(eq + 1));
        if (key.empty()) {
            fail("missing key");
        }
        if (!seen.insert(key).second) {
            fail("duplicate key '" + key + "'");
        }
        auto number = [&] { return detail::parse_number(val, line, key); };

        if (key == "label") {
            sc.label = val;
        } else if (key == "seed") {
            const double x = number();
            if (x < 0 || x != std::floor(x) || x > 4294967295.0) {
                fail("seed must be a nonnegative integer");
            }
            sc.seed = static_cast<unsigned>(x);
        } else if (key == "horizon_s") {
            horizon = number();
        } else if (const detail::UnitPair* u = detail::find_unit_pair(key)) {
            const bool log_form = key == u->log_key;
            const std::string other = log_form ? u->lin_key : u->log_key;
            if (seen.count(other)) {
                fail("'" + key + "' conflicts with '" + other + "'");
            }
            const double x = number();
            u->field(sc) = log_form ? u->to_linear(x) : x;
        } else {
            const detail::ScenarioKey* k = nullptr;
            for (const auto& cand : detail::scenario_keys()) {
                if (key == cand.key) {
                    k = &cand;
                }
            }
            if (!k) {
                fail("unknown key '" + key + "'");
            }
            const double x = number();
            if (k->integer && (x != std::floor(x) || std::abs(x) > 2e9)) {
                fail(key + " must be an integer");
            }
            k->set(sc, x);
        }
    }
    if (horizon) {
        set_horizon(sc, *horizon);
    }
    check_scenario(sc);
    return sc;
}

inline Scenario parse_scenario_text(const std::string& text) {
    std::istringstream in(text);
    return parse_scenario(in);
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::ParseError, "cannot read scenario file '" + path + "'");
    }
    try {
        return parse_scenario(in);
    } catch (const Error& e) {
        throw Error(ErrorCode::ParseError, path + ": " + std::string(e.what()).substr(std::string("ParseError: ").size()));
    }
}

/// Writes every key; parse_scenario(serialize_scenario(s)) reproduces s exactly.
inline std::string serialize_scenario(const Scenario& sc) {
    std::ostringstream os;
    os << "label = " << sc.label << "\n";
    os << "seed = " << sc.seed << "\n";
    os << "horizon_s = " << detail::format_double(sc.limits.N * sc.limits.delta_t) << "\n";
    for (const auto& k : detail::scenario_keys()) {
        os << k.key << " = " << detail::format_double(k.get(sc)) << "\n";
    }
    for (const auto& u : detail::unit_pairs()) {
        Scenario copy = sc;
        const double x = u.field(copy);
        double lg = 0.0;
        if (x == 0.0) {
            os << u.log_key << " = -inf\n";
        } else if (detail::exact_log(u, x, lg)) {
            os << u.log_key << " = " << detail::format_double(lg) << "\n";
        } else {
            os << u.lin_key << " = " << detail::format_double(x) << "\n";
        }
    }
    return os.str();
}

/// Field-by-field bitwise comparison.
inline bool same_scenario(const Scenario& a, const Scenario& b) {
    if (a.label != b.label || a.seed != b.seed || a.limits.N != b.limits.N) {
        return false;
    }
    for (const auto& k : detail::scenario_keys()) {
        if (k.get(a) != k.get(b)) {
            return false;
        }
    }
    return a.limits.P_s_bar == b.limits.P_s_bar && a.limits.P_r_bar == b.limits.P_r_bar &&
           a.channel.beta_0 == b.channel.beta_0 && a.channel.sigma2 == b.channel.sigma2;
}

}  // namespace seeopt

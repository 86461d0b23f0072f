#include <catch_amalgamated.hpp>

#include "seeopt/artifacts.hpp"
#include "seeopt/benchmark.hpp"
#include "seeopt/scenario.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace seeopt;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("seeopt_test_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int line_count(const fs::path& p) {
    std::ifstream in(p);
    std::string s;
    int n = 0;
    while (std::getline(in, s)) {
        ++n;
    }
    return n;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string("SEE_OPT_LOG=error \"") + SEEOPT_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

std::string parse_error(const std::string& text) {
    try {
        parse_scenario_text(text);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ParseError);
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("default scenario file matches the built-in parameters") {
    const Scenario sc = load_scenario(SEEOPT_SOURCE_DIR "/scenarios/default.txt");
    const Scenario def;
    CHECK(same_scenario(sc, def));
    CHECK(sc.channel.beta_0 == db_to_linear(-50.0));
    CHECK(sc.channel.sigma2 == dbm_to_watt(-110.0));
    CHECK(sc.limits.P_s_bar == dbm_to_watt(10.0));
    CHECK(sc.limits.N == 100);
}

TEST_CASE("scenario text parses units and comments") {
    const Scenario sc = parse_scenario_text(
        "# comment line\n"
        "label = my run   # trailing comment\n"
        "horizon_s = 250\n"
        "ps_bar_dbm = -inf\n"
        "pr_bar_w = 0.02\n"
        "sigma2_dbm = -100\n"
        "beta0_db = -60\n"
        "\n"
        "  we_x_m = 123.5  \n");
    CHECK(sc.label == "my run");
    CHECK(sc.limits.N == 250);
    CHECK(sc.limits.P_s_bar == 0.0);
    CHECK(sc.limits.P_r_bar == 0.02);
    CHECK(sc.channel.sigma2 == Catch::Approx(1e-13).epsilon(1e-12));
    CHECK(sc.channel.beta_0 == Catch::Approx(1e-6).epsilon(1e-12));
    CHECK(sc.layout.w_E.x() == 123.5);
}

TEST_CASE("scenario diagnostics name the line") {
    CHECK_THAT(parse_error("label = a\nfoo_bar = 1\n"), Catch::Matchers::ContainsSubstring("line 2: unknown key 'foo_bar'"));
    CHECK_THAT(parse_error("altitude_m\n"), Catch::Matchers::ContainsSubstring("line 1: expected 'key = value'"));
    CHECK_THAT(parse_error("\n\naltitude_m = 1e\n"), Catch::Matchers::ContainsSubstring("line 3: bad number"));
    CHECK_THAT(parse_error("eta = 2\neta = 3\n"), Catch::Matchers::ContainsSubstring("line 2: duplicate key"));
    CHECK_THAT(parse_error("ps_bar_w = 1\nps_bar_dbm = 1\n"), Catch::Matchers::ContainsSubstring("line 2: 'ps_bar_dbm' conflicts"));
    CHECK_THAT(parse_error("max_outer = 2.5\n"), Catch::Matchers::ContainsSubstring("must be an integer"));
    CHECK_THAT(parse_error("horizon_s = 10.5\n"), Catch::Matchers::ContainsSubstring("whole number of slots"));
    CHECK_THAT(parse_error("altitude_m = -1\n"), Catch::Matchers::ContainsSubstring("altitude_m"));
    CHECK_THAT(parse_error("altitude_m = inf\n"), Catch::Matchers::ContainsSubstring("bad number"));
    CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.txt"), Error);
}

TEST_CASE("scenario round trip is exact") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        Scenario sc;
        sc.label = "run" + std::to_string(i);
        sc.seed = static_cast<unsigned>(rng());
        sc.layout.w_E = {u(rng) * 1000.0 - 500.0, -u(rng) * 700.0};
        sc.layout.H = 50.0 + 200.0 * u(rng);
        sc.channel.beta_0 = std::pow(10.0, -4.0 - 3.0 * u(rng));
        sc.channel.sigma2 = std::pow(10.0, -12.0 - 4.0 * u(rng)) * (1.0 + u(rng));
        sc.limits.P_s_bar = i % 7 == 0 ? 0.0 : 0.1 * u(rng);
        sc.limits.P_r_bar = 0.1 * u(rng);
        sc.limits.delta_t = i % 3 == 0 ? 0.5 : 1.0;
        sc.limits.N = 50 + static_cast<int>(400 * u(rng));
        sc.energy.c1 = 1e-3 * u(rng) + 1e-5;
        sc.algo.eta = 1 + static_cast<int>(999 * u(rng));
        sc.init.speed = 30.0 * u(rng);
        const std::string text = serialize_scenario(sc);
        const Scenario back = parse_scenario_text(text);
        CAPTURE(text);
        CHECK(same_scenario(sc, back));
        CHECK(back.layout.w_E == sc.layout.w_E);
        CHECK(back.channel.sigma2 == sc.channel.sigma2);
        CHECK(back.limits.P_s_bar == sc.limits.P_s_bar);
        CHECK(serialize_scenario(back) == text);
    }
}

TEST_CASE("artifacts are complete and well formed") {
    Scenario sc;
    sc.algo.max_outer = 4;
    const SolveReport rep = run_proposed(sc);
    const fs::path dir = scratch("artifacts");
    write_artifacts(dir, sc, rep, {sc.label, "proposed", 3, 1.5});
    for (const char* f : {"trajectory.csv", "convergence.csv", "causality.csv", "summary.json"}) {
        REQUIRE(fs::exists(dir / f));
    }
    CHECK(line_count(dir / "trajectory.csv") == sc.limits.N + 1);
    CHECK(line_count(dir / "causality.csv") == sc.limits.N + 1);
    CHECK(line_count(dir / "convergence.csv") == static_cast<int>(rep.iterations.size()) + 1);

    std::ifstream in(dir / "trajectory.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == kTrajectoryHeader);
    while (std::getline(in, line)) {
        CHECK(std::count(line.begin(), line.end(), ',') == 14);
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            CHECK(std::isfinite(std::stod(cell)));
        }
    }
    const auto j = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(j["seed"] == 3);
    CHECK(j["iterations"] == 4);
    CHECK(j["stop_reason"] == "max_outer");
    CHECK(j["see_kbits_per_joule"].get<double>() == Catch::Approx(rep.see / 1e3).epsilon(1e-11));

    // Last causality row is the final slack in bits.
    const DesignEvaluation ev = evaluate_design(sc, rep.design);
    const auto rows = causality_rows(sc, ev);
    CHECK(rows.back()[3] == Catch::Approx(sc.channel.B * ev.causality.back()).epsilon(1e-9));
    CHECK(fmt12(1.0 / 3.0) == "0.333333333333");
    CHECK(fmt12(-0.0) == "0");
}

TEST_CASE("cli exit codes") {
    const fs::path dir = scratch("exit");
    const std::string out = " --out \"" + (dir / "o").string() + "\"";

    // malformed, unknown key, missing file, bad flag
    write_file(dir / "bad.txt", "label = x\nnot a pair\n");
    CHECK(run_cli("optimize --scenario \"" + (dir / "bad.txt").string() + "\"" + out) == 1);
    write_file(dir / "unknown.txt", "speed_of_light = 3e8\n");
    CHECK(run_cli("optimize --scenario \"" + (dir / "unknown.txt").string() + "\"" + out) == 1);
    CHECK(run_cli("optimize --scenario /nonexistent/file" + out) == 1);
    CHECK(run_cli("optimize --no-such-flag") == 1);
    CHECK(run_cli("") == 1);
    CHECK(run_cli("benchmark --benchmark nope" + out) == 1);
    CHECK(run_cli("benchmark --benchmark sfw --frozen-resources --max-outer 1" + out) == 1);

    // infeasible initial trajectory
    write_file(dir / "slow.txt", "v_max_m_per_s = 15\n");
    CHECK(run_cli("optimize --scenario \"" + (dir / "slow.txt").string() + "\"" + out) == 1);
    CHECK(run_cli("validate --scenario \"" + (dir / "slow.txt").string() + "\"") == 1);
    CHECK(run_cli("optimize --t-horizon 30" + out) == 1);

    // output path blocked by a regular file
    write_file(dir / "blocked", "x");
    CHECK(run_cli("optimize --max-outer 1 --out \"" + (dir / "blocked").string() + "\"") == 1);

    // iteration limit
    CHECK(run_cli("optimize --max-outer 2" + out) == 2);
    CHECK(fs::exists(dir / "o" / "summary.json"));

    // convergence: nothing to transmit
    write_file(dir / "silent.txt", "ps_bar_dbm = -inf\npr_bar_dbm = -inf\n");
    CHECK(run_cli("optimize --scenario \"" + (dir / "silent.txt").string() + "\"" + out) == 0);
    CHECK(run_cli("validate") == 0);
}

TEST_CASE("repeated cli runs write identical tables") {
    const fs::path dir = scratch("repeat");
    for (const char* sub : {"a", "b"}) {
        REQUIRE(run_cli("optimize --max-outer 3 --seed 5 --out \"" + (dir / sub).string() + "\"") == 2);
    }
    for (const char* f : {"trajectory.csv", "convergence.csv", "causality.csv", "scenario.txt"}) {
        CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
    }
}

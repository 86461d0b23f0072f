#include <catch_amalgamated.hpp>

#include "seeopt/benchmark.hpp"
#include "seeopt/init.hpp"
#include "seeopt/optimizer.hpp"
#include "seeopt/trajectory.hpp"

#include <cmath>

using namespace seeopt;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Scenario short_scenario(int T, int max_outer) {
    Scenario sc;
    sc.limits.N = T;
    sc.algo.max_outer = max_outer;
    return sc;
}

double hand_rate(double p, double d2, double gamma0) { return std::log2(1.0 + p * gamma0 / d2); }

}  // namespace

TEST_CASE("optimize: monotone trace and self-consistent report") {
    const Scenario sc = short_scenario(100, 25);
    std::vector<IterationRecord> seen;
    OptimizeOptions o;
    o.on_iteration = [&](const IterationRecord& r) { seen.push_back(r); };
    const SolveReport rep = optimize(sc, initial_design(sc, double_circular(sc.layout, sc.limits)), o);
    REQUIRE(rep.iterations.size() == seen.size());
    REQUIRE(!rep.iterations.empty());
    for (std::size_t i = 1; i < rep.iterations.size(); ++i) {
        const double prev = rep.iterations[i - 1].see;
        CHECK(rep.iterations[i].see >= prev - 10.0 * sc.algo.solver_tol * std::max(1.0, prev));
    }
    for (const IterationRecord& r : rep.iterations) {
        // the trajectory surrogate never exceeds the true objective
        CHECK(r.surrogate_see <= r.see * (1.0 + 1e-7) + sc.algo.solver_tol);
        CHECK(r.max_causality_violation <= 1e-6);
    }
    const DesignEvaluation ev = evaluate_design(sc, rep.design);
    CHECK_THAT(ev.see, WithinRel(rep.iterations.back().see, 1e-9));
    CHECK_THAT(rep.see, WithinRel(ev.see, 1e-12));
    CHECK(rep.see > rep.initial_see);
    const ValidationReport vr = validate_design(sc.layout, sc.channel, sc.limits, rep.design.trajectory,
                                                rep.design.schedule, rep.design.power);
    CHECK(vr.feasible());
    CHECK(rep.stop_reason == "max_outer");
    CHECK(!rep.converged);
}

TEST_CASE("optimize: trajectory stays inside the sanity envelope") {
    const Scenario sc = short_scenario(100, 10);
    const SolveReport rep = optimize(sc, initial_design(sc, double_circular(sc.layout, sc.limits)));
    const NodeLayout& L = sc.layout;
    const double pad = sc.limits.V_max * sc.limits.horizon() / 2.0;
    const double x0 = std::min({L.q_0.x(), L.q_F.x(), L.w_S.x(), L.w_D.x()}) - pad;
    const double x1 = std::max({L.q_0.x(), L.q_F.x(), L.w_S.x(), L.w_D.x()}) + pad;
    const double y0 = std::min({L.q_0.y(), L.q_F.y(), L.w_S.y(), L.w_D.y()}) - pad;
    const double y1 = std::max({L.q_0.y(), L.q_F.y(), L.w_S.y(), L.w_D.y()}) + pad;
    for (const Vec2& q : rep.design.trajectory.q) {
        CHECK(q.x() >= x0);
        CHECK(q.x() <= x1);
        CHECK(q.y() >= y0);
        CHECK(q.y() <= y1);
    }
}

TEST_CASE("optimize: zero power budgets") {
    Scenario sc = short_scenario(100, 50);
    sc.limits.P_s_bar = 0.0;
    sc.limits.P_r_bar = 0.0;
    const SolveReport rep = optimize(sc, initial_design(sc, double_circular(sc.layout, sc.limits)));
    CHECK(rep.converged);
    CHECK(rep.iterations.size() <= 2);
    for (const IterationRecord& r : rep.iterations) {
        CHECK(r.see == 0.0);
    }
}

TEST_CASE("optimize: errors") {
    Scenario sc = short_scenario(100, 5);
    Design bad = initial_design(sc, double_circular(sc.layout, sc.limits));
    bad.power.p_s.assign(sc.limits.N, 2.0 * sc.limits.P_s_bar);
    try {
        optimize(sc, bad);
        FAIL("expected InfeasibleInitialDesign");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InfeasibleInitialDesign);
    }
    Design wrong = initial_design(sc, double_circular(sc.layout, sc.limits));
    wrong.trajectory.a.pop_back();
    CHECK_THROWS_AS(optimize(sc, wrong), Error);
    sc.algo.epsilon = 0.0;
    CHECK_THROWS_AS(optimize(sc, initial_design(sc, double_circular(sc.layout, sc.limits))), Error);
}

TEST_CASE("optimize: identical runs are bit-identical") {
    const Scenario sc = short_scenario(100, 8);
    const Design init = initial_design(sc, double_circular(sc.layout, sc.limits));
    const SolveReport a = optimize(sc, init);
    const SolveReport b = optimize(sc, init);
    REQUIRE(a.iterations.size() == b.iterations.size());
    for (std::size_t i = 0; i < a.iterations.size(); ++i) {
        CHECK(a.iterations[i].see == b.iterations[i].see);
    }
    for (std::size_t k = 0; k < a.design.trajectory.q.size(); ++k) {
        CHECK(a.design.trajectory.q[k] == b.design.trajectory.q[k]);
    }
}

TEST_CASE("evaluate_design on a hand-built two-slot design") {
    Scenario sc;
    sc.limits.N = 2;
    sc.layout.w_E = {5000.0, 5000.0};
    Design d;
    const Vec2 v(20.0, 0.0);
    d.trajectory.q = {{-10.0, 0.0}, {10.0, 0.0}, {30.0, 0.0}};
    d.trajectory.v = {v, v, v};
    d.trajectory.a = {Vec2::Zero(), Vec2::Zero()};
    d.schedule.lambda = {1.0, 0.0};
    d.power.p_s = {0.02, 0.0};
    d.power.p_r = {0.0, 0.02};

    const double g0 = 1e-5 / 1e-14;
    const double H2 = 100.0 * 100.0;
    const auto d2 = [&](const Vec2& q, const Vec2& w) { return (q - w).squaredNorm() + H2; };
    const double r_sr = hand_rate(0.02, d2(d.trajectory.q[1], sc.layout.w_S), g0);
    // ground-to-ground S->E: K beta_0 d^-3
    const double dse = std::hypot(-750.0 - 5000.0, -5000.0);
    const double r_se = std::log2(1.0 + 0.02 * 1e-3 * g0 / (dse * dse * dse));
    const double r_rd = hand_rate(0.02, d2(d.trajectory.q[2], sc.layout.w_D), g0);
    const double r_re = hand_rate(0.02, d2(d.trajectory.q[2], sc.layout.w_E), g0);
    const double energy = 2.0 * (9.26e-4 * 8000.0 + 2250.0 / 20.0);
    const double see = 1e6 * (r_rd - r_re) / energy;

    const DesignEvaluation ev = evaluate_design(sc, d);
    CHECK_THAT(ev.energy, WithinRel(energy, 1e-12));
    CHECK_THAT(ev.rates.r_SR[0], WithinRel(r_sr, 1e-12));
    CHECK_THAT(ev.rates.r_RD[1], WithinRel(r_rd, 1e-12));
    CHECK_THAT(ev.rates.r_RE[1], WithinRel(r_re, 1e-12));
    CHECK_THAT(ev.see, WithinRel(see, 1e-12));
    CHECK_THAT(ev.secrecy_bits_sr, WithinRel(1e6 * (r_sr - r_se), 1e-9));
    CHECK_THAT(ev.causality[1], WithinRel((r_sr - r_se) - r_rd, 1e-9));

    Scenario other = sc;
    other.limits.N = 3;
    CHECK_THROWS_AS(evaluate_design(other, d), Error);
}

TEST_CASE("rounded schedule approaches the relaxed one as eta grows") {
    // A fractional schedule on a fixed feasible design.
    Scenario sc;
    const Trajectory t = double_circular(sc.layout, sc.limits);
    Design d = initial_design(sc, t);
    d.schedule.lambda.resize(sc.limits.N);
    for (int k = 0; k < sc.limits.N; ++k) {
        d.schedule.lambda[k] = k < 30 ? 1.0 : 0.5 + 0.37 * std::sin(0.7 * k);
    }
    const double relaxed = evaluate_design(sc, d).see;
    double prev_gap = std::numeric_limits<double>::infinity();
    for (int eta : {10, 100, 1000}) {
        Design r = d;
        r.schedule = round_schedule(d.schedule, eta).reconstructed();
        const double gap = std::abs(evaluate_design(sc, r).see - relaxed) / relaxed;
        CAPTURE(eta, gap);
        // each lambda moves by at most 1/(2 eta); the rates enter linearly in lambda
        CHECK(gap <= 1.0 / eta);
        CHECK(gap <= prev_gap + 1e-12);
        prev_gap = gap;
    }
}

TEST_CASE("trajectory step: fixed point and ascent") {
    const Scenario sc = short_scenario(100, 1);
    Design d = initial_design(sc, double_circular(sc.layout, sc.limits));
    const PowerCoefficients h = power_coefficients(sc.layout, sc.channel, d.trajectory.q);
    d.schedule = solve_scheduling(scheduling_coefficients(h, d.power)).schedule;
    const double before = evaluate_design(sc, d).see;

    TrajectoryResult tr = solve_trajectory(d.schedule, d.power, TaylorPoint::at(sc.layout, d.trajectory, d.power),
                                           sc.layout, sc.channel, sc.limits, sc.energy, sc.algo);
    REQUIRE(tr.ok);
    CHECK(tr.surrogate_see >= tr.surrogate_see_start - 1e-6 * std::abs(tr.surrogate_see_start));
    Design next = d;
    next.trajectory = tr.trajectory;
    const DesignEvaluation ev = evaluate_design(sc, next);
    CHECK(ev.see >= before);
    CHECK(ev.see >= tr.surrogate_see * (1.0 - 1e-7));
    const ValidationReport vr = validate_design(sc.layout, sc.channel, sc.limits, next.trajectory, Schedule{}, next.power);
    CHECK(vr.feasible());

    // Iterate the trajectory step alone; the surrogate gain shrinks towards a fixed point.
    double gain = 0.0;
    for (int i = 0; i < 60; ++i) {
        const TrajectoryResult again = solve_trajectory(
            next.schedule, next.power, TaylorPoint::at(sc.layout, next.trajectory, next.power), sc.layout, sc.channel,
            sc.limits, sc.energy, sc.algo);
        REQUIRE(again.ok);
        gain = (again.surrogate_see - again.surrogate_see_start) / again.surrogate_see_start;
        CHECK(gain >= -1e-6);
        next.trajectory = again.trajectory;
    }
    CHECK(gain < 1e-3);
}

TEST_CASE("trajectory step on a closed loop") {
    // q_0 = q_F near D: the path must close on itself.
    Scenario sc = short_scenario(60, 1);
    sc.layout.q_0 = {600.0, 0.0};
    sc.layout.q_F = {600.0, 0.0};
    Trajectory t;
    const double V = 20.0, dt = 1.0;
    const int N = sc.limits.N;
    const double th = 2.0 * std::numbers::pi / N;
    t.q.push_back(sc.layout.q_0);
    t.v.push_back({V, 0.0});
    for (int k = 1; k <= N; ++k) {
        const Vec2 v1(V * std::cos(th * k), V * std::sin(th * k));
        const Vec2 a = (v1 - t.v.back()) / dt;
        t.q.push_back(t.q.back() + t.v.back() * dt + 0.5 * a * dt * dt);
        t.v.push_back(v1);
        t.a.push_back(a);
    }
    t.q.back() = sc.layout.q_F;
    Design d = initial_design(sc, t);
    REQUIRE(validate_design(sc.layout, sc.channel, sc.limits, t, Schedule{}, d.power).feasible());
    const PowerCoefficients h = power_coefficients(sc.layout, sc.channel, d.trajectory.q);
    d.schedule = solve_scheduling(scheduling_coefficients(h, d.power)).schedule;
    const double before = evaluate_design(sc, d).see;
    REQUIRE(before > 0.0);
    const TrajectoryResult tr = solve_trajectory(d.schedule, d.power, TaylorPoint::at(sc.layout, t, d.power),
                                                 sc.layout, sc.channel, sc.limits, sc.energy, sc.algo);
    INFO(convex::to_string(tr.solver_status) << " " << to_string(tr.dinkelbach_status));
    REQUIRE(tr.ok);
    Design next = d;
    next.trajectory = tr.trajectory;
    CHECK(validate_design(sc.layout, sc.channel, sc.limits, next.trajectory, Schedule{}, next.power).feasible());
    CHECK((next.trajectory.q.back() - sc.layout.q_F).norm() < 1e-6);
    CHECK(evaluate_design(sc, next).see >= before * (1.0 - 1e-7));

    // Away from D nothing is worth forwarding; the step keeps the expansion point.
    Scenario far = sc;
    far.layout.q_0 = far.layout.q_F = {-600.0, 0.0};
    Trajectory tf = t;
    for (Vec2& q : tf.q) {
        q += far.layout.q_0 - sc.layout.q_0;
    }
    Design df = initial_design(far, tf);
    df.schedule = solve_scheduling(scheduling_coefficients(
                                       power_coefficients(far.layout, far.channel, tf.q), df.power))
                      .schedule;
    const TrajectoryResult still = solve_trajectory(df.schedule, df.power, TaylorPoint::at(far.layout, tf, df.power),
                                                    far.layout, far.channel, far.limits, far.energy, far.algo);
    REQUIRE(still.ok);
    CHECK(still.surrogate_see == 0.0);
    CHECK(still.trajectory.q == tf.q);
}

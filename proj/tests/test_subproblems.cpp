#include <catch_amalgamated.hpp>

#include "seeopt/dinkelbach.hpp"
#include "seeopt/estimators.hpp"
#include "seeopt/power.hpp"
#include "seeopt/scheduling.hpp"

#include "oracles.hpp"

#include <cmath>
#include <limits>
#include <random>

using namespace seeopt;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("log2 gain over-estimator") {
    const AffineBound b = log2_gain_upper(1.0, 1.0);
    CHECK_THAT(b(1.0), WithinRel(1.0, 1e-15));
    CHECK_THAT(b(3.0), WithinRel(1.0 + 2.0 / (2.0 * std::numbers::ln2), 1e-12));
    CHECK_THAT(b(3.0), WithinAbs(2.443, 1e-3));

    std::mt19937 rng(1);
    std::uniform_real_distribution<double> lh(-4, 6), lp(-6, 0);
    for (int i = 0; i < 20000; ++i) {
        const double h = std::pow(10.0, lh(rng));
        const double pm = std::pow(10.0, lp(rng));
        const double p = std::pow(10.0, lp(rng));
        const AffineBound u = log2_gain_upper(h, pm);
        const double f = std::log2(1.0 + h * p);
        CHECK(u(p) >= f - 1e-12 * std::max(1.0, f));
        CHECK_THAT(u(pm), WithinRel(std::log2(1.0 + h * pm), 1e-9));
    }
}

TEST_CASE("log2 inverse-ratio under-estimator") {
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> lu(4, 7), lc(2, 9);
    for (int i = 0; i < 20000; ++i) {
        const double um = std::pow(10.0, lu(rng));
        const double u = std::pow(10.0, lu(rng));
        const double c = std::pow(10.0, lc(rng));
        const AffineBound b = log2_inv_ratio_lower(c, um);
        const double f = std::log2(1.0 + c / u);
        CHECK(b(u) <= f + 1e-12 * std::max(1.0, f));
        CHECK_THAT(b(um), WithinRel(std::log2(1.0 + c / um), 1e-9));
    }
}

TEST_CASE("planar quadratic under-estimators") {
    const PlanarQuadLower v = speed_squared_lower(Vec2(10, 0));
    CHECK_THAT(v(Vec2(0, 10)), WithinAbs(-100.0, 1e-12));

    NodeLayout lay;
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> U(-2000, 2000), V(-40, 40);
    for (int i = 0; i < 20000; ++i) {
        const Vec2 qm(U(rng), U(rng)), q(U(rng), U(rng));
        const PlanarQuadLower d = squared_distance_lower(qm, lay.w_E, lay.H);
        CHECK(d(q) <= squared_distance(q, lay.w_E, lay.H) * (1.0 + 1e-12));
        CHECK_THAT(d(qm), WithinRel(squared_distance(qm, lay.w_E, lay.H), 1e-12));

        const Vec2 vm(V(rng), V(rng)), w(V(rng), V(rng));
        const PlanarQuadLower s = speed_squared_lower(vm);
        CHECK(s(w) <= w.squaredNorm() + 1e-9);
        CHECK_THAT(s(vm), WithinRel(vm.squaredNorm(), 1e-12));
    }
}

TEST_CASE("dinkelbach on a one-dimensional ratio") {
    // max (2x + 1) / (x^2 + 1) on [0, 3]; the parametric problem is a concave quadratic.
    auto solve = [](double mu) -> std::optional<FractionalPoint<double>> {
        double x = mu > 0.0 ? 1.0 / mu : 3.0;
        x = std::clamp(x, 0.0, 3.0);
        return FractionalPoint<double>{x, 2.0 * x + 1.0, x * x + 1.0};
    };
    const auto r = dinkelbach<double>(solve, 0.0, 1e-12, 50);
    REQUIRE(r.status == DinkelbachStatus::Converged);

    const double best = oracle::ratio_grid_max();
    CHECK_THAT(r.mu, WithinAbs(best, 1e-5));
    CHECK_THAT(r.solution->x, WithinAbs((std::sqrt(5.0) - 1.0) / 2.0, 1e-5));
    CHECK_THAT(r.mu, WithinAbs((1.0 + std::sqrt(5.0)) / 2.0, 1e-9));
    for (std::size_t k = 1; k < r.mu_trace.size(); ++k) {
        CHECK(r.mu_trace[k] >= r.mu_trace[k - 1]);
        CHECK(r.F_trace[k] <= r.F_trace[k - 1]);
    }
    CHECK(r.F_trace.back() <= 1e-12 * r.solution->denominator);
}

TEST_CASE("dinkelbach edge cases") {
    auto constant = [](double) { return std::optional<FractionalPoint<int>>{FractionalPoint<int>{0, 6.0, 4.0}}; };
    const auto r = dinkelbach<int>(constant, 1.5, 1e-9, 10);
    CHECK(r.status == DinkelbachStatus::Converged);
    CHECK(r.iterations == 1);
    CHECK(r.mu == 1.5);

    auto bad = [](double) { return std::optional<FractionalPoint<int>>{FractionalPoint<int>{0, 1.0, 0.0}}; };
    CHECK(dinkelbach<int>(bad, 0.0, 1e-9, 10).status == DinkelbachStatus::NonpositiveDenominator);

    auto slow = [](double mu) {
        return std::optional<FractionalPoint<int>>{FractionalPoint<int>{0, mu + 1.0, 1.0}};
    };
    CHECK(dinkelbach<int>(slow, 0.0, 1e-9, 5).status == DinkelbachStatus::MaxIter);
}

TEST_CASE("scheduling LP dominates binary schedules") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> U(0, 1);
    for (int draw = 0; draw < 50; ++draw) {
        SchedulingCoefficients c;
        for (int k = 0; k < 6; ++k) {
            c.forward.push_back(4.0 * U(rng));
            c.gain.push_back(c.forward.back() * (1.2 * U(rng) - 0.2));
            c.secrecy.push_back(4.0 * U(rng));
        }
        const SchedulingResult r = solve_scheduling(c);
        REQUIRE(r.status == convex::Status::Optimal);
        CHECK(r.objective >= oracle::best_binary_schedule(c) - 1e-7);
        double cum = 0.0;
        for (int k = 0; k < 6; ++k) {
            CHECK(r.schedule.lambda[k] >= 0.0);
            CHECK(r.schedule.lambda[k] <= 1.0);
            if (k > 0) cum += r.schedule.lambda[k - 1] * c.secrecy[k - 1];
            cum -= (1.0 - r.schedule.lambda[k]) * c.forward[k];
            CHECK(cum >= -1e-7);
        }
    }
}

TEST_CASE("scheduling corner cases") {
    SchedulingCoefficients c;
    c.forward = {1, 2, 3, 4};
    c.gain = {-1, -0.5, 0.0, -2};
    c.secrecy = {1, 1, 1, 1};
    SchedulingResult r = solve_scheduling(c);
    REQUIRE(r.status == convex::Status::Optimal);
    for (double l : r.schedule.lambda) CHECK(l == 1.0);
    CHECK(r.objective == 0.0);

    c.gain = {1, 1, 1, 1};
    c.secrecy = {0, 0, 0, 0};
    r = solve_scheduling(c);
    REQUIRE(r.status == convex::Status::Optimal);
    for (double l : r.schedule.lambda) CHECK_THAT(l, WithinAbs(1.0, 1e-7));

    // Two slots: receive, then forward as much as was received.
    c.forward = {2, 2};
    c.gain = {1, 1};
    c.secrecy = {1, 0};
    r = solve_scheduling(c);
    REQUIRE(r.status == convex::Status::Optimal);
    CHECK(r.schedule.lambda[0] == 1.0);
    CHECK_THAT(r.schedule.lambda[1], WithinAbs(0.5, 1e-7));
}

TEST_CASE("sub-slot rounding") {
    const RoundedSchedule a = round_schedule(Schedule{{0.71, 0.0, 0.005, 1.0, 0.333}}, 100);
    CHECK(a.Lambda1 == std::vector<int>{71, 0, 1, 100, 33});
    CHECK(a.Lambda2 == std::vector<int>{29, 100, 99, 0, 67});

    std::mt19937 rng(4);
    std::uniform_real_distribution<double> U(0, 1);
    Schedule s;
    for (int i = 0; i < 1000; ++i) s.lambda.push_back(U(rng));
    for (int eta : {1, 10, 100, 1000}) {
        const RoundedSchedule r = round_schedule(s, eta);
        const Schedule back = r.reconstructed();
        for (int i = 0; i < 1000; ++i) {
            CHECK(r.Lambda1[i] + r.Lambda2[i] == eta);
            CHECK(std::abs(back.lambda[i] - s.lambda[i]) <= 0.5 / eta + 1e-12);
        }
    }
    CHECK_THROWS_AS(round_schedule(s, 0), Error);
}

namespace {

PowerCoefficients two_slot_gains() {
    PowerCoefficients h;
    h.h_rd = {2e3, 8e3};
    h.h_re = {5e2, 1e3};
    h.h_sr = {6e3, 1e3};
    h.h_se = 80.0;
    return h;
}

TaylorPoint power_point(const std::vector<double>& ps, const std::vector<double>& pr) {
    TaylorPoint tp;
    tp.p_s_ref = ps;
    tp.p_r_ref = pr;
    return tp;
}

}  // namespace

TEST_CASE("two-slot power allocation against a grid") {
    const PowerCoefficients h = two_slot_gains();
    UavLimits lim;
    lim.N = 2;
    const Schedule s{{1.0, 0.0}};
    const TaylorPoint tp = power_point({0.01, 0.01}, {0.01, 0.01});
    const PowerResult r = solve_power(s, tp, h, lim);
    REQUIRE(r.status == convex::Status::Optimal);

    // With lambda = (1, 0) only p_s[0] and p_r[1] matter.
    const double tot = 2 * lim.P_s_bar;
    const double best = oracle::two_slot_power_grid(h, power_over_estimators(tp, h), tot).value;
    CHECK(r.surrogate >= best - 1e-9);
    CHECK_THAT(r.surrogate, WithinAbs(best, 1e-3));
    CHECK(r.power.p_s[0] + r.power.p_s[1] <= tot * (1 + 1e-9));
    CHECK(r.power.p_r[0] + r.power.p_r[1] <= tot * (1 + 1e-9));
    CHECK(r.power.p_r[0] == 0.0);
}

TEST_CASE("power ascent and fixed point") {
    std::mt19937 rng(8);
    std::uniform_real_distribution<double> U(0, 1);
    const int n = 12;
    PowerCoefficients h;
    for (int k = 0; k < n; ++k) {
        h.h_rd.push_back(1e3 + 9e3 * U(rng));
        h.h_re.push_back(1e2 + 2e3 * U(rng));
        h.h_sr.push_back(1e3 + 9e3 * U(rng));
    }
    h.h_se = 77.0;
    Schedule s;
    for (int k = 0; k < n; ++k) s.lambda.push_back(k < 4 ? 1.0 : (k % 3 == 0 ? 0.4 : 0.0));
    UavLimits lim;
    lim.N = n;

    // The uniform start is not causal; ascent is measured from the first solve on.
    PowerAllocation p{std::vector<double>(n, lim.P_s_bar), std::vector<double>(n, lim.P_r_bar)};
    const PowerResult first = solve_power(s, power_point(p.p_s, p.p_r), h, lim);
    REQUIRE(first.status == convex::Status::Optimal);
    p = first.power;
    double prev = power_objective(s, h, p);
    for (int it = 0; it < 40; ++it) {
        const PowerResult r = solve_power(s, power_point(p.p_s, p.p_r), h, lim);
        REQUIRE(r.status == convex::Status::Optimal);
        const double f = power_objective(s, h, r.power);
        CHECK(f >= prev - 1e-7);
        CHECK(f >= r.surrogate - 1e-7);
        CHECK(r.surrogate >= prev - 1e-7);
        prev = f;
        p = r.power;
    }
    const PowerResult again = solve_power(s, power_point(p.p_s, p.p_r), h, lim);
    REQUIRE(again.status == convex::Status::Optimal);
    CHECK_THAT(power_objective(s, h, again.power), WithinAbs(prev, 1e-6));
}

TEST_CASE("no source power means nothing to forward") {
    const PowerCoefficients h = two_slot_gains();
    UavLimits lim;
    lim.N = 2;
    lim.P_s_bar = 0.0;
    const PowerResult r = solve_power(Schedule{{1.0, 0.0}}, power_point({0.0, 0.0}, {0.01, 0.01}), h, lim);
    REQUIRE(r.status == convex::Status::Optimal);
    CHECK(r.power.p_s[0] == 0.0);
    CHECK(r.power.p_s[1] == 0.0);
    CHECK(r.surrogate <= 1e-7);
    CHECK_THAT(power_objective(Schedule{{1.0, 0.0}}, h, r.power), WithinAbs(0.0, 1e-7));
}

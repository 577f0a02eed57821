#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "blflow/errors.hpp"
#include "blflow/holonomy.hpp"

using namespace blflow;

namespace {
FlowParams defaults() {
    FlowParams P;
    P.validate();
    return P;
}

// fixed-step composite Simpson as an independent quadrature oracle
double simpson_fixed(const std::function<double(double)>& g, double a, double b, int n) {
    double h = (b - a) / n;
    double acc = g(a) + g(b);
    for (int k = 1; k < n; ++k) acc += g(a + k * h) * (k % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}
} // namespace

TEST_CASE("beta band integral matches an independent fixed-step quadrature") {
    auto P = defaults();
    for (BumpProfile b : {BumpProfile::ExpSmooth, BumpProfile::PolySmooth}) {
        P.bump_profile = b;
        double i_adaptive = beta_band_integral(P);
        auto g = [&](double u) { return eval_beta(u, P) / u; };
        double i_fixed = simpson_fixed(g, P.beta_lo, P.beta_hi, 100000);
        CHECK(i_adaptive == doctest::Approx(i_fixed).epsilon(1e-10));
        CHECK(i_adaptive > 0.0);
    }
    FlowParams Z = P;
    Z.beta_scale = 0.0;
    CHECK(beta_band_integral(Z) == 0.0);
    FlowParams W = defaults();
    FlowParams W2 = defaults();
    W2.beta_scale = 2.0;
    CHECK(beta_band_integral(W2) == 2.0 * beta_band_integral(W));
}

TEST_CASE("deviation vanishes at 0 and is odd") {
    auto P = defaults();
    CHECK(std::fabs(deviation_f(0.0, P)) <= 1e-10);
    for (double w : {0.2, 0.45, 0.8, 1.3, 1.7, 1.95}) {
        CHECK(std::fabs(deviation_f(-w, P) + deviation_f(w, P)) <= 10 * P.ode_tol);
    }
}

TEST_CASE("deviation is two-antiperiodic and four-periodic") {
    auto P = defaults();
    for (double w : {0.3, 0.7, 1.2, 1.6}) {
        double f = deviation_f(w, P);
        CHECK(std::fabs(deviation_f(w + 2.0, P) + f) <= 10 * P.ode_tol);
        // (w+4)-4 differs from w by <=1 ulp, so periodicity holds to rounding
        CHECK(deviation_f(w + 4.0, P) == doctest::Approx(f).epsilon(1e-12));
    }
}

TEST_CASE("band-only orbits integrate to the product formula") {
    // orbits entering far from the saddles never meet the alpha support, so
    // the displacement is exactly the band integral times t*sin(pi*omega/2)
    auto P = defaults();
    double ib = beta_band_integral(P);
    P.orientation = Orientation::RawField;
    for (double w : {0.05, 0.2, 0.4, 0.6, 1.4, 1.6, 1.9}) {
        double expect = -P.t * std::sin(0.5 * M_PI * w) * ib;
        CHECK(deviation_f(w, P) == doctest::Approx(expect).epsilon(0).scale(1).epsilon(1e-9));
        CHECK(std::fabs(deviation_f(w, P) - expect) <= 10 * P.ode_tol);
    }
    P.orientation = Orientation::PositiveDeviation;
    for (double w : {0.2, 0.6, 1.6}) {
        double expect = P.t * std::sin(0.5 * M_PI * w) * ib;
        CHECK(std::fabs(deviation_f(w, P) - expect) <= 10 * P.ode_tol);
    }
}

TEST_CASE("deviation is nonnegative on (0,2) under the shipped orientation") {
    auto P = defaults();
    for (int k = 1; k < 40; ++k) {
        double w = 2.0 * k / 40.0;
        if (odd_distance(w) < 1e-3) continue;
        CHECK(deviation_f(w, P) >= -10 * P.ode_tol);
    }
    // near the saddle the alpha term grows but stays positive
    CHECK(deviation_f(0.99, P) > deviation_f(0.9, P));
    CHECK(deviation_f(0.99, P) > 0.3);
}

TEST_CASE("deviation rejects separatrix-adjacent arguments") {
    auto P = defaults();
    CHECK_THROWS_AS(deviation_f(1.0, P), SeparatrixError);
    CHECK_THROWS_AS(deviation_f(-1.0, P), SeparatrixError);
    CHECK_THROWS_AS(deviation_f(3.0, P), SeparatrixError);
    CHECK_THROWS_AS(deviation_f(1.0 + 0.5 * P.event_tol, P), SeparatrixError);
}

TEST_CASE("deviation table interpolates the function") {
    auto P = defaults();
    DeviationTable tab(P, 1.0 / 256, 1e-3);
    CHECK(tab.params_hash() == P.hash());
    CHECK(tab.grid().size() == tab.values().size());
    CHECK(tab.grid().size() > 1000);
    // node values are exact, mid-node values within the curvature bound
    for (double w : {0.125, 0.5, 1.5, -0.75}) {
        CHECK(tab(w) == doctest::Approx(deviation_f(w, P)).epsilon(1e-9));
    }
    for (double w : {0.1271, 0.5031, 1.7719}) {
        CHECK(std::fabs(tab(w) - deviation_f(w, P)) <= 1e-4);
    }
    // 4-periodic lookup is bit-exact
    CHECK(tab(0.40625 + 4.0) == tab(0.40625));
    CHECK(tab(0.40625 - 4.0) == tab(0.40625));
    CHECK_THROWS_AS(tab(1.0), SeparatrixError);
    CHECK_THROWS_AS(tab(0.9999), SeparatrixError);
    CHECK_THROWS_AS(tab(-1.0001), SeparatrixError);
}

TEST_CASE("table hash tracks the generating parameters") {
    auto P = defaults();
    FlowParams Q = P;
    Q.t = 14.0;
    DeviationTable tp(P, 1.0 / 32);
    DeviationTable tq(Q, 1.0 / 32);
    CHECK(tp.params_hash() != tq.params_hash());
}

TEST_CASE("gluing map formula, order, and tags") {
    using Coord = std::pair<double, double>;
    CHECK(glue_A(Coord{1.0, 2.0}) == Coord{2.0, -1.0});
    CHECK(glue_A_inv(Coord{1.0, 2.0}) == Coord{-2.0, 1.0});
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int k = 0; k < 100; ++k) {
        Coord c{u(rng), u(rng)};
        auto back = glue_A_inv(glue_A(c));
        CHECK(back.first == c.first);
        CHECK(back.second == c.second);
        auto four = glue_A(glue_A(glue_A(glue_A(c))));
        CHECK(four.first == c.first);
        CHECK(four.second == c.second);
    }
    TorusCoord t{0.3, 0.7, 2, Boundary::Outer};
    TorusCoord im = glue_A(t);
    CHECK(im.boundary == Boundary::Disc);
    CHECK(im.omega == 0.7);
    CHECK(im.theta == -0.3);
    TorusCoord re = glue_A_inv(im);
    CHECK(re.boundary == Boundary::Outer);
    CHECK(re.torus_index == 3);
    CHECK(re.omega == 0.3);
    CHECK(re.theta == 0.7);
    CHECK_THROWS_AS(glue_A(im), WrongBoundary);
    CHECK_THROWS_AS(glue_A_inv(t), WrongBoundary);
    TorusCoord last{0.1, 0.2, 5, Boundary::Disc};
    CHECK_THROWS_AS(glue_A_inv(last), WrongBoundary);
}

TEST_CASE("closed forms equal the iterated crossing map for odd test functions") {
    auto f = [](double w) { return 0.3 * std::sin(0.5 * M_PI * w) + 0.07 * w * std::exp(-w * w); };
    for (int i = 1; i <= 4; ++i) {
        for (double w : {-1.7, -0.4, 0.0, 0.23, 0.9, 1.5}) {
            auto a = boundary_holonomy_closed_form(i, w, f);
            auto b = boundary_holonomy_iterated(i, w, f);
            CHECK(a.first == doctest::Approx(b.first).epsilon(1e-13));
            CHECK(a.second == doctest::Approx(b.second).epsilon(1e-13));
        }
    }
    // explicit first and second composites
    double w = 0.37;
    auto h1 = boundary_holonomy_closed_form(1, w, f);
    CHECK(h1.first == -f(w));
    CHECK(h1.second == w);
    auto h2 = boundary_holonomy_closed_form(2, w, f);
    CHECK(h2.first == doctest::Approx(-w + f(f(w))).epsilon(1e-15));
    CHECK(h2.second == -f(w));
    // all deviations vanish at 0
    auto h4 = boundary_holonomy_closed_form(4, 0.0, f);
    CHECK(h4.first == 0.0);
    CHECK(h4.second == 0.0);
}

TEST_CASE("flow trace across copies matches the closed forms") {
    auto P = defaults();
    std::vector<double> grid;
    for (int k = 0; k < 12; ++k) grid.push_back(-1.9 + 3.8 * k / 11.0);
    for (int i = 1; i <= 4; ++i) {
        auto rep = verify_holonomy_against_flow(i, grid, P);
        CHECK(rep.copies == i);
        CHECK(rep.rows.size() == grid.size());
        CHECK(rep.max_err <= 10 * P.ode_tol);
        int included = 0;
        for (const auto& r : rep.rows)
            if (!r.excluded) ++included;
        CHECK(included >= 10);
    }
}

TEST_CASE("omega zero row verifies exactly") {
    auto P = defaults();
    auto rep = verify_holonomy_against_flow(4, {0.0}, P);
    REQUIRE(!rep.rows[0].excluded);
    CHECK(rep.rows[0].err <= 1e-9);
}

TEST_CASE("grid rows at odd integers are excluded, not failed") {
    auto P = defaults();
    auto rep = verify_holonomy_against_flow(1, {0.5, 1.0, 1.5}, P);
    CHECK(rep.excluded_count == 1);
    CHECK(rep.rows[1].excluded);
    CHECK(!rep.rows[0].excluded);
    CHECK(rep.max_err <= 10 * P.ode_tol);
}

TEST_CASE("crossing integration carries theta offsets through unchanged") {
    auto P = defaults();
    CrossingResult a = integrate_crossing(0.6, 0.0, P);
    CrossingResult b = integrate_crossing(0.6, 2.5, P);
    CHECK(b.theta_exit - 2.5 == doctest::Approx(a.theta_exit).epsilon(1e-10));
    CHECK(a.time == doctest::Approx(b.time).epsilon(1e-10));
    CHECK(a.omega_exit == doctest::Approx(0.6).epsilon(1e-9));
}

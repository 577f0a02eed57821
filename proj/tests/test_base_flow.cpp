#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "blflow/base_flow.hpp"
#include "blflow/errors.hpp"
#include "blflow/ode.hpp"

using namespace blflow;

namespace {
FlowParams defaults() {
    FlowParams P;
    P.validate();
    return P;
}
} // namespace

TEST_CASE("phi symmetries hold to machine precision on a 1000-point grid") {
    for (PhiVariant v : {PhiVariant::SinWave, PhiVariant::Piecewise}) {
        for (int i = 0; i < 1000; ++i) {
            double x = -5.0 + 10.0 * i / 999.0;
            CHECK(std::fabs(phi(x + 1.0, v) + phi(x, v)) <= 1e-14);
            CHECK(std::fabs(phi(-x, v) + phi(x, v)) <= 1e-14);
            CHECK(std::fabs(phi(x + 2.0, v) - phi(x, v)) <= 1e-14);
            CHECK(std::fabs(phi(x, v)) <= 1.0);
        }
        // exact zeros at the integers
        for (int k = -4; k <= 4; ++k) CHECK(phi(double(k), v) == 0.0);
        // positive between 0 and 1 (drives x toward even integers)
        for (int i = 1; i < 100; ++i) CHECK(phi(i / 100.0, v) > 0.0);
    }
}

TEST_CASE("base field vanishes exactly at the saddles and nowhere else in-domain") {
    auto P = defaults();
    for (int k = -2; k <= 2; ++k) {
        double dx, dy;
        eval_base_field({2.0 * k + 1.0, 0.0}, P, dx, dy);
        CHECK(dx == 0.0);
        CHECK(dy == 0.0);
    }
    double dx, dy;
    eval_base_field({0.3, 0.0}, P, dx, dy);
    CHECK(dx != 0.0);
}

TEST_CASE("saddle linearization has eigenvalues {-phi'(1), -1} = {pi/2, -1}") {
    auto P = defaults();
    double h = 1e-6;
    double dxp, dyp, dxm, dym;
    eval_base_field({1.0 + h, 0.0}, P, dxp, dyp);
    eval_base_field({1.0 - h, 0.0}, P, dxm, dym);
    double j11 = (dxp - dxm) / (2 * h); // d(dx)/dx
    eval_base_field({1.0, h}, P, dxp, dyp);
    eval_base_field({1.0, -h}, P, dxm, dym);
    double j22 = (dyp - dym) / (2 * h);
    CHECK(j11 == doctest::Approx(M_PI / 2).epsilon(1e-6));
    CHECK(j22 == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("alpha plateau values and alternation") {
    auto P = defaults();
    P.orientation = Orientation::RawField;
    CHECK(eval_alpha(1.0, 0.0, P) == 1.0);
    CHECK(eval_alpha(3.0, 0.0, P) == -1.0);
    CHECK(eval_alpha(-1.0, 0.0, P) == -1.0);
    CHECK(eval_alpha(1.0 + P.r_alpha_inner * 0.9, 0.0, P) == 1.0);
    CHECK(eval_alpha(1.0 + 0.34, 0.0, P) == 0.0);
    // antisymmetry under x -> x+2 (one-ulp argument noise passes through the
    // falloff slope, so this is not bit-exact)
    for (double x : {0.8, 1.0, 1.17, 1.3})
        for (double y : {-0.2, 0.0, 0.05})
            CHECK(eval_alpha(x + 2.0, y, P) == doctest::Approx(-eval_alpha(x, y, P)).epsilon(1e-12));
    // theta field at the saddles follows -(alpha) in the raw orientation
    CHECK(eval_theta_field({1.0, 0.0}, P) == doctest::Approx(-1.0));
    CHECK(eval_theta_field({3.0, 0.0}, P) == doctest::Approx(1.0));
    P.orientation = Orientation::PositiveDeviation;
    CHECK(eval_theta_field({1.0, 0.0}, P) == doctest::Approx(1.0));
}

TEST_CASE("beta is a bump supported exactly on (1/2, 2/3)") {
    auto P = defaults();
    for (BumpProfile b : {BumpProfile::ExpSmooth, BumpProfile::PolySmooth}) {
        P.bump_profile = b;
        CHECK(eval_beta(0.5, P) == 0.0);
        CHECK(eval_beta(2.0 / 3, P) == 0.0);
        CHECK(eval_beta(0.4, P) == 0.0);
        CHECK(eval_beta(0.75, P) == 0.0);
        double mid = 0.5 * (P.beta_lo + P.beta_hi);
        // exp profile peaks at 1; the poly profile's lower peak compensates
        // for its wider effective support so both band integrals agree
        double peak = (b == BumpProfile::ExpSmooth) ? 1.0 : 0.3;
        CHECK(eval_beta(mid, P) == doctest::Approx(peak));
        // exp(-1/..) legitimately underflows to 0 within ~1% of the support
        // edges, so strict positivity is only asserted away from them
        for (int i = 2; i < 39; ++i) {
            double u = P.beta_lo + (P.beta_hi - P.beta_lo) * i / 40.0;
            CHECK(eval_beta(u, P) > 0.0);
            CHECK(eval_beta(u, P) <= 1.0);
        }
        CHECK(eval_beta(P.beta_lo + (P.beta_hi - P.beta_lo) / 40.0, P) >= 0.0);
        // doubling beta_scale doubles values exactly
        FlowParams Q = P;
        Q.beta_scale = 2.0;
        CHECK(eval_beta(0.61, Q) == 2.0 * eval_beta(0.61, P));
    }
}

TEST_CASE("omega boundary and axis conventions") {
    auto P = defaults();
    CHECK(eval_omega({0.37, 1.0}, P) == 0.37);
    CHECK(eval_omega({0.37, -1.0}, P) == 2.0 - 0.37);
    CHECK(eval_omega({0.5, 0.0}, P) == 1.0);
    CHECK(eval_omega({1.6, 0.0}, P) == 1.0);
    CHECK(eval_omega({2.5, 0.0}, P) == -1.0);
    CHECK(eval_omega({3.7, 0.0}, P) == -1.0);
    CHECK(eval_omega({-1.5, 0.0}, P) == -1.0);
    CHECK(eval_omega({-2.5, 0.0}, P) == 1.0);
    // vertical separatrix pieces keep the saddle value
    CHECK(eval_omega({1.0, 0.5}, P) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(eval_omega({1.0, -0.5}, P) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("omega is invariant along orbits") {
    auto P = defaults();
    for (double w : {0.31, 0.9, 1.44, 2.6, 3.83}) {
        BandEventSpec spec;
        spec.max_time = 50.0;
        auto seg = integrate_band({w, 1.0, 0.0}, P, spec);
        REQUIRE(seg.terminal == TerminalEvent::DiscBoundary);
        int checked = 0;
        for (std::size_t i = 0; i < seg.samples.size(); i += std::max<std::size_t>(1, seg.samples.size() / 8)) {
            const auto& s = seg.samples[i];
            if (s.y == 0.0) continue;
            double om = eval_omega({s.x, s.y}, P);
            CHECK(std::fabs(om - w) <= 10 * P.ode_tol);
            ++checked;
        }
        CHECK(checked >= 3);
    }
}

TEST_CASE("integrator reproduces the exact scalar decay law") {
    // y' = -y from 2/3 to 1/2 takes exactly log(4/3)
    auto P = defaults();
    BandEventSpec spec;
    spec.y_level = 0.5;
    spec.stop_at_disc = false;
    spec.max_time = 10.0;
    auto seg = integrate_band({0.2, 2.0 / 3, 0.0}, P, spec);
    REQUIRE(seg.terminal == TerminalEvent::YLevel);
    CHECK(seg.end_time == doctest::Approx(std::log(4.0 / 3)).epsilon(1e-10));
    CHECK(seg.end.y == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("integrator error scales with the requested tolerance") {
    // exact solution of the y-component lets us measure true error
    double errs[3];
    int idx = 0;
    for (double tol : {1e-6, 1e-8, 1e-10}) {
        FlowParams P;
        P.ode_tol = tol;
        BandEventSpec spec;
        spec.y_level = 0.1;
        spec.stop_at_disc = false;
        spec.max_time = 10.0;
        auto seg = integrate_band({0.2, 1.0, 0.0}, P, spec);
        double y_exact = std::exp(-seg.end_time);
        errs[idx++] = std::fabs(seg.end.y - y_exact);
        CHECK(std::fabs(seg.end.y - y_exact) <= 50 * tol);
    }
    CHECK(errs[2] <= errs[0] + 1e-15);
}

TEST_CASE("orbit samples satisfy a residual bound") {
    auto P = defaults();
    BandEventSpec spec;
    spec.max_time = 20.0;
    auto seg = integrate_band({0.6, 1.0, 0.0}, P, spec);
    REQUIRE(seg.samples.size() >= 4);
    for (std::size_t i = 1; i + 1 < seg.samples.size(); ++i) {
        const auto& a = seg.samples[i - 1];
        const auto& b = seg.samples[i];
        double dt = b.time - a.time;
        CHECK(dt > 0.0);
        if (dt < 1e-3) continue; // finite difference below is noise-dominated
        // midpoint residual of the y-equation (exactly linear, so the
        // second-order quadrature bound is tight)
        double rate = (b.y - a.y) / dt;
        double ym = 0.5 * (a.y + b.y);
        CHECK(std::fabs(rate + ym) <= 0.3 * dt * dt * std::fabs(ym) + 1e-12);
    }
}

TEST_CASE("orbit from the top enters the correct disc") {
    auto P = defaults();
    BandEventSpec spec;
    spec.max_time = 50.0;
    // omega in (0,1): drifts left into the disc at 0; (1,2): right into disc at 2
    auto seg = integrate_band({0.7, 1.0, 0.0}, P, spec);
    REQUIRE(seg.terminal == TerminalEvent::DiscBoundary);
    double cx;
    CHECK(disc_center_distance(seg.end.x, seg.end.y, cx) == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(cx == 0.0);
    seg = integrate_band({1.3, 1.0, 0.0}, P, spec);
    REQUIRE(seg.terminal == TerminalEvent::DiscBoundary);
    CHECK(disc_center_distance(seg.end.x, seg.end.y, cx) == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(cx == 2.0);
}

TEST_CASE("bottom-edge entry mirrors the top-edge entry") {
    auto P = defaults();
    BandEventSpec spec;
    spec.max_time = 50.0;
    auto top = integrate_band({0.7, 1.0, 0.0}, P, spec);
    auto bot = integrate_band({0.7, -1.0, 0.0}, P, spec);
    REQUIRE(top.terminal == TerminalEvent::DiscBoundary);
    REQUIRE(bot.terminal == TerminalEvent::DiscBoundary);
    CHECK(bot.end.x == doctest::Approx(top.end.x).epsilon(1e-9));
    CHECK(bot.end.y == doctest::Approx(-top.end.y).epsilon(1e-9));
}

TEST_CASE("stationary start on a saddle never leaves") {
    auto P = defaults();
    BandEventSpec spec;
    spec.max_time = 5.0;
    auto seg = integrate_band({1.0, 0.0, 0.0}, P, spec);
    CHECK(seg.terminal == TerminalEvent::MaxTime);
    CHECK(seg.end.x == doctest::Approx(1.0));
    CHECK(seg.end.y == doctest::Approx(0.0));
    // theta meanwhile rotates at unit speed on the plateau
    CHECK(std::fabs(std::fabs(seg.end.theta) - 5.0) <= 1e-9);
}

TEST_CASE("theta integer stop fires with signed crossing") {
    auto P = defaults(); // positive deviation: theta increases at saddle 1
    BandEventSpec spec;
    spec.theta_integer_stop = true;
    spec.max_time = 5.0;
    auto seg = integrate_band({1.0, 0.0, 0.0}, P, spec);
    REQUIRE(seg.terminal == TerminalEvent::ThetaInteger);
    CHECK(seg.theta_crossings == 1);
    CHECK(seg.end.theta == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(seg.end_time == doctest::Approx(1.0).epsilon(1e-10));
    // saddle at 3 rotates the other way
    auto seg3 = integrate_band({3.0, 0.0, 0.0}, P, spec);
    REQUIRE(seg3.terminal == TerminalEvent::ThetaInteger);
    CHECK(seg3.theta_crossings == -1);
    CHECK(seg3.end.theta == doctest::Approx(-1.0).epsilon(1e-10));
}

TEST_CASE("domain checks") {
    auto P = defaults();
    CHECK(in_domain({0.5, 0.3}));
    CHECK(!in_domain({0.0, 0.1}));    // inside removed disc
    CHECK(!in_domain({0.3, 1.2}));    // above the band
    CHECK_THROWS_AS(eval_omega({0.05, 0.05}, P), DomainExit);
    CHECK_THROWS_AS(integrate_band({0.0, 0.0, 0.0}, P, {}), DomainExit);
}

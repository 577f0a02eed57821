#include "blflow/base_flow.hpp"

#include <cmath>

#include "blflow/errors.hpp"
#include "blflow/ode.hpp"

namespace blflow {

namespace {

// exp(-1/u) blend, all derivatives vanish at the support edge
double expg(double u) { return u > 0.0 ? std::exp(-1.0 / u) : 0.0; }

double expstep(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    double a = expg(u), b = expg(1.0 - u);
    return a / (a + b);
}

double polystep(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

// phi on the canonical cell [0, 1/2]
double phi_cell(double r, PhiVariant variant) {
    if (variant == PhiVariant::SinWave)
        return 0.5 * std::sin(M_PI * r);
    // linear x/2 up to 1/3, then a C-infinity blend into a flat cap
    constexpr double cap = 0.2;
    if (r <= 1.0 / 3) return 0.5 * r;
    double s = expstep((r - 1.0 / 3) * 6.0);
    return (1.0 - s) * (0.5 * r) + s * cap;
}

} // namespace

double smoothstep(double u, BumpProfile profile) {
    return profile == BumpProfile::ExpSmooth ? expstep(u) : polystep(u);
}

double phi(double x, PhiVariant variant) {
    // reduce to [0, 1/2] using oddness, antiperiodicity and the induced
    // reflection symmetry about 1/2; the identities then hold exactly
    double r = std::remainder(x, 2.0); // [-1, 1]
    double sign = 1.0;
    if (r < 0.0) {
        r = -r;
        sign = -sign;
    }
    if (r > 0.5) r = 1.0 - r;
    return sign * phi_cell(r, variant);
}

double eval_alpha(double x, double y, const FlowParams& P) {
    if (P.alpha_scale == 0.0) return 0.0;
    double k = std::floor(x / 2.0); // nearest odd integer is 2k+1
    double cx = 2.0 * k + 1.0;
    double r = std::hypot(x - cx, y);
    const double r_out = 1.0 / 3;
    if (r >= r_out) return 0.0;
    double mag = (r <= P.r_alpha_inner)
                     ? 1.0
                     : 1.0 - smoothstep((r - P.r_alpha_inner) / (r_out - P.r_alpha_inner),
                                        P.bump_profile);
    double sign = (std::fmod(std::fabs(k), 2.0) == 0.0) ? 1.0 : -1.0;
    return sign * P.alpha_scale * mag;
}

double eval_beta(double u, const FlowParams& P) {
    if (P.beta_scale == 0.0) return 0.0;
    const double lo = P.beta_lo, hi = P.beta_hi;
    if (u <= lo || u >= hi) return 0.0;
    double w = hi - lo;
    if (P.bump_profile == BumpProfile::ExpSmooth) {
        double kappa = 4.0 / (w * w); // 1 / ((w/2)^2), peak normalizer
        return P.beta_scale * std::exp(kappa - 1.0 / ((u - lo) * (hi - u)));
    }
    // high even power keeps the effective width comparable to the exp bump;
    // the 0.3 amplitude matches the band integrals of the two profiles, so
    // both drive fibre deviations of the same size and the contraction
    // certificate holds under either choice
    double q = 4.0 * (u - lo) * (hi - u) / (w * w); // in (0, 1]
    double q3 = q * q * q;
    double q12 = q3 * q3 * q3 * q3;
    return 0.3 * P.beta_scale * q12;
}

void eval_base_field(const BandPoint& p, const FlowParams& P, double& dx, double& dy) {
    dx = -phi(p.x, P.phi_variant);
    dy = -p.y;
}

double disc_center_distance(double x, double y, double& cx) {
    cx = 2.0 * std::floor(x / 2.0 + 0.5); // nearest even integer
    return std::hypot(x - cx, y);
}

double saddle_distance(double x, double y, double& sx) {
    double k = std::floor(x / 2.0);
    sx = 2.0 * k + 1.0;
    return std::hypot(x - sx, y);
}

bool in_domain(const BandPoint& p, double pad) {
    if (std::fabs(p.y) > 1.0 + pad) return false;
    double cx;
    return disc_center_distance(p.x, p.y, cx) >= 0.25 - pad;
}

double reduce_mod4(double w) {
    double r = std::remainder(w, 4.0); // [-2, 2]
    if (r == 2.0) r = -2.0;
    return r;
}

double eval_omega(const BandPoint& p, const FlowParams& P) {
    if (!in_domain(p, 1e-9))
        throw DomainExit("eval_omega: point outside the band domain");
    if (p.y == 0.0) {
        // axis segments carry the locally constant values +1 / -1 (mod 4)
        double r = std::remainder(p.x, 4.0);
        return r > 0.0 ? 1.0 : -1.0;
    }
    double ay = std::fabs(p.y);
    double xhit;
    if (ay >= 1.0) {
        xhit = p.x;
    } else {
        // backward orbit in the time-like variable u = log y: dX/du = phi(X),
        // from u0 = log|y| up to 0.  Always reaches u = 0; the cap is a guard.
        double u0 = std::log(ay);
        if (-u0 > P.max_time)
            throw SeparatrixError("eval_omega: backward reach exceeds max_time");
        double tol = std::max(P.ode_tol * 1e-3, 1e-13);
        Dopri5<1> ode(
            [&](double, const std::array<double, 1>& s, std::array<double, 1>& ds) {
                ds[0] = phi(s[0], P.phi_variant);
            },
            tol, tol);
        ode.reset(u0, {p.x});
        while (ode.step(0.0)) {}
        xhit = ode.state()[0];
    }
    return p.y > 0.0 ? xhit : 2.0 - xhit;
}

double eval_theta_field_cached(const BandPoint& p, double omega, const FlowParams& P) {
    double coef = eval_alpha(p.x, p.y, P) +
                  P.t * eval_beta(std::fabs(p.y), P) * std::sin(0.5 * M_PI * omega);
    return P.orientation == Orientation::RawField ? -coef : coef;
}

double eval_theta_field(const BandPoint& p, const FlowParams& P) {
    return eval_theta_field_cached(p, eval_omega(p, P), P);
}

const char* to_string(TerminalEvent e) {
    switch (e) {
        case TerminalEvent::YLevel: return "y_level";
        case TerminalEvent::DiscBoundary: return "disc_boundary";
        case TerminalEvent::ThetaInteger: return "theta_integer";
        case TerminalEvent::MaxTime: return "max_time";
        case TerminalEvent::DomainExit: return "domain_exit";
    }
    return "?";
}

namespace {

using Vec3 = std::array<double, 3>;

struct EventHit {
    double u = 2.0; // interpolation parameter in (0,1]; 2 = no hit
    TerminalEvent kind = TerminalEvent::MaxTime;
};

double disc_gap(const Vec3& s) {
    double cx;
    double d = disc_center_distance(s[0], s[1], cx);
    return d - 0.25;
}

} // namespace

OrbitSegment integrate_band_cached(const BandState& s0, double omega, const FlowParams& P,
                                   const BandEventSpec& spec) {
    if (!in_domain({s0.x, s0.y}, 1e-9))
        throw DomainExit("integrate_band: start point outside the band domain");

    const int dir = P.orientation == Orientation::RawField ? -1 : +1;
    const double sinw = std::sin(0.5 * M_PI * omega);
    auto rhs = [&](double, const Vec3& s, Vec3& ds) {
        ds[0] = -phi(s[0], P.phi_variant);
        ds[1] = -s[1];
        double coef = eval_alpha(s[0], s[1], P) +
                      P.t * eval_beta(std::fabs(s[1]), P) * sinw;
        ds[2] = dir * coef;
    };

    const double tol = std::max(P.ode_tol * 1e-3, 1e-13);
    Dopri5<3> ode(rhs, tol, tol);
    ode.reset(0.0, {s0.x, s0.y, s0.theta});

    OrbitSegment seg;
    auto push_sample = [&](double tm, const Vec3& s) {
        if (spec.record_samples)
            seg.samples.push_back({tm, s[0], s[1], s[2], 0});
    };
    push_sample(0.0, ode.state());

    while (true) {
        if (!ode.step(spec.max_time)) {
            seg.terminal = TerminalEvent::MaxTime;
            break;
        }
        const Vec3& a = ode.prev_state();
        const Vec3& b = ode.state();

        EventHit hit;
        auto consider = [&](double ga, double gb, TerminalEvent kind) {
            if (ga == 0.0 && gb == 0.0) return;
            if ((ga <= 0.0) == (gb <= 0.0)) return;
            double u = locate_event(
                ode, [&](const Vec3& s) { return kind == TerminalEvent::YLevel
                                              ? s[1] - *spec.y_level
                                              : kind == TerminalEvent::DiscBoundary
                                                    ? disc_gap(s)
                                                    : 0.0; },
                ga, gb);
            if (u < hit.u) hit = {u, kind};
        };

        if (spec.y_level)
            consider(a[1] - *spec.y_level, b[1] - *spec.y_level, TerminalEvent::YLevel);
        if (spec.stop_at_disc)
            consider(disc_gap(a), disc_gap(b), TerminalEvent::DiscBoundary);
        if (spec.theta_integer_stop) {
            // first integer level crossed by theta inside this step
            double target = b[2] > a[2] ? std::floor(a[2]) + 1.0 : std::ceil(a[2]) - 1.0;
            double ga = a[2] - target, gb = b[2] - target;
            if ((ga <= 0.0) != (gb <= 0.0)) {
                double u = locate_event(
                    ode, [&](const Vec3& s) { return s[2] - target; }, ga, gb);
                if (u < hit.u) hit = {u, TerminalEvent::ThetaInteger};
            }
        }
        if (std::fabs(b[1]) > 1.0 + 1e-9 && hit.u > 1.0) {
            seg.terminal = TerminalEvent::DomainExit;
            seg.end_time = ode.time();
            seg.end = {b[0], b[1], b[2]};
            push_sample(seg.end_time, b);
            return seg;
        }

        if (hit.u <= 1.0) {
            // refine: re-run the integrator up to the located event time so
            // the terminal state carries full integration accuracy
            double t_ev = ode.prev_time() + hit.u * (ode.time() - ode.prev_time());
            Dopri5<3> fine(rhs, tol, tol);
            fine.reset(ode.prev_time(), ode.prev_state());
            while (fine.step(t_ev)) {}
            const Vec3& e = fine.state();
            seg.terminal = hit.kind;
            seg.end_time = t_ev;
            seg.end = {e[0], e[1], e[2]};
            if (hit.kind == TerminalEvent::ThetaInteger)
                seg.theta_crossings = b[2] > a[2] ? 1 : -1;
            push_sample(t_ev, e);
            return seg;
        }

        push_sample(ode.time(), b);
    }

    const Vec3& e = ode.state();
    seg.end_time = ode.time();
    seg.end = {e[0], e[1], e[2]};
    push_sample(seg.end_time, e);
    return seg;
}

OrbitSegment integrate_band(const BandState& s0, const FlowParams& P, const BandEventSpec& spec) {
    return integrate_band_cached(s0, eval_omega({s0.x, s0.y}, P), P, spec);
}

} // namespace blflow

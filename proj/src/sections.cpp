#include "blflow/sections.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include <Eigen/Dense>

#include "blflow/errors.hpp"
#include "blflow/fiber_metric.hpp"
#include "blflow/holonomy.hpp"

namespace blflow {

namespace {

// Canonical saddle representative of each copy in its band chart.  The
// placement alternates so that the disc-center orbit of every copy winds the
// fiber with the sign that the reference exponent tuple turns into a uniform
// per-revolution contraction (the same sign pattern as the rotation plateau).
constexpr std::array<int, 4> kSigma = {+1, -1, -1, +1};

double axis_omega(int sig) { return sig > 0 ? 1.0 : -1.0; }

std::string theta_name(int copy) { return "th" + std::to_string(copy); }

std::string fmt_g(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string fmt_short(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

// Raw outcome of tracing an orbit from a section point to the next hit.
struct RawTrace {
    SectionPoint end;
    Word word;
    double time = 0.0;
    int c_count = 0;
    std::array<std::int64_t, 4> windings{};
    std::vector<DiagramNode> path;
    double end_omega_lift = 0.0;
    double end_theta_lift = 0.0;
};

// Traces the orbit of p forward until it hits the section again (or, with
// first_leg_only, until the first diagram node).  All band-chart work happens
// in the upper half: lower-half disc starts are normalized through the deck
// map (x, y, theta) -> (x + 2, -y, -theta), which the vector field commutes
// with, so every disc-boundary exit and top-edge re-entry uses the same
// conventions as the verified boundary-crossing tracer.
RawTrace trace_orbit(const SectionPoint& p, const FlowParams& P, const SectionConfig& cfg,
                     bool first_leg_only) {
    cfg.validate();
    p.validate(cfg);

    RawTrace out;
    out.path.push_back(node_of(p));

    BandState s{};
    double om = 0.0;
    int copy = 1;

    // Lower-half disc starts are integrated through the deck involution
    // (x, y, theta) -> (x + 2, -y, -theta), which the field commutes with.
    // The computed orbit is then the deck image of the true one, so fiber
    // windings and the final outer-torus arrival have to be pulled back
    // (negated); copy labels are unaffected because the involution shifts the
    // cover cyclically by two in step with the mirrored start.
    bool mirrored = false;

    if (p.piece == Piece::S0) {
        if (odd_distance(p.omega) <= P.event_tol)
            throw SeparatrixError("trace_orbit: start omega lies on a separatrix");
        s = BandState{reduce_mod4(p.omega), 1.0, p.theta};
        om = reduce_mod4(p.omega);
        copy = 1;
    } else {
        const int i = piece_index(p.piece);
        const int sig = kSigma[std::size_t(i - 1)];
        copy = i;
        if (std::hypot(p.u, p.v) < 1e-12) {
            // The base point is the stationary saddle: the orbit is the closed
            // fiber loop.  Its period and winding sign follow from the fiber
            // field at the saddle (the band bump vanishes on the axis).
            const double rate =
                eval_theta_field_cached(BandPoint{axis_omega(sig), 0.0}, axis_omega(sig), P);
            if (std::fabs(rate) < 1e-12)
                throw MaxTimeExceeded(
                    "trace_orbit: fiber angle is stationary at the disc center; "
                    "the orbit never returns to the section");
            const std::int64_t k = rate > 0.0 ? 1 : -1;
            out.windings[std::size_t(i - 1)] = k;
            out.word.append(theta_name(i), k);
            out.time = 1.0 / std::fabs(rate);
            out.end = p;
            out.end.theta = p.theta + double(k);
            out.end_theta_lift = out.end.theta;
            out.path.push_back(DiagramNode{true, i});
            return out;
        }
        double x = axis_omega(sig) + p.u;
        double y = p.v;
        double th = p.theta;
        if (y < 0.0) {  // normalize into the upper half through the deck map
            x = reduce_mod4(x + 2.0);
            y = -y;
            th = -th;
            mirrored = true;
        }
        s = BandState{x, y, th};
        om = (y == 0.0) ? ((reduce_mod4(x) > 0.0) ? 1.0 : -1.0)
                        : eval_omega(BandPoint{x, y}, P);
    }

    std::int64_t cur_wind = 0;

    // Lift bookkeeping.  Integration always runs in the fundamental band
    // chart (w reduced mod 4), but the composite boundary map is defined on
    // unreduced lifts: (w, tau) -> (-tau - f(w), w).  `w_lift` is the
    // unreduced entry coordinate of the current copy and `dtau` the offset
    // between the true entry fiber lift and the value seeded into the
    // integrator; dtau is always an exact multiple of 4, so reductions,
    // fractional parts and integer-crossing counts agree between frames.
    double w_lift = om;
    double dtau = 0.0;

    BandEventSpec spec;
    spec.stop_at_disc = true;
    spec.theta_integer_stop = true;
    spec.record_samples = false;

    for (;;) {
        spec.max_time = cfg.max_return_time - out.time;
        if (spec.max_time <= 0.0)
            throw MaxTimeExceeded("trace_orbit: no section hit within max_return_time = " +
                                  fmt_short(cfg.max_return_time));
        OrbitSegment seg = integrate_band_cached(s, om, P, spec);
        out.time += seg.end_time;

        if (seg.terminal == TerminalEvent::ThetaInteger) {
            const double level = std::round(seg.end.theta);
            const std::int64_t cross = mirrored ? -seg.theta_crossings : seg.theta_crossings;
            out.windings[std::size_t(copy - 1)] += cross;
            cur_wind += cross;
            double sx = 0.0;
            const double sd = saddle_distance(seg.end.x, seg.end.y, sx);
            if (sd <= cfg.eps) {
                // Integer fiber level crossed inside the eps-ball: the orbit
                // hits the disc section of the copy it is crossing.  The
                // section frame sits at the copy's canonical saddle column;
                // hits at the opposite column are read through the deck
                // involution, which flips v and the fiber level.
                const int sxs = sx > 0.0 ? 1 : -1;
                const int sig = kSigma[std::size_t(copy - 1)];
                const bool flip_frame = (sxs != sig);
                if (cur_wind != 0) out.word.append(theta_name(copy), cur_wind);
                out.end.piece = disc_piece(copy);
                out.end.frame = copy;
                out.end.u = seg.end.x - sx;
                out.end.v = flip_frame ? -seg.end.y : seg.end.y;
                out.end.theta = flip_frame ? -(level + dtau) : (level + dtau);
                out.end_theta_lift = out.end.theta;
                out.path.push_back(DiagramNode{true, copy});
                return out;
            }
            // Plain fiber-level crossing: resume nudged past the level in the
            // direction of motion so the event cannot re-trigger.
            s = seg.end;
            s.theta = level + (seg.theta_crossings >= 0 ? 1e-12 : -1e-12);
            continue;
        }

        if (seg.terminal == TerminalEvent::DiscBoundary) {
            // Copy traversal complete.  Fold the integration drift of the
            // orbit invariant back into the entry branch, then glue.
            const double om_exit = eval_omega(BandPoint{seg.end.x, seg.end.y}, P);
            const double om_corr = om + reduce_mod4(om_exit - om);
            if (cur_wind != 0) out.word.append(theta_name(copy), cur_wind);
            cur_wind = 0;
            out.word.append("c", 1);
            ++out.c_count;
            out.path.push_back(DiagramNode{false, copy + 1});

            const double th_arr_lift = seg.end.theta + dtau;
            const double w_next_lift = -th_arr_lift;
            const double tau_next_lift = om_corr + (w_lift - om);

            if (first_leg_only) {
                out.end = SectionPoint{};
                return out;
            }
            if (copy == 4) {
                // Arrival at the fifth outer torus, which is T1: section hit.
                // A mirrored trace lands at the deck image of the true
                // arrival, so pull the coordinates back through the
                // involution (omega, theta) -> (-omega, -theta).
                const double w_out = mirrored ? -w_next_lift : w_next_lift;
                const double tau_out = mirrored ? -tau_next_lift : tau_next_lift;
                out.end.piece = Piece::S0;
                out.end.frame = 0;
                out.end.omega = reduce_mod4(w_out);
                out.end.theta = tau_out - std::floor(tau_out);
                out.end_omega_lift = w_out;
                out.end_theta_lift = tau_out;
                return out;
            }
            ++copy;
            om = reduce_mod4(w_next_lift);
            const double tau_seed = om_corr;
            s = BandState{om, 1.0, tau_seed};
            w_lift = w_next_lift;
            dtau = tau_next_lift - tau_seed;
            continue;
        }

        if (seg.terminal == TerminalEvent::MaxTime)
            throw MaxTimeExceeded("trace_orbit: integration hit the time cap before an event "
                                  "(start " + p.to_string() + ")");
        throw Error("trace_orbit: unexpected terminal event " +
                    std::string(to_string(seg.terminal)));
    }
}

// Quantized metric factors of a traced return: the word maps to C^exponent,
// so the unit stable/unstable vectors are scaled by mu^{-+exponent}.
void attach_factors(ReturnRecord& rec, const ExponentTuple& e) {
    rec.exponent = e.t0 * rec.c_count;
    for (int i = 0; i < 4; ++i) rec.exponent += e.t[i] * rec.windings[std::size_t(i)];
    const FiberMetric fm(e, 4);
    rec.stable_factor = fm.cpower().power_norm(-double(rec.exponent), fm.stable_unit());
    rec.unstable_factor = fm.cpower().power_norm(-double(rec.exponent), fm.unstable_unit());
}

// Absolute accuracy ~eps adaptive Simpson on [a, b] (axis transit integrals).
double simpson_axis(const std::function<double(double)>& f, double a, double b, double eps) {
    struct Rec {
        static double go(const std::function<double(double)>& f, double a, double b, double fa,
                         double fm, double fb, double whole, double eps, int depth) {
            const double m = 0.5 * (a + b);
            const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
            const double flm = f(lm), frm = f(rm);
            const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if (depth <= 0 || std::fabs(left + right - whole) <= 15.0 * eps)
                return left + right + (left + right - whole) / 15.0;
            return go(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
                   go(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
        }
    };
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return Rec::go(f, a, b, fa, fm, fb, whole, eps, 52);
}

}  // namespace

// ---------------------------------------------------------------------------
// Config, points, diagram
// ---------------------------------------------------------------------------

void SectionConfig::validate() const {
    if (!(eps > 0.0) || !(eps < 1.0 / 12.0))
        throw ConfigError("SectionConfig: eps must lie in (0, 1/12) so the disc sits inside "
                          "the rotation plateau (got " + fmt_short(eps) + ")");
    if (!(delta > 0.0) || !(delta < 0.5))
        throw ConfigError("SectionConfig: delta must lie in (0, 0.5)");
    if (!(t1_multiple >= 1.0))
        throw ConfigError("SectionConfig: t1_multiple must be >= 1");
    if (!(max_return_time > 0.0))
        throw ConfigError("SectionConfig: max_return_time must be positive");
}

const char* to_string(Piece p) {
    switch (p) {
        case Piece::S0: return "S0";
        case Piece::S1: return "S1";
        case Piece::S2: return "S2";
        case Piece::S3: return "S3";
        case Piece::S4: return "S4";
    }
    return "?";
}

int piece_index(Piece p) { return static_cast<int>(p); }

Piece disc_piece(int i) {
    if (i < 1 || i > 4) throw ConfigError("disc_piece: index must be 1..4");
    return static_cast<Piece>(i);
}

void SectionPoint::validate(const SectionConfig& cfg) const {
    if (piece == Piece::S0) {
        if (!(omega >= -2.0 && omega < 2.0))
            throw ConfigError("SectionPoint: S0 omega must lie in [-2, 2), got " +
                              fmt_short(omega));
        if (!(theta >= 0.0 && theta < 1.0))
            throw ConfigError("SectionPoint: S0 theta must lie in [0, 1), got " +
                              fmt_short(theta));
        if (frame != 0) throw ConfigError("SectionPoint: S0 points use frame 0");
    } else {
        const int i = piece_index(piece);
        if (u * u + v * v > cfg.eps * cfg.eps * (1.0 + 1e-9))
            throw ConfigError("SectionPoint: disc coordinates leave the eps-ball (eps = " +
                              fmt_short(cfg.eps) + ")");
        if (std::fabs(theta - std::round(theta)) > 1e-9)
            throw ConfigError("SectionPoint: disc points sit at integer fiber levels");
        if (frame != i)
            throw ConfigError("SectionPoint: disc points of S" + std::to_string(i) +
                              " use frame " + std::to_string(i));
    }
}

std::string SectionPoint::to_string() const {
    std::ostringstream os;
    os << blflow::to_string(piece);
    if (piece == Piece::S0)
        os << "(omega=" << fmt_short(omega) << ", theta=" << fmt_short(theta) << ")";
    else
        os << "(u=" << fmt_short(u) << ", v=" << fmt_short(v) << ", theta=" << fmt_short(theta)
           << ")";
    return os.str();
}

SectionPoint outer_point(double omega, double theta) {
    SectionPoint p;
    p.piece = Piece::S0;
    p.omega = reduce_mod4(omega);
    p.theta = theta - std::floor(theta);
    p.frame = 0;
    return p;
}

SectionPoint disc_point(int i, double u, double v, double theta_level) {
    SectionPoint p;
    p.piece = disc_piece(i);
    p.u = u;
    p.v = v;
    p.theta = theta_level;
    p.frame = i;
    return p;
}

std::string to_string(const DiagramNode& n) {
    return (n.disc ? "D" : "T") + std::to_string(n.index);
}

bool is_diagram_edge(const DiagramNode& a, const DiagramNode& b) {
    if (!a.disc && a.index >= 1 && a.index <= 4) {
        if (!b.disc) return b.index == a.index + 1;
        return b.index == a.index;
    }
    if (a.disc && a.index >= 1 && a.index <= 4) {
        if (b.disc) return b.index == a.index;
        return b.index == a.index + 1;
    }
    return false;
}

bool is_diagram_walk(const std::vector<DiagramNode>& path) {
    for (std::size_t k = 0; k + 1 < path.size(); ++k)
        if (!is_diagram_edge(path[k], path[k + 1])) return false;
    return true;
}

DiagramNode node_of(const SectionPoint& p) {
    if (p.piece == Piece::S0) return DiagramNode{false, 1};
    return DiagramNode{true, piece_index(p.piece)};
}

TransitionStep classify_transition(const SectionPoint& p, const FlowParams& P,
                                   const SectionConfig& cfg) {
    RawTrace raw = trace_orbit(p, P, cfg, /*first_leg_only=*/true);
    TransitionStep step;
    step.from = raw.path.front();
    step.to = raw.path.back();
    step.time = raw.time;
    return step;
}

// ---------------------------------------------------------------------------
// Return map
// ---------------------------------------------------------------------------

ReturnRecord return_map(const SectionPoint& p, const FlowParams& P, const SectionConfig& cfg,
                        const ExponentTuple& e) {
    e.validate();
    RawTrace raw = trace_orbit(p, P, cfg, /*first_leg_only=*/false);
    ReturnRecord rec;
    rec.start = p;
    rec.end = raw.end;
    rec.return_time = raw.time;
    rec.homotopy_word = std::move(raw.word);
    rec.c_count = raw.c_count;
    rec.windings = raw.windings;
    rec.end_omega_lift = raw.end_omega_lift;
    rec.end_theta_lift = raw.end_theta_lift;
    rec.path = std::move(raw.path);
    attach_factors(rec, e);
    return rec;
}

// ---------------------------------------------------------------------------
// Time constants
// ---------------------------------------------------------------------------

double saddle_expansion_rate(const FlowParams& P) {
    const double h = 1e-6;
    return -(phi(1.0 + h, P.phi_variant) - phi(1.0 - h, P.phi_variant)) / (2.0 * h);
}

TimeConstants measure_time_constants(const FlowParams& P, const SectionConfig& cfg,
                                     int grid_n) {
    cfg.validate();
    if (grid_n < 4) throw ConfigError("measure_time_constants: grid_n must be >= 4");
    TimeConstants tc;
    tc.saddle_rate = saddle_expansion_rate(P);

    // T0: period of the closed fiber loop over the saddle, by integration.
    {
        const double rate = eval_theta_field_cached(BandPoint{1.0, 0.0}, 1.0, P);
        if (std::fabs(rate) < 1e-12)
            throw MaxTimeExceeded("measure_time_constants: fiber angle is stationary at the "
                                  "disc center");
        BandEventSpec spec;
        spec.stop_at_disc = true;
        spec.theta_integer_stop = true;
        spec.record_samples = false;
        spec.max_time = P.max_time;
        OrbitSegment seg = integrate_band_cached(BandState{1.0, 0.0, 0.0}, 1.0, P, spec);
        if (seg.terminal != TerminalEvent::ThetaInteger)
            throw MaxTimeExceeded("measure_time_constants: disc-center orbit produced no "
                                  "fiber-level crossing");
        tc.t0 = seg.end_time;
    }
    tc.t1 = cfg.t1_multiple * tc.t0;

    // T2: max single-copy transit over a margin grid of entry coordinates,
    // plus transits of orbits leaving the disc section.
    double t2 = 0.0;
    for (int j = 0; j < grid_n; ++j) {
        const double w = -2.0 + 4.0 * (double(j) + 0.5) / double(grid_n);
        if (odd_distance(w) < cfg.delta) continue;
        t2 = std::max(t2, integrate_crossing(w, 0.0, P).time);
    }
    {
        BandEventSpec spec;
        spec.stop_at_disc = true;
        spec.theta_integer_stop = false;
        spec.record_samples = false;
        spec.max_time = P.max_time;
        const double r = 0.98 * cfg.eps;
        for (int sig : {+1, -1}) {
            for (double a : {0.0, 0.35, 0.7, 1.05, M_PI - 1.05, M_PI - 0.7, M_PI - 0.35, M_PI}) {
                const double x = axis_omega(sig) + r * std::cos(a);
                const double y = r * std::sin(a);
                const double om = (y == 0.0) ? axis_omega(sig) : eval_omega(BandPoint{x, y}, P);
                OrbitSegment seg = integrate_band_cached(BandState{x, y, 0.0}, om, P, spec);
                if (seg.terminal == TerminalEvent::DiscBoundary)
                    t2 = std::max(t2, seg.end_time);
            }
        }
    }
    tc.t2 = t2;

    // Transit growth toward the separatrix: entries at omega = 1 +- delta.
    for (double d : {1e-2, 1e-3, 1e-4, 1e-5}) {
        const double tp = integrate_crossing(1.0 + d, 0.0, P).time;
        const double tm = integrate_crossing(1.0 - d, 0.0, P).time;
        tc.growth.emplace_back(d, std::max(tp, tm));
    }

    // Lingering set: on the unstable axis the base flow restricts to
    // xdot = -phi(x), so the time spent inside the eps-ball from offset u is
    // the exact 1-d transit integral.  Bisect for the largest offset that
    // lingers at least T1; compare with the linearized prediction.
    tc.u_star_analytic = cfg.eps * std::exp(-tc.saddle_rate * tc.t1);
    {
        // In log coordinates x = e^s the integrand x / (-phi(1+x)) stays close
        // to 1/rate all the way down.  Below x_lin the sum 1.0 + x rounds to
        // 1.0 and the field evaluates to noise, so take that tail analytically
        // (the restriction is linear there to ~1e-16 relative).
        const double x_lin = 1e-8;
        auto linger = [&](double u) {
            double total = 0.0;
            double lo_x = u;
            if (lo_x < x_lin) {
                total += (std::log(std::min(x_lin, cfg.eps)) - std::log(lo_x)) / tc.saddle_rate;
                lo_x = x_lin;
            }
            if (lo_x < cfg.eps) {
                auto g = [&](double s) {
                    const double x = std::exp(s);
                    return x / (-phi(1.0 + x, P.phi_variant));
                };
                total += simpson_axis(g, std::log(lo_x), std::log(cfg.eps), 1e-10);
            }
            return total;
        };
        double lo = 1e-300, hi = cfg.eps;  // linger(lo) >> t1 > linger(hi)
        if (linger(hi) >= tc.t1) {
            tc.u_star_measured = hi;
        } else {
            for (int it = 0; it < 200; ++it) {
                const double mid = std::exp(0.5 * (std::log(lo) + std::log(hi)));
                (linger(mid) >= tc.t1 ? lo : hi) = mid;
            }
            tc.u_star_measured = lo;
        }
    }
    return tc;
}

std::string TimeConstants::to_text() const {
    std::ostringstream os;
    os << "time constants\n"
       << "  T0 (disc-center return)    = " << fmt_short(t0) << "\n"
       << "  T1 (lingering cutoff)      = " << fmt_short(t1) << "\n"
       << "  T2 (max single-copy transit) = " << fmt_short(t2) << "\n"
       << "  return-time bound 4(T1+2T2) = " << fmt_short(bound()) << "\n"
       << "  saddle expansion rate      = " << fmt_short(saddle_rate) << "\n"
       << "  lingering offset u*: measured " << fmt_short(u_star_measured) << ", linearized "
       << fmt_short(u_star_analytic) << "\n";
    os << "  transit growth (delta -> max transit):";
    for (const auto& [d, t] : growth) os << " " << fmt_short(d) << "->" << fmt_short(t);
    os << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Contraction certificate
// ---------------------------------------------------------------------------

std::vector<double> contraction_grid(int n, double margin) {
    if (n < 2) throw ConfigError("contraction_grid: n must be >= 2");
    if (!(margin > 0.0) || !(margin < 1.0))
        throw ConfigError("contraction_grid: margin must lie in (0, 1)");
    std::vector<double> g(std::size_t(n), 0.0);
    for (int j = 0; j < n; ++j)
        g[std::size_t(j)] = margin + (2.0 - 2.0 * margin) * double(j) / double(n - 1);
    return g;
}

namespace {

struct MarginSkip {
    double arg;
};

struct RowScratch {
    double f1 = std::numeric_limits<double>::quiet_NaN();
    double arr_om = 0.0, arr_th = 0.0;    // closed-form arrival lift
    double lift_om = 0.0, lift_th = 0.0;  // traced arrival lift
};

}  // namespace

ContractionCertificate certify_contraction(const std::vector<double>& omegas, int d,
                                           const ExponentTuple& e, const FlowParams& P,
                                           const SectionConfig& cfg, bool parallel,
                                           double sign_tol) {
    cfg.validate();
    e.validate();
    if (omegas.empty()) throw ConfigError("certify_contraction: empty grid");
    for (double w : omegas)
        if (!(w > 0.0 && w < 2.0))
            throw ConfigError("certify_contraction: grid points must lie in (0, 2), got " +
                              fmt_short(w));

    const FiberMetric fm(e, d);
    const Eigen::VectorXd es = fm.stable_unit();
    const Eigen::VectorXd eu = fm.unstable_unit();
    const double mu = fm.mu();
    const double t0r = double(e.t0), t1r = double(e.t[0]), t2r = double(e.t[1]);

    ContractionCertificate cert;
    cert.dim = d;
    cert.exponents = e;
    cert.grid_size = int(omegas.size());
    cert.margin = cfg.delta;
    cert.mu = mu;
    cert.mu_pow_m4 = std::pow(mu, -4.0);
    cert.rows.resize(omegas.size());

    const double stable_gate = cert.mu_pow_m4 + 1e-6;
    const double unstable_gate = std::pow(mu, 4.0) - 1e-3;

    std::vector<RowScratch> scratch(omegas.size());
    std::vector<std::exception_ptr> errs(omegas.size());

    auto compute_row = [&](std::size_t j) {
        CertRow row;
        row.omega = omegas[j];
        try {
            DeviationFn dev = [&](double a) -> double {
                if (odd_distance(a) < cfg.delta) throw MarginSkip{a};
                return deviation_f(a, P);
            };
            const double w = omegas[j];
            const double F1 = dev(w);
            scratch[j].f1 = F1;
            const double F2 = dev(F1);
            const double F3 = dev(w - F2);
            const double F4 = dev(F1 + F3);
            const double e_formula = -t2r * (F2 + F4) + t1r * (F1 + F3) + 4.0 * t0r;

            const auto arr = boundary_holonomy_closed_form(4, w, dev);
            const double e_chart = fm.chart(5).exponent(arr.first, arr.second) -
                                   fm.chart(1).exponent(w, 0.0);
            scratch[j].arr_om = arr.first;
            scratch[j].arr_th = arr.second;

            row.e_omega = e_formula;
            row.formula_vs_chart = std::fabs(e_formula - e_chart);
            row.stable_factor = fm.cpower().power_norm(-e_formula, es);
            row.unstable_factor = fm.cpower().power_norm(-e_formula, eu);

            ReturnRecord rec = return_map(outer_point(w, 0.0), P, cfg, e);
            row.return_time = rec.return_time;
            row.word = rec.homotopy_word.to_string();
            if (rec.end.piece != Piece::S0) {
                row.excluded = true;
                row.note = "first return is a disc-section hit; the 4-gluing estimate does "
                           "not apply";
            } else {
                scratch[j].lift_om = rec.end_omega_lift;
                scratch[j].lift_th = rec.end_theta_lift;
                row.flow_vs_closed = std::max(std::fabs(rec.end_omega_lift - arr.first),
                                              std::fabs(rec.end_theta_lift - arr.second));
                const double duality = std::fabs(row.stable_factor * row.unstable_factor - 1.0);
                row.pass = e_formula >= 4.0 - 1e-9 && row.stable_factor <= stable_gate &&
                           row.unstable_factor >= unstable_gate && duality <= 1e-8 &&
                           row.formula_vs_chart <= 1e-10 && row.flow_vs_closed <= 1e-6;
            }
        } catch (const MarginSkip& ms) {
            row.excluded = true;
            row.note = "nested deviation argument " + fmt_short(ms.arg) +
                       " within margin of a separatrix";
        } catch (const SeparatrixError& se) {
            row.excluded = true;
            row.note = std::string("separatrix grazing: ") + se.what();
        } catch (...) {
            errs[j] = std::current_exception();
        }
        cert.rows[j] = std::move(row);
    };

    if (parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
        for (long long j = 0; j < (long long)omegas.size(); ++j) compute_row(std::size_t(j));
    } else {
        for (std::size_t j = 0; j < omegas.size(); ++j) compute_row(j);
    }

    for (const auto& ep : errs)
        if (ep) std::rethrow_exception(ep);

    // Orientation sign check on the sampled deviations.
    int violations = 0;
    double worst_om = 0.0, worst_val = 0.0;
    for (std::size_t j = 0; j < cert.rows.size(); ++j) {
        const double f1 = scratch[j].f1;
        if (std::isnan(f1)) continue;
        if (f1 < -sign_tol && ++violations == 1) {
            worst_om = omegas[j];
            worst_val = f1;
        }
    }
    if (violations > 0)
        throw SignViolation("certify_contraction: deviation is negative at " +
                            std::to_string(violations) + " grid points (first at omega = " +
                            fmt_short(worst_om) + ", value " + fmt_short(worst_val) +
                            "); the certificate requires the nonnegative orientation");

    // The 4-gluing boundary orbit: the omega -> 0+ limit of the estimate.
    {
        CertRow row;
        const double w = 0.0;
        row.omega = w;
        row.note = "limit";
        const DeviationFn dev = [&](double a) { return deviation_f(a, P); };
        const double F1 = dev(w);
        const double F2 = dev(F1);
        const double F3 = dev(w - F2);
        const double F4 = dev(F1 + F3);
        row.e_omega = -t2r * (F2 + F4) + t1r * (F1 + F3) + 4.0 * t0r;
        const auto arr = boundary_holonomy_closed_form(4, w, dev);
        row.formula_vs_chart = std::fabs(
            row.e_omega - (fm.chart(5).exponent(arr.first, arr.second) -
                           fm.chart(1).exponent(w, 0.0)));
        row.stable_factor = fm.cpower().power_norm(-row.e_omega, es);
        row.unstable_factor = fm.cpower().power_norm(-row.e_omega, eu);
        ReturnRecord rec = return_map(outer_point(w, 0.0), P, cfg, e);
        row.return_time = rec.return_time;
        row.word = rec.homotopy_word.to_string();
        row.flow_vs_closed = std::max(std::fabs(rec.end_omega_lift - arr.first),
                                      std::fabs(rec.end_theta_lift - arr.second));
        row.pass = std::fabs(row.e_omega - 4.0 * t0r) <= 1e-8 &&
                   std::fabs(row.stable_factor * row.unstable_factor - 1.0) <= 1e-8 &&
                   row.flow_vs_closed <= 1e-6;
        cert.limit_row = std::move(row);
    }

    // Summary.
    cert.excluded_count = 0;
    double max_st = 0.0, min_un = std::numeric_limits<double>::infinity();
    double min_e = std::numeric_limits<double>::infinity(), max_dual = 0.0;
    bool rows_pass = true;
    bool any = false;
    for (const auto& row : cert.rows) {
        if (row.excluded) {
            ++cert.excluded_count;
            continue;
        }
        any = true;
        rows_pass = rows_pass && row.pass;
        max_st = std::max(max_st, row.stable_factor);
        min_un = std::min(min_un, row.unstable_factor);
        min_e = std::min(min_e, row.e_omega);
        max_dual = std::max(max_dual,
                            std::fabs(row.stable_factor * row.unstable_factor - 1.0));
    }
    cert.max_stable = any ? max_st : 0.0;
    cert.min_unstable = any ? min_un : 0.0;
    cert.min_exponent = any ? min_e : 0.0;
    cert.max_duality_gap = max_dual;

    // Cross-validation at one sampled omega: transport an explicit mixed fiber
    // vector along the traced orbit and compare the chart-norm ratio against
    // the closed-form arrival.
    cert.cross_check_rel_err = std::numeric_limits<double>::quiet_NaN();
    {
        std::size_t best = cert.rows.size();
        double best_gap = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < cert.rows.size(); ++j) {
            if (cert.rows[j].excluded) continue;
            const double gap = std::fabs(cert.rows[j].omega - 0.618);
            if (gap < best_gap) {
                best_gap = gap;
                best = j;
            }
        }
        if (best < cert.rows.size()) {
            const double w = cert.rows[best].omega;
            Eigen::VectorXd vmix = es + 0.5 * eu;
            vmix.normalize();
            const double den = fm.fiber_norm(1, w, 0.0, vmix);
            const double r_flow =
                fm.fiber_norm(5, scratch[best].lift_om, scratch[best].lift_th, vmix) / den;
            const double r_closed =
                fm.fiber_norm(5, scratch[best].arr_om, scratch[best].arr_th, vmix) / den;
            cert.cross_check_omega = w;
            cert.cross_check_rel_err = std::fabs(r_flow / r_closed - 1.0);
        }
    }

    cert.all_pass = any && rows_pass && cert.limit_row.pass &&
                    (!(cert.cross_check_rel_err > 1e-6));
    return cert;
}

std::string ContractionCertificate::to_text() const {
    std::ostringstream os;
    os << "contraction certificate\n"
       << "  dim = " << dim << ", exponents " << exponents.to_string() << "\n"
       << "  grid: " << grid_size << " points on (0,2), margin " << fmt_short(margin)
       << ", excluded " << excluded_count << "\n"
       << "  mu = " << fmt_short(mu) << ", reference level mu^-4 = " << fmt_short(mu_pow_m4)
       << "\n"
       << "  min exponent  = " << fmt_short(min_exponent) << "\n"
       << "  max stable    = " << fmt_short(max_stable) << "\n"
       << "  min unstable  = " << fmt_short(min_unstable) << "\n"
       << "  max |s*u - 1| = " << fmt_short(max_duality_gap) << "\n"
       << "  limit row (omega=0): e = " << fmt_short(limit_row.e_omega)
       << ", stable = " << fmt_short(limit_row.stable_factor)
       << ", word = " << limit_row.word << ", pass = " << (limit_row.pass ? "yes" : "no")
       << "\n"
       << "  transported-vector check at omega = " << fmt_short(cross_check_omega)
       << ": rel err = " << fmt_short(cross_check_rel_err) << "\n"
       << "  verdict: " << (all_pass ? "PASS" : "FAIL") << "\n";
    return os.str();
}

void ContractionCertificate::write_csv(std::ostream& os) const {
    os << "# contraction certificate: dim=" << dim << " exponents=" << exponents.to_string()
       << "\n";
    os << "# excluded rows keep only omega and carry the reason in the word column\n";
    os << "omega,e_omega,stable_factor,unstable_factor,return_time,word\n";
    auto put = [&os](const CertRow& row) {
        if (row.excluded) {
            os << fmt_g(row.omega) << ",,,,,excluded: " << row.note << "\n";
            return;
        }
        os << fmt_g(row.omega) << "," << fmt_g(row.e_omega) << "," << fmt_g(row.stable_factor)
           << "," << fmt_g(row.unstable_factor) << "," << fmt_g(row.return_time) << ","
           << row.word << "\n";
    };
    put(limit_row);
    for (const auto& row : rows) put(row);
    os << "# summary: rows=" << grid_size << " excluded=" << excluded_count
       << " min_exponent=" << fmt_g(min_exponent) << " max_stable=" << fmt_g(max_stable)
       << " min_unstable=" << fmt_g(min_unstable) << " mu^-4=" << fmt_g(mu_pow_m4)
       << " result=" << (all_pass ? "PASS" : "FAIL") << "\n";
}

// ---------------------------------------------------------------------------
// Mixed transitions
// ---------------------------------------------------------------------------

MixedReport certify_mixed_transitions(const FlowParams& P, const SectionConfig& cfg,
                                      const ExponentTuple& e) {
    cfg.validate();
    e.validate();
    const FiberMetric fm(e, 4);
    const double mu = fm.mu();

    MixedReport rep;
    bool s00 = false, s0i = false, si0 = false, sii = false;

    auto word_and_desc = [](MixedRow& row, const ReturnRecord& rec) {
        row.start_desc = rec.start.to_string();
        row.end_desc = rec.end.to_string();
        row.return_time = rec.return_time;
        row.exponent = rec.exponent;
        row.stable_factor = rec.stable_factor;
        row.word = rec.homotopy_word.to_string();
    };

    // S0 -> S0: a generic outer start away from the capture basin.
    {
        MixedRow row;
        row.kind = "S0->S0";
        ReturnRecord rec = return_map(outer_point(0.37, 0.0), P, cfg, e);
        word_and_desc(row, rec);
        row.ok = rec.end.piece == Piece::S0 && rec.exponent > 0 && rec.stable_factor < 1.0 &&
                 is_diagram_walk(rec.path) && rec.c_count == 4;
        row.note = "full 4-gluing loop";
        s00 = row.ok;
        rep.rows.push_back(std::move(row));
    }

    // S0 -> Si: enter just beside the separatrix; the orbit lingers in the
    // eps-ball long enough to cross a fiber level there.
    {
        MixedRow row;
        row.kind = "S0->Si";
        ReturnRecord rec = return_map(outer_point(1.0 + 2e-5, 0.0), P, cfg, e);
        word_and_desc(row, rec);
        row.ok = rec.end.piece != Piece::S0 && rec.exponent > 0 && rec.stable_factor < 1.0 &&
                 is_diagram_walk(rec.path);
        row.note = "captured by the disc section";
        s0i = row.ok;
        rep.rows.push_back(std::move(row));
    }

    // Si -> Si: the closed loops over every saddle, plus one off-center start.
    for (int i = 1; i <= 4; ++i) {
        MixedRow row;
        row.kind = "Si->Si";
        ReturnRecord rec = return_map(disc_point(i, 0.0, 0.0), P, cfg, e);
        word_and_desc(row, rec);
        row.expected_factor = std::pow(mu, -double(e.t0) * rec.return_time);
        row.ok = rec.end.piece == rec.start.piece &&
                 std::fabs(rec.stable_factor - row.expected_factor) <= 1e-6;
        row.note = "disc-center loop, one fiber revolution";
        sii = sii || row.ok;
        rep.rows.push_back(std::move(row));
    }
    {
        MixedRow row;
        row.kind = "Si->Si";
        ReturnRecord rec = return_map(disc_point(1, 1e-3, 0.0), P, cfg, e);
        word_and_desc(row, rec);
        row.expected_factor = std::pow(mu, -double(e.t0) * rec.return_time);
        row.ok = rec.end.piece == rec.start.piece &&
                 std::fabs(rec.stable_factor - row.expected_factor) <= 1e-6;
        row.note = "off-center start lingering in the plateau";
        rep.rows.push_back(std::move(row));
    }

    // Si -> S0: leave the disc along the unstable axis and ride out to the
    // outer torus of copy 1 again.
    {
        MixedRow row;
        row.kind = "Si->S0";
        ReturnRecord rec = return_map(disc_point(1, 0.03, 0.0), P, cfg, e);
        word_and_desc(row, rec);
        row.ok = rec.end.piece == Piece::S0 && rec.exponent > 0 && rec.stable_factor < 1.0 &&
                 is_diagram_walk(rec.path);
        row.note = "disc exit along the unstable axis";
        si0 = row.ok;
        rep.rows.push_back(std::move(row));
    }

    // Degenerate tuple: with every exponent zero the representation is
    // trivial, the metric is flat, and the certificate fails as expected.
    {
        MixedRow row;
        row.kind = "Si->Si t0=0";
        ExponentTuple zero;
        ReturnRecord rec = return_map(disc_point(2, 0.0, 0.0), P, cfg, zero);
        word_and_desc(row, rec);
        row.expected_factor = 1.0;
        row.ok = rec.exponent == 0 && std::fabs(rec.stable_factor - 1.0) <= 1e-12 &&
                 std::fabs(rec.unstable_factor - 1.0) <= 1e-12;
        row.note = "degenerate tuple: factor 1, certificate fails as expected";
        rep.rows.push_back(std::move(row));
    }

    rep.covered_all_kinds = s00 && s0i && si0 && sii;
    rep.all_ok = rep.covered_all_kinds;
    for (const auto& row : rep.rows) rep.all_ok = rep.all_ok && row.ok;
    return rep;
}

std::string MixedReport::to_text() const {
    std::ostringstream os;
    os << "mixed-transition certificate\n";
    for (const auto& row : rows) {
        os << "  [" << (row.ok ? "ok" : "FAIL") << "] " << row.kind << ": " << row.start_desc
           << " -> " << row.end_desc << ", time " << fmt_short(row.return_time)
           << ", exponent " << row.exponent << ", stable " << fmt_short(row.stable_factor);
        if (row.expected_factor >= 0.0) os << " (expected " << fmt_short(row.expected_factor) << ")";
        if (!row.word.empty()) os << ", word " << row.word;
        os << " -- " << row.note << "\n";
    }
    os << "  coverage: " << (covered_all_kinds ? "all four transition kinds" : "INCOMPLETE")
       << "\n"
       << "  verdict: " << (all_ok ? "PASS" : "FAIL") << "\n";
    return os.str();
}

}  // namespace blflow

// blflow: drives the library end to end from config files.
//
// Commands
//   verify-rep      exact relator + spectral/splitting checks of the integer rep
//   holonomy        deviation table and closed-form vs integrated boundary maps
//   certify         time constants, contraction certificate, transition closure
//   trace           integrate one band orbit and dump/plot it
//   solve-exponents enumerate integer tuples compatible with the relators
//
// Exit codes: 0 success, 1 verification failure (first violated invariant is
// named on stderr), 2 malformed config / CLI input.

#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "blflow/base_flow.hpp"
#include "blflow/config.hpp"
#include "blflow/errors.hpp"
#include "blflow/fiber_metric.hpp"
#include "blflow/group_rep.hpp"
#include "blflow/holonomy.hpp"
#include "blflow/params.hpp"
#include "blflow/report.hpp"
#include "blflow/sections.hpp"

namespace {

using namespace blflow;

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    int grid = 0;              // 0 = keep config value
    bool svg = false;          // flag only turns it on
    std::uint64_t seed = 0;
    bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "config file (key = value lines)");
    cmd->add_option("--out", o.out_dir, "output directory (default from config)");
    cmd->add_option("--grid", o.grid, "grid size override");
    cmd->add_flag("--svg", o.svg, "also emit SVG plots");
    cmd->add_option("--seed", o.seed, "RNG seed override")->each([&](const std::string&) {
        o.seed_set = true;
    });
}

RunConfig make_config(const CommonOpts& o) {
    RunConfig cfg = o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
    if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
    if (o.grid > 0) cfg.grid = o.grid;
    if (o.svg) cfg.svg = true;
    if (o.seed_set) cfg.seed = o.seed;
    cfg.validate();
    ensure_dir(cfg.out_dir);
    // Record the effective config next to the reports so every run is
    // reproducible from its own output directory.
    open_out(cfg.out_dir + "/config_used.txt") << cfg.to_text();
    return cfg;
}

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const VerifyError& e) {
        std::cerr << "verification failure: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

// ---------------------------------------------------------------------------
// verify-rep
// ---------------------------------------------------------------------------

int cmd_verify_rep(const RunConfig& cfg) {
    const Representation rep = build_representation(cfg.exponents, cfg.d);
    const GroupPresentation& pres = default_presentation();

    std::ostringstream report;
    report << "exponents: " << cfg.exponents.to_string() << "\n";
    report << "dimension: " << cfg.d << "\n\n";

    const RelatorReport rel = check_relators(rep, pres);
    report << rel.to_text() << "\n";

    // The block identities behind the relator algebra, checked exactly.
    auto [C, D] = build_blocks();
    const IntMatrix Cd = block_replicate(C, cfg.d);
    const IntMatrix Dd = block_replicate(D, cfg.d);
    const bool d_sq = (Dd * Dd).is_identity();
    const bool conj = Dd.inverse() * Cd * Dd == Cd.inverse();
    report << "D^2 = I: " << (d_sq ? "pass" : "FAIL") << "\n";
    report << "D^-1 C D = C^-1: " << (conj ? "pass" : "FAIL") << "\n";

    const SpectralReport spec = spectral_check(rep.image("c"));
    report << "\nspectrum of rho(c):\n" << spec.to_text();

    // All generator combinations that must be simultaneously hyperbolic.
    std::vector<IntMatrix> list;
    for (int i = 1; i <= 4; ++i) {
        const std::string k = std::to_string(i);
        list.push_back(eval_word(rep, parse_word("th" + k)));
        list.push_back(eval_word(rep, parse_word("a" + k + "*b" + k)));
        list.push_back(eval_word(rep, parse_word("a" + k + "*b" + k + "^-1")));
    }
    list.push_back(rep.image("c"));
    std::string splitting_failure;
    try {
        const CommonSplitting split = common_splitting(list);
        report << "\ncommon splitting: stable dim " << split.stable.cols() << ", unstable dim "
               << split.unstable.cols() << " over " << list.size() << " matrices\n";
    } catch (const VerifyError& e) {
        splitting_failure = e.what();
        report << "\ncommon splitting: FAIL (" << splitting_failure << ")\n";
    }

    const std::string text = report.str();
    open_out(cfg.out_dir + "/rep_report.txt") << text;
    std::cout << text;

    if (!rel.all_pass) {
        for (const auto& row : rel.rows)
            if (!row.pass) throw VerifyError("relator '" + row.name + "' does not hold");
    }
    if (!d_sq) throw VerifyError("D^2 = I fails");
    if (!conj) throw VerifyError("D^-1 C D = C^-1 fails");
    if (!spec.hyperbolic) throw NotHyperbolic("rho(c) is not hyperbolic");
    if (!splitting_failure.empty()) throw VerifyError(splitting_failure);
    std::cout << "verify-rep: PASS\n";
    return 0;
}

// ---------------------------------------------------------------------------
// holonomy
// ---------------------------------------------------------------------------

int cmd_holonomy(const RunConfig& cfg) {
    const FlowParams& P = cfg.flow;
    const DeviationTable table(P, 4.0 / cfg.grid, cfg.grid_margin);
    {
        auto os = open_out(cfg.out_dir + "/deviation.csv");
        write_deviation_csv(os, table);
    }

    // Uniform probe grid over one period; rows grazing a separatrix are
    // excluded (flagged, not failed) by the verifier itself.
    std::vector<double> omegas;
    omegas.reserve(std::size_t(cfg.grid));
    for (int k = 0; k < cfg.grid; ++k)
        omegas.push_back(-2.0 + 4.0 * (k + 0.5) / cfg.grid);

    std::vector<HolonomyReport> reports;
    double max_err = 0.0;
    int excluded = 0;
    for (int i = 1; i <= 4; ++i) {
        reports.push_back(verify_holonomy_against_flow(i, omegas, P, cfg.grid_margin));
        max_err = std::max(max_err, reports.back().max_err);
        excluded += reports.back().excluded_count;
    }
    {
        auto os = open_out(cfg.out_dir + "/holonomy.csv");
        write_holonomy_csv(os, reports);
    }

    if (cfg.svg) {
        SvgSeries fbar;
        fbar.color = "#1f77b4";
        const auto& g = table.grid();
        const auto& v = table.values();
        for (std::size_t k = 0; k < g.size(); ++k) fbar.points.emplace_back(g[k], v[k]);
        auto os = open_out(cfg.out_dir + "/deviation.svg");
        write_svg_plot(os, {fbar}, "boundary deviation f-bar(omega)");
    }

    const double tol = 10.0 * P.ode_tol;
    std::cout << "holonomy: copies 1..4, grid " << cfg.grid << ", max |closed - flow| = "
              << csv_num(max_err) << " (tol " << csv_num(tol) << "), excluded rows " << excluded
              << "\n";
    if (max_err > tol)
        throw VerifyError("closed-form vs flow discrepancy " + csv_num(max_err) +
                          " exceeds 10*ode_tol = " + csv_num(tol));
    std::cout << "holonomy: PASS\n";
    return 0;
}

// ---------------------------------------------------------------------------
// certify
// ---------------------------------------------------------------------------

int cmd_certify(const RunConfig& cfg) {
    const FlowParams& P = cfg.flow;
    const TimeConstants tc = measure_time_constants(P, cfg.section);
    open_out(cfg.out_dir + "/time_constants.txt") << tc.to_text();
    std::cout << tc.to_text();

    const std::vector<double> grid = contraction_grid(cfg.grid, cfg.grid_margin);
    // Throws SignViolation if the deviation has the wrong sign anywhere.
    const ContractionCertificate cert =
        certify_contraction(grid, cfg.d, cfg.exponents, P, cfg.section);
    {
        auto os = open_out(cfg.out_dir + "/certificate.csv");
        cert.write_csv(os);
    }
    open_out(cfg.out_dir + "/certificate.txt") << cert.to_text();
    std::cout << cert.to_text();

    const MixedReport mixed = certify_mixed_transitions(P, cfg.section, cfg.exponents);
    open_out(cfg.out_dir + "/mixed.txt") << mixed.to_text();
    std::cout << mixed.to_text();

    // Random section starts: empirical return-time bound and diagram closure.
    std::mt19937 rng(std::uint32_t(cfg.seed));
    std::uniform_real_distribution<double> uw(-2.0, 2.0), uth(0.0, 1.0);
    std::vector<ReturnRecord> recs;
    double max_return = 0.0;
    std::string sweep_violation;
    for (int k = 0; k < cfg.samples; ++k) {
        const SectionPoint p = outer_point(uw(rng), uth(rng));
        if (odd_distance(p.omega) < 1e-6) continue;  // separatrix start, skip
        recs.push_back(return_map(p, P, cfg.section, cfg.exponents));
        const ReturnRecord& r = recs.back();
        max_return = std::max(max_return, r.return_time);
        if (sweep_violation.empty() && r.return_time > tc.bound())
            sweep_violation = "return time " + csv_num(r.return_time) + " at " +
                              p.to_string() + " exceeds bound " + csv_num(tc.bound());
        if (sweep_violation.empty() && !is_diagram_walk(r.path))
            sweep_violation = "transition closure violated at " + p.to_string();
    }
    {
        auto os = open_out(cfg.out_dir + "/returns.csv");
        write_returns_csv(os, recs);
    }
    std::cout << "random sweep: " << recs.size() << " starts, max return time "
              << csv_num(max_return) << " <= bound " << csv_num(tc.bound()) << "\n";

    if (cfg.svg) {
        SvgSeries stable_pts, limit;
        stable_pts.line = false;
        stable_pts.dots = true;
        for (const CertRow& r : cert.rows)
            if (!r.excluded) stable_pts.points.emplace_back(r.omega, r.stable_factor);
        limit.color = "#d62728";
        limit.points = {{0.0, cert.mu_pow_m4}, {2.0, cert.mu_pow_m4}};
        auto os = open_out(cfg.out_dir + "/certificate.svg");
        write_svg_plot(os, {limit, stable_pts}, "stable factor per return vs mu^-4");
    }

    if (!cert.all_pass) {
        if (!cert.limit_row.pass)
            throw VerifyError("limit row (omega -> 0) fails: " + cert.limit_row.note);
        for (const CertRow& r : cert.rows)
            if (!r.excluded && !r.pass)
                throw VerifyError("certificate row omega = " + csv_num(r.omega) +
                                  " fails (e = " + csv_num(r.e_omega) + ", stable = " +
                                  csv_num(r.stable_factor) + ")");
        throw VerifyError("certificate cross-check fails: rel err " +
                          csv_num(cert.cross_check_rel_err));
    }
    if (!mixed.all_ok || !mixed.covered_all_kinds) {
        for (const MixedRow& r : mixed.rows)
            if (!r.ok)
                throw VerifyError("mixed transition " + r.kind + " fails: " + r.note);
        throw VerifyError("mixed transitions did not cover all kinds");
    }
    if (!sweep_violation.empty()) throw VerifyError(sweep_violation);

    std::cout << "certify: PASS (max stable factor " << csv_num(cert.max_stable)
              << " <= " << csv_num(cert.mu_pow_m4 + 1e-6) << ")\n";
    return 0;
}

// ---------------------------------------------------------------------------
// trace
// ---------------------------------------------------------------------------

BandState parse_start(const std::string& text) {
    std::vector<double> parts;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = text.find(',', pos);
        const std::string piece = text.substr(pos, comma == std::string::npos ? std::string::npos
                                                                              : comma - pos);
        errno = 0;
        char* end = nullptr;
        const double x = std::strtod(piece.c_str(), &end);
        if (end == piece.c_str() || *end != '\0' || errno == ERANGE)
            throw ConfigError("bad --start component '" + piece + "' (want x,y[,theta])");
        parts.push_back(x);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (parts.size() < 2 || parts.size() > 3)
        throw ConfigError("--start wants 2 or 3 comma-separated numbers, got " +
                          std::to_string(parts.size()));
    BandState s{parts[0], parts[1], parts.size() == 3 ? parts[2] : 0.0};
    if (std::fabs(s.y) > 1.0) throw ConfigError("start outside the band: |y| > 1");
    const double cell = std::fabs(s.x - 2.0 * std::round(s.x / 2.0));
    if (cell * cell + s.y * s.y < 0.25 * 0.25 - 1e-12)
        throw ConfigError("start inside a removed disc");
    return s;
}

int cmd_trace(const RunConfig& cfg, const std::string& start_text, double max_time) {
    const BandState s0 = parse_start(start_text);
    const FlowParams& P = cfg.flow;

    BandEventSpec spec;
    spec.stop_at_disc = true;
    spec.max_time = max_time > 0.0 ? max_time : P.max_time;
    const OrbitSegment seg = integrate_band(s0, P, spec);
    {
        auto os = open_out(cfg.out_dir + "/orbit.csv");
        write_orbit_csv(os, seg);
    }

    if (cfg.svg) {
        SvgSeries path, marks, endpoints;
        for (const OrbitSample& p : seg.samples) path.points.emplace_back(p.x, p.y);
        marks.line = false;
        marks.dots = true;
        marks.color = "#2ca02c";
        for (std::size_t k = 1; k < seg.samples.size(); ++k) {
            // fiber-section crossings: theta passes an integer level
            if (std::floor(seg.samples[k].theta) != std::floor(seg.samples[k - 1].theta))
                marks.points.emplace_back(seg.samples[k].x, seg.samples[k].y);
        }
        endpoints.line = false;
        endpoints.dots = true;
        endpoints.color = "#d62728";
        if (!seg.samples.empty()) {
            endpoints.points.emplace_back(seg.samples.front().x, seg.samples.front().y);
            endpoints.points.emplace_back(seg.samples.back().x, seg.samples.back().y);
        }
        auto os = open_out(cfg.out_dir + "/orbit.svg");
        write_svg_plot(os, {path, marks, endpoints}, "band orbit (x, y)");
    }

    std::cout << "trace: " << seg.samples.size() << " samples, terminal "
              << to_string(seg.terminal) << " at t = " << csv_num(seg.end_time) << ", end (x, y) = ("
              << csv_num(seg.end.x) << ", " << csv_num(seg.end.y) << "), theta crossings "
              << seg.theta_crossings << "\n";
    if (seg.terminal == TerminalEvent::MaxTime) {
        std::cerr << "trace: max time " << csv_num(spec.max_time)
                  << " hit before a terminal event (partial dump written)\n";
        return 1;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// solve-exponents
// ---------------------------------------------------------------------------

int cmd_solve(const RunConfig& cfg, std::int64_t lo, std::int64_t hi, std::uint64_t limit) {
    if (lo > hi) throw ConfigError("--lo must be <= --hi");
    auto os = open_out(cfg.out_dir + "/solutions.csv");
    os << "t0,t1,t2,t3,t4,m1,m2,m3,m4,n1,n2,n3,n4\n";
    std::uint64_t written = 0;
    bool has_reference = false;
    const ExponentTuple ref = default_exponents();
    const std::uint64_t count = solve_exponents(lo, hi, [&](const ExponentTuple& e) {
        if (e == ref) has_reference = true;
        if (written >= limit) return;
        ++written;
        os << e.t0;
        for (int k = 0; k < 4; ++k) os << "," << e.t[k];
        for (int k = 0; k < 4; ++k) os << "," << e.m[k];
        for (int k = 0; k < 4; ++k) os << "," << e.n[k];
        os << "\n";
    });
    os << "# total " << count << " solutions in [" << lo << ", " << hi << "]^13, wrote " << written
       << "\n";
    std::cout << "solve-exponents: " << count << " relator-compatible tuples in [" << lo << ", "
              << hi << "]^13";
    if (has_reference) std::cout << " (reference tuple included)";
    std::cout << "; first " << written << " written to solutions.csv\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fibrewise hyperbolic flow toolkit: base-flow tracing, boundary holonomy "
                 "checks, integer representation verification, contraction certificates"};
    app.require_subcommand(1);

    CommonOpts o_rep, o_hol, o_cert, o_trace, o_solve;

    CLI::App* rep = app.add_subcommand("verify-rep", "check relators, spectrum, splitting");
    add_common(rep, o_rep);

    CLI::App* hol = app.add_subcommand("holonomy", "deviation table + closed form vs flow");
    add_common(hol, o_hol);

    CLI::App* cert = app.add_subcommand(
        "certify", "time constants, contraction certificate, transition closure");
    add_common(cert, o_cert);

    CLI::App* tr = app.add_subcommand("trace", "integrate one band orbit from --start");
    add_common(tr, o_trace);
    std::string start_text;
    double trace_max_time = 0.0;
    tr->add_option("--start", start_text, "start point x,y[,theta]")->required();
    tr->add_option("--max-time", trace_max_time, "integration horizon (default: config max_time)");

    CLI::App* sol = app.add_subcommand("solve-exponents", "enumerate relator-compatible tuples");
    add_common(sol, o_solve);
    std::int64_t lo = -6, hi = 6;
    std::uint64_t limit = 1000;
    sol->add_option("--lo", lo, "box lower bound (default -6)");
    sol->add_option("--hi", hi, "box upper bound (default 6)");
    sol->add_option("--limit", limit, "max solutions written to CSV (default 1000)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // 0 for --help, 2 for malformed CLI input
    }

    if (rep->parsed()) return guarded([&] { return cmd_verify_rep(make_config(o_rep)); });
    if (hol->parsed()) return guarded([&] { return cmd_holonomy(make_config(o_hol)); });
    if (cert->parsed()) return guarded([&] { return cmd_certify(make_config(o_cert)); });
    if (tr->parsed())
        return guarded([&] { return cmd_trace(make_config(o_trace), start_text, trace_max_time); });
    if (sol->parsed()) return guarded([&] { return cmd_solve(make_config(o_solve), lo, hi, limit); });
    return 2;
}

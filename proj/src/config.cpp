#include "blflow/config.hpp"

#include <array>
#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "blflow/errors.hpp"

namespace blflow {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

double parse_double(const std::string& v, int line, int col) {
    errno = 0;
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0' || errno == ERANGE)
        throw SyntaxError("expected a number, got '" + v + "'", line, col);
    return x;
}

std::int64_t parse_int(const std::string& v, int line, int col) {
    errno = 0;
    char* end = nullptr;
    const long long x = std::strtoll(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0' || errno == ERANGE)
        throw SyntaxError("expected an integer, got '" + v + "'", line, col);
    return static_cast<std::int64_t>(x);
}

std::uint64_t parse_uint(const std::string& v, int line, int col) {
    errno = 0;
    char* end = nullptr;
    const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0' || errno == ERANGE || v.find('-') != std::string::npos)
        throw SyntaxError("expected a non-negative integer, got '" + v + "'", line, col);
    return static_cast<std::uint64_t>(x);
}

bool parse_bool(const std::string& v, int line, int col) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw SyntaxError("expected true|false, got '" + v + "'", line, col);
}

std::array<std::int64_t, 4> parse_int4(const std::string& v, int line, int col) {
    std::array<std::int64_t, 4> out{};
    std::size_t pos = 0;
    for (int k = 0; k < 4; ++k) {
        const std::size_t comma = v.find(',', pos);
        const bool last = (k == 3);
        if (!last && comma == std::string::npos)
            throw SyntaxError("expected 4 comma-separated integers, got '" + v + "'", line, col);
        if (last && comma != std::string::npos)
            throw SyntaxError("expected exactly 4 integers, got '" + v + "'", line, col);
        const std::string piece = trim(v.substr(pos, last ? std::string::npos : comma - pos));
        out[std::size_t(k)] = parse_int(piece, line, col);
        pos = comma + 1;
    }
    return out;
}

std::string fmt_g17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string fmt_int4(const std::int64_t (&a)[4]) {
    std::ostringstream os;
    os << a[0] << "," << a[1] << "," << a[2] << "," << a[3];
    return os.str();
}

}  // namespace

void RunConfig::validate() const {
    flow.validate();
    section.validate();
    if (d < 4 || d % 4 != 0)
        throw ConfigError("d must be a positive multiple of 4, got " + std::to_string(d));
    if (grid < 2) throw ConfigError("grid must be >= 2, got " + std::to_string(grid));
    if (!(grid_margin > 0.0) || !(grid_margin < 1.0))
        throw ConfigError("grid_margin must lie in (0, 1), got " + fmt_g17(grid_margin));
    if (samples < 1) throw ConfigError("samples must be >= 1, got " + std::to_string(samples));
    if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
}

std::string RunConfig::to_text() const {
    std::ostringstream os;
    os << flow.fingerprint();
    os << "eps = " << fmt_g17(section.eps) << "\n";
    os << "delta = " << fmt_g17(section.delta) << "\n";
    os << "t1_multiple = " << fmt_g17(section.t1_multiple) << "\n";
    os << "max_return_time = " << fmt_g17(section.max_return_time) << "\n";
    os << "exp_t0 = " << exponents.t0 << "\n";
    os << "exp_t = " << fmt_int4(exponents.t) << "\n";
    os << "exp_m = " << fmt_int4(exponents.m) << "\n";
    os << "exp_n = " << fmt_int4(exponents.n) << "\n";
    os << "d = " << d << "\n";
    os << "grid = " << grid << "\n";
    os << "grid_margin = " << fmt_g17(grid_margin) << "\n";
    os << "seed = " << seed << "\n";
    os << "samples = " << samples << "\n";
    os << "out_dir = " << out_dir << "\n";
    os << "svg = " << (svg ? "true" : "false") << "\n";
    return os.str();
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream is(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(is, raw)) {
        ++line_no;
        const std::size_t hash = raw.find('#');
        std::string body = hash == std::string::npos ? raw : raw.substr(0, hash);
        if (trim(body).empty()) continue;

        const std::size_t eq = body.find('=');
        if (eq == std::string::npos)
            throw SyntaxError("expected 'key = value'", line_no, int(trim(body).size()));
        const std::string key = trim(body.substr(0, eq));
        const std::string val = trim(body.substr(eq + 1));
        const int vcol = int(eq) + 2;  // 1-based column of the value field
        if (key.empty()) throw SyntaxError("missing key before '='", line_no, 1);
        if (val.empty()) throw SyntaxError("missing value for '" + key + "'", line_no, vcol);

        FlowParams& f = cfg.flow;
        SectionConfig& s = cfg.section;
        if (key == "t") f.t = parse_double(val, line_no, vcol);
        else if (key == "r_alpha_inner") f.r_alpha_inner = parse_double(val, line_no, vcol);
        else if (key == "beta_lo") f.beta_lo = parse_double(val, line_no, vcol);
        else if (key == "beta_hi") f.beta_hi = parse_double(val, line_no, vcol);
        else if (key == "alpha_scale") f.alpha_scale = parse_double(val, line_no, vcol);
        else if (key == "beta_scale") f.beta_scale = parse_double(val, line_no, vcol);
        else if (key == "ode_tol") f.ode_tol = parse_double(val, line_no, vcol);
        else if (key == "event_tol") f.event_tol = parse_double(val, line_no, vcol);
        else if (key == "max_time") f.max_time = parse_double(val, line_no, vcol);
        else if (key == "phi_variant") f.phi_variant = phi_variant_from_string(val);
        else if (key == "bump_profile") f.bump_profile = bump_profile_from_string(val);
        else if (key == "orientation") f.orientation = orientation_from_string(val);
        else if (key == "eps") s.eps = parse_double(val, line_no, vcol);
        else if (key == "delta") s.delta = parse_double(val, line_no, vcol);
        else if (key == "t1_multiple") s.t1_multiple = parse_double(val, line_no, vcol);
        else if (key == "max_return_time") s.max_return_time = parse_double(val, line_no, vcol);
        else if (key == "exp_t0") cfg.exponents.t0 = parse_int(val, line_no, vcol);
        else if (key == "exp_t") {
            const auto a = parse_int4(val, line_no, vcol);
            for (int k = 0; k < 4; ++k) cfg.exponents.t[k] = a[std::size_t(k)];
        } else if (key == "exp_m") {
            const auto a = parse_int4(val, line_no, vcol);
            for (int k = 0; k < 4; ++k) cfg.exponents.m[k] = a[std::size_t(k)];
        } else if (key == "exp_n") {
            const auto a = parse_int4(val, line_no, vcol);
            for (int k = 0; k < 4; ++k) cfg.exponents.n[k] = a[std::size_t(k)];
        } else if (key == "d") cfg.d = int(parse_int(val, line_no, vcol));
        else if (key == "grid") cfg.grid = int(parse_int(val, line_no, vcol));
        else if (key == "grid_margin") cfg.grid_margin = parse_double(val, line_no, vcol);
        else if (key == "seed") cfg.seed = parse_uint(val, line_no, vcol);
        else if (key == "samples") cfg.samples = int(parse_int(val, line_no, vcol));
        else if (key == "out_dir") cfg.out_dir = val;
        else if (key == "svg") cfg.svg = parse_bool(val, line_no, vcol);
        else
            throw SyntaxError("unknown key '" + key + "'", line_no, 1);
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    // SyntaxError already carries line/col in its message; the caller knows
    // the path, so no wrapping here.
    return parse_config_text(buf.str());
}

}  // namespace blflow

#include "blflow/params.hpp"
#include "blflow/errors.hpp"

#include <cstdio>

namespace blflow {

void FlowParams::validate() const {
    if (!(t >= 0.0))
        throw ConfigError("t must be >= 0");
    if (!(r_alpha_inner > 0.0 && r_alpha_inner < 1.0 / 3))
        throw ConfigError("r_alpha_inner must lie strictly inside (0, 1/3)");
    if (!(0.0 < beta_lo && beta_lo < beta_hi && beta_hi < 1.0))
        throw ConfigError("beta band must satisfy 0 < beta_lo < beta_hi < 1");
    if (!(ode_tol > 0.0 && ode_tol <= 1e-3))
        throw ConfigError("ode_tol must lie in (0, 1e-3]");
    if (!(event_tol > 0.0 && event_tol <= 1e-3))
        throw ConfigError("event_tol must lie in (0, 1e-3]");
    if (!(max_time > 0.0))
        throw ConfigError("max_time must be positive");
    if (!(alpha_scale >= 0.0) || !(beta_scale >= 0.0))
        throw ConfigError("alpha_scale and beta_scale must be >= 0");
}

std::string FlowParams::fingerprint() const {
    char buf[640];
    std::snprintf(buf, sizeof buf,
                  "t = %.17g\n"
                  "r_alpha_inner = %.17g\n"
                  "beta_lo = %.17g\n"
                  "beta_hi = %.17g\n"
                  "alpha_scale = %.17g\n"
                  "beta_scale = %.17g\n"
                  "ode_tol = %.17g\n"
                  "event_tol = %.17g\n"
                  "max_time = %.17g\n"
                  "phi_variant = %s\n"
                  "bump_profile = %s\n"
                  "orientation = %s\n",
                  t, r_alpha_inner, beta_lo, beta_hi, alpha_scale, beta_scale,
                  ode_tol, event_tol, max_time,
                  to_string(phi_variant), to_string(bump_profile), to_string(orientation));
    return buf;
}

std::uint64_t FlowParams::hash() const {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : fingerprint()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

const char* to_string(PhiVariant v) {
    return v == PhiVariant::SinWave ? "sin" : "piecewise";
}
const char* to_string(BumpProfile p) {
    return p == BumpProfile::ExpSmooth ? "exp" : "poly";
}
const char* to_string(Orientation o) {
    return o == Orientation::RawField ? "raw" : "positive";
}

PhiVariant phi_variant_from_string(const std::string& s) {
    if (s == "sin") return PhiVariant::SinWave;
    if (s == "piecewise") return PhiVariant::Piecewise;
    throw ConfigError("unknown phi_variant '" + s + "' (expected sin|piecewise)");
}
BumpProfile bump_profile_from_string(const std::string& s) {
    if (s == "exp") return BumpProfile::ExpSmooth;
    if (s == "poly") return BumpProfile::PolySmooth;
    throw ConfigError("unknown bump_profile '" + s + "' (expected exp|poly)");
}
Orientation orientation_from_string(const std::string& s) {
    if (s == "raw") return Orientation::RawField;
    if (s == "positive") return Orientation::PositiveDeviation;
    throw ConfigError("unknown orientation '" + s + "' (expected raw|positive)");
}

} // namespace blflow

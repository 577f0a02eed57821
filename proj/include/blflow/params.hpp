#pragma once
#include <cstdint>
#include <string>

namespace blflow {

// Shape of the horizontal speed profile phi (odd, phi(x+1) = -phi(x)).
enum class PhiVariant {
    SinWave,    // phi(x) = sin(pi x)/2
    Piecewise,  // phi(x) = x/2 near 0, smoothly capped before x = 1/2
};

// Shape used for both the radial alpha cutoff and the beta band bump.
enum class BumpProfile {
    ExpSmooth,  // exp(-1/u) style C-infinity blends
    PolySmooth, // quintic smoothstep cutoff, high-power polynomial bump
};

// Sign of the fiber rotation component.  `PositiveDeviation` is the shipped
// default: it makes the per-crossing fiber deviation nonnegative on the
// omega-interval (0,2), which is what the contraction certificates assume.
// `RawField` keeps the raw sign of the defining formula (the mirror image);
// certificates run with it must fail with a sign violation.
enum class Orientation { RawField, PositiveDeviation };

struct FlowParams {
    double t = 15.0;                 // strength of the beta-band fiber twist
    double r_alpha_inner = 1.0 / 12; // radius of the alpha plateau, < 1/3
    double beta_lo = 0.5;            // beta band support (beta_lo, beta_hi) in |y|
    double beta_hi = 2.0 / 3;
    double alpha_scale = 1.0;        // multiplier on alpha (0 disables the discs)
    double beta_scale = 1.0;         // multiplier on beta
    double ode_tol = 1e-8;           // accuracy budget for orbit quantities
    double event_tol = 1e-9;         // localization tolerance for events / separatrix margin
    double max_time = 1e3;           // integration time cap
    PhiVariant phi_variant = PhiVariant::SinWave;
    BumpProfile bump_profile = BumpProfile::ExpSmooth;
    Orientation orientation = Orientation::PositiveDeviation;

    // Throws ConfigError when a field is outside its documented range.
    void validate() const;

    // Canonical "key = value" listing; two parameter sets produce identical
    // fingerprints iff all fields are bitwise equal.
    std::string fingerprint() const;

    // FNV-1a hash of fingerprint(), used to tag cached deviation tables.
    std::uint64_t hash() const;
};

const char* to_string(PhiVariant v);
const char* to_string(BumpProfile p);
const char* to_string(Orientation o);
PhiVariant phi_variant_from_string(const std::string& s);
BumpProfile bump_profile_from_string(const std::string& s);
Orientation orientation_from_string(const std::string& s);

} // namespace blflow

#pragma once
#include <optional>
#include <vector>

#include "blflow/params.hpp"

namespace blflow {

// Point in the band chart R x [-1,1] minus the open discs of radius 1/4
// centered at the even integers on the x-axis.
struct BandPoint {
    double x = 0.0;
    double y = 0.0;
};

// Band point plus the (unwrapped) fiber angle.
struct BandState {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;
};

// Horizontal speed profile: odd, 2-periodic with phi(x+1) = -phi(x),
// vanishing exactly at the integers.  Evaluated through an exact range
// reduction to [0, 1/2] so the symmetries hold to the last bit.
double phi(double x, PhiVariant variant);

// Smooth steps on [0,1] (0 at 0, 1 at 1).
double smoothstep(double u, BumpProfile profile);

// Rotation speed plateau around the saddles (2k+1, 0): radial profile equal
// to alpha_scale inside r_alpha_inner, 0 outside radius 1/3, sign (-1)^k.
double eval_alpha(double x, double y, const FlowParams& P);

// Band bump in |y|, supported on (beta_lo, beta_hi), peak value beta_scale.
double eval_beta(double u, const FlowParams& P);

// Planar vector field (-phi(x), -y).
void eval_base_field(const BandPoint& p, const FlowParams& P, double& dx, double& dy);

// True when p lies in the band and outside every removed disc (with slack
// `pad` on the disc boundary; pad > 0 admits points slightly inside).
bool in_domain(const BandPoint& p, double pad = 0.0);

// Distance from p to the nearest removed-disc center (2k, 0).
double disc_center_distance(double x, double y, double& cx);

// Distance from p to the nearest saddle (2k+1, 0).
double saddle_distance(double x, double y, double& sx);

// Orbit invariant: the x-coordinate at which the backward orbit meets y = 1
// (y > 0), 2 minus that coordinate for y < 0, and the locally constant
// axis value (+1 / -1 mod 4) for y = 0.  Throws SeparatrixError at the
// saddles and their axis neighborhoods within event_tol.
double eval_omega(const BandPoint& p, const FlowParams& P);

// Reduces a real omega to the centered fundamental window [-2, 2).
double reduce_mod4(double w);

// Fiber component of the flow at p.  With Orientation::RawField this is
// -(alpha + t * beta(|y|) * sin(pi/2 * omega)); PositiveDeviation flips it.
double eval_theta_field(const BandPoint& p, const FlowParams& P);
// Same, with the orbit invariant supplied by the caller.
double eval_theta_field_cached(const BandPoint& p, double omega, const FlowParams& P);

enum class TerminalEvent {
    YLevel,       // requested y level reached
    DiscBoundary, // hit |p - (2k,0)| = 1/4 moving inward
    ThetaInteger, // theta crossed an integer (only when requested)
    MaxTime,      // time cap hit
    DomainExit,   // left the band |y| <= 1
};

const char* to_string(TerminalEvent e);

struct OrbitSample {
    double time;
    double x, y, theta;
    int chart; // copy index, filled by the multi-chart tracer (0 in-band)
};

struct BandEventSpec {
    std::optional<double> y_level;    // stop when y crosses this level
    bool stop_at_disc = true;         // stop on the removed-disc boundary
    bool theta_integer_stop = false;  // stop when theta crosses an integer
    double max_time = 1e3;
    bool record_samples = true;
};

struct OrbitSegment {
    std::vector<OrbitSample> samples;
    TerminalEvent terminal = TerminalEvent::MaxTime;
    double end_time = 0.0;
    BandState end{};
    int theta_crossings = 0; // signed count of integer levels crossed by theta
};

// Integrates the full band field from s0 until the first terminal event.
// The orbit invariant is computed once at s0 and frozen into the fiber
// component (it is constant along orbits).  Internal integration runs three
// orders of magnitude tighter than P.ode_tol so that P.ode_tol is an honest
// budget for derived quantities.
OrbitSegment integrate_band(const BandState& s0, const FlowParams& P, const BandEventSpec& spec);

// Same, but reuses a precomputed orbit invariant for the fiber component.
OrbitSegment integrate_band_cached(const BandState& s0, double omega, const FlowParams& P,
                                   const BandEventSpec& spec);

} // namespace blflow

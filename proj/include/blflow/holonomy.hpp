#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "blflow/base_flow.hpp"
#include "blflow/params.hpp"

namespace blflow {

// Integral of beta(u)/u over the support of beta, by adaptive Simpson
// quadrature (absolute accuracy ~1e-12). This is the per-crossing
// band contribution to the theta displacement, up to the t*sin factor.
double beta_band_integral(const FlowParams& P);

// Total theta-displacement of the orbit entering the band at boundary
// coordinate omega (top edge, theta = 0) and leaving through a disc
// boundary. Defined on reals minus the odd integers; 4-periodic.
// Throws SeparatrixError if omega is within event_tol of an odd integer or
// the orbit fails to reach a disc boundary within max_time.
double deviation_f(double omega, const FlowParams& P);

// Deviation function sampled on a uniform grid over [-2, 2] with nodes near
// the odd integers dropped; lookups interpolate linearly and are extended
// 4-periodically. Immutable after construction.
class DeviationTable {
  public:
    // margin: half-width of the excluded neighborhoods around odd integers.
    // Effective margin is at least 1.5*step so interpolation never straddles
    // a dropped node.
    explicit DeviationTable(const FlowParams& P, double step = 1.0 / 256,
                            double margin = 1e-3);

    // Throws SeparatrixError for arguments inside the excluded margins.
    double operator()(double omega) const;

    const std::vector<double>& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    double margin() const { return margin_; }
    std::uint64_t params_hash() const { return params_hash_; }

  private:
    std::vector<double> grid_;
    std::vector<double> values_;
    double margin_;
    std::uint64_t params_hash_;
};

// A point on one of the boundary tori of the cover, in (omega, theta)
// coordinates. torus_index follows the atlas labeling 1..5 (5 = 1 after the
// full loop); boundary records which side of the gluing the point lives on.
enum class Boundary { Outer, Disc };

struct TorusCoord {
    double omega = 0.0;
    double theta = 0.0;
    int torus_index = 1;
    Boundary boundary = Boundary::Outer;
};

// The gluing A(omega, theta) = (theta, -omega) as a bare coordinate map and
// its inverse; A has order 4.
std::pair<double, double> glue_A(std::pair<double, double> c);
std::pair<double, double> glue_A_inv(std::pair<double, double> c);

// Tagged versions: A maps the outer torus of one copy to the disc torus of
// the same atlas chart; A^{-1} maps a disc torus to the outer torus of the
// next copy. Throws WrongBoundary if the tag does not match.
TorusCoord glue_A(const TorusCoord& c);
TorusCoord glue_A_inv(const TorusCoord& c);

using DeviationFn = std::function<double(double)>;

// (omega, theta) image of the i-fold crossing composite
// A^{-1} h_i ... A^{-1} h_1 acting on (omega, 0), written in the explicit
// nested-deviation form. `f` evaluates the deviation function; the fiber
// coordinate is untouched by construction and therefore not represented.
std::pair<double, double> boundary_holonomy_closed_form(int i, double omega,
                                                        const DeviationFn& f);

// Same composite computed by iterating the single-crossing-plus-gluing step
// (omega, theta) -> (-theta - f(omega), omega). Agrees with the closed form
// whenever f is odd; used as an internal algebra cross-check.
std::pair<double, double> boundary_holonomy_iterated(int i, double omega,
                                                     const DeviationFn& f);

// One crossing of the band by direct integration: enter at the top edge at
// x = omega reduced mod 4 with the given unwrapped theta, integrate to the
// disc boundary. omega_exit returns the entry invariant corrected by the
// integration-grade value of the invariant at the exit point (same branch).
struct CrossingResult {
    double omega_exit = 0.0;
    double theta_exit = 0.0;
    double time = 0.0;
};
CrossingResult integrate_crossing(double omega, double theta0, const FlowParams& P);

struct HolonomyRow {
    double omega = 0.0;
    double closed_omega = 0.0, closed_theta = 0.0;
    double flow_omega = 0.0, flow_theta = 0.0;
    double err = 0.0;
    bool excluded = false;
    std::string note;
};

struct HolonomyReport {
    int copies = 0;
    std::vector<HolonomyRow> rows;
    double max_err = 0.0;  // over non-excluded rows
    int excluded_count = 0;
};

// For each grid omega, traces the orbit across `i` copies of the cover
// (integration + chart transitions) and compares against the closed form
// evaluated with direct-integration deviations. Rows whose nested arguments
// come within `arg_margin` of an odd integer are excluded and flagged, not
// failed.
HolonomyReport verify_holonomy_against_flow(int i, const std::vector<double>& omegas,
                                            const FlowParams& P,
                                            double arg_margin = 1e-3);

// Distance from omega (reduced mod 4) to the nearest odd integer.
double odd_distance(double omega);

}  // namespace blflow

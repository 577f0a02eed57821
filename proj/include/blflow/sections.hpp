#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "blflow/base_flow.hpp"
#include "blflow/group_rep.hpp"
#include "blflow/params.hpp"

namespace blflow {

// ---------------------------------------------------------------------------
// Cross-section geometry
// ---------------------------------------------------------------------------
//
// The cross-section S of the glued-up flow is a disjoint union of five pieces:
//
//   S0          the fiber bundle over the outer boundary torus T1 of copy 1,
//               coordinates (omega, theta);
//   S1..S4      the fiber bundle over a small transverse disc about the closed
//               orbit through the saddle of copy i, cut at integer fiber
//               levels; disc coordinates (u, v), fiber level theta (integer).
//
// Orbits leaving an outer torus cross one covering copy of the band and then
// glue into the next copy; the copies close up in a 4-cycle, so the fifth
// outer torus is T1 again.  Between consecutive tori an orbit may be captured
// by the disc section of the copy it is crossing (it crosses an integer fiber
// level while inside the eps-ball around the saddle).

struct SectionConfig {
    double eps = 0.05;               // disc radius; must sit inside the rotation plateau
    double delta = 1e-3;             // separatrix margin used by certification grids
    double t1_multiple = 20.0;       // T1 = t1_multiple * T0
    double max_return_time = 400.0;  // hard cap before MaxTimeExceeded

    void validate() const;  // throws ConfigError
};

enum class Piece { S0, S1, S2, S3, S4 };

const char* to_string(Piece p);
int piece_index(Piece p);  // 0 for S0, i for Si
Piece disc_piece(int i);   // i in 1..4

struct SectionPoint {
    Piece piece = Piece::S0;
    double omega = 0.0;  // S0 only: boundary coordinate, reduced to [-2, 2)
    double theta = 0.0;  // S0: fiber angle in [0, 1); Si: integer fiber level
    double u = 0.0;      // Si only: offset from the saddle along the axis
    double v = 0.0;      // Si only: transverse offset, u^2 + v^2 <= eps^2
    int frame = 0;       // fiber basis tag: 0 = outer chart frame, i = disc frame of copy i

    void validate(const SectionConfig& cfg) const;  // throws ConfigError
    std::string to_string() const;
};

SectionPoint outer_point(double omega, double theta);
SectionPoint disc_point(int i, double u, double v, double theta_level = 0.0);

// ---------------------------------------------------------------------------
// Transition diagram
// ---------------------------------------------------------------------------
//
// Nodes: outer tori T1..T5 (T5 == T1) and section discs D1..D4.  The only
// transitions the flow can realize are
//   Ti -> Ti+1,   Ti -> Di,   Di -> Di,   Di -> Ti+1.

struct DiagramNode {
    bool disc = false;
    int index = 1;  // torus index 1..5, or disc index 1..4

    friend bool operator==(const DiagramNode&, const DiagramNode&) = default;
};

std::string to_string(const DiagramNode& n);
bool is_diagram_edge(const DiagramNode& a, const DiagramNode& b);
bool is_diagram_walk(const std::vector<DiagramNode>& path);

// Diagram node a section point sits on (S0 -> T1, Si -> Di).
DiagramNode node_of(const SectionPoint& p);

struct TransitionStep {
    DiagramNode from, to;
    double time = 0.0;
};

// Integrates from p until the orbit reaches the next diagram node: either the
// disc section of the copy currently being crossed, or the next outer torus.
// Throws SeparatrixError for starts on a separatrix (within event_tol) and
// MaxTimeExceeded for starts whose forward orbit never leaves (stable set).
TransitionStep classify_transition(const SectionPoint& p, const FlowParams& P,
                                   const SectionConfig& cfg = {});

// ---------------------------------------------------------------------------
// First-return map with homotopy-word bookkeeping
// ---------------------------------------------------------------------------

struct ReturnRecord {
    SectionPoint start, end;
    double return_time = 0.0;

    // Word in the letters th1..th4 and c, in traversal order: each signed
    // integer fiber crossing inside copy i contributes th_i^{+-1}; each gluing
    // into the next copy appends c.  Lower-half crossings are deck images of
    // conjugated inverse fiber loops, which have the same matrix image, so
    // raw band-chart counts are recorded without distinction.
    Word homotopy_word;

    // Quantized metric bookkeeping: the representation sends the word to
    // C^exponent, so the stable unit vector is scaled by mu^{-exponent}.
    std::int64_t exponent = 0;  // t0 * c_count + sum_i t_i * windings[i]
    double stable_factor = 1.0;
    double unstable_factor = 1.0;

    int c_count = 0;
    std::array<std::int64_t, 4> windings{};  // signed fiber crossings per copy

    double end_omega_lift = 0.0;  // unreduced arrival coordinates (S0 arrivals)
    double end_theta_lift = 0.0;

    std::vector<DiagramNode> path;  // diagram nodes visited, start node first
};

// First return of the section point p.  Errors: SeparatrixError (start on a
// separatrix), MaxTimeExceeded (stable-set starts or degenerate parameters).
ReturnRecord return_map(const SectionPoint& p, const FlowParams& P,
                        const SectionConfig& cfg = {},
                        const ExponentTuple& e = default_exponents());

// ---------------------------------------------------------------------------
// Empirical time constants
// ---------------------------------------------------------------------------

struct TimeConstants {
    double t0 = 0.0;  // disc-center return time (one fiber revolution)
    double t1 = 0.0;  // lingering cutoff, t1_multiple * t0
    double t2 = 0.0;  // max single-copy transit over the margin grid + disc exits

    double saddle_rate = 0.0;      // linear expansion rate at the saddle
    double u_star_analytic = 0.0;  // eps * exp(-saddle_rate * t1)
    double u_star_measured = 0.0;  // largest sampled axis offset lingering >= t1

    // (delta, max transit time entering at omega = 1 +- delta); transit grows
    // like |log delta| / saddle_rate as delta -> 0.
    std::vector<std::pair<double, double>> growth;

    double bound() const { return 4.0 * (t1 + 2.0 * t2); }
    std::string to_text() const;
};

// Expansion rate of the base flow at a saddle, from a central difference of
// the horizontal speed profile.
double saddle_expansion_rate(const FlowParams& P);

TimeConstants measure_time_constants(const FlowParams& P, const SectionConfig& cfg = {},
                                     int grid_n = 64);

// ---------------------------------------------------------------------------
// Contraction certificate over S0
// ---------------------------------------------------------------------------

struct CertRow {
    double omega = 0.0;
    bool excluded = false;
    std::string note;

    double e_omega = 0.0;  // metric exponent picked up by one full return
    double stable_factor = 1.0;
    double unstable_factor = 1.0;
    double return_time = 0.0;
    std::string word;

    double formula_vs_chart = 0.0;  // nested formula vs chart-weight difference
    double flow_vs_closed = 0.0;    // traced arrival vs closed-form arrival
    bool pass = false;
};

struct ContractionCertificate {
    int dim = 4;
    ExponentTuple exponents;
    int grid_size = 0;
    double margin = 0.0;

    std::vector<CertRow> rows;
    CertRow limit_row;  // omega = 0: the 4-gluing boundary orbit, exponent 4*t0

    int excluded_count = 0;
    double max_stable = 0.0;
    double min_unstable = 0.0;
    double min_exponent = 0.0;
    double max_duality_gap = 0.0;  // max |stable * unstable - 1|
    double mu = 0.0;
    double mu_pow_m4 = 0.0;  // reference contraction level mu^-4

    double cross_check_omega = 0.0;  // transported-vector validation at one omega
    double cross_check_rel_err = 0.0;

    bool all_pass = false;

    std::string to_text() const;
    void write_csv(std::ostream& os) const;
};

// Uniform grid of n points on (0 + margin, 2 - margin), endpoints included.
std::vector<double> contraction_grid(int n, double margin);

// For each grid omega (all in (0,2), away from the separatrix by the margin),
// computes the exponent e(omega) accumulated by the full S0 -> S0 return in
// the chart weights, the stable/unstable factors mu^{-e}, mu^{+e} measured on
// the unit stable/unstable vectors, and the traced return (time, word).  Rows
// whose nested deviation arguments graze a separatrix are excluded and
// reported.  Throws SignViolation when the deviation is negative beyond
// sign_tol at a grid point; throws ConfigError for grids outside (0,2).
ContractionCertificate certify_contraction(const std::vector<double>& omegas, int d,
                                           const ExponentTuple& e, const FlowParams& P,
                                           const SectionConfig& cfg = {},
                                           bool parallel = true, double sign_tol = 1e-9);

// ---------------------------------------------------------------------------
// Mixed-transition certificate
// ---------------------------------------------------------------------------

struct MixedRow {
    std::string kind;  // "S0->S0", "S0->Si", "Si->S0", "Si->Si", "Si->Si t0=0"
    std::string start_desc, end_desc;
    double return_time = 0.0;
    std::int64_t exponent = 0;
    double stable_factor = 1.0;
    double expected_factor = -1.0;  // < 0 when no closed-form expectation applies
    std::string word;
    bool ok = false;
    std::string note;
};

struct MixedReport {
    std::vector<MixedRow> rows;
    bool covered_all_kinds = false;
    bool all_ok = false;

    std::string to_text() const;
};

// Samples all four transition kinds and checks the corresponding factors:
// disc loops must contract by mu^{-T*t0} per revolution, mixed legs must
// report a strictly positive exponent (factor <= 1), and the degenerate
// all-zero tuple must produce factor exactly 1 (a failing certificate).
MixedReport certify_mixed_transitions(const FlowParams& P, const SectionConfig& cfg = {},
                                      const ExponentTuple& e = default_exponents());

}  // namespace blflow

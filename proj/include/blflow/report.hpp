#pragma once
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "blflow/base_flow.hpp"
#include "blflow/holonomy.hpp"
#include "blflow/sections.hpp"

namespace blflow {

// %.17g, enough digits to round-trip a double.  Every CSV writer goes through
// this so identical inputs produce byte-identical files.
std::string csv_num(double x);

// Creates dir (and parents) if needed; ConfigError on failure.
void ensure_dir(const std::string& dir);

// Binary-mode ofstream (no platform newline translation); ConfigError if the
// file cannot be opened.
std::ofstream open_out(const std::string& path);

// time,x,y,theta,chart rows plus a trailing "# terminal:" comment.
void write_orbit_csv(std::ostream& os, const OrbitSegment& seg);

// omega,f rows of the sampled deviation function.
void write_deviation_csv(std::ostream& os, const DeviationTable& table);

// copies,omega,closed_omega,closed_theta,flow_omega,flow_theta,err,excluded,note
// rows, one block per report, plus a "# summary:" line.
void write_holonomy_csv(std::ostream& os, const std::vector<HolonomyReport>& reports);

// One row per first-return record: start/end section points, time, word,
// exponent, factors.
void write_returns_csv(std::ostream& os, const std::vector<ReturnRecord>& recs);

// ---------------------------------------------------------------------------
// Minimal SVG plotting (enough for f-bar graphs and orbit pictures)
// ---------------------------------------------------------------------------

struct SvgSeries {
    std::vector<std::pair<double, double>> points;
    std::string color = "#1f77b4";
    bool dots = false;        // draw circle markers at the points
    bool line = true;         // connect the points with a polyline
    double stroke_width = 1.2;
};

// One coordinate frame auto-scaled to the data, light axes through zero,
// title on top.  Deterministic output (fixed formatting, no timestamps).
void write_svg_plot(std::ostream& os, const std::vector<SvgSeries>& series,
                    const std::string& title, int px_w = 800, int px_h = 520);

}  // namespace blflow

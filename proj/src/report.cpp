#include "blflow/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>

#include "blflow/errors.hpp"

namespace blflow {

std::string csv_num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create directory '" + dir + "': " + ec.message());
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot open '" + path + "' for writing");
    return os;
}

void write_orbit_csv(std::ostream& os, const OrbitSegment& seg) {
    os << "time,x,y,theta,chart\n";
    for (const OrbitSample& p : seg.samples) {
        os << csv_num(p.time) << "," << csv_num(p.x) << "," << csv_num(p.y) << ","
           << csv_num(p.theta) << "," << p.chart << "\n";
    }
    os << "# terminal: " << to_string(seg.terminal) << " end_time=" << csv_num(seg.end_time)
       << " theta_crossings=" << seg.theta_crossings << "\n";
}

void write_deviation_csv(std::ostream& os, const DeviationTable& table) {
    os << "omega,f\n";
    const auto& g = table.grid();
    const auto& v = table.values();
    for (std::size_t k = 0; k < g.size(); ++k)
        os << csv_num(g[k]) << "," << csv_num(v[k]) << "\n";
}

void write_holonomy_csv(std::ostream& os, const std::vector<HolonomyReport>& reports) {
    os << "copies,omega,closed_omega,closed_theta,flow_omega,flow_theta,err,excluded,note\n";
    for (const HolonomyReport& rep : reports) {
        for (const HolonomyRow& r : rep.rows) {
            os << rep.copies << "," << csv_num(r.omega) << "," << csv_num(r.closed_omega) << ","
               << csv_num(r.closed_theta) << "," << csv_num(r.flow_omega) << ","
               << csv_num(r.flow_theta) << "," << csv_num(r.err) << "," << (r.excluded ? 1 : 0)
               << "," << r.note << "\n";
        }
        os << "# summary: copies=" << rep.copies << " rows=" << rep.rows.size()
           << " max_err=" << csv_num(rep.max_err) << " excluded=" << rep.excluded_count << "\n";
    }
}

void write_returns_csv(std::ostream& os, const std::vector<ReturnRecord>& recs) {
    os << "start,end,return_time,exponent,stable_factor,unstable_factor,word\n";
    for (const ReturnRecord& r : recs) {
        // Point descriptions contain commas, so those two fields are quoted.
        os << '"' << r.start.to_string() << "\",\"" << r.end.to_string() << "\","
           << csv_num(r.return_time)
           << "," << r.exponent << "," << csv_num(r.stable_factor) << ","
           << csv_num(r.unstable_factor) << "," << r.homotopy_word.to_string() << "\n";
    }
}

namespace {

std::string px(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

}  // namespace

void write_svg_plot(std::ostream& os, const std::vector<SvgSeries>& series,
                    const std::string& title, int px_w, int px_h) {
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const SvgSeries& s : series) {
        for (auto [x, y] : s.points) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    }
    if (!(xmin <= xmax)) { xmin = 0.0; xmax = 1.0; }  // no points at all
    if (!(ymin <= ymax)) { ymin = 0.0; ymax = 1.0; }
    if (xmax - xmin < 1e-12) { xmin -= 0.5; xmax += 0.5; }
    if (ymax - ymin < 1e-12) { ymin -= 0.5; ymax += 0.5; }

    const double mL = 50, mR = 15, mT = 30, mB = 35;
    const double W = px_w - mL - mR, H = px_h - mT - mB;
    auto X = [&](double x) { return mL + (x - xmin) / (xmax - xmin) * W; };
    auto Y = [&](double y) { return mT + (ymax - y) / (ymax - ymin) * H; };

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px_w << "\" height=\"" << px_h
       << "\" viewBox=\"0 0 " << px_w << " " << px_h << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << px_w / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\" "
          "font-family=\"sans-serif\">"
       << title << "</text>\n";
    // frame
    os << "<rect x=\"" << px(mL) << "\" y=\"" << px(mT) << "\" width=\"" << px(W) << "\" height=\""
       << px(H) << "\" fill=\"none\" stroke=\"#999\"/>\n";
    // zero axes, when in range
    if (ymin < 0.0 && ymax > 0.0)
        os << "<line x1=\"" << px(mL) << "\" y1=\"" << px(Y(0)) << "\" x2=\"" << px(mL + W)
           << "\" y2=\"" << px(Y(0)) << "\" stroke=\"#ccc\"/>\n";
    if (xmin < 0.0 && xmax > 0.0)
        os << "<line x1=\"" << px(X(0)) << "\" y1=\"" << px(mT) << "\" x2=\"" << px(X(0))
           << "\" y2=\"" << px(mT + H) << "\" stroke=\"#ccc\"/>\n";
    // corner labels with the data range
    os << "<text x=\"" << px(mL) << "\" y=\"" << px_h - 8 << "\" font-size=\"11\" "
          "font-family=\"sans-serif\">x: ["
       << csv_num(xmin) << ", " << csv_num(xmax) << "]</text>\n";
    os << "<text x=\"" << px(mL) << "\" y=\"" << px(mT - 6) << "\" font-size=\"11\" "
          "font-family=\"sans-serif\">y: ["
       << csv_num(ymin) << ", " << csv_num(ymax) << "]</text>\n";

    for (const SvgSeries& s : series) {
        if (s.line && s.points.size() > 1) {
            os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\""
               << px(s.stroke_width) << "\" points=\"";
            for (auto [x, y] : s.points) os << px(X(x)) << "," << px(Y(y)) << " ";
            os << "\"/>\n";
        }
        if (s.dots) {
            for (auto [x, y] : s.points)
                os << "<circle cx=\"" << px(X(x)) << "\" cy=\"" << px(Y(y))
                   << "\" r=\"2.5\" fill=\"" << s.color << "\"/>\n";
        }
    }
    os << "</svg>\n";
}

}  // namespace blflow

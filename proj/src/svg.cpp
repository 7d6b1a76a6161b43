#include "ecopt/error.hpp"
#include "ecopt/report.hpp"
#include "ecopt/text_io.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ecopt {

namespace {

constexpr double kWidth = 640.0, kHeight = 480.0;
constexpr double kLeft = 70.0, kRight = 20.0, kTop = 40.0, kBottom = 60.0;
constexpr int kTicks = 5;

std::string coord(double v) { return io::format_double(std::round(v * 100.0) / 100.0, 10); }

std::string escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

struct Axis {
    double lo, hi;

    Axis(double a, double b) : lo(a), hi(b) {
        if (!(hi > lo)) {
            const double pad = std::max(1.0, std::abs(lo)) * 0.5;
            lo -= pad;
            hi += pad;
        } else {
            const double pad = (hi - lo) * 0.05;
            lo -= pad;
            hi += pad;
        }
    }
    double frac(double v) const { return (v - lo) / (hi - lo); }
};

}  // namespace

std::string diagram_svg(const std::vector<DiagramPoint>& points, const std::string& title) {
    if (points.empty()) throw DataError("effort diagram has no candidates");
    double wmin = points[0].w, wmax = wmin, pmin = points[0].pci, pmax = pmin;
    for (const auto& p : points) {
        wmin = std::min(wmin, p.w);
        wmax = std::max(wmax, p.w);
        pmin = std::min(pmin, p.pci);
        pmax = std::max(pmax, p.pci);
    }
    const Axis ax(wmin, wmax), ay(pmin, pmax);
    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto sx = [&](double w) { return kLeft + ax.frac(w) * pw; };
    auto sy = [&](double pci) { return kTop + (1.0 - ay.frac(pci)) * ph; };

    std::ostringstream o;
    o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n"
      << "<text x=\"" << coord(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"15\">"
      << escape(title) << "</text>\n";

    o << "<g id=\"axes\" stroke=\"black\" stroke-width=\"1\" font-family=\"sans-serif\" font-size=\"11\">\n"
      << "<line x1=\"" << coord(kLeft) << "\" y1=\"" << coord(kTop + ph) << "\" x2=\"" << coord(kLeft + pw)
      << "\" y2=\"" << coord(kTop + ph) << "\"/>\n"
      << "<line x1=\"" << coord(kLeft) << "\" y1=\"" << coord(kTop) << "\" x2=\"" << coord(kLeft) << "\" y2=\""
      << coord(kTop + ph) << "\"/>\n";
    for (int i = 0; i <= kTicks; ++i) {
        const double f = static_cast<double>(i) / kTicks;
        const double xv = ax.lo + f * (ax.hi - ax.lo), yv = ay.lo + f * (ay.hi - ay.lo);
        const double px = kLeft + f * pw, py = kTop + (1.0 - f) * ph;
        o << "<line x1=\"" << coord(px) << "\" y1=\"" << coord(kTop + ph) << "\" x2=\"" << coord(px) << "\" y2=\""
          << coord(kTop + ph + 5) << "\"/>\n"
          << "<text stroke=\"none\" x=\"" << coord(px) << "\" y=\"" << coord(kTop + ph + 18)
          << "\" text-anchor=\"middle\">" << io::format_double(xv, 3) << "</text>\n"
          << "<line x1=\"" << coord(kLeft - 5) << "\" y1=\"" << coord(py) << "\" x2=\"" << coord(kLeft) << "\" y2=\""
          << coord(py) << "\"/>\n"
          << "<text stroke=\"none\" x=\"" << coord(kLeft - 8) << "\" y=\"" << coord(py + 4)
          << "\" text-anchor=\"end\">" << io::format_double(yv, 3) << "</text>\n";
    }
    o << "<text stroke=\"none\" x=\"" << coord(kLeft + pw / 2) << "\" y=\"" << coord(kHeight - 15)
      << "\" text-anchor=\"middle\" font-size=\"13\">Effort W (added RCA)</text>\n"
      << "<text stroke=\"none\" x=\"18\" y=\"" << coord(kTop + ph / 2) << "\" text-anchor=\"middle\" font-size=\"13\" "
      << "transform=\"rotate(-90 18 " << coord(kTop + ph / 2) << ")\">Future PCI</text>\n"
      << "</g>\n";

    // Unselected first so highlighted marks are drawn on top.
    o << "<g id=\"candidates\" fill=\"#9e9e9e\" fill-opacity=\"0.7\">\n";
    for (const auto& p : points)
        if (!p.selected)
            o << "<circle class=\"mark\" cx=\"" << coord(sx(p.w)) << "\" cy=\"" << coord(sy(p.pci))
              << "\" r=\"3\"><title>" << escape(p.id) << "</title></circle>\n";
    o << "</g>\n<g id=\"selected\" fill=\"#1f5fd6\">\n";
    for (const auto& p : points)
        if (p.selected)
            o << "<circle class=\"mark selected\" cx=\"" << coord(sx(p.w)) << "\" cy=\"" << coord(sy(p.pci))
              << "\" r=\"4\"><title>" << escape(p.id) << "</title></circle>\n";
    o << "</g>\n</svg>\n";
    return o.str();
}

void emit_diagram_svg(const std::vector<DiagramPoint>& points, const std::string& title,
                      const std::filesystem::path& path) {
    io::write_file(path, diagram_svg(points, title));
}

}  // namespace ecopt

#pragma once
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "optit/util/require.hpp"

namespace optit {

// Minimal SVG writer; enough for line charts and arrow grids.
class SvgWriter {
 public:
  SvgWriter(double width, double height) : w_(width), h_(height) {}

  void line(double x1, double y1, double x2, double y2, const std::string& color,
            double stroke = 1.0) {
    body_ << "<line x1=\"" << fmt(x1) << "\" y1=\"" << fmt(y1) << "\" x2=\"" << fmt(x2)
          << "\" y2=\"" << fmt(y2) << "\" stroke=\"" << color << "\" stroke-width=\""
          << fmt(stroke) << "\"/>\n";
  }

  void rect(double x, double y, double w, double h, const std::string& fill,
            const std::string& stroke = "none", double stroke_width = 1.0) {
    body_ << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(w)
          << "\" height=\"" << fmt(h) << "\" fill=\"" << fill << "\" stroke=\"" << stroke
          << "\" stroke-width=\"" << fmt(stroke_width) << "\"/>\n";
  }

  void circle(double cx, double cy, double r, const std::string& fill) {
    body_ << "<circle cx=\"" << fmt(cx) << "\" cy=\"" << fmt(cy) << "\" r=\"" << fmt(r)
          << "\" fill=\"" << fill << "\"/>\n";
  }

  void polyline(const std::string& points, const std::string& color, double stroke = 1.5) {
    body_ << "<polyline points=\"" << points << "\" fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"" << fmt(stroke) << "\"/>\n";
  }

  void polygon(const std::string& points, const std::string& fill) {
    body_ << "<polygon points=\"" << points << "\" fill=\"" << fill << "\"/>\n";
  }

  void text(double x, double y, const std::string& s, double size = 12,
            const std::string& color = "#222", const std::string& anchor = "start") {
    body_ << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" font-size=\"" << fmt(size)
          << "\" font-family=\"sans-serif\" fill=\"" << color << "\" text-anchor=\"" << anchor
          << "\">" << escape(s) << "</text>\n";
  }

  void comment(const std::string& s) { body_ << "<!-- " << s << " -->\n"; }

  void save(const std::string& path) const {
    std::ofstream os(path);
    require(os.good(), "SvgWriter: cannot open " + path);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(w_) << "\" height=\""
       << fmt(h_) << "\" viewBox=\"0 0 " << fmt(w_) << " " << fmt(h_) << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << body_.str() << "</svg>\n";
  }

  static std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
  }

 private:
  static std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
      if (c == '<') out += "&lt;";
      else if (c == '>') out += "&gt;";
      else if (c == '&') out += "&amp;";
      else out += c;
    }
    return out;
  }

  double w_, h_;
  std::ostringstream body_;
};

}  // namespace optit

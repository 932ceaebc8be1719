#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "newslean/error.hpp"

namespace newslean {

struct Bar {
  std::string label;
  double value = 0;  // in [0, 1]
};

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Vertical bar chart on a fixed [0, 1] axis, written as standalone SVG.
inline void write_bar_chart_svg(const std::vector<Bar>& bars, const std::string& title,
                                const std::filesystem::path& path, const std::string& config_hash = "") {
  const int bar_w = 48;
  const int gap = 24;
  const int left = 60;
  const int top = 40;
  const int plot_h = 300;
  const int width = left + static_cast<int>(bars.size()) * (bar_w + gap) + gap;
  const int height = top + plot_h + 140;

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  if (!config_hash.empty()) out << "<!-- config_hash=" << config_hash << " -->\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << std::max(width, 320) << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<text x=\"" << left << "\" y=\"20\" font-size=\"14\">" << xml_escape(title) << "</text>\n";
  for (int tick = 0; tick <= 10; tick += 2) {
    const double y = top + plot_h - plot_h * tick / 10.0;
    out << "<line x1=\"" << left - 4 << "\" x2=\"" << width << "\" y1=\"" << y << "\" y2=\"" << y
        << "\" stroke=\"#ddd\"/>\n";
    out << "<text x=\"" << left - 8 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << tick / 10.0
        << "</text>\n";
  }
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double v = std::clamp(bars[i].value, 0.0, 1.0);
    const int x = left + gap + static_cast<int>(i) * (bar_w + gap);
    const double h = plot_h * v;
    char value[16];
    std::snprintf(value, sizeof(value), "%.3f", bars[i].value);
    out << "<rect x=\"" << x << "\" y=\"" << top + plot_h - h << "\" width=\"" << bar_w << "\" height=\"" << h
        << "\" fill=\"#4878a8\"/>\n";
    out << "<text x=\"" << x + bar_w / 2 << "\" y=\"" << top + plot_h - h - 4 << "\" text-anchor=\"middle\">"
        << value << "</text>\n";
    out << "<text transform=\"translate(" << x + bar_w / 2 << "," << top + plot_h + 12
        << ") rotate(45)\">" << xml_escape(bars[i].label) << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace newslean

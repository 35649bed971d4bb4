#include "modalcur/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace modalcur::svg {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(ch);
    }
  }
  return out;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

const char* kPalette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"};

}  // namespace

std::string heatmap(const Eigen::MatrixXd& values, const std::vector<std::string>& labels, const std::string& title) {
  const auto n = values.rows();
  if (values.cols() != n || static_cast<Eigen::Index>(labels.size()) != n)
    throw std::invalid_argument("heatmap needs a square matrix and one label per row");
  const int cell = 60;
  const int margin = 60;
  const int width = margin + static_cast<int>(n) * cell + 20;
  const int height = margin + static_cast<int>(n) * cell + 20;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  out << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
      << escape(title) << "</text>\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = margin + static_cast<int>(i) * cell;
    out << "<text x=\"" << margin - 8 << "\" y=\"" << y + cell / 2 + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" << escape(labels[static_cast<std::size_t>(i)])
        << "</text>\n";
    out << "<text x=\"" << margin + static_cast<int>(i) * cell + cell / 2 << "\" y=\"" << margin - 8
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
        << escape(labels[static_cast<std::size_t>(i)]) << "</text>\n";
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = std::clamp(values(i, j), 0.0, 1.0);
      const int shade = static_cast<int>(255.0 * (1.0 - v) + 0.5);
      const int x = margin + static_cast<int>(j) * cell;
      out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\"rgb("
          << shade << ',' << shade << ',' << shade << ")\" stroke=\"#888\"/>\n";
      out << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << (v > 0.5 ? "#fff" : "#000")
          << "\">" << fixed(values(i, j), 2) << "</text>\n";
    }
  }
  out << "</svg>\n";
  return out.str();
}

std::string bar_chart(const std::vector<std::string>& categories, const std::vector<Series>& series,
                      const std::string& title, double y_max) {
  if (series.empty()) throw std::invalid_argument("bar chart needs at least one series");
  for (const auto& s : series)
    if (s.values.size() != categories.size()) throw std::invalid_argument("series length must match categories");
  if (!(y_max > 0.0)) throw std::invalid_argument("y_max must be > 0");
  const int plot_h = 240;
  const int bar_w = 18;
  const int group_gap = 16;
  const int left = 60;
  const int top = 40;
  const int group_w = static_cast<int>(series.size()) * bar_w + group_gap;
  const int width = left + static_cast<int>(categories.size()) * group_w + 160;
  const int height = top + plot_h + 80;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  out << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
      << escape(title) << "</text>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h
      << "\" stroke=\"#000\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << width - 150 << "\" y2=\"" << top + plot_h
      << "\" stroke=\"#000\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = y_max * k / 4.0;
    const int y = top + plot_h - plot_h * k / 4;
    out << "<text x=\"" << left - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
        << fixed(v, 2) << "</text>\n";
  }
  for (std::size_t c = 0; c < categories.size(); ++c) {
    const int gx = left + group_gap / 2 + static_cast<int>(c) * group_w;
    for (std::size_t s = 0; s < series.size(); ++s) {
      const double v = std::clamp(series[s].values[c], 0.0, y_max);
      const int h = static_cast<int>(plot_h * v / y_max + 0.5);
      out << "<rect x=\"" << gx + static_cast<int>(s) * bar_w << "\" y=\"" << top + plot_h - h << "\" width=\"" << bar_w - 2
          << "\" height=\"" << h << "\" fill=\"" << kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))] << "\"/>\n";
    }
    const int lx = gx + static_cast<int>(series.size()) * bar_w / 2;
    out << "<text x=\"" << lx << "\" y=\"" << top + plot_h + 14 << "\" text-anchor=\"end\" transform=\"rotate(-45 " << lx << ' '
        << top + plot_h + 14 << ")\" font-family=\"sans-serif\" font-size=\"10\">" << escape(categories[c]) << "</text>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const int y = top + 10 + static_cast<int>(s) * 18;
    out << "<rect x=\"" << width - 140 << "\" y=\"" << y - 10 << "\" width=\"12\" height=\"12\" fill=\""
        << kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))] << "\"/>\n";
    out << "<text x=\"" << width - 122 << "\" y=\"" << y << "\" font-family=\"sans-serif\" font-size=\"11\">"
        << escape(series[s].name) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace modalcur::svg

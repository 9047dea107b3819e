#include "stratalloc/plots.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "stratalloc/error.hpp"

namespace stratalloc {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kMargin = 50.0;
const char* const kColors[] = {"#4477aa", "#ee6677", "#228833", "#ccbb44", "#66ccee", "#aa3377"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

void open_svg(std::ostringstream& os, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
     << "</text>\n"
     << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\"" << kWidth - kMargin << "\" y2=\""
     << kHeight - kMargin << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin << "\" y2=\"" << kHeight - kMargin
     << "\" stroke=\"black\"/>\n";
}

void legend(std::ostringstream& os, const std::vector<Series>& series) {
  for (std::size_t s = 0; s < series.size(); ++s) {
    const double y = kMargin + 14.0 * static_cast<double>(s);
    os << "<rect x=\"" << kWidth - kMargin - 90 << "\" y=\"" << y - 9 << "\" width=\"10\" height=\"10\" fill=\""
       << kColors[s % 6] << "\"/>\n"
       << "<text x=\"" << kWidth - kMargin - 75 << "\" y=\"" << y << "\" font-size=\"11\">" << escape(series[s].name)
       << "</text>\n";
  }
}

double max_of(const std::vector<Series>& series) {
  double m = 0.0;
  for (const auto& s : series) {
    for (double v : s.values) {
      if (std::isfinite(v)) m = std::max(m, v);
    }
  }
  return m > 0.0 ? m : 1.0;
}

}  // namespace

std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<Series>& series) {
  std::ostringstream os;
  open_svg(os, title);
  const double top = max_of(series);
  const double plot_w = kWidth - 2 * kMargin;
  const double plot_h = kHeight - 2 * kMargin;
  const double group_w = labels.empty() ? plot_w : plot_w / static_cast<double>(labels.size());
  const double bar_w = group_w * 0.8 / static_cast<double>(std::max<std::size_t>(series.size(), 1));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double x0 = kMargin + group_w * static_cast<double>(i) + group_w * 0.1;
    for (std::size_t s = 0; s < series.size(); ++s) {
      const double v = i < series[s].values.size() ? series[s].values[i] : 0.0;
      const double h = std::isfinite(v) ? plot_h * std::max(v, 0.0) / top : 0.0;
      os << "<rect x=\"" << num(x0 + bar_w * static_cast<double>(s)) << "\" y=\"" << num(kHeight - kMargin - h)
         << "\" width=\"" << num(bar_w) << "\" height=\"" << num(h) << "\" fill=\"" << kColors[s % 6] << "\"/>\n";
    }
    os << "<text x=\"" << num(x0 + group_w * 0.4) << "\" y=\"" << kHeight - kMargin + 15
       << "\" text-anchor=\"middle\" font-size=\"10\">" << escape(labels[i]) << "</text>\n";
  }
  os << "<text x=\"" << kMargin - 5 << "\" y=\"" << kMargin << "\" text-anchor=\"end\" font-size=\"10\">" << num(top)
     << "</text>\n";
  legend(os, series);
  os << "</svg>\n";
  return os.str();
}

std::string svg_line_chart(const std::string& title, const std::vector<double>& x, const std::vector<Series>& series) {
  std::ostringstream os;
  open_svg(os, title);
  const double top = max_of(series);
  double x_lo = x.empty() ? 0.0 : *std::min_element(x.begin(), x.end());
  double x_hi = x.empty() ? 1.0 : *std::max_element(x.begin(), x.end());
  if (x_hi <= x_lo) x_hi = x_lo + 1.0;
  const double plot_w = kWidth - 2 * kMargin;
  const double plot_h = kHeight - 2 * kMargin;
  for (std::size_t s = 0; s < series.size(); ++s) {
    os << "<polyline fill=\"none\" stroke=\"" << kColors[s % 6] << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < x.size() && i < series[s].values.size(); ++i) {
      const double px = kMargin + plot_w * (x[i] - x_lo) / (x_hi - x_lo);
      const double py = kHeight - kMargin - plot_h * series[s].values[i] / top;
      os << num(px) << "," << num(py) << " ";
    }
    os << "\"/>\n";
  }
  os << "<text x=\"" << kMargin << "\" y=\"" << kHeight - kMargin + 15 << "\" font-size=\"10\">" << num(x_lo)
     << "</text>\n"
     << "<text x=\"" << kWidth - kMargin << "\" y=\"" << kHeight - kMargin + 15
     << "\" text-anchor=\"end\" font-size=\"10\">" << num(x_hi) << "</text>\n"
     << "<text x=\"" << kMargin - 5 << "\" y=\"" << kMargin << "\" text-anchor=\"end\" font-size=\"10\">" << num(top)
     << "</text>\n";
  legend(os, series);
  os << "</svg>\n";
  return os.str();
}

Table histogram_table(const std::vector<double>& values, int bins) {
  if (bins < 1) throw InvalidArgument("histogram needs at least one bin");
  Table t({"BIN_LOW", "BIN_HIGH", "COUNT"});
  if (values.empty()) return t;
  const double lo = *std::min_element(values.begin(), values.end());
  const double hi = *std::max_element(values.begin(), values.end());
  if (hi == lo) {
    t.add_row({format_number(lo), format_number(hi), format_count(static_cast<long long>(values.size()))});
    return t;
  }
  std::vector<long long> counts(static_cast<std::size_t>(bins), 0);
  const double width = (hi - lo) / bins;
  for (double v : values) {
    auto b = static_cast<std::size_t>((v - lo) / width);
    counts[std::min(b, counts.size() - 1)] += 1;
  }
  for (int b = 0; b < bins; ++b) {
    t.add_row({format_number(lo + width * b), format_number(b + 1 == bins ? hi : lo + width * (b + 1)),
               format_count(counts[static_cast<std::size_t>(b)])});
  }
  return t;
}

void write_plot(const std::string& dir, const std::string& stem, const Table& data, const std::string& svg) {
  const std::filesystem::path base(dir);
  write_csv((base / (stem + ".csv")).string(), data);
  std::ofstream out(base / (stem + ".svg"), std::ios::binary);
  out << svg;
}

}  // namespace stratalloc

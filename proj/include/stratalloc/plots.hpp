#pragma once

#include <string>
#include <vector>

#include "stratalloc/csv.hpp"

namespace stratalloc {

struct Series {
  std::string name;
  std::vector<double> values;
};

// Minimal static SVG renderings of plot data; the CSV written next to them is
// the data of record.
std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<Series>& series);
std::string svg_line_chart(const std::string& title, const std::vector<double>& x, const std::vector<Series>& series);

// Histogram of values with `bins` equal-width bins as a table BIN_LOW,
// BIN_HIGH, COUNT. A constant input gives one bin holding every value.
Table histogram_table(const std::vector<double>& values, int bins);

// Writes <stem>.csv and <stem>.svg under dir.
void write_plot(const std::string& dir, const std::string& stem, const Table& data, const std::string& svg);

}  // namespace stratalloc

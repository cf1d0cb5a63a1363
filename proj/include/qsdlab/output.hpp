#pragma once

// CSV and SVG emitters. Numbers are printed with %.17g so that a CSV is a
// byte-exact function of the values that produced it.

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace qsdlab::output {

std::string format_number(double v);  // "nan" and "inf" spelled out

using Cell = std::variant<double, long long, std::string>;

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  // Throws UsageError unless the row has one cell per column.
  void add_row(std::vector<Cell> row);
  std::size_t rows() const { return rows_.size(); }
  std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::string> rows_;
};

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;  // NaN entries break the polyline
};

struct VerticalMarker {
  double x;
  std::string label;
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
};

std::string svg_chart(const ChartSpec& spec, const std::vector<Series>& series,
                      const std::vector<VerticalMarker>& markers = {});

// Creates parent directories. Throws Error on I/O failure.
void write_text(const std::filesystem::path& path, const std::string& content);

}  // namespace qsdlab::output

#include "qsdlab/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "qsdlab/error.hpp"

namespace qsdlab::output {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string escape_csv(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string escape_xml(const std::string& s) {
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

std::string fixed(double v, int digits = 2) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
  if (header_.empty()) throw UsageError("CSV table needs at least one column");
}

void CsvTable::add_row(std::vector<Cell> row) {
  if (row.size() != header_.size()) throw UsageError("CSV row width does not match the header");
  std::string line;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) line += ',';
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, double>) line += format_number(v);
          else if constexpr (std::is_same_v<T, long long>) line += std::to_string(v);
          else line += escape_csv(v);
        },
        row[i]);
  }
  rows_.push_back(std::move(line));
}

std::string CsvTable::str() const {
  std::string out;
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (i) out += ',';
    out += escape_csv(header_[i]);
  }
  out += '\n';
  for (const auto& r : rows_) out += r + '\n';
  return out;
}

void CsvTable::write(const std::filesystem::path& path) const { write_text(path, str()); }

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw Error("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw Error("write to " + path.string() + " failed");
}

std::string svg_chart(const ChartSpec& spec, const std::vector<Series>& series,
                      const std::vector<VerticalMarker>& markers) {
  constexpr double W = 720, H = 440, L = 70, R = 160, T = 40, B = 60;
  const double pw = W - L - R, ph = H - T - B;
  auto tx = [&](double x) { return spec.log_x ? std::log10(x) : x; };

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (spec.log_x && s.x[i] <= 0) continue;
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  y0 = std::min(y0, 0.0);
  if (y1 <= y0) y1 = y0 + 1;
  y1 += 0.05 * (y1 - y0);
  auto px = [&](double x) { return L + (tx(x) - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return T + (1 - (y - y0) / (y1 - y0)) * ph; };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::string o;
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(W, 0) + "\" height=\"" + fixed(H, 0) +
       "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o += "<text x=\"" + fixed(W / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
       escape_xml(spec.title) + "</text>\n";
  o += "<rect x=\"" + fixed(L) + "\" y=\"" + fixed(T) + "\" width=\"" + fixed(pw) + "\" height=\"" + fixed(ph) +
       "\" fill=\"none\" stroke=\"black\"/>\n";

  for (int k = 0; k <= 5; ++k) {
    double fx = x0 + (x1 - x0) * k / 5, fy = y0 + (y1 - y0) * k / 5;
    double vx = spec.log_x ? std::pow(10.0, fx) : fx;
    double sx = L + pw * k / 5, sy = T + ph * (1 - k / 5.0);
    o += "<line x1=\"" + fixed(sx) + "\" y1=\"" + fixed(T + ph) + "\" x2=\"" + fixed(sx) + "\" y2=\"" +
         fixed(T + ph + 5) + "\" stroke=\"black\"/>\n";
    o += "<text x=\"" + fixed(sx) + "\" y=\"" + fixed(T + ph + 18) + "\" text-anchor=\"middle\">" +
         tick_label(vx) + "</text>\n";
    o += "<line x1=\"" + fixed(L - 5) + "\" y1=\"" + fixed(sy) + "\" x2=\"" + fixed(L) + "\" y2=\"" + fixed(sy) +
         "\" stroke=\"black\"/>\n";
    o += "<text x=\"" + fixed(L - 8) + "\" y=\"" + fixed(sy + 4) + "\" text-anchor=\"end\">" + tick_label(fy) +
         "</text>\n";
  }
  o += "<text x=\"" + fixed(L + pw / 2) + "\" y=\"" + fixed(H - 15) + "\" text-anchor=\"middle\">" +
       escape_xml(spec.x_label) + "</text>\n";
  o += "<text x=\"18\" y=\"" + fixed(T + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
       fixed(T + ph / 2) + ")\">" + escape_xml(spec.y_label) + "</text>\n";

  for (const auto& m : markers) {
    if (spec.log_x && m.x <= 0) continue;
    double mx = px(m.x);
    if (mx < L || mx > L + pw) continue;
    o += "<line x1=\"" + fixed(mx) + "\" y1=\"" + fixed(T) + "\" x2=\"" + fixed(mx) + "\" y2=\"" + fixed(T + ph) +
         "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
    o += "<text x=\"" + fixed(mx + 3) + "\" y=\"" + fixed(T + 12) + "\" fill=\"gray\">" + escape_xml(m.label) +
         "</text>\n";
  }

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* c = colors[si % std::size(colors)];
    std::string pts;
    auto flush = [&] {
      if (!pts.empty())
        o += "<polyline fill=\"none\" stroke=\"" + std::string(c) + "\" stroke-width=\"1.5\" points=\"" + pts +
             "\"/>\n";
      pts.clear();
    };
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (spec.log_x && s.x[i] <= 0)) {
        flush();
        continue;
      }
      if (!pts.empty()) pts += ' ';
      pts += fixed(px(s.x[i])) + "," + fixed(py(s.y[i]));
      o += "<circle cx=\"" + fixed(px(s.x[i])) + "\" cy=\"" + fixed(py(s.y[i])) + "\" r=\"2\" fill=\"" + c +
           "\"/>\n";
    }
    flush();
    double ly = T + 14 + 18.0 * si;
    o += "<line x1=\"" + fixed(L + pw + 12) + "\" y1=\"" + fixed(ly) + "\" x2=\"" + fixed(L + pw + 32) +
         "\" y2=\"" + fixed(ly) + "\" stroke=\"" + c + "\" stroke-width=\"2\"/>\n";
    o += "<text x=\"" + fixed(L + pw + 36) + "\" y=\"" + fixed(ly + 4) + "\">" + escape_xml(s.name) + "</text>\n";
  }
  o += "</svg>\n";
  return o;
}

}  // namespace qsdlab::output

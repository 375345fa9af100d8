#include "swarmlearn/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace swarmlearn {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 72.0;
constexpr double kRight = 170.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 56.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

const char* color(std::size_t i) { return kPalette[i % (sizeof kPalette / sizeof *kPalette)]; }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct Axis {
  double lo = 0.0, hi = 1.0;
  bool log = false;

  void include(double v) {
    if (!std::isfinite(v) || (log && v <= 0.0)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (lo > hi) lo = log ? 1.0 : 0.0, hi = log ? 10.0 : 1.0;
    if (log) lo = std::log10(lo), hi = std::log10(hi);
    if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
    const double pad = 0.04 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  double frac(double v) const { return ((log ? std::log10(v) : v) - lo) / (hi - lo); }
  double value_at(double f) const {
    const double t = lo + f * (hi - lo);
    return log ? std::pow(10.0, t) : t;
  }
};

Axis empty_axis(bool log = false) {
  Axis a;
  a.lo = std::numeric_limits<double>::infinity();
  a.hi = -std::numeric_limits<double>::infinity();
  a.log = log;
  return a;
}

double px(const Axis& a, double v) { return kLeft + a.frac(v) * (kWidth - kLeft - kRight); }
double py(const Axis& a, double v) { return kHeight - kBottom - a.frac(v) * (kHeight - kTop - kBottom); }

void header(std::ostringstream& out, const PlotLabels& labels) {
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(labels.title)
      << "</text>\n";
}

void frame(std::ostringstream& out, const PlotLabels& labels, const Axis* x, const Axis& y) {
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  out << "<rect x=\"" << x0 << "\" y=\"" << y1 << "\" width=\"" << x1 - x0 << "\" height=\"" << y0 - y1
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double f = t / 4.0;
    const double yy = y0 - f * (y0 - y1);
    out << "<line x1=\"" << x0 - 4 << "\" y1=\"" << num(yy) << "\" x2=\"" << x0 << "\" y2=\"" << num(yy)
        << "\" stroke=\"black\"/>\n<text x=\"" << x0 - 6 << "\" y=\"" << num(yy + 4) << "\" text-anchor=\"end\">"
        << tick(y.value_at(f)) << "</text>\n";
    if (x) {
      const double xx = x0 + f * (x1 - x0);
      out << "<line x1=\"" << num(xx) << "\" y1=\"" << y0 << "\" x2=\"" << num(xx) << "\" y2=\"" << y0 + 4
          << "\" stroke=\"black\"/>\n<text x=\"" << num(xx) << "\" y=\"" << y0 + 18 << "\" text-anchor=\"middle\">"
          << tick(x->value_at(f)) << "</text>\n";
    }
  }
  out << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 14 << "\" text-anchor=\"middle\">"
      << xml_escape(labels.x) << "</text>\n"
      << "<text transform=\"translate(18 " << (y0 + y1) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << xml_escape(labels.y) << "</text>\n";
}

void legend(std::ostringstream& out, const std::vector<std::string>& names) {
  const double x = kWidth - kRight + 14;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double y = kTop + 10 + 18.0 * static_cast<double>(i);
    out << "<line x1=\"" << x << "\" y1=\"" << y << "\" x2=\"" << x + 18 << "\" y2=\"" << y << "\" stroke=\""
        << color(i) << "\" stroke-width=\"2\"/>\n<text x=\"" << x + 24 << "\" y=\"" << y + 4 << "\">"
        << xml_escape(names[i]) << "</text>\n";
  }
}

}  // namespace

std::string xml_escape(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default:
        if (static_cast<unsigned char>(c) >= 0x20 || c == '\n' || c == '\t') out += c;
    }
  }
  return out;
}

std::string svg_line_plot(const std::vector<LineSeries>& series, const PlotLabels& labels) {
  Axis x = empty_axis(), y = empty_axis(labels.log_y);
  for (const LineSeries& s : series) {
    for (double v : s.x) x.include(v);
    for (double v : s.y) y.include(v);
    for (double v : s.lower) y.include(v);
    for (double v : s.upper) y.include(v);
  }
  x.finish();
  y.finish();

  std::ostringstream out;
  header(out, labels);
  std::vector<std::string> names;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const LineSeries& s = series[k];
    names.push_back(s.label);
    const std::size_t m = std::min(s.x.size(), s.y.size());
    const auto ok = [&](double v) { return std::isfinite(v) && (!y.log || v > 0.0); };
    if (s.lower.size() == m && s.upper.size() == m && m > 0) {
      out << "<polygon fill=\"" << color(k) << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < m; ++i)
        if (ok(s.upper[i])) out << num(px(x, s.x[i])) << ',' << num(py(y, s.upper[i])) << ' ';
      for (std::size_t i = m; i-- > 0;)
        if (ok(s.lower[i])) out << num(px(x, s.x[i])) << ',' << num(py(y, s.lower[i])) << ' ';
      out << "\"/>\n";
    }
    out << "<polyline fill=\"none\" stroke=\"" << color(k) << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < m; ++i)
      if (ok(s.y[i])) out << num(px(x, s.x[i])) << ',' << num(py(y, s.y[i])) << ' ';
    out << "\"/>\n";
  }
  frame(out, labels, &x, y);
  legend(out, names);
  out << "</svg>\n";
  return out.str();
}

std::string svg_box_plot(const std::vector<BoxGroup>& groups, const PlotLabels& labels) {
  Axis y = empty_axis(labels.log_y);
  for (const BoxGroup& g : groups) {
    y.include(g.stats.min);
    y.include(g.stats.max);
  }
  y.finish();

  std::ostringstream out;
  header(out, labels);
  const double x0 = kLeft, x1 = kWidth - kRight;
  const double slot = (x1 - x0) / static_cast<double>(std::max<std::size_t>(groups.size(), 1));
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const BoxStats& b = groups[i].stats;
    const double cx = x0 + slot * (static_cast<double>(i) + 0.5);
    const double w = std::min(40.0, slot * 0.5);
    out << "<line x1=\"" << num(cx) << "\" y1=\"" << num(py(y, b.min)) << "\" x2=\"" << num(cx) << "\" y2=\""
        << num(py(y, b.max)) << "\" stroke=\"black\"/>\n"
        << "<rect x=\"" << num(cx - w / 2) << "\" y=\"" << num(py(y, b.q3)) << "\" width=\"" << num(w)
        << "\" height=\"" << num(std::max(0.0, py(y, b.q1) - py(y, b.q3))) << "\" fill=\"" << color(0)
        << "\" fill-opacity=\"0.35\" stroke=\"black\"/>\n"
        << "<line x1=\"" << num(cx - w / 2) << "\" y1=\"" << num(py(y, b.median)) << "\" x2=\"" << num(cx + w / 2)
        << "\" y2=\"" << num(py(y, b.median)) << "\" stroke=\"" << color(1) << "\" stroke-width=\"2\"/>\n";
    for (double v : {b.min, b.max})
      out << "<line x1=\"" << num(cx - w / 4) << "\" y1=\"" << num(py(y, v)) << "\" x2=\"" << num(cx + w / 4)
          << "\" y2=\"" << num(py(y, v)) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << num(cx) << "\" y=\"" << kHeight - kBottom + 18 << "\" text-anchor=\"middle\">"
        << xml_escape(groups[i].label) << "</text>\n";
  }
  frame(out, labels, nullptr, y);
  out << "</svg>\n";
  return out.str();
}

std::string svg_heatmap(const Heatmap& map, const PlotLabels& labels) {
  const std::size_t rows = map.row_labels.size(), cols = map.col_labels.size();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& v : map.values)
    if (v && std::isfinite(*v) && !(map.flag_above && *v > *map.flag_above)) lo = std::min(lo, *v), hi = std::max(hi, *v);
  if (lo > hi) lo = 0.0, hi = 1.0;
  if (hi - lo < 1e-12) hi = lo + 1.0;

  std::ostringstream out;
  header(out, labels);
  out << "<defs><pattern id=\"hatch\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\">"
      << "<path d=\"M0,6 L6,0\" stroke=\"#999\"/></pattern></defs>\n";
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kTop, y1 = kHeight - kBottom;
  const double cw = (x1 - x0) / static_cast<double>(std::max<std::size_t>(cols, 1));
  const double ch = (y1 - y0) / static_cast<double>(std::max<std::size_t>(rows, 1));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t idx = r * cols + c;
      const auto v = idx < map.values.size() ? map.values[idx] : std::nullopt;
      std::string fill = "url(#hatch)";
      std::string text;
      if (v && std::isfinite(*v)) {
        text = tick(*v);
        if (map.flag_above && *v > *map.flag_above) {
          fill = "white";
        } else {
          // light yellow to dark blue
          const double f = (*v - lo) / (hi - lo);
          char buf[16];
          std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(255 - 220 * f),
                        static_cast<int>(250 - 170 * f), static_cast<int>(200 - 60 * f));
          fill = buf;
        }
      }
      const double x = x0 + cw * static_cast<double>(c), y = y0 + ch * static_cast<double>(r);
      out << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(cw) << "\" height=\"" << num(ch)
          << "\" fill=\"" << fill << "\" stroke=\"#444\"/>\n";
      if (!text.empty())
        out << "<text x=\"" << num(x + cw / 2) << "\" y=\"" << num(y + ch / 2 + 4) << "\" text-anchor=\"middle\">"
            << text << "</text>\n";
    }
  }
  for (std::size_t c = 0; c < cols; ++c)
    out << "<text x=\"" << num(x0 + cw * (static_cast<double>(c) + 0.5)) << "\" y=\"" << y1 + 18
        << "\" text-anchor=\"middle\">" << xml_escape(map.col_labels[c]) << "</text>\n";
  for (std::size_t r = 0; r < rows; ++r)
    out << "<text x=\"" << x0 - 6 << "\" y=\"" << num(y0 + ch * (static_cast<double>(r) + 0.5) + 4)
        << "\" text-anchor=\"end\">" << xml_escape(map.row_labels[r]) << "</text>\n";
  out << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 14 << "\" text-anchor=\"middle\">"
      << xml_escape(labels.x) << "</text>\n"
      << "<text transform=\"translate(18 " << (y0 + y1) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << xml_escape(labels.y) << "</text>\n</svg>\n";
  return out.str();
}

std::string svg_trajectory(const Trajectory& traj, const PlotLabels& labels) {
  Axis x = empty_axis(), y = empty_axis();
  for (const SwarmState& z : traj.snapshots)
    for (Index i = 0; i < z.rows(); ++i) x.include(z(i, 0)), y.include(z(i, 1));
  x.finish();
  y.finish();
  // equal aspect
  const double sx = (x.hi - x.lo) / (kWidth - kLeft - kRight), sy = (y.hi - y.lo) / (kHeight - kTop - kBottom);
  if (sx > sy) {
    const double mid = (y.lo + y.hi) / 2, half = (y.hi - y.lo) / 2 * sx / sy;
    y.lo = mid - half, y.hi = mid + half;
  } else {
    const double mid = (x.lo + x.hi) / 2, half = (x.hi - x.lo) / 2 * sy / sx;
    x.lo = mid - half, x.hi = mid + half;
  }

  std::ostringstream out;
  header(out, labels);
  const Index n = traj.robots();
  for (Index i = 0; i < n; ++i) {
    const char* c = color(static_cast<std::size_t>(i));
    out << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1\" points=\"";
    for (const SwarmState& z : traj.snapshots) out << num(px(x, z(i, 0))) << ',' << num(py(y, z(i, 1))) << ' ';
    out << "\"/>\n";
    if (!traj.snapshots.empty()) {
      const SwarmState& last = traj.snapshots.back();
      out << "<circle cx=\"" << num(px(x, last(i, 0))) << "\" cy=\"" << num(py(y, last(i, 1)))
          << "\" r=\"3\" fill=\"" << c << "\"/>\n";
    }
  }
  frame(out, labels, &x, y);
  out << "</svg>\n";
  return out.str();
}

}  // namespace swarmlearn

#include "divebias/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "divebias/ingest.hpp"

namespace divebias {

namespace fs = std::filesystem;

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 600.0;
constexpr double kLeft = 150.0;
constexpr double kRight = 30.0;
constexpr double kTop = 50.0;
constexpr double kBottom = 60.0;

std::string num(double v) {
  std::string s = fmt::format("{:.2f}", v);
  if (s == "-0.00") s = "0.00";
  return s;
}

std::string escape(std::string_view s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

struct Scale {
  double lo, hi, px_lo, px_hi;
  double operator()(double v) const { return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo); }
};

// Roughly five round-numbered ticks covering [lo, hi].
std::vector<double> ticks(double lo, double hi) {
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (const double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) out.push_back(std::abs(t) < 1e-12 ? 0.0 : t);
  return out;
}

std::string svg_open(std::string_view title) {
  return fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\">\n<rect width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"28\" font-size=\"18\" text-anchor=\"middle\">{3}</text>\n",
      kWidth, kHeight, num(kWidth / 2), escape(title));
}

void x_axis(std::string& svg, const Scale& sx, double y, std::string_view label) {
  svg += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n", num(sx.px_lo), num(y),
                     num(sx.px_hi), num(y));
  for (const double t : ticks(sx.lo, sx.hi)) {
    const double px = sx(t);
    svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", num(px), num(y),
                       num(y + 5));
    svg += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n", num(px),
                       num(y + 18), fmt::format("{:g}", t));
  }
  svg += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
                     num((sx.px_lo + sx.px_hi) / 2), num(y + 40), escape(label));
}

double density_at(const Ridge& r, double x) {
  if (r.x.empty()) return 0.0;
  if (x <= r.x.front()) return r.density.front();
  if (x >= r.x.back()) return r.density.back();
  const auto it = std::upper_bound(r.x.begin(), r.x.end(), x);
  const auto i = static_cast<std::size_t>(it - r.x.begin());
  const double f = (x - r.x[i - 1]) / (r.x[i] - r.x[i - 1]);
  return r.density[i - 1] + f * (r.density[i] - r.density[i - 1]);
}

// Closed polygon under the curve between x = from and x = to.
std::string area(const Ridge& r, double from, double to, const Scale& sx, double base, double yscale) {
  from = std::max(from, r.x.front());
  to = std::min(to, r.x.back());
  if (!(to > from)) return {};
  std::string pts = fmt::format("{},{} {},{}", num(sx(from)), num(base), num(sx(from)), num(base - yscale * density_at(r, from)));
  for (std::size_t i = 0; i < r.x.size(); ++i) {
    if (r.x[i] > from && r.x[i] < to) pts += fmt::format(" {},{}", num(sx(r.x[i])), num(base - yscale * r.density[i]));
  }
  pts += fmt::format(" {},{} {},{}", num(sx(to)), num(base - yscale * density_at(r, to)), num(sx(to)), num(base));
  return pts;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::runtime_error(fmt::format("missing column '{}'", name));
    return static_cast<std::size_t>(it - header.begin());
  }
};

Table read_table(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot read {}", path.string()));
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(fmt::format("{} is empty", path.string()));
  t.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (!line.empty()) t.rows.push_back(split_csv_line(line));
  }
  return t;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::runtime_error(fmt::format("bad number '{}'", s));
  return v;
}

RidgelinePanel read_ridgeline(const fs::path& dir, const std::string& factor) {
  RidgelinePanel panel;
  panel.factor = factor;
  const Table summary = read_table(dir / fmt::format("summary_{}.csv", factor));
  const auto c_level = summary.column("level"), c_n = summary.column("n"), c_med = summary.column("median"),
             c_lo = summary.column("p2_5"), c_hi = summary.column("p97_5");
  std::map<std::string, std::size_t> slot;
  for (const auto& row : summary.rows) {
    Ridge r;
    r.level = row.at(c_level);
    r.n = static_cast<std::size_t>(std::stoull(row.at(c_n)));
    r.median = to_double(row.at(c_med));
    r.p2_5 = to_double(row.at(c_lo));
    r.p97_5 = to_double(row.at(c_hi));
    slot[r.level] = panel.ridges.size();
    panel.ridges.push_back(std::move(r));
  }

  const fs::path kde = dir / fmt::format("kde_{}.csv", factor);
  if (fs::exists(kde)) {
    const Table t = read_table(kde);
    const auto cl = t.column("level"), cx = t.column("x"), cd = t.column("density");
    for (const auto& row : t.rows) {
      auto& r = panel.ridges.at(slot.at(row.at(cl)));
      r.x.push_back(to_double(row.at(cx)));
      r.density.push_back(to_double(row.at(cd)));
    }
  } else {
    const Table t = read_table(dir / fmt::format("values_{}.csv", factor));
    const auto cl = t.column("level"), cv = t.column("D");
    std::map<std::string, std::vector<double>> values;
    for (const auto& row : t.rows) values[row.at(cl)].push_back(to_double(row.at(cv)));
    for (auto& r : panel.ridges) {
      const DensityGrid g = kde_grid(values.at(r.level));
      r.x = g.x;
      r.density = g.density;
    }
  }
  return panel;
}

std::vector<TrendPanel> read_trends(const fs::path& dir) {
  std::map<std::string, TrendPanel> panels;
  const Table curve = read_table(dir / "trend.csv");
  const auto cm = curve.column("meet_id"), cr = curve.column("round"), cy = curve.column("loess_D");
  for (const auto& row : curve.rows) {
    auto& p = panels[row.at(cm)];
    p.meet_id = row.at(cm);
    p.curve.push_back({to_double(row.at(cr)), to_double(row.at(cy))});
  }
  const Table lines = read_table(dir / "polylines.csv");
  const auto lm = lines.column("meet_id"), ld = lines.column("diver_id"), lr = lines.column("round"),
             lv = lines.column("D");
  std::map<std::pair<std::string, std::string>, std::vector<Point2>> by_diver;
  for (const auto& row : lines.rows) {
    by_diver[{row.at(lm), row.at(ld)}].push_back({to_double(row.at(lr)), to_double(row.at(lv))});
  }
  for (auto& [key, pts] : by_diver) {
    std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) { return a.x < b.x; });
    auto& p = panels[key.first];
    p.meet_id = key.first;
    p.divers.push_back({key.second, std::move(pts)});
  }
  std::vector<TrendPanel> out;
  for (auto& [id, p] : panels) out.push_back(std::move(p));
  return out;
}

std::string safe_name(std::string_view s) {
  std::string out;
  for (const char c : s) out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_');
  return out;
}

}  // namespace

RidgelinePanel ridgeline_from_summaries(const std::vector<GroupSummary>& summaries) {
  RidgelinePanel panel;
  if (!summaries.empty()) panel.factor = summaries.front().factor;
  for (const auto& s : summaries) {
    Ridge r{s.level, s.n, s.median, s.p2_5, s.p97_5, {}, {}};
    const DensityGrid g = kde_grid(s.values);
    r.x = g.x;
    r.density = g.density;
    panel.ridges.push_back(std::move(r));
  }
  return panel;
}

std::string ridgeline_svg(const RidgelinePanel& panel) {
  if (panel.ridges.empty()) throw std::invalid_argument("ridgeline panel has no levels");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo, peak = 0.0;
  for (const auto& r : panel.ridges) {
    if (r.x.size() < 2 || r.x.size() != r.density.size()) {
      throw std::invalid_argument(fmt::format("level '{}' has no density grid", r.level));
    }
    lo = std::min(lo, r.x.front());
    hi = std::max(hi, r.x.back());
    peak = std::max(peak, *std::max_element(r.density.begin(), r.density.end()));
  }
  const Scale sx{lo, hi, kLeft, kWidth - kRight};
  const double band = (kHeight - kTop - kBottom) / static_cast<double>(panel.ridges.size());
  const double yscale = peak > 0.0 ? std::min(1.6 * band, kHeight - kTop - kBottom - 10.0) / peak : 0.0;

  std::string svg = svg_open(fmt::format("Discrepancy by {}", panel.factor));
  for (std::size_t i = 0; i < panel.ridges.size(); ++i) {
    const Ridge& r = panel.ridges[i];
    const double base = kHeight - kBottom - band * static_cast<double>(i);
    std::string path = fmt::format("M{},{}", num(sx(r.x.front())), num(base));
    for (std::size_t k = 0; k < r.x.size(); ++k) {
      path += fmt::format(" L{},{}", num(sx(r.x[k])), num(base - yscale * r.density[k]));
    }
    path += fmt::format(" L{},{} Z", num(sx(r.x.back())), num(base));
    svg += fmt::format("<g class=\"ridge\" data-level=\"{}\">\n", escape(r.level));
    svg += fmt::format("<path class=\"density\" d=\"{}\" fill=\"#d9d9d9\" fill-opacity=\"0.85\" stroke=\"#333333\"/>\n", path);
    if (const auto tail = area(r, r.x.front(), r.p2_5, sx, base, yscale); !tail.empty()) {
      svg += fmt::format("<polygon class=\"tail-low\" points=\"{}\" fill=\"#d62728\" fill-opacity=\"0.7\"/>\n", tail);
    }
    if (const auto tail = area(r, r.p97_5, r.x.back(), sx, base, yscale); !tail.empty()) {
      svg += fmt::format("<polygon class=\"tail-high\" points=\"{}\" fill=\"#1f77b4\" fill-opacity=\"0.7\"/>\n", tail);
    }
    svg += fmt::format("<line class=\"median\" x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\" stroke-width=\"2\"/>\n",
                       num(sx(r.median)), num(base), num(base - yscale * density_at(r, r.median)));
    svg += fmt::format("<text class=\"level\" x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"end\">{}</text>\n",
                       num(kLeft - 10), num(base - 14), escape(r.level));
    svg += fmt::format("<text class=\"count\" x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\" fill=\"#555555\">n = {}</text>\n",
                       num(kLeft - 10), num(base - 1), r.n);
    svg += "</g>\n";
  }
  x_axis(svg, sx, kHeight - kBottom, "Discrepancy");
  svg += "</svg>\n";
  return svg;
}

std::string trend_svg(const TrendPanel& panel) {
  if (panel.divers.empty() && panel.curve.empty()) throw std::invalid_argument("trend panel is empty");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  auto extend = [&](const std::vector<Point2>& pts) {
    for (const auto& p : pts) {
      lo = std::min(lo, p.y);
      hi = std::max(hi, p.y);
    }
  };
  for (const auto& d : panel.divers) extend(d.points);
  extend(panel.curve);
  if (hi - lo < 1e-9) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  const Scale sx{1.0, static_cast<double>(kRounds), kLeft, kWidth - kRight};
  const Scale sy{lo - pad, hi + pad, kHeight - kBottom, kTop};

  std::string svg = svg_open(fmt::format("Meet {}", panel.meet_id));
  for (const double t : ticks(sy.lo, sy.hi)) {
    svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"#eeeeee\"/>\n", num(kLeft), num(sy(t)),
                       num(kWidth - kRight));
    svg += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"end\">{:g}</text>\n", num(kLeft - 6),
                       num(sy(t) + 4), t);
  }
  if (lo < 0.0 && hi > 0.0) {
    svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"#999999\" stroke-dasharray=\"4 3\"/>\n",
                       num(kLeft), num(sy(0.0)), num(kWidth - kRight));
  }
  for (std::size_t i = 0; i < panel.divers.size(); ++i) {
    const auto& d = panel.divers[i];
    std::string pts;
    for (const auto& p : d.points) pts += fmt::format("{}{},{}", pts.empty() ? "" : " ", num(sx(p.x)), num(sy(p.y)));
    svg += fmt::format("<polyline class=\"diver\" data-diver=\"{}\" points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1\"/>\n",
                       escape(d.diver_id), pts, i % 2 == 0 ? "#555555" : "#222222");
  }
  if (!panel.curve.empty()) {
    std::string pts;
    for (const auto& p : panel.curve) pts += fmt::format("{}{},{}", pts.empty() ? "" : " ", num(sx(p.x)), num(sy(p.y)));
    svg += fmt::format("<polyline class=\"loess\" points=\"{}\" fill=\"none\" stroke=\"#1f5fbf\" stroke-width=\"3\"/>\n", pts);
  }
  svg += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 {} {})\">Discrepancy</text>\n",
                     num(kLeft - 50), num((kTop + kHeight - kBottom) / 2), num(kLeft - 50), num((kTop + kHeight - kBottom) / 2));
  x_axis(svg, sx, kHeight - kBottom, "Round");
  svg += "</svg>\n";
  return svg;
}

std::vector<fs::path> emit_plots(const std::vector<fs::path>& input_dirs, const fs::path& output_dir) {
  std::vector<fs::path> written;
  fs::create_directories(output_dir);
  auto write = [&](const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
    out << content;
    written.push_back(path);
  };
  for (const auto& dir : input_dirs) {
    for (const auto f : kAllFactors) {
      const std::string factor(to_string(f));
      if (!fs::exists(dir / fmt::format("summary_{}.csv", factor))) continue;
      write(output_dir / fmt::format("ridgeline_{}.svg", factor), ridgeline_svg(read_ridgeline(dir, factor)));
    }
    if (fs::exists(dir / "trend.csv") && fs::exists(dir / "polylines.csv")) {
      for (const auto& panel : read_trends(dir)) {
        write(output_dir / fmt::format("trend_{}.svg", safe_name(panel.meet_id)), trend_svg(panel));
      }
    }
  }
  if (written.empty()) throw std::runtime_error("no analyze or trend outputs found to plot");
  std::sort(written.begin(), written.end());
  return written;
}

}  // namespace divebias

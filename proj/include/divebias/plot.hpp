#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "divebias/analytics.hpp"
#include "divebias/smoothing.hpp"

namespace divebias {

/// One ridge: a level's density curve with its median and tail markers.
struct Ridge {
  std::string level;
  std::size_t n{0};
  double median{0.0};
  double p2_5{0.0};
  double p97_5{0.0};
  std::vector<double> x;
  std::vector<double> density;
};

struct RidgelinePanel {
  std::string factor;
  std::vector<Ridge> ridges;  // drawn bottom to top in this order
};

struct DiverLine {
  std::string diver_id;
  std::vector<Point2> points;  // (round, discrepancy)
};

struct TrendPanel {
  std::string meet_id;
  std::vector<DiverLine> divers;
  std::vector<Point2> curve;  // smoothed (round, discrepancy)
};

/// Ridges from summaries, with a Silverman-bandwidth KDE of each level.
RidgelinePanel ridgeline_from_summaries(const std::vector<GroupSummary>& summaries);

/// 800×600 SVG. Each density is a path with class "density"; the lower 2.5%
/// tail is shaded red, the upper 2.5% tail blue and the median is a black tick.
/// Level names sit on the left with the count beneath. Throws
/// std::invalid_argument on an empty panel.
std::string ridgeline_svg(const RidgelinePanel& panel);

/// 800×600 SVG: one gray polyline (class "diver") per diver and one blue
/// smoothed curve (class "loess"). Throws std::invalid_argument on an empty
/// panel.
std::string trend_svg(const TrendPanel& panel);

/// Renders every analyze output (summary_*.csv with kde_*.csv or values_*.csv)
/// and trend output (trend.csv with polylines.csv) found in `input_dirs` into
/// `output_dir`. Returns the files written, sorted. Throws std::runtime_error
/// when nothing plottable is found.
std::vector<std::filesystem::path> emit_plots(const std::vector<std::filesystem::path>& input_dirs,
                                              const std::filesystem::path& output_dir);

}  // namespace divebias

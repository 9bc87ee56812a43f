#pragma once

#include <span>
#include <string>
#include <vector>

#include "divebias/analytics.hpp"

namespace divebias {

struct LoessConfig {
  double span{0.75};
  int degree{1};
};

struct Point2 {
  double x{0.0};
  double y{0.0};
};

struct LoessFit {
  std::vector<double> x;
  std::vector<double> fitted;
  LoessConfig config;
};

/// (1 - u^3)^3 on [0,1), zero beyond. Throws std::invalid_argument for u < 0.
double tricube(double u);

/// Local polynomial regression with tricube weights over the ceil(span·n)
/// nearest neighbours of each evaluation point; points tied at the cut-off
/// distance are all kept. Throws std::invalid_argument on a bad config, an
/// empty evaluation list, or too few neighbours for the degree.
LoessFit loess_fit(std::span<const Point2> points, const LoessConfig& cfg, std::span<const double> eval_at);

struct MeetTrend {
  std::string meet_id;
  std::size_t n_divers{0};
  LoessFit fit;
};

/// One loess curve per meet over all of its (round, discrepancy) points,
/// evaluated at rounds 1..11. Meets are ordered by id.
std::vector<MeetTrend> round_trends(std::span<const DiscrepancyRecord> records, const LoessConfig& cfg = {});

}  // namespace divebias

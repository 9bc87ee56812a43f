#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "divebias/ingest.hpp"

namespace divebias {

struct Competency {
  double value{0.0};  // mean net score over the diver's dives
  int n_dives{0};
};

using CompetencyTable = std::map<std::string, Competency>;

struct AnalysisOptions {
  /// Leave unanimous-zero (failed) dives out of competency and discrepancy.
  bool drop_failed{false};
};

/// Per-diver mean of effective nets over every meet and round in the dataset.
/// Throws std::invalid_argument for a diver with no scoreable record.
CompetencyTable competency(const Dataset& d, const AnalysisOptions& options = {});

struct DiscrepancyRecord {
  std::string diver_id;
  std::string meet_id;
  int round{1};
  double net{0.0};
  double discrepancy{0.0};  // net - competency
  Gender gender{Gender::F};
  int age{0};
  Tenths dd;
  Tenths dd_binned;
  Direction direction{Direction::Forward};
  Position position{Position::Straight};
};

/// One record per scoreable dive, in dataset order. Throws
/// std::invalid_argument when a diver is missing from the competency table.
std::vector<DiscrepancyRecord> discrepancies(const Dataset& d, const CompetencyTable& c,
                                             const AnalysisOptions& options = {});

/// DD bins for plotting: 2.7-2.9 collapse to 2.8 and 3.0 and above to 3.0.
Tenths bin_dd(Tenths dd);

/// Linear interpolation between closest order statistics at h = (n-1)p.
/// Throws std::invalid_argument on empty input or p outside [0,1].
double percentile(std::span<const double> values, double p);

enum class Factor { Gender, Age, Direction, Position, DDBinned };

std::string_view to_string(Factor f);
/// Throws std::invalid_argument on an unknown factor name.
Factor factor_from_string(std::string_view name);
inline constexpr std::array<Factor, 5> kAllFactors{Factor::Gender, Factor::Age, Factor::Direction, Factor::Position,
                                                   Factor::DDBinned};

/// Level label of a record under a factor (e.g. "F", "16", "Pike", "2.8").
std::string level_of(const DiscrepancyRecord& r, Factor f);

struct GroupSummary {
  std::string factor;
  std::string level;
  std::size_t n{0};
  double median{0.0};
  double p2_5{0.0};
  double p97_5{0.0};
  std::vector<double> values;  // sorted ascending, for plotting
};

/// One summary per level, ordered by ascending median (level label breaks ties).
std::vector<GroupSummary> group_summaries(std::span<const DiscrepancyRecord> records, Factor factor);

struct DensityGrid {
  double bandwidth{0.0};
  std::vector<double> x;
  std::vector<double> density;
};

/// Silverman's rule of thumb: 0.9 · min(sd, IQR/1.34) · n^(-1/5).
double silverman_bandwidth(std::span<const double> values);

/// Gaussian KDE evaluated on `points` equally spaced values spanning the data.
DensityGrid kde_grid(std::span<const double> values, std::size_t points = 512);

}  // namespace divebias

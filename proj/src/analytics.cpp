#include "divebias/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

#include "divebias/scoring.hpp"

namespace divebias {

namespace {

bool is_failed(const RoundRecord& r, HalfPoints net) {
  if (!r.judge_scores.empty()) return check_failed_dive(r.judge_scores).outcome == DiveOutcome::Failed;
  return net == HalfPoints{0};
}

// Bandwidth used when the sample has no spread at all.
constexpr double kDegenerateBandwidth = 0.5;

}  // namespace

CompetencyTable competency(const Dataset& d, const AnalysisOptions& options) {
  CompetencyTable table;
  for (const auto& [diver, indices] : d.diver_index()) {
    // Nets are half-point integers, so the sum is exact and order-free.
    long long half_sum = 0;
    int n = 0;
    for (const auto i : indices) {
      const auto& r = d.records()[i];
      const HalfPoints net = effective_net(r);
      if (options.drop_failed && is_failed(r, net)) continue;
      half_sum += net.value;
      ++n;
    }
    if (n == 0) throw std::invalid_argument(fmt::format("diver {} has no scoreable dives", diver));
    table.emplace(diver, Competency{static_cast<double>(half_sum) / (2.0 * n), n});
  }
  return table;
}

std::vector<DiscrepancyRecord> discrepancies(const Dataset& d, const CompetencyTable& c, const AnalysisOptions& options) {
  std::vector<DiscrepancyRecord> out;
  out.reserve(d.size());
  for (const auto& r : d.records()) {
    const HalfPoints net = effective_net(r);
    if (options.drop_failed && is_failed(r, net)) continue;
    const auto it = c.find(r.diver_id);
    if (it == c.end()) throw std::invalid_argument(fmt::format("no competency for diver {}", r.diver_id));
    DiscrepancyRecord rec;
    rec.diver_id = r.diver_id;
    rec.meet_id = r.meet_id;
    rec.round = r.round;
    rec.net = net.as_double();
    rec.discrepancy = rec.net - it->second.value;
    rec.gender = d.profile(r.diver_id).gender;
    rec.age = r.age;
    rec.dd = r.dive.dd;
    rec.dd_binned = bin_dd(r.dive.dd);
    rec.direction = r.dive.direction;
    rec.position = r.dive.position;
    out.push_back(std::move(rec));
  }
  return out;
}

Tenths bin_dd(Tenths dd) {
  if (dd >= Tenths{30}) return Tenths{30};
  if (dd >= Tenths{27}) return Tenths{28};
  return dd;
}

double percentile(std::span<const double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(fmt::format("percentile fraction {} outside [0,1]", p));
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::string_view to_string(Factor f) {
  switch (f) {
    case Factor::Gender: return "gender";
    case Factor::Age: return "age";
    case Factor::Direction: return "direction";
    case Factor::Position: return "position";
    case Factor::DDBinned: return "dd_binned";
  }
  return "?";
}

Factor factor_from_string(std::string_view name) {
  for (const auto f : kAllFactors) {
    if (to_string(f) == name) return f;
  }
  throw std::invalid_argument(fmt::format("unknown factor '{}'", name));
}

std::string level_of(const DiscrepancyRecord& r, Factor f) {
  switch (f) {
    case Factor::Gender: return std::string(to_string(r.gender));
    case Factor::Age: return std::to_string(r.age);
    case Factor::Direction: return std::string(to_string(r.direction));
    case Factor::Position: return std::string(to_string(r.position));
    case Factor::DDBinned: return fmt::format("{}.{}", r.dd_binned.value / 10, r.dd_binned.value % 10);
  }
  return {};
}

std::vector<GroupSummary> group_summaries(std::span<const DiscrepancyRecord> records, Factor factor) {
  std::map<std::string, std::vector<double>> levels;
  for (const auto& r : records) levels[level_of(r, factor)].push_back(r.discrepancy);

  std::vector<GroupSummary> out;
  out.reserve(levels.size());
  for (auto& [level, values] : levels) {
    std::sort(values.begin(), values.end());
    GroupSummary s;
    s.factor = std::string(to_string(factor));
    s.level = level;
    s.n = values.size();
    s.median = percentile(values, 0.5);
    s.p2_5 = percentile(values, 0.025);
    s.p97_5 = percentile(values, 0.975);
    s.values = std::move(values);
    out.push_back(std::move(s));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.median < b.median; });
  return out;
}

double silverman_bandwidth(std::span<const double> values) {
  const auto n = values.size();
  if (n < 2) return kDegenerateBandwidth;
  double mean = 0.0;
  for (const double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (const double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  const double iqr = percentile(values, 0.75) - percentile(values, 0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) return kDegenerateBandwidth;
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

DensityGrid kde_grid(std::span<const double> values, std::size_t points) {
  if (values.empty()) throw std::invalid_argument("density of an empty sample");
  if (points < 2) throw std::invalid_argument("density grid needs at least two points");
  DensityGrid grid;
  grid.bandwidth = silverman_bandwidth(values);
  auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  double lo = *lo_it;
  double hi = *hi_it;
  if (hi == lo) {
    lo -= 3.0 * grid.bandwidth;
    hi += 3.0 * grid.bandwidth;
  }
  const double h = grid.bandwidth;
  const double norm = 1.0 / (static_cast<double>(values.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  grid.x.resize(points);
  grid.density.resize(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    double acc = 0.0;
    for (const double v : values) {
      const double z = (x - v) / h;
      acc += std::exp(-0.5 * z * z);
    }
    grid.x[i] = x;
    grid.density[i] = acc * norm;
  }
  return grid;
}

}  // namespace divebias

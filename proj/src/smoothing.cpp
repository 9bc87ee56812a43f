#include "divebias/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include <Eigen/Dense>
#include <fmt/format.h>

namespace divebias {

namespace {

// Rank threshold for the local normal equations. A neighbourhood whose
// weighted points sit on fewer distinct x values than the degree needs is
// refitted one degree lower.
constexpr double kRankThreshold = 1e-10;

double local_fit(std::span<const Point2> sorted, int degree, std::size_t q, double x0, std::vector<double>& dist) {
  const std::size_t n = sorted.size();
  for (std::size_t i = 0; i < n; ++i) dist[i] = std::abs(sorted[i].x - x0);
  std::vector<double> scratch(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(n));
  std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(q - 1), scratch.end());
  const double dq = scratch[q - 1];

  if (dq == 0.0) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (dist[i] == 0.0) {
        sum += sorted[i].y;
        ++count;
      }
    }
    return sum / static_cast<double>(count);
  }

  // Every neighbour sits exactly at the cut-off, so tricube weighs them all
  // zero; they share the distance, so weigh them equally instead.
  const bool all_at_cutoff =
      std::none_of(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(n), [&](double d) { return d < dq; });

  const int p = degree + 1;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd phi(p);
  for (std::size_t i = 0; i < n; ++i) {
    if (dist[i] > dq) continue;
    const double w = all_at_cutoff ? 1.0 : tricube(dist[i] / dq);
    if (w == 0.0) continue;
    const double dx = sorted[i].x - x0;
    double term = 1.0;
    for (int k = 0; k < p; ++k) {
      phi[k] = term;
      term *= dx;
    }
    a.noalias() += w * phi * phi.transpose();
    b.noalias() += (w * sorted[i].y) * phi;
  }
  if (degree > 0) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    lu.setThreshold(kRankThreshold);
    if (lu.rank() < p) return local_fit(sorted, degree - 1, q, x0, dist);
  }
  const Eigen::VectorXd coef = a.ldlt().solve(b);
  return coef[0];
}

}  // namespace

double tricube(double u) {
  if (u < 0.0 || std::isnan(u)) throw std::invalid_argument(fmt::format("tricube argument {} is negative", u));
  if (u >= 1.0) return 0.0;
  const double t = 1.0 - u * u * u;
  return t * t * t;
}

LoessFit loess_fit(std::span<const Point2> points, const LoessConfig& cfg, std::span<const double> eval_at) {
  if (!(cfg.span > 0.0 && cfg.span <= 1.0)) throw std::invalid_argument(fmt::format("span {} outside (0,1]", cfg.span));
  if (cfg.degree < 0 || cfg.degree > 2) throw std::invalid_argument(fmt::format("degree {} outside 0-2", cfg.degree));
  if (eval_at.empty()) throw std::invalid_argument("no evaluation points");
  const std::size_t n = points.size();
  const auto q = std::min(n, static_cast<std::size_t>(std::ceil(cfg.span * static_cast<double>(n) - 1e-9)));
  if (q < static_cast<std::size_t>(cfg.degree) + 1) {
    throw std::invalid_argument(
        fmt::format("span {} over {} points leaves {} neighbours; degree {} needs {}", cfg.span, n, q, cfg.degree,
                    cfg.degree + 1));
  }

  // Canonical order makes the sums independent of the caller's ordering.
  std::vector<Point2> sorted(points.begin(), points.end());
  std::sort(sorted.begin(), sorted.end(), [](const Point2& a, const Point2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });

  LoessFit fit;
  fit.config = cfg;
  fit.x.assign(eval_at.begin(), eval_at.end());
  fit.fitted.reserve(eval_at.size());
  std::vector<double> dist(n);
  for (const double x0 : eval_at) {
    const double y = local_fit(sorted, cfg.degree, q, x0, dist);
    if (!std::isfinite(y)) throw std::runtime_error(fmt::format("loess produced a non-finite value at x = {}", x0));
    fit.fitted.push_back(y);
  }
  return fit;
}

std::vector<MeetTrend> round_trends(std::span<const DiscrepancyRecord> records, const LoessConfig& cfg) {
  std::map<std::string, std::vector<Point2>> by_meet;
  std::map<std::string, std::set<std::string>> divers;
  for (const auto& r : records) {
    by_meet[r.meet_id].push_back({static_cast<double>(r.round), r.discrepancy});
    divers[r.meet_id].insert(r.diver_id);
  }
  std::vector<double> rounds(kRounds);
  for (int i = 0; i < kRounds; ++i) rounds[i] = i + 1;

  std::vector<MeetTrend> out;
  for (const auto& [meet, pts] : by_meet) {
    out.push_back({meet, divers[meet].size(), loess_fit(pts, cfg, rounds)});
  }
  return out;
}

}  // namespace divebias

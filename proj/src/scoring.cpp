#include "divebias/scoring.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

#include "divebias/ingest.hpp"

namespace divebias {

bool valid_panel_size(std::size_t n) { return n == 3 || n == 5 || n == 7 || n == 9; }

HalfPoints net_score(std::span<const HalfPoints> marks) {
  if (!valid_panel_size(marks.size())) {
    throw std::invalid_argument(fmt::format("panel of {} marks; expected 3, 5, 7 or 9", marks.size()));
  }
  std::array<int, kMaxJudges> sorted{};
  for (std::size_t i = 0; i < marks.size(); ++i) {
    if (marks[i] < HalfPoints{0} || marks[i] > kMaxMark) {
      throw std::invalid_argument(fmt::format("mark {} outside [0,10]", marks[i].as_double()));
    }
    sorted[i] = marks[i].value;
  }
  const auto n = marks.size();
  std::sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n));
  const std::size_t mid = n / 2;
  return HalfPoints{sorted[mid - 1] + sorted[mid] + sorted[mid + 1]};
}

Award award(HalfPoints net, Tenths dd) {
  if (net < HalfPoints{0} || net > kMaxNet) throw std::invalid_argument(fmt::format("net {} outside [0,30]", net.as_double()));
  if (dd < kMinDD || dd > kMaxDD) throw std::invalid_argument(fmt::format("DD {} outside [1.0,4.1]", dd.as_double()));
  return Award{net, dd, AwardUnits{static_cast<std::int64_t>(net.value) * dd.value}};
}

FailedDiveCheck check_failed_dive(std::span<const HalfPoints> marks) {
  const auto zeros = std::count(marks.begin(), marks.end(), HalfPoints{0});
  FailedDiveCheck check;
  if (!marks.empty() && zeros == static_cast<std::ptrdiff_t>(marks.size())) {
    check.outcome = DiveOutcome::Failed;
  } else if (zeros > 0) {
    check.partial_zero_warning = true;
  }
  return check;
}

AwardUnits meet_total(std::span<const RoundRecord> records) {
  AwardUnits total{};
  std::set<int> rounds;
  for (const auto& r : records) {
    if (r.diver_id != records.front().diver_id || r.meet_id != records.front().meet_id) {
      throw std::invalid_argument("meet_total expects records of a single diver in a single meet");
    }
    if (!rounds.insert(r.round).second) {
      throw std::invalid_argument(fmt::format("duplicate round {} for diver {} in meet {}", r.round, r.diver_id, r.meet_id));
    }
    total = total + award(effective_net(r), r.dive.dd).value;
  }
  return total;
}

std::vector<MeetStanding> rank_meet(const std::map<std::string, AwardUnits>& totals) {
  if (totals.empty()) throw std::invalid_argument("cannot rank an empty meet");
  std::vector<MeetStanding> out;
  out.reserve(totals.size());
  for (const auto& [id, total] : totals) out.push_back({id, total, 0});
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.total > b.total; });
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].rank = (i > 0 && out[i].total == out[i - 1].total) ? out[i - 1].rank : static_cast<int>(i) + 1;
  }
  return out;
}

}  // namespace divebias

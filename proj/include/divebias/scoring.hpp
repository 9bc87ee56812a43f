#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "divebias/dive_catalog.hpp"

namespace divebias {

struct RoundRecord;

/// Award in 0.05-point units: (net × 2) × (dd × 10) = net × dd × 20.
struct AwardUnits {
  std::int64_t value{0};
  constexpr double as_double() const { return static_cast<double>(value) / 20.0; }
  friend constexpr auto operator<=>(const AwardUnits&, const AwardUnits&) = default;
  friend constexpr AwardUnits operator+(AwardUnits a, AwardUnits b) { return AwardUnits{a.value + b.value}; }
};

struct Award {
  HalfPoints net;
  Tenths dd;
  AwardUnits value;
};

inline constexpr HalfPoints kMaxMark{20};
inline constexpr HalfPoints kMaxNet{60};

/// True for panel sizes the scoring rules accept: 3, 5, 7 or 9.
bool valid_panel_size(std::size_t n);

/// Sum of the middle three marks after sorting. Throws std::invalid_argument on
/// a panel size outside {3,5,7,9} or a mark outside [0,10].
HalfPoints net_score(std::span<const HalfPoints> marks);

/// Exact net × dd. Throws std::invalid_argument on range violations.
Award award(HalfPoints net, Tenths dd);

enum class DiveOutcome { Scored, Failed };

struct FailedDiveCheck {
  DiveOutcome outcome{DiveOutcome::Scored};
  /// Set when some but not all marks are zero; a zero is only meaningful as a
  /// unanimous failure.
  bool partial_zero_warning{false};
};

FailedDiveCheck check_failed_dive(std::span<const HalfPoints> marks);

/// Sum of awards over one diver's rounds in one meet. Throws
/// std::invalid_argument on a repeated round or on records from more than one
/// (diver, meet).
AwardUnits meet_total(std::span<const RoundRecord> records);

struct MeetStanding {
  std::string diver_id;
  AwardUnits total;
  int rank{0};
};

/// Standings by descending total with competition ranking (1,2,2,4). Divers
/// with equal totals are listed by id. Throws std::invalid_argument when empty.
std::vector<MeetStanding> rank_meet(const std::map<std::string, AwardUnits>& totals);

}  // namespace divebias

#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace divebias {

enum class Direction : std::uint8_t { Forward, Backward, Reverse, Inward, Twist };
enum class Position : std::uint8_t { Tuck, Pike, Straight, Free };

inline constexpr int kDirectionCount = 5;
inline constexpr int kPositionCount = 4;

/// Degree of difficulty held in tenths (2.8 is stored as 28).
struct Tenths {
  int value{0};
  constexpr double as_double() const { return value / 10.0; }
  friend constexpr auto operator<=>(const Tenths&, const Tenths&) = default;
};

inline constexpr Tenths kMinDD{10};
inline constexpr Tenths kMaxDD{41};

/// Half-point score units (16.5 is stored as 33).
struct HalfPoints {
  int value{0};
  constexpr double as_double() const { return value / 2.0; }
  friend constexpr auto operator<=>(const HalfPoints&, const HalfPoints&) = default;
};

/// One performable dive. Rotation is counted in halves so 1.5 somersaults is 3.
///
/// Twisting dives (group 5) also remember the take-off group they are built on
/// (forward, back, reverse or inward); `twist_base` is empty for every other
/// group and for archives that do not record it.
struct DiveDescriptor {
  Direction direction{Direction::Forward};
  Position position{Position::Straight};
  int half_somersaults{0};
  int half_twists{0};
  Tenths dd{10};
  std::optional<Direction> twist_base;

  friend bool operator==(const DiveDescriptor&, const DiveDescriptor&) = default;
};

/// True when both dives are the same dive for list-legality purposes.
/// Position is ignored: a pike and a tuck of the same rotation are one dive.
bool same_dive(const DiveDescriptor& a, const DiveDescriptor& b);

struct DescriptorIssue {
  enum class Kind { DDBelowFloor, DDAboveCeiling, DDNotTenths, NegativeRotation, TwistOutsideTwistGroup, BadTwistBase };
  Kind kind;
  bool warning_only;
  std::string message;
};

/// Checks the descriptor invariants. An empty result, or one holding only
/// warnings, means the descriptor is usable.
std::vector<DescriptorIssue> validate_descriptor(const DiveDescriptor& d);

bool has_errors(const std::vector<DescriptorIssue>& issues);

/// Converts a decimal DD (e.g. 2.7) to tenths; empty if it is not a whole
/// number of tenths.
std::optional<Tenths> tenths_from_decimal(double dd);

/// Parses "2.7" style text into tenths; throws std::invalid_argument when the
/// text is not a decimal with at most one significant fractional digit.
Tenths parse_tenths(std::string_view text);

/// Parses a dive number such as "105C" or "5132D". The returned descriptor has
/// dd left at the floor value; callers attach the DD from their own source.
/// Throws std::invalid_argument on malformed tokens.
DiveDescriptor parse_dive_token(std::string_view token);

/// Inverse of parse_dive_token.
std::string render_dive_token(const DiveDescriptor& d);

std::string_view to_string(Direction d);
std::string_view to_string(Position p);
/// Archive spellings: FWD, BACK, REV, INW, TWIST.
std::string_view archive_name(Direction d);
/// Archive spellings: TUCK, PIKE, STRAIGHT, FREE.
std::string_view archive_name(Position p);
std::optional<Direction> direction_from_archive(std::string_view s);
std::optional<Position> position_from_archive(std::string_view s);

/// Representative one-metre springboard catalog used by the simulator and the
/// list generator. DDs are typical values, not an authoritative table.
std::vector<DiveDescriptor> default_catalog();

}  // namespace divebias

#include "divebias/dive_catalog.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace divebias {

namespace {

constexpr std::array<std::string_view, kDirectionCount> kDirectionNames{"Forward", "Backward", "Reverse",
                                                                       "Inward", "Twist"};
constexpr std::array<std::string_view, kDirectionCount> kDirectionArchive{"FWD", "BACK", "REV", "INW", "TWIST"};
constexpr std::array<std::string_view, kPositionCount> kPositionNames{"Tuck", "Pike", "Straight", "Free"};
constexpr std::array<std::string_view, kPositionCount> kPositionArchive{"TUCK", "PIKE", "STRAIGHT", "FREE"};

// Dive-number letters: A straight, B pike, C tuck, D free.
std::optional<Position> position_from_letter(char c) {
  switch (c) {
    case 'A': return Position::Straight;
    case 'B': return Position::Pike;
    case 'C': return Position::Tuck;
    case 'D': return Position::Free;
    default: return std::nullopt;
  }
}

char letter_from_position(Position p) {
  switch (p) {
    case Position::Straight: return 'A';
    case Position::Pike: return 'B';
    case Position::Tuck: return 'C';
    case Position::Free: return 'D';
  }
  return '?';
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

bool same_dive(const DiveDescriptor& a, const DiveDescriptor& b) {
  return a.direction == b.direction && a.half_somersaults == b.half_somersaults && a.half_twists == b.half_twists &&
         a.twist_base == b.twist_base;
}

std::vector<DescriptorIssue> validate_descriptor(const DiveDescriptor& d) {
  using K = DescriptorIssue::Kind;
  std::vector<DescriptorIssue> issues;
  if (d.dd < kMinDD) {
    issues.push_back({K::DDBelowFloor, false, fmt::format("DD {:.1f} below floor 1.0", d.dd.as_double())});
  }
  if (d.dd > kMaxDD) {
    issues.push_back({K::DDAboveCeiling, false, fmt::format("DD {:.1f} above ceiling 4.1", d.dd.as_double())});
  }
  if (d.half_somersaults < 0 || d.half_twists < 0) {
    issues.push_back({K::NegativeRotation, false, "rotation counts must be non-negative"});
  }
  if (d.half_twists > 0 && d.direction != Direction::Twist) {
    issues.push_back({K::TwistOutsideTwistGroup, true,
                      fmt::format("{} dive carries {} half twists; twisting dives belong to the twist group",
                                  to_string(d.direction), d.half_twists)});
  }
  if (d.twist_base && (d.direction != Direction::Twist || *d.twist_base == Direction::Twist)) {
    issues.push_back({K::BadTwistBase, false, "twist base is only valid on twist dives and must be groups 1-4"});
  }
  return issues;
}

bool has_errors(const std::vector<DescriptorIssue>& issues) {
  for (const auto& i : issues) {
    if (!i.warning_only) return true;
  }
  return false;
}

std::optional<Tenths> tenths_from_decimal(double dd) {
  if (!std::isfinite(dd)) return std::nullopt;
  const double scaled = dd * 10.0;
  const double rounded = std::round(scaled);
  if (std::abs(scaled - rounded) > 1e-6) return std::nullopt;
  return Tenths{static_cast<int>(rounded)};
}

Tenths parse_tenths(std::string_view text) {
  // Integer part, optional '.', then digits; anything past the first fractional
  // digit must be zero.
  if (text.empty()) throw std::invalid_argument("empty DD");
  std::size_t pos = 0;
  bool negative = false;
  if (text[0] == '-' || text[0] == '+') {
    negative = text[0] == '-';
    pos = 1;
  }
  int whole = 0;
  bool any_digit = false;
  while (pos < text.size() && is_digit(text[pos])) {
    whole = whole * 10 + (text[pos] - '0');
    any_digit = true;
    ++pos;
    if (whole > 1000) throw std::invalid_argument(fmt::format("DD '{}' out of range", text));
  }
  int tenth = 0;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    if (pos < text.size() && is_digit(text[pos])) {
      tenth = text[pos] - '0';
      any_digit = true;
      ++pos;
    }
    while (pos < text.size() && is_digit(text[pos])) {
      if (text[pos] != '0') throw std::invalid_argument(fmt::format("DD '{}' is not a multiple of 0.1", text));
      ++pos;
    }
  }
  if (!any_digit || pos != text.size()) throw std::invalid_argument(fmt::format("unparseable DD '{}'", text));
  const int v = whole * 10 + tenth;
  return Tenths{negative ? -v : v};
}

DiveDescriptor parse_dive_token(std::string_view token) {
  if (token.size() < 2) throw std::invalid_argument(fmt::format("dive token '{}' too short", token));
  const char letter = token.back();
  const auto position = position_from_letter(letter);
  if (!position) throw std::invalid_argument(fmt::format("unknown position letter '{}' in '{}'", letter, token));
  const std::string_view digits = token.substr(0, token.size() - 1);
  for (char c : digits) {
    if (!is_digit(c)) throw std::invalid_argument(fmt::format("non-digit '{}' in dive token '{}'", c, token));
  }
  const int group = digits[0] - '0';
  if (group < 1 || group > 5) throw std::invalid_argument(fmt::format("group digit {} outside 1-5 in '{}'", group, token));
  const std::string_view rotation = digits.substr(1);
  if (rotation.empty()) throw std::invalid_argument(fmt::format("no rotation digits in '{}'", token));

  DiveDescriptor d;
  d.position = *position;
  if (group == 5) {
    // 5 <base group> <half somersaults> <half twists>
    if (rotation.size() != 3) {
      throw std::invalid_argument(fmt::format("twist dive '{}' needs base, somersault and twist digits", token));
    }
    const int base = rotation[0] - '0';
    if (base < 1 || base > 4) throw std::invalid_argument(fmt::format("twist base {} outside 1-4 in '{}'", base, token));
    d.direction = Direction::Twist;
    d.twist_base = static_cast<Direction>(base - 1);
    d.half_somersaults = rotation[1] - '0';
    d.half_twists = rotation[2] - '0';
  } else {
    // <group> <flying flag> <half somersaults>
    if (rotation.size() != 2) {
      throw std::invalid_argument(fmt::format("dive '{}' needs a flying digit and a somersault digit", token));
    }
    if (rotation[0] != '0') throw std::invalid_argument(fmt::format("flying dives are not supported: '{}'", token));
    d.direction = static_cast<Direction>(group - 1);
    d.half_somersaults = rotation[1] - '0';
  }
  return d;
}

std::string render_dive_token(const DiveDescriptor& d) {
  const char letter = letter_from_position(d.position);
  if (d.direction == Direction::Twist) {
    const int base = d.twist_base ? static_cast<int>(*d.twist_base) + 1 : 0;
    return fmt::format("5{}{}{}{}", base, d.half_somersaults, d.half_twists, letter);
  }
  return fmt::format("{}0{}{}", static_cast<int>(d.direction) + 1, d.half_somersaults, letter);
}

std::string_view to_string(Direction d) { return kDirectionNames[static_cast<std::size_t>(d)]; }
std::string_view to_string(Position p) { return kPositionNames[static_cast<std::size_t>(p)]; }
std::string_view archive_name(Direction d) { return kDirectionArchive[static_cast<std::size_t>(d)]; }
std::string_view archive_name(Position p) { return kPositionArchive[static_cast<std::size_t>(p)]; }

std::optional<Direction> direction_from_archive(std::string_view s) {
  for (std::size_t i = 0; i < kDirectionArchive.size(); ++i) {
    if (kDirectionArchive[i] == s) return static_cast<Direction>(i);
  }
  return std::nullopt;
}

std::optional<Position> position_from_archive(std::string_view s) {
  for (std::size_t i = 0; i < kPositionArchive.size(); ++i) {
    if (kPositionArchive[i] == s) return static_cast<Position>(i);
  }
  return std::nullopt;
}

std::vector<DiveDescriptor> default_catalog() {
  struct Entry {
    std::string_view token;
    int dd;
  };
  static constexpr std::array<Entry, 52> kEntries{{
      {"101A", 14}, {"101B", 13}, {"101C", 12}, {"102A", 16}, {"102B", 15}, {"102C", 14}, {"103B", 17},
      {"103C", 16}, {"104B", 23}, {"104C", 22}, {"105B", 26}, {"105C", 24}, {"201A", 17}, {"201B", 16},
      {"201C", 15}, {"202A", 17}, {"202B", 16}, {"202C", 15}, {"203B", 23}, {"203C", 20}, {"205C", 28},
      {"301A", 18}, {"301B", 17}, {"301C", 16}, {"302C", 17}, {"303B", 24}, {"303C", 21}, {"305C", 34},
      {"401A", 18}, {"401B", 15}, {"401C", 14}, {"402C", 16}, {"403B", 24}, {"403C", 22}, {"405C", 30},
      {"5111A", 18}, {"5122D", 19}, {"5124D", 23}, {"5132D", 22}, {"5134D", 26}, {"5211A", 18},
      {"5221D", 17}, {"5223D", 21}, {"5231D", 21}, {"5233D", 25}, {"5311A", 20}, {"5321D", 18},
      {"5331D", 23}, {"5411A", 19}, {"5421D", 19}, {"5112B", 18}, {"5312B", 20},
  }};
  std::vector<DiveDescriptor> out;
  out.reserve(kEntries.size());
  for (const auto& e : kEntries) {
    DiveDescriptor d = parse_dive_token(e.token);
    d.dd = Tenths{e.dd};
    out.push_back(d);
  }
  return out;
}

}  // namespace divebias

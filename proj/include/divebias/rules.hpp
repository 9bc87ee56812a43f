#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "divebias/dive_catalog.hpp"
#include "divebias/ingest.hpp"

namespace divebias {

struct DiveListEntry {
  int round{1};
  DiveDescriptor dive;
  bool voluntary{false};
  friend bool operator==(const DiveListEntry&, const DiveListEntry&) = default;
};

/// An eleven-dive list: five voluntary dives, one per direction, and six
/// optional dives.
struct DiveList {
  Gender gender{Gender::F};
  std::vector<DiveListEntry> entries;
  friend bool operator==(const DiveList&, const DiveList&) = default;
};

enum class RuleCode {
  VoluntaryDDSum,
  OptionalDDSum,
  VoluntaryCoverage,
  OptionalCoverage,
  GroupsInFirstEight,
  DuplicateDive,
  ListShape,
};

std::string_view to_string(RuleCode c);

struct RuleViolation {
  RuleCode code;
  std::string message;
  std::vector<int> rounds;
};

inline constexpr int kVoluntaryCount = 5;
inline constexpr int kOptionalCount = 6;
inline constexpr Tenths kVoluntaryMaxSum{90};
inline constexpr int kFirstRoundsWindow = 8;

/// Minimum optional DD sum: 11.5 for girls, 12.0 for boys.
Tenths optional_min_sum(Gender g);

/// Every rule violation in the list, in rule order. A malformed list yields a
/// single ListShape violation and no further checks.
std::vector<RuleViolation> validate_dive_list(const DiveList& list);

/// Builds a dive list from one diver's rows of a single meet. Throws
/// std::invalid_argument when rows span several divers or meets, or lack the
/// voluntary flag.
DiveList dive_list_from_records(std::span<const RoundRecord> records, Gender gender);

struct GeneratorOptions {
  int max_attempts{20000};
};

/// Draws a legal list from the catalog by rejection sampling; deterministic per
/// seed. Throws std::runtime_error, naming the attempt count, when the catalog
/// cannot satisfy the rules.
DiveList legal_list_generator(Gender gender, std::span<const DiveDescriptor> catalog, std::uint64_t seed,
                              const GeneratorOptions& options = {});

}  // namespace divebias

#include "divebias/rules.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "divebias/random.hpp"

namespace divebias {

namespace {

std::string fmt_tenths(Tenths t) { return fmt::format("{}.{}", t.value / 10, t.value % 10); }

std::string shape_problem(const DiveList& list) {
  if (list.entries.size() != static_cast<std::size_t>(kRounds)) {
    return fmt::format("list has {} dives; expected {}", list.entries.size(), kRounds);
  }
  std::array<int, kRounds + 1> seen{};
  int voluntary = 0;
  for (const auto& e : list.entries) {
    if (e.round < 1 || e.round > kRounds) return fmt::format("round {} outside 1-{}", e.round, kRounds);
    if (seen[e.round]++ > 0) return fmt::format("round {} listed twice", e.round);
    voluntary += e.voluntary ? 1 : 0;
  }
  if (voluntary != kVoluntaryCount) {
    return fmt::format("{} voluntary and {} optional dives; expected {} and {}", voluntary, kRounds - voluntary,
                       kVoluntaryCount, kOptionalCount);
  }
  return {};
}

// Rounds of the given entries, ascending.
std::vector<int> rounds_of(const std::vector<const DiveListEntry*>& entries) {
  std::vector<int> rounds;
  for (const auto* e : entries) rounds.push_back(e->round);
  std::sort(rounds.begin(), rounds.end());
  return rounds;
}

std::string missing_directions(const std::array<int, kDirectionCount>& counts) {
  std::vector<std::string_view> missing;
  for (int d = 0; d < kDirectionCount; ++d) {
    if (counts[d] == 0) missing.push_back(to_string(static_cast<Direction>(d)));
  }
  return fmt::format("{}", fmt::join(missing, ", "));
}

}  // namespace

std::string_view to_string(RuleCode c) {
  switch (c) {
    case RuleCode::VoluntaryDDSum: return "VoluntaryDDSum";
    case RuleCode::OptionalDDSum: return "OptionalDDSum";
    case RuleCode::VoluntaryCoverage: return "VoluntaryCoverage";
    case RuleCode::OptionalCoverage: return "OptionalCoverage";
    case RuleCode::GroupsInFirstEight: return "GroupsInFirstEight";
    case RuleCode::DuplicateDive: return "DuplicateDive";
    case RuleCode::ListShape: return "ListShape";
  }
  return "?";
}

Tenths optional_min_sum(Gender g) { return g == Gender::F ? Tenths{115} : Tenths{120}; }

std::vector<RuleViolation> validate_dive_list(const DiveList& list) {
  std::vector<RuleViolation> out;
  if (const std::string problem = shape_problem(list); !problem.empty()) {
    out.push_back({RuleCode::ListShape, problem, {}});
    return out;
  }

  std::vector<const DiveListEntry*> voluntary, optional;
  for (const auto& e : list.entries) (e.voluntary ? voluntary : optional).push_back(&e);

  // (a) voluntary dives: each direction exactly once
  std::array<int, kDirectionCount> vol_counts{};
  for (const auto* e : voluntary) ++vol_counts[static_cast<std::size_t>(e->dive.direction)];
  if (std::any_of(vol_counts.begin(), vol_counts.end(), [](int c) { return c != 1; })) {
    out.push_back({RuleCode::VoluntaryCoverage,
                   fmt::format("voluntary dives must cover each direction once; missing: {}",
                               missing_directions(vol_counts)),
                   rounds_of(voluntary)});
  }

  // (b) voluntary DD sum <= 9.0
  int vol_sum = 0;
  for (const auto* e : voluntary) vol_sum += e->dive.dd.value;
  if (Tenths{vol_sum} > kVoluntaryMaxSum) {
    out.push_back({RuleCode::VoluntaryDDSum,
                   fmt::format("voluntary DD sum {} exceeds {}", fmt_tenths(Tenths{vol_sum}), fmt_tenths(kVoluntaryMaxSum)),
                   rounds_of(voluntary)});
  }

  // (c) optional dives: all five directions, one of them twice
  std::array<int, kDirectionCount> opt_counts{};
  for (const auto* e : optional) ++opt_counts[static_cast<std::size_t>(e->dive.direction)];
  if (std::any_of(opt_counts.begin(), opt_counts.end(), [](int c) { return c == 0; })) {
    out.push_back({RuleCode::OptionalCoverage,
                   fmt::format("optional dives must cover every direction; missing: {}", missing_directions(opt_counts)),
                   rounds_of(optional)});
  }

  // (d) optional DD sum minimum by gender
  int opt_sum = 0;
  for (const auto* e : optional) opt_sum += e->dive.dd.value;
  const Tenths opt_min = optional_min_sum(list.gender);
  if (Tenths{opt_sum} < opt_min) {
    out.push_back({RuleCode::OptionalDDSum,
                   fmt::format("optional DD sum {} below {} minimum {}", fmt_tenths(Tenths{opt_sum}),
                               list.gender == Gender::F ? "girls'" : "boys'", fmt_tenths(opt_min)),
                   rounds_of(optional)});
  }

  // (e) all directions within the first eight rounds
  std::array<int, kDirectionCount> early{};
  std::vector<int> first_rounds;
  for (const auto& e : list.entries) {
    if (e.round <= kFirstRoundsWindow) {
      ++early[static_cast<std::size_t>(e.dive.direction)];
      first_rounds.push_back(e.round);
    }
  }
  if (std::any_of(early.begin(), early.end(), [](int c) { return c == 0; })) {
    std::sort(first_rounds.begin(), first_rounds.end());
    out.push_back({RuleCode::GroupsInFirstEight,
                   fmt::format("rounds 1-{} lack direction(s): {}", kFirstRoundsWindow, missing_directions(early)),
                   first_rounds});
  }

  // (f) no dive repeated (position ignored)
  std::vector<const DiveListEntry*> by_round;
  for (const auto& e : list.entries) by_round.push_back(&e);
  std::sort(by_round.begin(), by_round.end(), [](auto* a, auto* b) { return a->round < b->round; });
  for (std::size_t i = 0; i < by_round.size(); ++i) {
    for (std::size_t j = i + 1; j < by_round.size(); ++j) {
      if (same_dive(by_round[i]->dive, by_round[j]->dive)) {
        out.push_back({RuleCode::DuplicateDive,
                       fmt::format("rounds {} and {} repeat dive {} ({} / {})", by_round[i]->round, by_round[j]->round,
                                   render_dive_token(by_round[i]->dive), to_string(by_round[i]->dive.position),
                                   to_string(by_round[j]->dive.position)),
                       {by_round[i]->round, by_round[j]->round}});
      }
    }
  }
  return out;
}

DiveList dive_list_from_records(std::span<const RoundRecord> records, Gender gender) {
  DiveList list;
  list.gender = gender;
  for (const auto& r : records) {
    if (r.diver_id != records.front().diver_id || r.meet_id != records.front().meet_id) {
      throw std::invalid_argument("a dive list must come from one diver in one meet");
    }
    if (!r.voluntary) throw std::invalid_argument(fmt::format("round {} lacks the voluntary flag", r.round));
    list.entries.push_back({r.round, r.dive, *r.voluntary});
  }
  std::sort(list.entries.begin(), list.entries.end(), [](const auto& a, const auto& b) { return a.round < b.round; });
  return list;
}

DiveList legal_list_generator(Gender gender, std::span<const DiveDescriptor> catalog, std::uint64_t seed,
                              const GeneratorOptions& options) {
  std::array<std::vector<const DiveDescriptor*>, kDirectionCount> by_direction;
  for (const auto& d : catalog) by_direction[static_cast<std::size_t>(d.direction)].push_back(&d);

  Rng rng(seed);
  std::vector<DiveListEntry> picks;
  picks.reserve(kRounds);
  auto pick = [&](std::size_t dir) -> const DiveDescriptor& {
    const auto& pool = by_direction[dir];
    return *pool[rng.below(pool.size())];
  };

  int attempts = 0;
  const bool any_empty =
      std::any_of(by_direction.begin(), by_direction.end(), [](const auto& pool) { return pool.empty(); });
  while (!any_empty && attempts < options.max_attempts) {
    ++attempts;
    picks.clear();
    for (std::size_t dir = 0; dir < kDirectionCount; ++dir) picks.push_back({0, pick(dir), true});
    const std::size_t doubled = rng.below(kDirectionCount);
    for (std::size_t dir = 0; dir < kDirectionCount; ++dir) {
      picks.push_back({0, pick(dir), false});
      if (dir == doubled) picks.push_back({0, pick(dir), false});
    }
    rng.shuffle(picks.begin(), picks.end());
    for (std::size_t i = 0; i < picks.size(); ++i) picks[i].round = static_cast<int>(i) + 1;

    DiveList list{gender, picks};
    if (validate_dive_list(list).empty()) return list;
  }
  std::string reason = "no legal list found";
  if (any_empty) {
    std::array<int, kDirectionCount> counts{};
    for (std::size_t d = 0; d < kDirectionCount; ++d) counts[d] = static_cast<int>(by_direction[d].size());
    reason = fmt::format("catalog has no dives for: {}", missing_directions(counts));
  }
  throw std::runtime_error(fmt::format("catalog insufficient after {} attempts: {}", attempts, reason));
}

}  // namespace divebias

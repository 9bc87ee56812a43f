#include "divebias/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <fmt/format.h>

#include "divebias/scoring.hpp"

namespace divebias {

namespace {

const std::vector<std::string> kRequiredColumns{"meet_id",   "diver_id",         "gender",
                                                "age",       "round",            "direction",
                                                "position",  "half_somersaults", "half_twists",
                                                "dd"};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

int parse_int(const std::string& s, std::string_view what) {
  int v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end) throw std::invalid_argument(fmt::format("unparseable {} '{}'", what, s));
  return v;
}

// Parses a non-negative decimal exactly into units of 1/denom; throws when the
// value is not a whole number of units.
int parse_scaled(const std::string& s, int denom, std::string_view what, std::string_view step) {
  std::size_t pos = 0;
  long long whole = 0;
  bool digits = false;
  while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
    whole = whole * 10 + (s[pos] - '0');
    digits = true;
    ++pos;
    if (whole > 1'000'000) throw std::invalid_argument(fmt::format("{} '{}' out of range", what, s));
  }
  long long frac = 0;
  long long scale = 1;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
      if (scale < 1'000'000'000LL) {
        frac = frac * 10 + (s[pos] - '0');
        scale *= 10;
      } else if (s[pos] != '0') {
        throw std::invalid_argument(fmt::format("{} '{}' not a multiple of {}", what, s, step));
      }
      digits = true;
      ++pos;
    }
  }
  if (!digits || pos != s.size()) throw std::invalid_argument(fmt::format("unparseable {} '{}'", what, s));
  if ((frac * denom) % scale != 0) throw std::invalid_argument(fmt::format("{} '{}' not a multiple of {}", what, s, step));
  return static_cast<int>(whole * denom + frac * denom / scale);
}

HalfPoints parse_mark(const std::string& s) {
  const HalfPoints h{parse_scaled(s, 2, "score", "0.5")};
  if (h > kMaxMark) throw std::invalid_argument(fmt::format("score '{}' outside [0,10]", s));
  return h;
}

HalfPoints parse_net(const std::string& s) {
  const HalfPoints h{parse_scaled(s, 2, "net_score", "0.5")};
  if (h > kMaxNet) throw std::invalid_argument(fmt::format("net_score '{}' outside [0,30]", s));
  return h;
}

std::string format_half(HalfPoints h) {
  return h.value % 2 == 0 ? fmt::format("{}.0", h.value / 2) : fmt::format("{}.5", h.value / 2);
}

std::string format_tenths(Tenths t) { return fmt::format("{}.{}", t.value / 10, t.value % 10); }

struct Columns {
  std::map<std::string, std::size_t> index;
  std::optional<std::size_t> find(const std::string& name) const {
    const auto it = index.find(name);
    if (it == index.end()) return std::nullopt;
    return it->second;
  }
};

struct RowOutcome {
  RoundRecord record;
  Gender gender;
  std::vector<std::string> warnings;
};

RowOutcome parse_row(const std::vector<std::string>& raw, const Columns& cols, const ParseOptions& options) {
  auto field = [&](const std::string& name) -> std::string {
    const auto i = cols.find(name);
    if (!i || *i >= raw.size()) return {};
    return trim(raw[*i]);
  };
  auto required = [&](const std::string& name) -> std::string {
    std::string v = field(name);
    if (v.empty()) throw std::invalid_argument(fmt::format("missing value for {}", name));
    return v;
  };

  RowOutcome out;
  RoundRecord& r = out.record;
  r.meet_id = required("meet_id");
  r.diver_id = required("diver_id");

  const std::string gender = required("gender");
  const auto g = gender_from_string(gender);
  if (!g) throw std::invalid_argument(fmt::format("gender '{}' not F or M", gender));
  out.gender = *g;

  const std::string age_text = required("age");
  char* end = nullptr;
  const double age = std::strtod(age_text.c_str(), &end);
  if (end != age_text.c_str() + age_text.size() || !std::isfinite(age)) {
    throw std::invalid_argument(fmt::format("unparseable age '{}'", age_text));
  }
  if (age < 5.0 || age >= 31.0) throw std::invalid_argument(fmt::format("age {} outside 5-30", age_text));
  r.age = static_cast<int>(std::floor(age));
  if (static_cast<double>(r.age) != age) out.warnings.push_back(fmt::format("fractional age {} floored to {}", age_text, r.age));
  if (r.age < 10 || r.age > 20) out.warnings.push_back(fmt::format("age {} outside typical 10-20", r.age));

  r.round = parse_int(required("round"), "round");
  if (r.round < 1 || r.round > kRounds) throw std::invalid_argument(fmt::format("round {} outside 1-11", r.round));

  const std::string dir = required("direction");
  const auto direction = direction_from_archive(dir);
  if (!direction) throw std::invalid_argument(fmt::format("unknown direction '{}'", dir));
  const std::string pos = required("position");
  const auto position = position_from_archive(pos);
  if (!position) throw std::invalid_argument(fmt::format("unknown position '{}'", pos));
  r.dive.direction = *direction;
  r.dive.position = *position;
  r.dive.half_somersaults = parse_int(required("half_somersaults"), "half_somersaults");
  r.dive.half_twists = parse_int(required("half_twists"), "half_twists");
  r.dive.dd = Tenths{parse_scaled(required("dd"), 10, "dd", "0.1")};
  if (const std::string base = field("twist_base"); !base.empty()) {
    const auto b = direction_from_archive(base);
    if (!b) throw std::invalid_argument(fmt::format("unknown twist_base '{}'", base));
    r.dive.twist_base = *b;
  }
  const auto issues = validate_descriptor(r.dive);
  for (const auto& issue : issues) {
    if (!issue.warning_only) throw std::invalid_argument(issue.message);
    out.warnings.push_back(issue.message);
  }

  bool gap = false;
  for (int j = 1; j <= kMaxJudges; ++j) {
    const std::string v = field(fmt::format("j{}", j));
    if (v.empty()) {
      gap = true;
      continue;
    }
    if (gap) throw std::invalid_argument("judge scores must be left-packed");
    r.judge_scores.push_back(parse_mark(v));
  }
  if (!r.judge_scores.empty() && !valid_panel_size(r.judge_scores.size())) {
    throw std::invalid_argument(fmt::format("panel of {} judges; expected 3, 5, 7 or 9", r.judge_scores.size()));
  }
  if (const std::string net = field("net_score"); !net.empty()) r.net_score = parse_net(net);
  if (r.judge_scores.empty() && !r.net_score) throw std::invalid_argument("neither judge scores nor net_score present");
  if (!r.judge_scores.empty() && r.net_score) {
    const HalfPoints computed = net_score(r.judge_scores);
    if (computed != *r.net_score) {
      throw std::invalid_argument(fmt::format("stored net {} disagrees with judge marks (net {})",
                                              format_half(*r.net_score), format_half(computed)));
    }
  }

  const std::string vol = field("voluntary");
  if (vol == "1") {
    r.voluntary = true;
  } else if (vol == "0") {
    r.voluntary = false;
  } else if (!vol.empty()) {
    throw std::invalid_argument(fmt::format("voluntary '{}' not 0 or 1", vol));
  } else if (options.require_voluntary) {
    throw std::invalid_argument("voluntary flag required");
  }
  return out;
}

}  // namespace

std::string_view to_string(Gender g) { return g == Gender::F ? "F" : "M"; }

std::optional<Gender> gender_from_string(std::string_view s) {
  if (s == "F") return Gender::F;
  if (s == "M") return Gender::M;
  return std::nullopt;
}

HalfPoints effective_net(const RoundRecord& r) {
  if (r.judge_scores.empty()) {
    if (!r.net_score) throw std::invalid_argument("record has neither judge scores nor a net score");
    return *r.net_score;
  }
  const HalfPoints computed = net_score(r.judge_scores);
  if (r.net_score && *r.net_score != computed) {
    throw std::invalid_argument(fmt::format("inconsistent record {}/{}/round {}: stored net {} vs computed {}",
                                            r.meet_id, r.diver_id, r.round, format_half(*r.net_score),
                                            format_half(computed)));
  }
  return computed;
}

Dataset::Dataset(std::vector<RoundRecord> records, std::map<std::string, DiverProfile> profiles)
    : records_(std::move(records)), profiles_(std::move(profiles)) {
  std::set<std::tuple<std::string, std::string, int>> keys;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (!profiles_.contains(r.diver_id)) throw std::invalid_argument(fmt::format("no profile for diver {}", r.diver_id));
    if (!keys.emplace(r.meet_id, r.diver_id, r.round).second) {
      throw std::invalid_argument(fmt::format("duplicate (meet {}, diver {}, round {})", r.meet_id, r.diver_id, r.round));
    }
    by_diver_[r.diver_id].push_back(i);
    by_meet_[r.meet_id].push_back(i);
    by_diver_meet_[{r.diver_id, r.meet_id}].push_back(i);
  }
}

const DiverProfile& Dataset::profile(const std::string& diver_id) const {
  const auto it = profiles_.find(diver_id);
  if (it == profiles_.end()) throw std::out_of_range(fmt::format("unknown diver {}", diver_id));
  return it->second;
}

namespace {
const std::vector<std::size_t> kNoRecords;
}

const std::vector<std::size_t>& Dataset::by_diver(const std::string& diver_id) const {
  const auto it = by_diver_.find(diver_id);
  return it == by_diver_.end() ? kNoRecords : it->second;
}

const std::vector<std::size_t>& Dataset::by_meet(const std::string& meet_id) const {
  const auto it = by_meet_.find(meet_id);
  return it == by_meet_.end() ? kNoRecords : it->second;
}

const std::vector<std::size_t>& Dataset::by_diver_meet(const std::string& diver_id, const std::string& meet_id) const {
  const auto it = by_diver_meet_.find({diver_id, meet_id});
  return it == by_diver_meet_.end() ? kNoRecords : it->second;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

ParseResult parse_archive(std::istream& in, const ParseOptions& options) {
  ParseResult result;
  std::string line;
  if (!std::getline(in, line)) {
    result.errors.push_back({0, "empty input: header row required"});
    return result;
  }
  if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);

  Columns cols;
  const auto header = split_csv_line(line);
  for (std::size_t i = 0; i < header.size(); ++i) cols.index.emplace(trim(header[i]), i);
  for (const auto& name : kRequiredColumns) {
    if (!cols.find(name)) result.errors.push_back({1, fmt::format("missing required column '{}'", name)});
  }
  if (options.require_voluntary && !cols.find("voluntary")) {
    result.errors.push_back({1, "missing required column 'voluntary'"});
  }
  if (!result.errors.empty()) return result;

  std::vector<RoundRecord> records;
  std::map<std::string, DiverProfile> profiles;
  std::set<std::tuple<std::string, std::string, int>> keys;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto raw = split_csv_line(line);
      if (raw.size() > header.size()) {
        throw std::invalid_argument(fmt::format("{} fields but header has {}", raw.size(), header.size()));
      }
      RowOutcome row = parse_row(raw, cols, options);
      const auto& r = row.record;
      if (keys.contains({r.meet_id, r.diver_id, r.round})) {
        throw std::invalid_argument(
            fmt::format("duplicate (meet {}, diver {}, round {})", r.meet_id, r.diver_id, r.round));
      }
      if (const auto it = profiles.find(r.diver_id); it != profiles.end() && it->second.gender != row.gender) {
        throw std::invalid_argument(fmt::format("diver {} recorded with conflicting genders", r.diver_id));
      }
      for (auto& w : row.warnings) result.warnings.push_back({line_no, std::move(w)});
      keys.emplace(r.meet_id, r.diver_id, r.round);
      profiles.try_emplace(r.diver_id, DiverProfile{r.diver_id, row.gender});
      records.push_back(std::move(row.record));
    } catch (const std::invalid_argument& e) {
      result.errors.push_back({line_no, e.what()});
    }
  }

  if (options.strict && !result.errors.empty()) return result;
  result.dataset.emplace(std::move(records), std::move(profiles));
  return result;
}

ParseResult parse_archive_file(const std::string& path, const ParseOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    ParseResult result;
    result.errors.push_back({0, fmt::format("cannot open '{}'", path)});
    return result;
  }
  return parse_archive(in, options);
}

std::string archive_header() {
  std::string h = "meet_id,diver_id,gender,age,round,direction,position,half_somersaults,half_twists,dd";
  for (int j = 1; j <= kMaxJudges; ++j) h += fmt::format(",j{}", j);
  h += ",net_score,voluntary,twist_base";
  return h;
}

void write_archive(std::ostream& out, const Dataset& d) {
  out << archive_header() << '\n';
  for (const auto& r : d.records()) {
    out << r.meet_id << ',' << r.diver_id << ',' << to_string(d.profile(r.diver_id).gender) << ',' << r.age << ','
        << r.round << ',' << archive_name(r.dive.direction) << ',' << archive_name(r.dive.position) << ','
        << r.dive.half_somersaults << ',' << r.dive.half_twists << ',' << format_tenths(r.dive.dd);
    for (int j = 0; j < kMaxJudges; ++j) {
      out << ',';
      if (static_cast<std::size_t>(j) < r.judge_scores.size()) out << format_half(r.judge_scores[j]);
    }
    out << ',';
    if (r.net_score) out << format_half(*r.net_score);
    out << ',';
    if (r.voluntary) out << (*r.voluntary ? '1' : '0');
    out << ',';
    if (r.dive.twist_base) out << archive_name(*r.dive.twist_base);
    out << '\n';
  }
}

DatasetStats dataset_stats(const Dataset& d) {
  std::set<std::tuple<Direction, int, int, std::optional<Direction>, Position>> dives;
  for (const auto& r : d.records()) {
    dives.emplace(r.dive.direction, r.dive.half_somersaults, r.dive.half_twists, r.dive.twist_base, r.dive.position);
  }
  return DatasetStats{d.size(), d.meet_index().size(), d.diver_index().size(), dives.size()};
}

}  // namespace divebias

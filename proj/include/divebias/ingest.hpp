#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "divebias/dive_catalog.hpp"

namespace divebias {

enum class Gender : std::uint8_t { F, M };

std::string_view to_string(Gender g);
std::optional<Gender> gender_from_string(std::string_view s);

struct DiverProfile {
  std::string diver_id;
  Gender gender{Gender::F};
  friend bool operator==(const DiverProfile&, const DiverProfile&) = default;
};

/// One diver's dive in one round of one meet.
struct RoundRecord {
  std::string meet_id;
  std::string diver_id;
  int round{1};
  int age{0};
  DiveDescriptor dive;
  std::vector<HalfPoints> judge_scores;  // empty when the archive only carries nets
  std::optional<HalfPoints> net_score;
  std::optional<bool> voluntary;

  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

inline constexpr int kRounds = 11;
inline constexpr int kMaxJudges = 9;

/// Net score for a record: computed from the judge marks when present,
/// otherwise the stored net. Throws std::invalid_argument when both are present
/// and disagree, or when neither is present.
HalfPoints effective_net(const RoundRecord& r);

/// Immutable validated archive with lookups by diver, meet and (diver, meet).
class Dataset {
 public:
  Dataset() = default;
  /// Throws std::invalid_argument if a record lacks a profile or a
  /// (meet, diver, round) key repeats.
  Dataset(std::vector<RoundRecord> records, std::map<std::string, DiverProfile> profiles);

  const std::vector<RoundRecord>& records() const { return records_; }
  const std::map<std::string, DiverProfile>& profiles() const { return profiles_; }
  const DiverProfile& profile(const std::string& diver_id) const;

  /// Record indices, in record order.
  const std::vector<std::size_t>& by_diver(const std::string& diver_id) const;
  const std::vector<std::size_t>& by_meet(const std::string& meet_id) const;
  const std::vector<std::size_t>& by_diver_meet(const std::string& diver_id, const std::string& meet_id) const;

  const std::map<std::string, std::vector<std::size_t>>& diver_index() const { return by_diver_; }
  const std::map<std::string, std::vector<std::size_t>>& meet_index() const { return by_meet_; }
  const std::map<std::pair<std::string, std::string>, std::vector<std::size_t>>& diver_meet_index() const {
    return by_diver_meet_;
  }

  bool empty() const { return records_.empty(); }
  std::size_t size() const { return records_.size(); }

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.records_ == b.records_ && a.profiles_ == b.profiles_;
  }

 private:
  std::vector<RoundRecord> records_;
  std::map<std::string, DiverProfile> profiles_;
  std::map<std::string, std::vector<std::size_t>> by_diver_;
  std::map<std::string, std::vector<std::size_t>> by_meet_;
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> by_diver_meet_;
};

struct ParseIssue {
  std::size_t line{0};  // 1-based, header is line 1; 0 for whole-file issues
  std::string message;
};

struct ParseOptions {
  /// Reject the whole archive if any row fails validation.
  bool strict{false};
  /// Require the `voluntary` column to be filled on every row.
  bool require_voluntary{false};
};

struct ParseResult {
  std::optional<Dataset> dataset;  // empty only when the archive is rejected outright
  std::vector<ParseIssue> errors;
  std::vector<ParseIssue> warnings;
  bool ok() const { return dataset.has_value() && errors.empty(); }
};

/// Reads the archive CSV. Best-effort mode drops failing rows and reports them;
/// strict mode returns no dataset if anything failed.
ParseResult parse_archive(std::istream& in, const ParseOptions& options = {});
ParseResult parse_archive_file(const std::string& path, const ParseOptions& options = {});

/// Writes the dataset in the archive CSV schema. Parsing the output yields an
/// equal Dataset.
void write_archive(std::ostream& out, const Dataset& d);

/// The archive header, j1..j9 included.
std::string archive_header();

struct DatasetStats {
  std::size_t dives{0};
  std::size_t meets{0};
  std::size_t athletes{0};
  /// Distinct (direction, rotation, position) combinations.
  std::size_t unique_dives{0};
  friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

DatasetStats dataset_stats(const Dataset& d);

/// Splits one CSV line into fields; handles double-quoted fields.
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace divebias

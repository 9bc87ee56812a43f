#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "divebias/ingest.hpp"
#include "divebias/lmm.hpp"

namespace divebias {

/// Knobs for a synthetic archive. Abilities, noise and biases are on the
/// single-judge mark scale (0-10); a net score sums three marks, so a bias b per
/// judge shows up as roughly 3b on the net scale.
struct SimConfig {
  int n_divers{100};
  int n_meets{5};
  int panel_size{5};
  double ability_mean_f{5.5};
  double ability_mean_m{5.5};
  double ability_sd{0.8};
  double mark_noise_sd{0.6};
  double round_bias{0.0};  // per judge, per round after the first
  double dd_bias{0.0};     // per judge, per DD unit away from the catalog mean
  double age_bias{0.0};    // per judge, per year away from the middle of age_range
  int age_min{13};
  int age_max{18};
  /// Years spanned by the meets; divers age across them.
  double season_years{5.0};
  /// Spread of divers' ages at the first meet, in years, starting at age_min.
  /// Zero follows a single cohort. A positive spread adds between-diver age
  /// differences, which discrepancy centering removes and which therefore pull
  /// the fitted Age coefficient toward zero.
  double cohort_spread{0.0};
  std::uint64_t seed{1};
};

/// Net-scale effect a per-judge bias produces through the middle-three sum.
inline constexpr double kNetPerJudge = 3.0;

/// Per-judge bias that yields the given net-scale effect.
constexpr double per_judge(double net_effect) { return net_effect / kNetPerJudge; }

struct SimDiver {
  std::string diver_id;
  Gender gender{Gender::F};
  double ability{0.0};
  double birth_offset{0.0};  // age at the first meet, in years
};

struct SimTruth {
  SimConfig config;
  double catalog_mean_dd{0.0};
  double reference_age{0.0};
  std::vector<SimDiver> divers;
};

/// Throws std::invalid_argument on an invalid config.
void validate_config(const SimConfig& config);

/// Builds a reproducible archive: legal dive lists from the catalog, judge
/// marks from ability plus injected biases and noise, nets through the real
/// scoring rules. Records are ordered by (diver, meet, round).
std::pair<Dataset, SimTruth> generate(const SimConfig& config, std::span<const DiveDescriptor> catalog);
std::pair<Dataset, SimTruth> generate(const SimConfig& config);

struct EffectSummary {
  double truth{0.0};  // net scale
  double mean{0.0};
  double sd{0.0};
  double coverage{0.0};  // share of fits with |estimate - truth| <= 3 SE
};

struct PowerRow {
  std::size_t config_index{0};
  Gender gender{Gender::F};
  int replicates{0};
  int converged{0};
  std::vector<std::string> failures;
  EffectSummary round;
  EffectSummary age;
  EffectSummary dd;
};

/// For each config and replicate: generate, compute discrepancies, fit per
/// gender. Replicate r uses a seed derived from (config.seed, r). A failed fit
/// is recorded in the row and excluded from the summaries.
std::vector<PowerRow> power_study(std::span<const SimConfig> grid, int replicates);

/// Fits both genders on a generated archive; empty optional for a gender with
/// too little data.
struct PipelineFits {
  std::optional<LmmFit> girls;
  std::optional<LmmFit> boys;
};
PipelineFits fit_pipeline(const Dataset& d, const AnalysisOptions& options = {});

}  // namespace divebias

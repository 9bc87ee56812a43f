#include "divebias/simulate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "divebias/random.hpp"
#include "divebias/rules.hpp"
#include "divebias/scoring.hpp"

namespace divebias {

namespace {

// Round half to even on the half-point grid, then clamp to [0, 10].
HalfPoints to_mark(double v) {
  double h = std::nearbyint(2.0 * v);
  h = std::clamp(h, 0.0, static_cast<double>(kMaxMark.value));
  return HalfPoints{static_cast<int>(h)};
}

void summarize(EffectSummary& s, const std::vector<std::pair<double, double>>& estimates) {
  if (estimates.empty()) return;
  const auto n = static_cast<double>(estimates.size());
  double sum = 0.0;
  int covered = 0;
  for (const auto& [est, se] : estimates) {
    sum += est;
    if (std::abs(est - s.truth) <= 3.0 * se) ++covered;
  }
  s.mean = sum / n;
  double ss = 0.0;
  for (const auto& [est, se] : estimates) ss += (est - s.mean) * (est - s.mean);
  s.sd = estimates.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  s.coverage = covered / n;
}

}  // namespace

void validate_config(const SimConfig& c) {
  if (c.n_divers < 1 || c.n_meets < 1) throw std::invalid_argument("need at least one diver and one meet");
  if (!valid_panel_size(static_cast<std::size_t>(c.panel_size))) {
    throw std::invalid_argument(fmt::format("panel size {} not in {{3,5,7,9}}", c.panel_size));
  }
  if (c.ability_sd < 0.0 || c.mark_noise_sd < 0.0) throw std::invalid_argument("standard deviations must be >= 0");
  if (c.age_min > c.age_max) throw std::invalid_argument("age_min exceeds age_max");
  if (c.season_years < 0.0 || c.cohort_spread < 0.0 ||
      c.age_min + c.cohort_spread + c.season_years > c.age_max + 1.0) {
    throw std::invalid_argument(fmt::format("season span {} plus cohort spread {} years does not fit ages {}-{}",
                                            c.season_years, c.cohort_spread, c.age_min, c.age_max));
  }
}

std::pair<Dataset, SimTruth> generate(const SimConfig& config) {
  const auto catalog = default_catalog();
  return generate(config, catalog);
}

std::pair<Dataset, SimTruth> generate(const SimConfig& config, std::span<const DiveDescriptor> catalog) {
  validate_config(config);
  if (catalog.empty()) throw std::invalid_argument("empty catalog");

  SimTruth truth;
  truth.config = config;
  double dd_sum = 0.0;
  for (const auto& d : catalog) dd_sum += d.dd.as_double();
  truth.catalog_mean_dd = dd_sum / static_cast<double>(catalog.size());
  truth.reference_age = 0.5 * (config.age_min + config.age_max);

  const int width = static_cast<int>(std::to_string(config.n_divers).size());
  const int meet_width = static_cast<int>(std::to_string(config.n_meets).size());
  std::vector<RoundRecord> records;
  records.reserve(static_cast<std::size_t>(config.n_divers) * config.n_meets * kRounds);
  std::map<std::string, DiverProfile> profiles;
  std::vector<HalfPoints> marks(static_cast<std::size_t>(config.panel_size));

  for (int i = 0; i < config.n_divers; ++i) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(i)));
    SimDiver diver;
    diver.diver_id = fmt::format("D{:0{}}", i + 1, width);
    diver.gender = rng.below(2) == 0 ? Gender::F : Gender::M;
    const double mean = diver.gender == Gender::F ? config.ability_mean_f : config.ability_mean_m;
    diver.ability = rng.normal(mean, config.ability_sd);
    diver.birth_offset = config.age_min + rng.uniform() * config.cohort_spread;
    profiles.emplace(diver.diver_id, DiverProfile{diver.diver_id, diver.gender});

    for (int m = 0; m < config.n_meets; ++m) {
      const double when = config.season_years * m / config.n_meets;
      const int age = std::min(config.age_max, static_cast<int>(std::floor(diver.birth_offset + when)));
      const DiveList list = legal_list_generator(diver.gender, catalog, derive_seed(rng.below(~0ULL), m));
      for (const auto& entry : list.entries) {
        const double centre = diver.ability + config.round_bias * (entry.round - 1) +
                              config.dd_bias * (entry.dive.dd.as_double() - truth.catalog_mean_dd) +
                              config.age_bias * (age - truth.reference_age);
        for (auto& mark : marks) mark = to_mark(centre + config.mark_noise_sd * rng.normal());
        RoundRecord r;
        r.meet_id = fmt::format("M{:0{}}", m + 1, meet_width);
        r.diver_id = diver.diver_id;
        r.round = entry.round;
        r.age = age;
        r.dive = entry.dive;
        r.judge_scores = marks;
        r.net_score = net_score(marks);
        r.voluntary = entry.voluntary;
        records.push_back(std::move(r));
      }
    }
    truth.divers.push_back(std::move(diver));
  }
  return {Dataset(std::move(records), std::move(profiles)), std::move(truth)};
}

PipelineFits fit_pipeline(const Dataset& d, const AnalysisOptions& options) {
  const auto comp = competency(d, options);
  const auto disc = discrepancies(d, comp, options);
  PipelineFits fits;
  for (const Gender g : {Gender::F, Gender::M}) {
    std::size_t divers = 0;
    for (const auto& [id, profile] : d.profiles()) divers += profile.gender == g ? 1 : 0;
    if (divers < 2) continue;
    auto fit = fit_lmm(build_design(disc, g));
    (g == Gender::F ? fits.girls : fits.boys) = std::move(fit);
  }
  return fits;
}

std::vector<PowerRow> power_study(std::span<const SimConfig> grid, int replicates) {
  if (replicates < 1) throw std::invalid_argument("need at least one replicate");
  std::vector<PowerRow> rows;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    validate_config(grid[c]);
    std::array<PowerRow, 2> by_gender;
    std::array<std::vector<std::pair<double, double>>, 2> round, age, dd;
    for (int g = 0; g < 2; ++g) {
      auto& row = by_gender[static_cast<std::size_t>(g)];
      row.config_index = c;
      row.gender = g == 0 ? Gender::F : Gender::M;
      row.replicates = replicates;
      row.round.truth = kNetPerJudge * grid[c].round_bias;
      row.age.truth = kNetPerJudge * grid[c].age_bias;
      row.dd.truth = kNetPerJudge * grid[c].dd_bias;
    }
    for (int rep = 0; rep < replicates; ++rep) {
      SimConfig cfg = grid[c];
      cfg.seed = derive_seed(grid[c].seed, static_cast<std::uint64_t>(rep));
      std::vector<DiscrepancyRecord> disc;
      std::string failure;
      try {
        const auto data = generate(cfg).first;
        disc = discrepancies(data, competency(data));
      } catch (const std::exception& e) {
        failure = e.what();
      }
      for (int g = 0; g < 2; ++g) {
        auto& row = by_gender[static_cast<std::size_t>(g)];
        try {
          if (!failure.empty()) throw std::runtime_error(failure);
          const LmmFit fit = fit_lmm(build_design(disc, row.gender));
          ++row.converged;
          round[g].emplace_back(fit.beta[1], fit.se[1]);
          age[g].emplace_back(fit.beta[2], fit.se[2]);
          dd[g].emplace_back(fit.beta[3], fit.se[3]);
        } catch (const std::exception& e) {
          row.failures.push_back(fmt::format("replicate {}: {}", rep, e.what()));
        }
      }
    }
    for (int g = 0; g < 2; ++g) {
      auto& row = by_gender[static_cast<std::size_t>(g)];
      summarize(row.round, round[g]);
      summarize(row.age, age[g]);
      summarize(row.dd, dd[g]);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace divebias

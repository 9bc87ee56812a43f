// Acceptance checks. Prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails.

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "cli_support.hpp"
#include "divebias/analytics.hpp"
#include "divebias/lmm.hpp"
#include "divebias/random.hpp"
#include "divebias/rules.hpp"
#include "divebias/scoring.hpp"
#include "divebias/simulate.hpp"
#include "divebias/smoothing.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace divebias;

namespace {

const std::string kData = DIVEBIAS_TEST_DATA;

struct Outcome {
  bool pass{false};
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_s;
  std::function<Outcome()> check;
};

// ---------------------------------------------------------------- 1

Outcome scoring_oracle() {
  Rng rng(20240601);
  int mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<int> raw(5);
    std::vector<HalfPoints> panel(5);
    for (std::size_t j = 0; j < 5; ++j) {
      raw[j] = rng.between(0, 20);
      panel[j] = HalfPoints{raw[j]};
    }
    if (net_score(panel).value != oracle::trimmed_sum(raw)) ++mismatches;
  }
  return {mismatches == 0, fmt::format("{} mismatches in 1000 panels", mismatches)};
}

// ---------------------------------------------------------------- 2

struct ZeroSum {
  double worst_diver{0.0};
  double global_mean{0.0};
  std::size_t records{0};
};

ZeroSum zero_sum(const Dataset& d) {
  const auto recs = discrepancies(d, competency(d));
  std::map<std::string, double> sums;
  double total = 0.0;
  for (const auto& r : recs) {
    sums[r.diver_id] += r.discrepancy;
    total += r.discrepancy;
  }
  ZeroSum z;
  z.records = recs.size();
  for (const auto& [id, s] : sums) z.worst_diver = std::max(z.worst_diver, std::abs(s));
  z.global_mean = std::abs(total / static_cast<double>(recs.size()));
  return z;
}

Outcome zero_sum_identity() {
  const auto fixture = parse_archive_file(kData + "/two_meets.csv");
  if (!fixture.ok()) return {false, "fixture did not parse"};
  const auto small = zero_sum(*fixture.dataset);

  const auto big = generate(SimConfig{.n_divers = 455, .n_meets = 10, .seed = 2}).first;
  const auto t0 = std::chrono::steady_clock::now();
  const auto large = zero_sum(big);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const double worst = std::max(small.worst_diver, large.worst_diver);
  const double mean = std::max(small.global_mean, large.global_mean);
  const bool pass = worst <= 1e-9 && mean <= 1e-9 && secs < 1.0;
  return {pass, fmt::format("max |sum D| per diver {:.1e}, |mean D| {:.1e}; {} records in {:.3f} s", worst, mean,
                            large.records, secs)};
}

// ---------------------------------------------------------------- 3

Outcome reml_grid() {
  double worst_rel = 0.0;
  double worst_f = 0.0;
  double min_lambda = std::numeric_limits<double>::infinity();
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const auto d = fixture::tiny(s);
    double best_lambda = 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 10000; ++k) {
      const double lambda = std::pow(10.0, -6.0 + 9.0 * k / 9999.0);
      const double f = reml_criterion(d, lambda);
      if (f < best) {
        best = f;
        best_lambda = lambda;
      }
    }
    const auto fit = fit_lmm(d);
    worst_rel = std::max(worst_rel, std::abs(fit.lambda - best_lambda) / best_lambda);
    worst_f = std::max(worst_f, std::abs(fit.reml_value - best));
    min_lambda = std::min(min_lambda, fit.lambda);
  }
  return {worst_rel <= 1e-3 && worst_f <= 1e-6,
          fmt::format("worst lambda rel. diff {:.2e}, worst criterion diff {:.2e}, smallest lambda {:.3g}", worst_rel,
                      worst_f, min_lambda)};
}

// ---------------------------------------------------------------- 4

Outcome anova_closed_form() {
  const auto d = fixture::balanced(20, 11, 0.8, 1);
  const auto fit = fit_lmm(d);
  const auto a = oracle::balanced_anova(d.y, 20, 11);
  const double db = std::abs(fit.sigma2_b - a.sigma2_b);
  const double de = std::abs(fit.sigma2_e - a.sigma2_e);
  return {db <= 1e-8 && de <= 1e-8,
          fmt::format("sigma2_b {:.10f} vs {:.10f}, sigma2_e {:.10f} vs {:.10f}", fit.sigma2_b, a.sigma2_b,
                      fit.sigma2_e, a.sigma2_e)};
}

// ---------------------------------------------------------------- 5

Outcome paper_scale_recovery() {
  SimConfig cfg;
  cfg.n_divers = 200;
  cfg.n_meets = 10;
  cfg.round_bias = per_judge(-0.08);
  cfg.age_bias = per_judge(0.30);
  cfg.dd_bias = per_judge(-2.20);
  cfg.seed = 2025;
  const std::vector<SimConfig> grid{cfg};
  const auto rows = power_study(grid, 20);
  bool pass = true;
  std::string detail;
  for (const auto& r : rows) {
    const bool ok = r.converged == 20 && std::abs(r.round.mean + 0.08) <= 0.01 && r.round.coverage >= 0.95 &&
                    r.age.coverage >= 0.95 && r.dd.coverage >= 0.95;
    pass = pass && ok;
    detail += fmt::format("{}: Round {:.4f} ({:.2f}), Age {:.4f} ({:.2f}), DD {:.4f} ({:.2f}); ", to_string(r.gender),
                          r.round.mean, r.round.coverage, r.age.mean, r.age.coverage, r.dd.mean, r.dd.coverage);
  }
  detail += "mean estimate (3 SE coverage) over 20 seeds";
  return {pass, detail};
}

// ---------------------------------------------------------------- 6

Outcome ols_reduction() {
  const auto d = fixture::no_group_effect(40, 11, 6);
  const auto fit = fit_lmm(d);
  const auto ols = oracle::ols(d.y, d.x);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < ols.beta.size(); ++i) {
    worst = std::max(worst, std::abs(fit.beta[i] - ols.beta[i]) / std::abs(ols.beta[i]));
  }
  return {fit.lambda <= 1e-4 && worst <= 1e-6,
          fmt::format("lambda {:.3g}, worst beta rel. diff {:.2e}", fit.lambda, worst)};
}

// ---------------------------------------------------------------- 7

Outcome loess_oracle() {
  std::vector<double> eval;
  for (int i = 0; i <= 40; ++i) eval.push_back(1.0 + 0.25 * i);

  double worst = 0.0;
  Rng rng(7);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 11 + rng.below(80);
    std::vector<Point2> pts;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = t == 0 ? 1.0 + static_cast<double>(i % 11) : 1.0 + static_cast<double>(rng.below(11));
      const double y = t == 0 ? x * x : 0.05 * x * x - 0.3 * x + rng.normal();
      pts.push_back({x, y});
      xs.push_back(x);
      ys.push_back(y);
    }
    const double span = t == 0 ? 0.75 : 0.3 + 0.7 * rng.uniform();
    const auto fit = loess_fit(pts, {span, 1}, eval);
    for (std::size_t i = 0; i < eval.size(); ++i) {
      worst = std::max(worst, std::abs(fit.fitted[i] - oracle::local_linear(xs, ys, span, eval[i])));
    }
  }

  double affine = 0.0;
  std::vector<Point2> line;
  for (int x = 1; x <= 11; ++x) line.push_back({static_cast<double>(x), 3.0 * x + 2.0});
  for (const double span : {0.3, 0.5, 0.75, 1.0}) {
    const auto fit = loess_fit(line, {span, 1}, eval);
    for (std::size_t i = 0; i < eval.size(); ++i) affine = std::max(affine, std::abs(fit.fitted[i] - (3.0 * eval[i] + 2.0)));
  }
  return {worst <= 1e-10 && affine <= 1e-8,
          fmt::format("worst oracle diff {:.2e} over 20 datasets, worst affine error {:.2e}", worst, affine)};
}

// ---------------------------------------------------------------- 8

Outcome summary_oracle() {
  Rng rng(88);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + rng.below(400);
    std::vector<DiscrepancyRecord> recs(n);
    std::map<std::string, std::vector<double>> by_level;
    for (auto& r : recs) {
      r.age = 12 + rng.between(0, 6);
      r.discrepancy = rng.normal(0.0, 2.0);
      by_level[std::to_string(r.age)].push_back(r.discrepancy);
    }
    for (const auto& s : group_summaries(recs, Factor::Age)) {
      const auto& v = by_level.at(s.level);
      worst = std::max({worst, std::abs(s.median - oracle::percentile(v, 0.5)),
                        std::abs(s.p2_5 - oracle::percentile(v, 0.025)),
                        std::abs(s.p97_5 - oracle::percentile(v, 0.975))});
    }
  }
  return {worst <= 1e-12, fmt::format("worst diff {:.2e} over 100 datasets", worst)};
}

// ---------------------------------------------------------------- 9

DiveList list_from_file(const std::string& path) {
  const auto res = parse_archive_file(path, ParseOptions{.require_voluntary = true});
  if (!res.ok()) throw std::runtime_error("cannot parse " + path);
  const auto& recs = res.dataset->records();
  return dive_list_from_records(recs, res.dataset->profile(recs.front().diver_id).gender);
}

bool only(const std::vector<RuleViolation>& v, RuleCode c) { return v.size() == 1 && v.front().code == c; }

Outcome rules_fixtures() {
  std::vector<std::string> failures;
  const auto dup = validate_dive_list(list_from_file(kData + "/pike_tuck.csv"));
  if (!only(dup, RuleCode::DuplicateDive)) failures.push_back("pike/tuck");

  auto legal = list_from_file(kData + "/legal_list.csv");
  if (!validate_dive_list(legal).empty()) failures.push_back("legal list");

  // Voluntary DDs 1.4, 1.7, 1.9, 2.0, 2.0 (sum 9.0), then 1.8 in place of 1.7 (9.1).
  auto vol = legal;
  const int dds[] = {14, 17, 19, 20, 20};
  int k = 0;
  for (auto& e : vol.entries) {
    if (e.voluntary) e.dive.dd = Tenths{dds[k++]};
  }
  if (!validate_dive_list(vol).empty()) failures.push_back("voluntary 9.0");
  for (auto& e : vol.entries) {
    if (e.voluntary && e.dive.dd == Tenths{17}) e.dive.dd = Tenths{18};
  }
  if (!only(validate_dive_list(vol), RuleCode::VoluntaryDDSum)) failures.push_back("voluntary 9.1");

  // The legal list's optional sum is 11.5; take 0.1 off one optional dive.
  auto opt = legal;
  for (auto& e : opt.entries) {
    if (!e.voluntary && e.round == 11) e.dive.dd.value -= 1;
  }
  if (!only(validate_dive_list(opt), RuleCode::OptionalDDSum)) failures.push_back("optional 11.4");

  const auto cat = default_catalog();
  int dirty = 0;
  for (const Gender g : {Gender::F, Gender::M}) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      if (!validate_dive_list(legal_list_generator(g, cat, seed)).empty()) ++dirty;
    }
  }
  if (dirty > 0) failures.push_back(fmt::format("{} generated lists", dirty));
  return {failures.empty(), failures.empty() ? "all fixtures and 200 generated lists behave"
                                             : "failed: " + fmt::format("{}", fmt::join(failures, ", "))};
}

// ---------------------------------------------------------------- 10

Outcome table_format() {
  LmmFit girls;
  girls.names = {"Intercept", "Round", "Age", "DD"};
  girls.beta = Eigen::Vector4d(1.8, -0.09, 0.28, -3.26);
  girls.se = Eigen::Vector4d(0.33, 0.0006, 0.019, 0.065);
  girls.t = Eigen::Vector4d(5.47, -14.79, 14.63, -50.04);
  girls.icc_adj = 0.04;
  girls.n = 1045;
  girls.g = 1045;
  LmmFit boys = girls;
  boys.beta = Eigen::Vector4d(-0.33, -0.08, 0.30, -2.20);
  boys.se = Eigen::Vector4d(0.37, 0.007, 0.021, 0.063);
  boys.t = Eigen::Vector4d(-0.91, -11.56, 14.26, -34.84);
  boys.icc_adj = 0.02;
  boys.n = 866;
  boys.g = 866;

  const auto table = format_fit_table(girls, boys);
  std::istringstream in(table);
  std::vector<std::vector<std::string>> rows;
  for (std::string line; std::getline(in, line);) {
    std::istringstream ws(line);
    rows.emplace_back();
    for (std::string w; ws >> w;) rows.back().push_back(w);
  }
  using Row = std::vector<std::string>;
  bool pass = rows.size() == 6 && table.find("Girls, n=1045") != std::string::npos &&
              table.find("ICC = 4%") != std::string::npos && table.find("Boys, n=866") != std::string::npos &&
              table.find("ICC = 2%") != std::string::npos;
  pass = pass && rows[1] == Row{"Effect", "Estimate", "SE", "t-statistic", "Estimate", "SE", "t-statistic"};
  pass = pass && rows[2] == Row{"Intercept", "1.8", "0.33", "5.47", "-0.33", "0.37", "-0.91"};
  pass = pass && rows[3].front() == "Round" && rows[4].front() == "Age" && rows[5].front() == "DD";
  for (std::size_t i = 2; pass && i < rows.size(); ++i) pass = rows[i].size() == 7;
  return {pass, pass ? "header, column and Intercept rows match" : "layout mismatch:\n" + table};
}

// ---------------------------------------------------------------- 11

Outcome round_trend() {
  int below = 0;
  int meets = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SimConfig cfg;
    cfg.round_bias = per_judge(-0.08);
    cfg.seed = seed;
    const auto d = generate(cfg).first;
    for (const auto& t : round_trends(discrepancies(d, competency(d)))) {
      ++meets;
      if (t.fit.fitted.back() < t.fit.fitted.front()) ++below;
    }
  }
  const double share = static_cast<double>(below) / meets;
  return {share >= 0.90, fmt::format("{} of {} meets decline from round 1 to 11 ({:.0f}%)", below, meets, 100 * share)};
}

// ---------------------------------------------------------------- 12

Outcome determinism() {
  using clitest::run;
  const std::vector<std::vector<std::string>> commands{
      {"ingest", "--input", kData + "/two_meets.csv"},
      {"validate", "--input", kData + "/legal_list.csv", "--format", "json"},
      {"score", "--input", kData + "/two_meets.csv", "--format", "json"},
      {"simulate", "--output", "{dir}/sim", "--divers", "40", "--meets", "3", "--round-bias", "-0.03", "--seed", "9"},
      {"analyze", "--input", "{dir}/sim/archive.csv", "--output", "{dir}/an"},
      {"trend", "--input", "{dir}/sim/archive.csv", "--output", "{dir}/tr"},
      {"fit", "--input", "{dir}/sim/archive.csv", "--output", "{dir}/fit"},
      {"power", "--output", "{dir}/pw", "--divers", "30", "--meets", "2", "--replicates", "1"},
      {"plot", "--input", "{dir}/an", "--input", "{dir}/tr", "--output", "{dir}/svg"},
  };
  clitest::TempDir a("accept_a");
  clitest::TempDir b("accept_b");
  std::vector<std::string> differ;
  for (const auto& cmd : commands) {
    std::string outs[2];
    for (int k = 0; k < 2; ++k) {
      const auto& dir = k == 0 ? a : b;
      std::vector<std::string> args;
      for (auto arg : cmd) {
        if (const auto pos = arg.find("{dir}"); pos != std::string::npos) arg.replace(pos, 5, dir.str());
        args.push_back(arg);
      }
      const auto r = run(args);
      outs[k] = fmt::format("{}\n{}", r.code, r.out);
      for (auto pos = outs[k].find(dir.str()); pos != std::string::npos; pos = outs[k].find(dir.str())) {
        outs[k].replace(pos, dir.str().size(), "{dir}");
      }
      if (r.code != 0) differ.push_back(cmd.front() + " exit " + std::to_string(r.code));
    }
    if (outs[0] != outs[1]) differ.push_back(cmd.front() + " stdout");
  }
  const auto fa = clitest::snapshot(a.path());
  const auto fb = clitest::snapshot(b.path());
  for (const auto& [name, content] : fa) {
    const auto it = fb.find(name);
    if (it == fb.end() || it->second != content) differ.push_back(name);
  }
  if (fa.size() != fb.size()) differ.push_back("file sets");
  return {differ.empty(), differ.empty() ? fmt::format("9 subcommands, {} files identical", fa.size())
                                         : fmt::format("differences: {}", fmt::join(differ, ", "))};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "scoring oracle equivalence", 1.0, scoring_oracle},
      {2, "zero-sum discrepancy identity", 30.0, zero_sum_identity},
      {3, "REML optimizer vs grid oracle", 5.0, reml_grid},
      {4, "balanced one-way closed form", 1.0, anova_closed_form},
      {5, "paper-scale recovery", 60.0, paper_scale_recovery},
      {6, "OLS reduction", 1.0, ols_reduction},
      {7, "loess oracle", 1.0, loess_oracle},
      {8, "percentile/summary oracle", 1.0, summary_oracle},
      {9, "rules engine fixtures", 1.0, rules_fixtures},
      {10, "table format fidelity", 1.0, table_format},
      {11, "round-trend qualitative reproduction", 10.0, round_trend},
      {12, "CLI determinism", 10.0, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    fmt::print("{} {:>2}. {:<38} {:7.2f} s  {}{}\n", pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail,
               in_time ? "" : fmt::format(" (over {:.0f} s budget)", c.budget_s));
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}

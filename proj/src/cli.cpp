#include "divebias/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "divebias/analytics.hpp"
#include "divebias/ingest.hpp"
#include "divebias/lmm.hpp"
#include "divebias/plot.hpp"
#include "divebias/rules.hpp"
#include "divebias/scoring.hpp"
#include "divebias/simulate.hpp"
#include "divebias/smoothing.hpp"

namespace divebias {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum class LogLevel { Debug, Info, Warn };

class Log {
 public:
  explicit Log(std::ostream& err) : err_(err) {
    if (const char* env = std::getenv("DIVEBIAS_LOG")) {
      const std::string_view v(env);
      if (v == "debug") level_ = LogLevel::Debug;
      else if (v == "info") level_ = LogLevel::Info;
    }
  }
  void debug(const std::string& msg) const { emit(LogLevel::Debug, "debug", msg); }
  void info(const std::string& msg) const { emit(LogLevel::Info, "info", msg); }
  void warn(const std::string& msg) const { emit(LogLevel::Warn, "warning", msg); }
  void error(const std::string& msg) const { err_ << "error: " << msg << '\n'; }

 private:
  void emit(LogLevel at, std::string_view tag, const std::string& msg) const {
    if (at >= level_) err_ << tag << ": " << msg << '\n';
  }
  std::ostream& err_;
  LogLevel level_{LogLevel::Warn};
};

/// Raised for failures that map to exit status 1.
struct CommandError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::vector<std::string> inputs;
  std::string output;
  std::string format;
  bool strict{false};
  bool drop_failed{false};
  double span{0.75};
  int degree{1};
  std::uint64_t seed{1};
  std::string gender;
  std::string config;
  int replicates{10};
  SimConfig sim;
};

std::string format_award(AwardUnits a) {
  const std::int64_t hundredths = a.value * 5;
  return fmt::format("{}{}.{:02}", hundredths < 0 ? "-" : "", std::abs(hundredths) / 100, std::abs(hundredths) % 100);
}

std::string format_tenths(Tenths t) { return fmt::format("{}.{}", t.value / 10, t.value % 10); }

void ensure_dir(const std::string& dir) {
  if (dir.empty()) throw CommandError("--output DIR is required");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw CommandError(fmt::format("cannot create output directory '{}'", dir));
}

void write_file(const fs::path& path, const std::string& content, const Log& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CommandError(fmt::format("cannot write '{}'", path.string()));
  out << content;
  if (!out) throw CommandError(fmt::format("failed writing '{}'", path.string()));
  log.info(fmt::format("wrote {}", path.string()));
}

std::optional<Gender> gender_filter(const Options& o) {
  if (o.gender.empty()) return std::nullopt;
  return gender_from_string(o.gender);
}

struct Loaded {
  Dataset dataset;
  std::size_t error_count{0};
};

Loaded load_dataset(const Options& o, const Log& log, bool require_voluntary = false) {
  if (o.inputs.empty()) throw CommandError("--input is required");
  ParseOptions popts;
  popts.strict = o.strict;
  popts.require_voluntary = require_voluntary;
  std::vector<RoundRecord> records;
  std::map<std::string, DiverProfile> profiles;
  std::size_t errors = 0;
  for (const auto& path : o.inputs) {
    ParseResult res = parse_archive_file(path, popts);
    for (const auto& w : res.warnings) log.warn(fmt::format("{}:{}: {}", path, w.line, w.message));
    for (const auto& e : res.errors) log.error(fmt::format("{}:{}: {}", path, e.line, e.message));
    errors += res.errors.size();
    if (!res.dataset) throw CommandError(fmt::format("{}: archive rejected", path));
    for (const auto& r : res.dataset->records()) records.push_back(r);
    for (const auto& [id, p] : res.dataset->profiles()) {
      const auto [it, inserted] = profiles.emplace(id, p);
      if (!inserted && it->second.gender != p.gender) {
        throw CommandError(fmt::format("diver {} has conflicting genders across inputs", id));
      }
    }
  }
  try {
    return {Dataset(std::move(records), std::move(profiles)), errors};
  } catch (const std::invalid_argument& e) {
    throw CommandError(e.what());
  }
}

AnalysisOptions analysis_options(const Options& o) {
  AnalysisOptions a;
  a.drop_failed = o.drop_failed;
  return a;
}

std::vector<DiscrepancyRecord> filtered(std::vector<DiscrepancyRecord> recs, const Options& o) {
  if (const auto g = gender_filter(o)) {
    std::erase_if(recs, [&](const DiscrepancyRecord& r) { return r.gender != *g; });
  }
  return recs;
}

// ---------------------------------------------------------------- ingest

int cmd_ingest(const Options& o, std::ostream& out, const Log& log) {
  const Loaded loaded = load_dataset(o, log);
  const DatasetStats s = dataset_stats(loaded.dataset);
  if (o.format == "json") {
    json j = {{"dives", s.dives},
              {"meets", s.meets},
              {"athletes", s.athletes},
              {"unique_dives", s.unique_dives},
              {"row_errors", loaded.error_count}};
    out << j.dump(2) << '\n';
  } else {
    out << fmt::format("dives         {}\nmeets         {}\nathletes      {}\nunique dives  {}\nrow errors    {}\n", s.dives,
                       s.meets, s.athletes, s.unique_dives, loaded.error_count);
  }
  return loaded.error_count == 0 ? kExitOk : kExitValidation;
}

// ---------------------------------------------------------------- validate

int cmd_validate(const Options& o, std::ostream& out, const Log& log) {
  const Loaded loaded = load_dataset(o, log, true);
  if (loaded.error_count > 0) return kExitValidation;
  const Dataset& d = loaded.dataset;
  if (d.empty()) throw CommandError("no dives to validate");
  bool legal = true;
  json lists = json::array();
  std::string text;
  for (const auto& [key, indices] : d.diver_meet_index()) {
    std::vector<RoundRecord> recs;
    for (const auto i : indices) recs.push_back(d.records()[i]);
    const DiveList list = dive_list_from_records(recs, d.profile(key.first).gender);
    const auto violations = validate_dive_list(list);
    legal = legal && violations.empty();
    json jv = json::array();
    text += fmt::format("{} / {}: {}\n", key.second, key.first, violations.empty() ? "legal" : "ILLEGAL");
    for (const auto& v : violations) {
      jv.push_back({{"code", to_string(v.code)}, {"message", v.message}, {"rounds", v.rounds}});
      std::vector<std::string> rounds;
      for (const int r : v.rounds) rounds.push_back(std::to_string(r));
      text += fmt::format("  {}: {}{}\n", to_string(v.code), v.message,
                          rounds.empty() ? "" : fmt::format(" [rounds {}]", fmt::join(rounds, ",")));
    }
    lists.push_back({{"meet_id", key.second}, {"diver_id", key.first}, {"legal", violations.empty()}, {"violations", jv}});
  }
  if (o.format == "json") {
    out << json{{"lists", lists}}.dump(2) << '\n';
  } else {
    out << text;
  }
  return legal ? kExitOk : kExitValidation;
}

// ---------------------------------------------------------------- score

int cmd_score(const Options& o, std::ostream& out, const Log& log) {
  const Loaded loaded = load_dataset(o, log);
  const Dataset& d = loaded.dataset;
  if (o.strict && loaded.error_count > 0) return kExitValidation;
  json meets = json::array();
  std::string text;
  std::string csv = "meet_id,rank,diver_id,total\n";
  for (const auto& [meet, indices] : d.meet_index()) {
    std::map<std::string, std::vector<RoundRecord>> by_diver;
    for (const auto i : indices) {
      const auto& r = d.records()[i];
      if (!r.judge_scores.empty() && check_failed_dive(r.judge_scores).partial_zero_warning) {
        log.warn(fmt::format("meet {} diver {} round {}: zero mark without a unanimous failure", meet, r.diver_id, r.round));
      }
      by_diver[r.diver_id].push_back(r);
    }
    std::map<std::string, AwardUnits> totals;
    for (const auto& [diver, recs] : by_diver) totals[diver] = meet_total(recs);
    const auto standings = rank_meet(totals);
    json rows = json::array();
    text += fmt::format("Meet {}\n{:>4}  {:<12}{:>10}\n", meet, "Rank", "Diver", "Total");
    for (const auto& s : standings) {
      text += fmt::format("{:>4}  {:<12}{:>10}\n", s.rank, s.diver_id, format_award(s.total));
      csv += fmt::format("{},{},{},{}\n", meet, s.rank, s.diver_id, format_award(s.total));
      rows.push_back({{"rank", s.rank}, {"diver_id", s.diver_id}, {"total", s.total.as_double()}});
    }
    text += '\n';
    meets.push_back({{"meet_id", meet}, {"standings", rows}});
  }
  if (o.format == "json") {
    out << json{{"meets", meets}}.dump(2) << '\n';
  } else if (o.format == "csv") {
    out << csv;
  } else {
    out << text;
  }
  return kExitOk;
}

// ---------------------------------------------------------------- analyze

std::string discrepancy_csv(const std::vector<DiscrepancyRecord>& recs) {
  std::string s = "diver_id,meet_id,round,gender,age,dd,dd_binned,direction,position,net,discrepancy\n";
  for (const auto& r : recs) {
    s += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", r.diver_id, r.meet_id, r.round, to_string(r.gender), r.age,
                     format_tenths(r.dd), format_tenths(r.dd_binned), archive_name(r.direction),
                     archive_name(r.position), r.net, r.discrepancy);
  }
  return s;
}

int cmd_analyze(const Options& o, std::ostream& out, const Log& log) {
  const Loaded loaded = load_dataset(o, log);
  if (o.strict && loaded.error_count > 0) return kExitValidation;
  ensure_dir(o.output);
  const fs::path dir(o.output);
  const auto comp = competency(loaded.dataset, analysis_options(o));
  const auto recs = filtered(discrepancies(loaded.dataset, comp, analysis_options(o)), o);
  if (recs.empty()) throw CommandError("no discrepancy records to analyze");

  std::string comp_csv = "diver_id,gender,competency,n_dives\n";
  for (const auto& [id, c] : comp) {
    comp_csv += fmt::format("{},{},{},{}\n", id, to_string(loaded.dataset.profile(id).gender), c.value, c.n_dives);
  }
  write_file(dir / "competency.csv", comp_csv, log);
  write_file(dir / "discrepancies.csv", discrepancy_csv(recs), log);

  for (const auto f : kAllFactors) {
    const auto summaries = group_summaries(recs, f);
    std::string summary = "level,n,median,p2_5,p97_5\n";
    std::string values = "level,D\n";
    std::string kde = "level,x,density\n";
    out << fmt::format("{}\n", to_string(f));
    for (const auto& s : summaries) {
      summary += fmt::format("{},{},{},{},{}\n", s.level, s.n, s.median, s.p2_5, s.p97_5);
      out << fmt::format("  {:<10} n={:<7} median={:>8.3f}  p2.5={:>8.3f}  p97.5={:>8.3f}\n", s.level, s.n, s.median,
                         s.p2_5, s.p97_5);
      for (const double v : s.values) values += fmt::format("{},{}\n", s.level, v);
      const DensityGrid g = kde_grid(s.values);
      for (std::size_t i = 0; i < g.x.size(); ++i) kde += fmt::format("{},{},{}\n", s.level, g.x[i], g.density[i]);
    }
    const std::string name(to_string(f));
    write_file(dir / fmt::format("summary_{}.csv", name), summary, log);
    write_file(dir / fmt::format("values_{}.csv", name), values, log);
    write_file(dir / fmt::format("kde_{}.csv", name), kde, log);
  }
  return kExitOk;
}

// ---------------------------------------------------------------- trend

int cmd_trend(const Options& o, std::ostream& out, const Log& log) {
  const Loaded loaded = load_dataset(o, log);
  if (o.strict && loaded.error_count > 0) return kExitValidation;
  ensure_dir(o.output);
  const fs::path dir(o.output);
  const auto comp = competency(loaded.dataset, analysis_options(o));
  const auto recs = filtered(discrepancies(loaded.dataset, comp, analysis_options(o)), o);
  if (recs.empty()) throw CommandError("no discrepancy records for trends");
  LoessConfig cfg{o.span, o.degree};
  const auto trends = round_trends(recs, cfg);

  std::string trend = "meet_id,round,loess_D\n";
  for (const auto& t : trends) {
    for (std::size_t i = 0; i < t.fit.x.size(); ++i) {
      trend += fmt::format("{},{},{}\n", t.meet_id, t.fit.x[i], t.fit.fitted[i]);
    }
    out << fmt::format("{:<10} divers={:<5} round1={:>8.3f}  round11={:>8.3f}\n", t.meet_id, t.n_divers,
                       t.fit.fitted.front(), t.fit.fitted.back());
  }
  std::vector<const DiscrepancyRecord*> sorted;
  for (const auto& r : recs) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
    return std::tie(a->meet_id, a->diver_id, a->round) < std::tie(b->meet_id, b->diver_id, b->round);
  });
  std::string lines = "meet_id,diver_id,round,D\n";
  for (const auto* r : sorted) lines += fmt::format("{},{},{},{}\n", r->meet_id, r->diver_id, r->round, r->discrepancy);
  write_file(dir / "trend.csv", trend, log);
  write_file(dir / "polylines.csv", lines, log);
  return kExitOk;
}

// ---------------------------------------------------------------- fit

std::vector<DiscrepancyRecord> read_discrepancy_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CommandError(fmt::format("cannot open '{}'", path));
  std::string line;
  std::getline(in, line);
  const auto header = split_csv_line(line);
  auto col = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw CommandError(fmt::format("{}: missing column '{}'", path, name));
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto c_diver = col("diver_id"), c_meet = col("meet_id"), c_round = col("round"), c_gender = col("gender"),
             c_age = col("age"), c_dd = col("dd"), c_dir = col("direction"), c_pos = col("position"),
             c_net = col("net"), c_d = col("discrepancy");
  std::vector<DiscrepancyRecord> recs;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto f = split_csv_line(line);
      DiscrepancyRecord r;
      r.diver_id = f.at(c_diver);
      r.meet_id = f.at(c_meet);
      r.round = std::stoi(f.at(c_round));
      const auto g = gender_from_string(f.at(c_gender));
      if (!g) throw std::invalid_argument("bad gender");
      r.gender = *g;
      r.age = std::stoi(f.at(c_age));
      r.dd = parse_tenths(f.at(c_dd));
      r.dd_binned = bin_dd(r.dd);
      const auto dir = direction_from_archive(f.at(c_dir));
      const auto pos = position_from_archive(f.at(c_pos));
      if (!dir || !pos) throw std::invalid_argument("bad direction or position");
      r.direction = *dir;
      r.position = *pos;
      r.net = std::stod(f.at(c_net));
      r.discrepancy = std::stod(f.at(c_d));
      recs.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw CommandError(fmt::format("{}:{}: {}", path, line_no, e.what()));
    }
  }
  return recs;
}

bool is_discrepancy_table(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  if (!in || !std::getline(in, line)) return false;
  const auto header = split_csv_line(line);
  return std::find(header.begin(), header.end(), "discrepancy") != header.end();
}

json fit_json(const std::string& label, const LmmFit& f) {
  json j;
  j["gender"] = label;
  j["names"] = f.names;
  j["beta"] = std::vector<double>(f.beta.data(), f.beta.data() + f.beta.size());
  j["se"] = std::vector<double>(f.se.data(), f.se.data() + f.se.size());
  j["t"] = std::vector<double>(f.t.data(), f.t.data() + f.t.size());
  j["sigma2_b"] = f.sigma2_b;
  j["sigma2_e"] = f.sigma2_e;
  j["lambda"] = f.lambda;
  j["icc_adj"] = f.icc_adj;
  j["n"] = f.n;
  j["g"] = f.g;
  j["reml_value"] = f.reml_value;
  j["converged"] = f.converged;
  j["at_boundary"] = f.at_boundary;
  j["iterations"] = f.iterations;
  return j;
}

int cmd_fit(const Options& o, std::ostream& out, const Log& log) {
  std::vector<DiscrepancyRecord> recs;
  if (o.inputs.size() == 1 && is_discrepancy_table(o.inputs.front())) {
    recs = read_discrepancy_table(o.inputs.front());
  } else {
    const Loaded loaded = load_dataset(o, log);
    if (o.strict && loaded.error_count > 0) return kExitValidation;
    const auto comp = competency(loaded.dataset, analysis_options(o));
    recs = discrepancies(loaded.dataset, comp, analysis_options(o));
  }
  std::vector<Gender> genders{Gender::F, Gender::M};
  if (const auto g = gender_filter(o)) genders = {*g};

  std::vector<std::pair<std::string, LmmFit>> panels;
  json fits = json::array();
  for (const Gender g : genders) {
    const std::string label = g == Gender::F ? "Girls" : "Boys";
    try {
      const LmmFit fit = fit_lmm(build_design(recs, g));
      log.debug(fmt::format("{}: lambda {} after {} iterations", label, fit.lambda, fit.iterations));
      fits.push_back(fit_json(label, fit));
      panels.emplace_back(label, fit);
    } catch (const std::exception& e) {
      throw CommandError(fmt::format("{} fit failed: {}", label, e.what()));
    }
  }
  const std::string doc = json{{"fits", fits}}.dump(2) + "\n";
  if (!o.output.empty()) {
    ensure_dir(o.output);
    write_file(fs::path(o.output) / "fit.json", doc, log);
  }
  if (o.format == "json") {
    out << doc;
  } else {
    out << format_fit_table(panels);
  }
  return kExitOk;
}

// ---------------------------------------------------------------- simulate / power

json config_json(const SimConfig& c) {
  return {{"n_divers", c.n_divers},
          {"n_meets", c.n_meets},
          {"panel_size", c.panel_size},
          {"ability_mean_f", c.ability_mean_f},
          {"ability_mean_m", c.ability_mean_m},
          {"ability_sd", c.ability_sd},
          {"mark_noise_sd", c.mark_noise_sd},
          {"round_bias", c.round_bias},
          {"dd_bias", c.dd_bias},
          {"age_bias", c.age_bias},
          {"age_min", c.age_min},
          {"age_max", c.age_max},
          {"season_years", c.season_years},
          {"cohort_spread", c.cohort_spread},
          {"seed", c.seed}};
}

SimConfig config_from_json(const json& j, SimConfig c) {
  c.n_divers = j.value("n_divers", c.n_divers);
  c.n_meets = j.value("n_meets", c.n_meets);
  c.panel_size = j.value("panel_size", c.panel_size);
  c.ability_mean_f = j.value("ability_mean_f", c.ability_mean_f);
  c.ability_mean_m = j.value("ability_mean_m", c.ability_mean_m);
  c.ability_sd = j.value("ability_sd", c.ability_sd);
  c.mark_noise_sd = j.value("mark_noise_sd", c.mark_noise_sd);
  c.round_bias = j.value("round_bias", c.round_bias);
  c.dd_bias = j.value("dd_bias", c.dd_bias);
  c.age_bias = j.value("age_bias", c.age_bias);
  c.age_min = j.value("age_min", c.age_min);
  c.age_max = j.value("age_max", c.age_max);
  c.season_years = j.value("season_years", c.season_years);
  c.cohort_spread = j.value("cohort_spread", c.cohort_spread);
  c.seed = j.value("seed", c.seed);
  return c;
}

int cmd_simulate(const Options& o, std::ostream& out, const Log& log) {
  ensure_dir(o.output);
  SimConfig cfg = o.sim;
  cfg.seed = o.seed;
  std::pair<Dataset, SimTruth> sim;
  try {
    sim = generate(cfg);
  } catch (const std::invalid_argument& e) {
    throw CommandError(e.what());
  }
  const auto& [data, truth] = sim;
  std::ostringstream archive;
  write_archive(archive, data);
  json divers = json::array();
  for (const auto& d : truth.divers) {
    divers.push_back({{"diver_id", d.diver_id}, {"gender", to_string(d.gender)}, {"ability", d.ability},
                      {"age_at_first_meet", d.birth_offset}});
  }
  json t = {{"config", config_json(truth.config)},
            {"net_scale_effects",
             {{"round", kNetPerJudge * cfg.round_bias}, {"age", kNetPerJudge * cfg.age_bias}, {"dd", kNetPerJudge * cfg.dd_bias}}},
            {"catalog_mean_dd", truth.catalog_mean_dd},
            {"reference_age", truth.reference_age},
            {"divers", divers}};
  write_file(fs::path(o.output) / "archive.csv", archive.str(), log);
  write_file(fs::path(o.output) / "truth.json", t.dump(2) + "\n", log);
  const DatasetStats s = dataset_stats(data);
  out << fmt::format("simulated {} dives, {} meets, {} divers\n", s.dives, s.meets, s.athletes);
  return kExitOk;
}

std::vector<SimConfig> default_power_grid(const Options& o) {
  SimConfig null_cfg = o.sim;
  null_cfg.round_bias = null_cfg.age_bias = null_cfg.dd_bias = 0.0;
  SimConfig effects = o.sim;
  effects.round_bias = per_judge(-0.08);
  effects.age_bias = per_judge(0.30);
  effects.dd_bias = per_judge(-2.20);
  null_cfg.seed = effects.seed = o.seed;
  return {null_cfg, effects};
}

int cmd_power(const Options& o, std::ostream& out, const Log& log) {
  ensure_dir(o.output);
  std::vector<SimConfig> grid;
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw CommandError(fmt::format("cannot open '{}'", o.config));
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw CommandError(fmt::format("{}: {}", o.config, e.what()));
    }
    if (!j.is_array()) throw CommandError("power config must be a JSON array of configurations");
    SimConfig base = o.sim;
    base.seed = o.seed;
    for (const auto& item : j) grid.push_back(config_from_json(item, base));
  } else {
    grid = default_power_grid(o);
  }
  std::vector<PowerRow> rows;
  try {
    rows = power_study(grid, o.replicates);
  } catch (const std::invalid_argument& e) {
    throw CommandError(e.what());
  }
  std::string csv =
      "config,gender,replicates,converged,round_truth,round_mean,round_sd,round_coverage,age_truth,age_mean,age_sd,"
      "age_coverage,dd_truth,dd_mean,dd_sd,dd_coverage\n";
  for (const auto& r : rows) {
    for (const auto& f : r.failures) log.warn(fmt::format("config {} {}: {}", r.config_index, to_string(r.gender), f));
    csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.config_index, to_string(r.gender),
                       r.replicates, r.converged, r.round.truth, r.round.mean, r.round.sd, r.round.coverage,
                       r.age.truth, r.age.mean, r.age.sd, r.age.coverage, r.dd.truth, r.dd.mean, r.dd.sd,
                       r.dd.coverage);
    out << fmt::format("config {} {}: round {:.4f} (cov {:.2f})  age {:.4f} (cov {:.2f})  dd {:.4f} (cov {:.2f})\n",
                       r.config_index, to_string(r.gender), r.round.mean, r.round.coverage, r.age.mean, r.age.coverage,
                       r.dd.mean, r.dd.coverage);
  }
  write_file(fs::path(o.output) / "power.csv", csv, log);
  return kExitOk;
}

// ---------------------------------------------------------------- plot

int cmd_plot(const Options& o, std::ostream& out, const Log&) {
  if (o.inputs.empty()) throw CommandError("--input DIR is required");
  ensure_dir(o.output);
  std::vector<fs::path> dirs(o.inputs.begin(), o.inputs.end());
  std::vector<fs::path> written;
  try {
    written = emit_plots(dirs, o.output);
  } catch (const std::exception& e) {
    throw CommandError(e.what());
  }
  for (const auto& p : written) out << p.string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- wiring

void add_inputs(CLI::App* cmd, Options& o, const std::string& what) {
  cmd->add_option("--input", o.inputs, what)->required()->allow_extra_args(false);
}
void add_output(CLI::App* cmd, Options& o, const std::string& what, bool required = true) {
  auto* opt = cmd->add_option("--output", o.output, what);
  if (required) opt->required();
}
void add_format(CLI::App* cmd, Options& o, std::vector<std::string> allowed, std::string fallback) {
  o.format = fallback;
  cmd->add_option("--format", o.format, fmt::format("Output format (default {})", fallback))
      ->check(CLI::IsMember(std::move(allowed)));
}
void add_strict(CLI::App* cmd, Options& o) {
  cmd->add_flag("--strict", o.strict, "Reject the whole archive if any row fails validation");
}
void add_drop_failed(CLI::App* cmd, Options& o) {
  cmd->add_flag("--drop-failed", o.drop_failed, "Exclude failed (all-zero) dives from competency and discrepancy");
}
void add_gender(CLI::App* cmd, Options& o) {
  cmd->add_option("--gender", o.gender, "Restrict to one gender")->check(CLI::IsMember({"F", "M"}));
}
void add_sim_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--seed", o.seed, "Random seed (default 1)");
  cmd->add_option("--divers", o.sim.n_divers, "Number of divers");
  cmd->add_option("--meets", o.sim.n_meets, "Meets per diver");
  cmd->add_option("--panel", o.sim.panel_size, "Judges per panel (3, 5, 7 or 9)");
  cmd->add_option("--ability-sd", o.sim.ability_sd, "Between-diver SD of ability, per judge mark");
  cmd->add_option("--noise", o.sim.mark_noise_sd, "SD of each judge's mark noise");
  cmd->add_option("--round-bias", o.sim.round_bias, "Bias per judge mark per round after the first");
  cmd->add_option("--dd-bias", o.sim.dd_bias, "Bias per judge mark per DD unit");
  cmd->add_option("--age-bias", o.sim.age_bias, "Bias per judge mark per year of age");
  cmd->add_option("--cohort-spread", o.sim.cohort_spread, "Spread of ages at the first meet, in years (default 0)");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const Log log(err);
  Options o;
  CLI::App app{"Springboard diving scoring and judging-bias analytics"};
  app.name("divebias");
  app.require_subcommand(1, 1);

  auto* ingest = app.add_subcommand("ingest", "Parse and validate archives; print dataset counts");
  add_inputs(ingest, o, "Archive CSV (repeatable)");
  add_strict(ingest, o);
  add_format(ingest, o, {"text", "json"}, "text");

  auto* validate = app.add_subcommand("validate", "Check dive lists against the voluntary/optional rules");
  add_inputs(validate, o, "Dive-list CSV with the voluntary column filled (repeatable)");
  add_strict(validate, o);
  add_format(validate, o, {"text", "json"}, "text");

  auto* score = app.add_subcommand("score", "Meet totals and standings");
  add_inputs(score, o, "Archive CSV (repeatable)");
  add_strict(score, o);
  add_format(score, o, {"text", "csv", "json"}, "text");

  auto* analyze = app.add_subcommand("analyze", "Competency, discrepancy and per-factor distribution summaries");
  add_inputs(analyze, o, "Archive CSV (repeatable)");
  add_output(analyze, o, "Directory for summary, values and KDE CSVs");
  add_strict(analyze, o);
  add_drop_failed(analyze, o);
  add_gender(analyze, o);
  add_format(analyze, o, {"csv"}, "csv");

  auto* trend = app.add_subcommand("trend", "Per-meet loess trend of discrepancy over rounds");
  add_inputs(trend, o, "Archive CSV (repeatable)");
  add_output(trend, o, "Directory for trend.csv and polylines.csv");
  add_strict(trend, o);
  add_drop_failed(trend, o);
  add_gender(trend, o);
  trend->add_option("--span", o.span, "Loess span in (0,1] (default 0.75)")->check(CLI::Range(1e-9, 1.0));
  trend->add_option("--degree", o.degree, "Local polynomial degree 0-2 (default 1)")->check(CLI::Range(0, 2));
  add_format(trend, o, {"csv"}, "csv");

  auto* fit = app.add_subcommand("fit", "Random-intercept mixed model of discrepancy on round, age and DD");
  add_inputs(fit, o, "Archive CSV(s), or one discrepancy table written by analyze");
  add_output(fit, o, "Directory for fit.json", false);
  add_strict(fit, o);
  add_drop_failed(fit, o);
  add_gender(fit, o);
  add_format(fit, o, {"text", "json"}, "text");

  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic archive with injected biases");
  add_output(simulate, o, "Directory for archive.csv and truth.json");
  add_sim_options(simulate, o);
  add_format(simulate, o, {"csv"}, "csv");

  auto* power = app.add_subcommand("power", "Parameter-recovery study over simulated archives");
  add_output(power, o, "Directory for power.csv");
  add_sim_options(power, o);
  power->add_option("--replicates", o.replicates, "Replicates per configuration (default 10)")->check(CLI::PositiveNumber);
  power->add_option("--config", o.config, "JSON array of configurations (default: null and Round/Age/DD effect grid)");
  add_format(power, o, {"csv"}, "csv");

  auto* plot = app.add_subcommand("plot", "Render SVG ridgelines and round trends from analyze/trend outputs");
  add_inputs(plot, o, "Directory written by analyze or trend (repeatable)");
  add_output(plot, o, "Directory for SVG files");
  add_format(plot, o, {"svg"}, "svg");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*ingest) return cmd_ingest(o, out, log);
    if (*validate) return cmd_validate(o, out, log);
    if (*score) return cmd_score(o, out, log);
    if (*analyze) return cmd_analyze(o, out, log);
    if (*trend) return cmd_trend(o, out, log);
    if (*fit) return cmd_fit(o, out, log);
    if (*simulate) return cmd_simulate(o, out, log);
    if (*power) return cmd_power(o, out, log);
    if (*plot) return cmd_plot(o, out, log);
  } catch (const CommandError& e) {
    log.error(e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    log.error(e.what());
    return kExitValidation;
  }
  return kExitUsage;
}

}  // namespace divebias

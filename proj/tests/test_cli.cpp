#include <doctest.h>

#include <fstream>

#include "cli_support.hpp"
#include "divebias/ingest.hpp"
#include "divebias/plot.hpp"

using namespace divebias;
using clitest::count;
using clitest::run;
using clitest::slurp;
using clitest::TempDir;

namespace {

const std::string kMeets = DIVEBIAS_TEST_DATA "/two_meets.csv";
const std::string kPikeTuck = DIVEBIAS_TEST_DATA "/pike_tuck.csv";
const std::string kLegal = DIVEBIAS_TEST_DATA "/legal_list.csv";

// The two-meet fixture with meet M2 cut down to diver D1.
std::string lone_diver_archive(const TempDir& dir) {
  const auto full = parse_archive_file(kMeets);
  std::vector<RoundRecord> kept;
  for (const auto& r : full.dataset->records()) {
    if (r.meet_id == "M1" || r.diver_id == "D1") kept.push_back(r);
  }
  const Dataset d(kept, full.dataset->profiles());
  const std::string path = dir.str("lone.csv");
  std::ofstream out(path);
  write_archive(out, d);
  return path;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("score happy path") {
    const auto r = run({"score", "--input", kMeets});
    CHECK(r.code == 0);
    CHECK(r.out.find("M1") != std::string::npos);
    CHECK(r.out.find("D1") != std::string::npos);
    const auto csv = run({"score", "--input", kMeets, "--format", "csv"});
    CHECK(csv.code == 0);
    CHECK(count(csv.out, "\n") == 1 + 8);
  }

  TEST_CASE("validate reports the pike/tuck duplicate") {
    const auto bad = run({"validate", "--input", kPikeTuck});
    CHECK(bad.code == 1);
    CHECK(bad.out.find("DuplicateDive") != std::string::npos);
    const auto json = run({"validate", "--input", kPikeTuck, "--format", "json"});
    CHECK(json.code == 1);
    CHECK(json.out.find("\"DuplicateDive\"") != std::string::npos);
    CHECK(run({"validate", "--input", kLegal}).code == 0);
  }

  TEST_CASE("usage errors") {
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({}).code == 2);
    CHECK(run({"score"}).code == 2);
    CHECK(run({"score", "--input", kMeets, "--bogus"}).code == 2);
    CHECK(run({"score", "--input", kMeets, "--format", "svg"}).code == 2);
    CHECK(run({"trend", "--input", kMeets, "--output", "x", "--span", "2"}).code == 2);
  }

  TEST_CASE("input errors exit 1") {
    const auto r = run({"score", "--input", "/nonexistent.csv"});
    CHECK(r.code == 1);
    CHECK(r.err.find("cannot open") != std::string::npos);
  }

  TEST_CASE("help on every subcommand") {
    CHECK(run({"--help"}).code == 0);
    const std::map<std::string, std::vector<std::string>> flags{
        {"ingest", {"--input", "--strict", "--format"}},
        {"validate", {"--input", "--strict", "--format"}},
        {"score", {"--input", "--strict", "--format"}},
        {"analyze", {"--input", "--output", "--strict", "--drop-failed", "--gender", "--format"}},
        {"trend", {"--input", "--output", "--strict", "--drop-failed", "--gender", "--span", "--format"}},
        {"fit", {"--input", "--output", "--strict", "--drop-failed", "--gender", "--format"}},
        {"simulate", {"--output", "--seed", "--format"}},
        {"power", {"--output", "--seed", "--format"}},
        {"plot", {"--input", "--output", "--format"}},
    };
    for (const auto& [cmd, expected] : flags) {
      const auto r = run({cmd, "--help"});
      CAPTURE(cmd);
      CHECK(r.code == 0);
      for (const auto& f : expected) CHECK(r.out.find(f) != std::string::npos);
    }
  }

  TEST_CASE("ingest counts") {
    const auto r = run({"ingest", "--input", kMeets, "--format", "json"});
    CHECK(r.code == 0);
    CHECK(r.out.find("\"dives\": 88") != std::string::npos);
    CHECK(r.out.find("\"unique_dives\": 41") != std::string::npos);
  }

  TEST_CASE("gender ridgeline has two densities with labels and counts") {
    TempDir dir("ridge");
    REQUIRE(run({"analyze", "--input", kMeets, "--output", dir.str("a")}).code == 0);
    const auto p = run({"plot", "--input", dir.str("a"), "--output", dir.str("svg")});
    REQUIRE(p.code == 0);
    const auto svg = slurp(dir.path() / "svg" / "ridgeline_gender.svg");
    CHECK(count(svg, "class=\"density\"") == 2);
    CHECK(count(svg, "class=\"median\"") == 2);
    CHECK(count(svg, "class=\"level\"") == 2);
    CHECK(svg.find(">F<") != std::string::npos);
    CHECK(svg.find(">M<") != std::string::npos);
    CHECK(count(svg, "n = ") == 2);
    CHECK(svg.find("viewBox=\"0 0 800 600\"") != std::string::npos);
  }

  TEST_CASE("trend for a one-diver meet") {
    TempDir dir("lone");
    const auto archive = lone_diver_archive(dir);
    REQUIRE(run({"trend", "--input", archive, "--output", dir.str("t")}).code == 0);
    REQUIRE(run({"plot", "--input", dir.str("t"), "--output", dir.str("svg")}).code == 0);
    const auto m2 = slurp(dir.path() / "svg" / "trend_M2.svg");
    CHECK(count(m2, "class=\"diver\"") == 1);
    CHECK(count(m2, "class=\"loess\"") == 1);
    const auto m1 = slurp(dir.path() / "svg" / "trend_M1.svg");
    CHECK(count(m1, "class=\"diver\"") == 4);
    CHECK(count(m1, "class=\"loess\"") == 1);
  }

  TEST_CASE("plot rejects empty input") {
    TempDir dir("empty");
    CHECK(run({"plot", "--input", dir.str(), "--output", dir.str("svg")}).code == 1);
    CHECK_THROWS(ridgeline_svg(RidgelinePanel{}));
    CHECK_THROWS(trend_svg(TrendPanel{}));
  }

  TEST_CASE("reruns are byte-identical") {
    TempDir a("rerun_a");
    TempDir b("rerun_b");
    for (const auto* dir : {&a, &b}) {
      REQUIRE(run({"analyze", "--input", kMeets, "--output", dir->str("an")}).code == 0);
      REQUIRE(run({"trend", "--input", kMeets, "--output", dir->str("tr")}).code == 0);
      REQUIRE(run({"plot", "--input", dir->str("an"), "--input", dir->str("tr"), "--output", dir->str("svg")}).code ==
              0);
    }
    const auto sa = clitest::snapshot(a.path());
    const auto sb = clitest::snapshot(b.path());
    CHECK(sa.size() > 10);
    CHECK(sa == sb);
  }

  TEST_CASE("fit on an archive and on a discrepancy table agree") {
    TempDir dir("fit");
    const auto sim = run({"simulate", "--output", dir.str("sim"), "--divers", "30", "--meets", "3", "--seed", "4"});
    REQUIRE(sim.code == 0);
    const auto archive = dir.str("sim/archive.csv");
    REQUIRE(run({"analyze", "--input", archive, "--output", dir.str("an")}).code == 0);
    const auto a = run({"fit", "--input", archive, "--format", "json"});
    const auto b = run({"fit", "--input", dir.str("an/discrepancies.csv"), "--format", "json"});
    CHECK(a.code == 0);
    CHECK(b.code == 0);
    CHECK(a.out == b.out);
    const auto text = run({"fit", "--input", archive});
    CHECK(text.out.find("Girls") != std::string::npos);
    CHECK(text.out.find("t-statistic") != std::string::npos);
  }
}

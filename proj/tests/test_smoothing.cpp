#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "divebias/random.hpp"
#include "divebias/smoothing.hpp"
#include "oracles.hpp"

using namespace divebias;

namespace {

std::vector<double> rounds() {
  std::vector<double> x(11);
  for (int i = 0; i < 11; ++i) x[static_cast<std::size_t>(i)] = i + 1;
  return x;
}

std::vector<Point2> sample(double (*f)(double)) {
  std::vector<Point2> pts;
  for (const double x : rounds()) pts.push_back({x, f(x)});
  return pts;
}

}  // namespace

TEST_SUITE("smoothing") {
  TEST_CASE("tricube") {
    CHECK(tricube(0.0) == 1.0);
    CHECK(tricube(1.0) == 0.0);
    CHECK(tricube(0.5) == 0.669921875);
    CHECK(tricube(3.0) == 0.0);
    CHECK_THROWS_AS(tricube(-0.1), std::invalid_argument);
  }

  TEST_CASE("affine data is reproduced") {
    const auto pts = sample([](double x) { return 3.0 * x + 2.0; });
    const auto xs = rounds();
    for (const double span : {0.3, 0.5, 0.75, 1.0}) {
      const auto fit = loess_fit(pts, {span, 1}, xs);
      for (std::size_t i = 0; i < xs.size(); ++i) CHECK(std::abs(fit.fitted[i] - (3.0 * xs[i] + 2.0)) < 1e-8);
    }
  }

  TEST_CASE("constant data") {
    const auto pts = sample([](double) { return 5.0; });
    const auto fit = loess_fit(pts, {}, std::vector<double>{1.0, 2.5, 6.0, 11.0});
    for (const double y : fit.fitted) CHECK(std::abs(y - 5.0) < 1e-12);
  }

  TEST_CASE("quadratic data against a direct weighted solve") {
    const auto pts = sample([](double x) { return x * x; });
    std::vector<double> xs, ys;
    for (const auto& p : pts) {
      xs.push_back(p.x);
      ys.push_back(p.y);
    }
    const auto fit = loess_fit(pts, {0.75, 1}, std::vector<double>{6.0});
    CHECK(std::abs(fit.fitted[0] - oracle::local_linear(xs, ys, 0.75, 6.0)) < 1e-10);
    for (const double x0 : {1.0, 2.0, 3.5, 9.0, 11.0}) {
      const auto f = loess_fit(pts, {0.75, 1}, std::vector<double>{x0});
      CHECK(std::abs(f.fitted[0] - oracle::local_linear(xs, ys, 0.75, x0)) < 1e-10);
    }
  }

  TEST_CASE("noisy data with repeated x against a direct weighted solve") {
    Rng rng(12);
    std::vector<Point2> pts;
    std::vector<double> xs, ys;
    for (int i = 0; i < 60; ++i) {
      const double x = 1 + static_cast<double>(rng.below(11));
      const double y = 0.1 * x + rng.normal();
      pts.push_back({x, y});
      xs.push_back(x);
      ys.push_back(y);
    }
    const auto fit = loess_fit(pts, {0.75, 1}, rounds());
    for (std::size_t i = 0; i < 11; ++i) {
      CHECK(std::abs(fit.fitted[i] - oracle::local_linear(xs, ys, 0.75, rounds()[i])) < 1e-10);
    }
  }

  TEST_CASE("invariances") {
    Rng rng(4);
    std::vector<Point2> pts;
    for (int i = 0; i < 40; ++i) pts.push_back({1 + static_cast<double>(rng.below(11)), rng.normal()});
    const auto xs = rounds();
    const auto base = loess_fit(pts, {}, xs);

    auto shifted = pts;
    for (auto& p : shifted) p.y += 2.5;
    const auto s = loess_fit(shifted, {}, xs);
    auto scaled = pts;
    for (auto& p : scaled) p.y *= -3.0;
    const auto k = loess_fit(scaled, {}, xs);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      CHECK(s.fitted[i] == doctest::Approx(base.fitted[i] + 2.5).epsilon(1e-10));
      CHECK(k.fitted[i] == doctest::Approx(-3.0 * base.fitted[i]).epsilon(1e-10));
    }

    auto shuffled = pts;
    rng.shuffle(shuffled.begin(), shuffled.end());
    CHECK(loess_fit(shuffled, {}, xs).fitted == base.fitted);
  }

  TEST_CASE("degenerate neighbourhoods") {
    const std::vector<Point2> pts{{1, 0}, {1, 0}, {3, 2}, {3, 2}};
    const auto fit = loess_fit(pts, {0.5, 1}, std::vector<double>{1.0, 2.0});
    CHECK(fit.fitted[0] == 0.0);
    CHECK(fit.fitted[1] == doctest::Approx(1.0).epsilon(1e-12));

    const std::vector<Point2> two_x{{1, 1}, {1, 3}, {2, 4}, {2, 6}};
    const auto quad = loess_fit(two_x, {1.0, 2}, std::vector<double>{1.5});
    CHECK(quad.fitted[0] == doctest::Approx(3.5).epsilon(1e-12));
  }

  TEST_CASE("config checks") {
    const auto pts = sample([](double x) { return x; });
    CHECK_THROWS_AS(loess_fit(pts, {0.0, 1}, rounds()), std::invalid_argument);
    CHECK_THROWS_AS(loess_fit(pts, {1.5, 1}, rounds()), std::invalid_argument);
    CHECK_THROWS_AS(loess_fit(pts, {0.75, 3}, rounds()), std::invalid_argument);
    CHECK_THROWS_AS(loess_fit(pts, {0.75, 1}, std::vector<double>{}), std::invalid_argument);
    CHECK_THROWS_AS(loess_fit(std::vector<Point2>{{1, 1}}, {0.75, 1}, rounds()), std::invalid_argument);
  }

  TEST_CASE("single-diver meet trend") {
    std::vector<DiscrepancyRecord> recs;
    for (int r = 1; r <= 11; ++r) {
      DiscrepancyRecord d;
      d.diver_id = "D1";
      d.meet_id = "M9";
      d.round = r;
      d.discrepancy = 1.0 - 0.2 * r;
      recs.push_back(d);
    }
    const auto trends = round_trends(recs);
    REQUIRE(trends.size() == 1);
    CHECK(trends[0].meet_id == "M9");
    CHECK(trends[0].n_divers == 1);
    REQUIRE(trends[0].fit.fitted.size() == 11);
    CHECK(trends[0].fit.fitted.back() < trends[0].fit.fitted.front());
    CHECK(trends[0].fit.fitted[0] == doctest::Approx(0.8));
  }
}

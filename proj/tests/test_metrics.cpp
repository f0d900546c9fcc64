#include <cmath>
#include <vector>

#include "catch2/catch_amalgamated.hpp"
#include "epifilter/errors.hpp"
#include "epifilter/metrics.hpp"
#include "epifilter/rng.hpp"

using namespace epifilter;

namespace {

// Independent double-loop evaluation: per variable, sum |pred - obs| for
// 1-based tau in [tau0, T-h] and divide by T - h - tau0 + 1.
double brute_force_total(const std::vector<std::vector<double>>& pred,
                         const std::vector<std::vector<double>>& obs, int h, int tau0) {
  double total = 0;
  for (std::size_t v = 0; v < pred.size(); ++v) {
    const int len = static_cast<int>(pred[v].size());
    double sum = 0;
    int count = 0;
    for (int tau = 1; tau <= len; ++tau) {
      if (tau < tau0 || tau > len - h) continue;
      sum += std::sqrt((pred[v][tau - 1] - obs[v][tau - 1]) * (pred[v][tau - 1] - obs[v][tau - 1]));
      ++count;
    }
    total += sum / count;
  }
  return total;
}

}  // namespace

TEST_CASE("rsfe is the absolute error", "[metrics]") {
  CHECK(rsfe(11, 10) == 1.0);
  CHECK(rsfe(4.5, 4.5) == 0.0);
  CHECK(rsfe(3, 7) == 4.0);
  CHECK_THROWS_AS(rsfe(std::nan(""), 0), InvalidInputError);
}

TEST_CASE("mrsfe averages absolute errors over the evaluation range", "[metrics]") {
  // length 4, h=1, tau0=1: evaluation covers the first three dates
  std::vector<std::vector<double>> pred = {{1, 3, 2, 9}};
  std::vector<std::vector<double>> obs = {{0, 0, 0, 0}};
  ErrorReport r = mrsfe(pred, obs, {"t"});
  REQUIRE(r.mrsfe.size() == 1);
  CHECK(r.mrsfe[0] == 2.0);
  CHECK(r.total == 2.0);
  REQUIRE(r.rsfe[0].size() == 4);
  CHECK(r.rsfe[0][1] == 3.0);
}

TEST_CASE("perfect forecasts give zero error", "[metrics]") {
  std::vector<std::vector<double>> series = {{5, 6, 7, 8, 9}, {1, 1, 2, 3, 5}};
  ErrorReport r = mrsfe(series, series, {"a", "b"});
  CHECK(r.mrsfe[0] == 0.0);
  CHECK(r.mrsfe[1] == 0.0);
  CHECK(r.total == 0.0);
}

TEST_CASE("mrsfe equals the mean of rsfe over the range", "[metrics]") {
  std::vector<std::vector<double>> pred = {{2, 4, 8, 16, 32, 64}};
  std::vector<std::vector<double>> obs = {{1, 5, 6, 20, 30, 60}};
  int h = 2, tau0 = 2;
  ErrorReport r = mrsfe(pred, obs, {"x"}, h, tau0);
  double mean = 0;
  int count = 0;
  for (int tau = tau0; tau <= 6 - h; ++tau) {
    mean += r.rsfe[0][tau - 1];
    ++count;
  }
  CHECK(r.mrsfe[0] == Catch::Approx(mean / count).margin(1e-15));
}

TEST_CASE("mrsfe matches a brute-force oracle on random series", "[metrics]") {
  Rng rng(31337);
  for (int trial = 0; trial < 50; ++trial) {
    int len = 5 + static_cast<int>(rng.uniform() * 36);
    int vars = 1 + static_cast<int>(rng.uniform() * 3);
    int h = 1 + static_cast<int>(rng.uniform() * 2);
    int tau0 = 1 + static_cast<int>(rng.uniform() * 3);
    if (len - h - tau0 + 1 < 1) tau0 = 1;

    std::vector<std::vector<double>> pred(vars), obs(vars);
    std::vector<std::string> names;
    for (int v = 0; v < vars; ++v) {
      names.push_back("v" + std::to_string(v));
      for (int k = 0; k < len; ++k) {
        pred[v].push_back(1000 * rng.uniform() + 50 * rng.gaussian());
        obs[v].push_back(1000 * rng.uniform() + 50 * rng.gaussian());
      }
    }
    ErrorReport r = mrsfe(pred, obs, names, h, tau0);
    double expect = brute_force_total(pred, obs, h, tau0);
    CHECK(std::abs(r.total - expect) <= 1e-12 * std::max(1.0, std::abs(expect)));
  }
}

TEST_CASE("mrsfe invariances", "[metrics]") {
  std::vector<std::vector<double>> pred = {{10, 12, 9, 14, 11}};
  std::vector<std::vector<double>> obs = {{11, 11, 11, 12, 13}};
  double base = mrsfe(pred, obs, {"x"}).total;

  std::vector<std::vector<double>> pred_c = pred, obs_c = obs;
  for (auto& v : pred_c[0]) v += 123.0;
  for (auto& v : obs_c[0]) v += 123.0;
  CHECK(mrsfe(pred_c, obs_c, {"x"}).total == Catch::Approx(base).epsilon(1e-12));

  std::vector<std::vector<double>> pred_s = pred, obs_s = obs;
  for (auto& v : pred_s[0]) v *= 7.0;
  for (auto& v : obs_s[0]) v *= 7.0;
  CHECK(mrsfe(pred_s, obs_s, {"x"}).total == Catch::Approx(7.0 * base).epsilon(1e-12));
}

TEST_CASE("mrsfe rejects degenerate ranges", "[metrics]") {
  std::vector<std::vector<double>> two = {{1, 2}};
  CHECK_THROWS_AS(mrsfe(two, two, {"x"}, 2, 1), ConfigError);
  CHECK_THROWS_AS(mrsfe({}, {}, {}), InvalidInputError);
  std::vector<std::vector<double>> thr = {{1, 2, 3}};
  CHECK_THROWS_AS(mrsfe(thr, two, {"x"}), InvalidInputError);
}

TEST_CASE("weekly averages", "[metrics]") {
  std::vector<double> week(7, 0.3);
  auto w1 = weekly_average(week);
  REQUIRE(w1.size() == 1);
  CHECK(w1[0] == Catch::Approx(0.3).margin(1e-15));

  std::vector<double> two_weeks;
  for (int k = 1; k <= 14; ++k) two_weeks.push_back(k);
  auto w2 = weekly_average(two_weeks);
  REQUIRE(w2.size() == 2);
  CHECK(w2[0] == 4.0);
  CHECK(w2[1] == 11.0);

  std::vector<double> ten(10, 0.0);
  for (int k = 0; k < 10; ++k) ten[k] = k < 7 ? 7.0 : 1.0;
  auto w3 = weekly_average(ten);
  REQUIRE(w3.size() == 2);
  CHECK(w3[0] == 7.0);
  CHECK(w3[1] == 1.0);  // trailing 3-day week averaged over 3

  CHECK_THROWS_AS(weekly_average(std::vector<double>{}), InvalidInputError);
}

#include "doctest.h"
#include "oracles.hpp"

#include "ddnet/error.hpp"
#include "ddnet/evaluate.hpp"
#include "ddnet/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>

using namespace ddnet;

namespace {

ForecastSet fset(std::vector<double> pred, std::vector<double> actual, std::string model = "m") {
  ForecastSet f;
  f.target = {"A", "OC"};
  f.model = std::move(model);
  for (std::size_t i = 0; i < pred.size(); ++i) f.dates.push_back(static_cast<int>(i));
  f.predictions = std::move(pred);
  f.actuals = std::move(actual);
  return f;
}

std::vector<double> draws(std::mt19937_64& rng, int n, double mu = 0.0) {
  std::normal_distribution<double> d(mu, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

MCSConfig quick(std::uint64_t seed, int reps = 500) {
  MCSConfig c;
  c.reps = reps;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_SUITE("evaluate") {

TEST_CASE("loss metrics") {
  auto perfect = fset({1, 2, 3}, {1, 2, 3});
  auto bench = fset({0, 3}, {1, 2});
  auto r = loss_metrics(fset({1, 2}, {1, 2}), bench);
  CHECK(r.rmse == 0.0);
  CHECK(r.mae == 0.0);
  auto b = loss_metrics(bench, bench);
  CHECK(b.rmse == doctest::Approx(1.0));
  CHECK(b.mae == doctest::Approx(1.0));
  CHECK(b.rmse_ratio == doctest::Approx(1.0));
  auto undefined = loss_metrics(perfect, perfect);
  CHECK_FALSE(undefined.ratio_defined);
  CHECK_THROWS_AS(loss_metrics(perfect, bench), AlignmentError);
  CHECK(forecast_losses(bench, LossKind::ABSOLUTE) == std::vector<double>{1.0, 1.0});
}

TEST_CASE("DM degenerate cases") {
  std::vector<double> a{1, 2, 3, 4, 5, 6};
  auto same = dm_test(a, a, 1);
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == 1.0);
  std::vector<double> b = a;
  for (auto& x : b) x -= 1.0;
  auto shifted = dm_test(a, b, 1);
  CHECK(shifted.degenerate);
  CHECK(shifted.statistic == INFINITY);
  CHECK_THROWS_AS(dm_test(std::vector<double>{1, 2}, std::vector<double>{1, 2}, 1), SampleSizeError);
  CHECK_THROWS_AS(dm_test(a, std::vector<double>{1, 2, 3}, 1), ArgumentError);
}

TEST_CASE("DM antisymmetry") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 50; ++rep) {
    auto a = draws(rng, 20 + rep);
    auto b = draws(rng, 20 + rep);
    for (int h : {1, 2, 4, 8}) {
      auto ab = dm_test(a, b, h), ba = dm_test(b, a, h);
      CHECK(ab.statistic == -ba.statistic);
      CHECK(ab.p_value == ba.p_value);
    }
  }
}

TEST_CASE("DM HAC uses Bartlett weights with truncation h - 1") {
  std::vector<double> a{0.3, -1.2, 0.8, 2.0, -0.4, 0.1, 1.1, -0.7};
  std::vector<double> zero(a.size(), 0.0);
  const double n = double(a.size());
  double m = 0.0;
  for (double v : a) m += v;
  m /= n;
  auto gamma = [&](int l) {
    double s = 0.0;
    for (std::size_t t = l; t < a.size(); ++t) s += (a[t] - m) * (a[t - l] - m);
    return s / n;
  };
  const double var3 = gamma(0) + 2.0 * (2.0 / 3.0) * gamma(1) + 2.0 * (1.0 / 3.0) * gamma(2);
  auto r = dm_test(a, zero, 3);
  CHECK(r.hac_lag == 2);
  CHECK(r.statistic == doctest::Approx(m / std::sqrt(var3 / n)).epsilon(1e-12));
}

TEST_CASE("DM share table") {
  std::vector<DMResult> all(30);
  for (auto& r : all) {
    r.statistic = 3.0;
    r.p_value = 0.001;
  }
  auto row = dm_share_table(all);
  CHECK(row.positive_pct == doctest::Approx(100.0));
  CHECK(row.sig_positive_pct == doctest::Approx(100.0));
  // 29 of 30 significant gives the 96.67 share
  all[4].p_value = 0.2;
  CHECK(dm_share_table(all).sig_positive_pct == doctest::Approx(96.67).epsilon(1e-4));
  auto empty = dm_share_table({});
  CHECK(empty.empty);
  CHECK(empty.positive_pct == 0.0);
}

TEST_CASE("cross-sectional DM") {
  MatrixXd zero = MatrixXd::Zero(2, 8);
  auto z = cross_section_dm(zero, {1, 2});
  REQUIRE(z.points.size() == 2);
  CHECK(z.points[0].statistic == 0.0);

  std::mt19937_64 rng(23);
  double mean_stat = 0.0;
  const int reps = 200;
  for (int rep = 0; rep < reps; ++rep) {
    auto v = draws(rng, 100, 1.0);
    MatrixXd d(1, 100);
    for (int i = 0; i < 100; ++i) d(0, i) = v[i];
    auto s = cross_section_dm(d, {0}).points[0].statistic;
    CHECK(std::abs(s - 10.0) < 4.0);
    mean_stat += s / reps;
    auto flipped = cross_section_dm(-d, {0}).points[0].statistic;
    CHECK(flipped == -s);
  }
  CHECK(std::abs(mean_stat - 10.0) < 2.0);

  MatrixXd sparse = MatrixXd::Constant(1, 6, NAN);
  sparse(0, 0) = 1.0;
  auto sk = cross_section_dm(sparse, {2001});
  CHECK(sk.points.empty());
  CHECK(sk.skipped_dates == std::vector<int>{2001});
}

TEST_CASE("moving blocks stay inside the sample and are reproducible") {
  auto a = moving_block_indices(20, 3, 5, 7);
  auto b = moving_block_indices(20, 3, 5, 7);
  CHECK(a == b);
  CHECK(a.size() == 20);
  for (int i : a) CHECK((i >= 0 && i < 20));
  CHECK(a != moving_block_indices(20, 3, 5, 8));
}

TEST_CASE("MCS keeps identical models") {
  std::mt19937_64 rng(29);
  auto v = draws(rng, 30);
  MatrixXd L(30, 2);
  for (int t = 0; t < 30; ++t) L(t, 0) = L(t, 1) = v[t];
  auto r = mcs(L, quick(1));
  CHECK(r.surviving == std::vector<int>{0, 1});
  CHECK(r.p_values[0] == 1.0);
  CHECK(r.p_values[1] == 1.0);
}

TEST_CASE("MCS eliminates a dominated model first") {
  int eliminated = 0;
  for (int seed = 0; seed < 50; ++seed) {
    auto rng = make_rng(31, seed);
    MatrixXd L = oracle::random_normal(rng, 30, 4);
    L.col(2).array() += 10.0;
    auto r = mcs(L, quick(seed));
    eliminated += r.elimination_order.front() == 2 && r.p_values[2] < 0.10;
  }
  CHECK(eliminated >= 48);
}

TEST_CASE("MCS surviving set ignores column order") {
  auto rng = make_rng(37, 0);
  MatrixXd L = oracle::random_normal(rng, 40, 4).cwiseAbs();
  L.col(1).array() += 0.8;
  const std::vector<int> perm{2, 0, 3, 1};
  MatrixXd P(40, 4);
  for (int k = 0; k < 4; ++k) P.col(k) = L.col(perm[k]);
  auto a = mcs(L, quick(3));
  auto b = mcs(P, quick(3));
  std::set<int> sa(a.surviving.begin(), a.surviving.end()), sb;
  for (int k : b.surviving) sb.insert(perm[k]);
  CHECK(sa == sb);
}

TEST_CASE("MCS parallel and serial agree") {
  auto rng = make_rng(41, 0);
  MatrixXd L = oracle::random_normal(rng, 25, 5).cwiseAbs();
  auto a = mcs(L, quick(9), Exec::Parallel);
  auto b = mcs_serial(L, quick(9));
  CHECK(a.p_values == b.p_values);
  CHECK(a.surviving == b.surviving);
  CHECK(a.elimination_order == b.elimination_order);
}

TEST_CASE("MCS argument checks") {
  CHECK_THROWS_AS(mcs(MatrixXd::Ones(20, 1), quick(1)), ArgumentError);
  CHECK_THROWS_AS(mcs(MatrixXd::Ones(5, 2), quick(1)), SampleSizeError);
  MCSConfig bad;
  bad.block_len = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

}  // TEST_SUITE

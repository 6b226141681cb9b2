#include "doctest.h"
#include "oracles.hpp"

#include "ddnet/error.hpp"
#include "ddnet/forecast.hpp"
#include "ddnet/rng.hpp"

#include <cmath>

using namespace ddnet;

namespace {

const SeriesId kTarget{"A", "OC"};

VectorXd ar_path(std::uint64_t seed, int T, double a1, double a2, double sd = 1.0) {
  auto rng = make_rng(seed, 0);
  std::normal_distribution<double> n(0.0, sd);
  VectorXd y = VectorXd::Zero(T + 50);
  for (int t = 2; t < T + 50; ++t) y(t) = a1 * y(t - 1) + a2 * y(t - 2) + n(rng);
  return y.tail(T);
}

ModelSpec spec_of(ModelKind k, int h, int max_lag) {
  ModelSpec s;
  s.kind = k;
  s.horizon = h;
  s.max_lag = max_lag;
  return s;
}

}  // namespace

TEST_SUITE("forecast") {

TEST_CASE("BIC picks the fewest parameters on ties") {
  std::vector<LagCandidate> c{{0, 5.0, 1, 30, 9.0}, {1, 5.0, 2, 30, 9.0}, {2, 5.0, 3, 30, 9.0}};
  CHECK(select_lags_bic(c) == 0);
  CHECK(select_lags_bic({{3, 1.0, 4, 20, 2.0}}) == 3);
  CHECK_THROWS_AS(select_lags_bic({}), ArgumentError);
}

TEST_CASE("white noise: lag 0 and the training mean") {
  auto rng = make_rng(3, 0);
  VectorXd y = oracle::random_normal(rng, 60, 1);
  SplitSpec split = make_split(60, 0.7);
  auto fit = fit_direct(kTarget, y, {}, spec_of(ModelKind::AR, 1, 2), split);
  CHECK(fit.chosen_lag == 0);
  // targets of the training origins 2 .. boundary - 2
  double m = 0.0;
  int n = 0;
  for (std::size_t t = 3; t < split.boundary_index; ++t, ++n) m += y(t);
  m /= n;
  auto fs = predict_holdout(fit, y, {}, split);
  for (double p : fs.predictions) CHECK(p == doctest::Approx(m).epsilon(1e-12));
}

TEST_CASE("exact AR(1) recursion") {
  VectorXd y(40);
  y(0) = 1.0;
  for (int t = 1; t < 40; ++t) y(t) = 0.9 * y(t - 1);
  auto fit = fit_direct(kTarget, y, {}, spec_of(ModelKind::AR, 1, 2), make_split(40, 0.7));
  CHECK(fit.chosen_lag == 1);
  CHECK(std::abs(fit.coef(1) - 0.9) < 1e-8);
  CHECK(std::abs(fit.coef(0)) < 1e-8);
}

TEST_CASE("perfect leading indicator") {
  auto rng = make_rng(4, 0);
  const int h = 2;
  VectorXd y = oracle::random_normal(rng, 50, 1);
  VectorXd lead = VectorXd::Zero(50);
  for (int t = 0; t + h < 50; ++t) lead(t) = y(t + h);
  ModelSpec s = spec_of(ModelKind::DD, h, 0);
  auto fit = fit_direct(kTarget, y, {{"lead", lead}}, s, make_split(50, 0.7));
  CHECK(fit.r_squared == doctest::Approx(1.0));
  CHECK(fit.coef(1) == doctest::Approx(1.0));
}

TEST_CASE("planted AR(2) lag recovery") {
  int hits = 0;
  for (int seed = 0; seed < 200; ++seed) {
    VectorXd y = ar_path(1000 + seed, 200, 0.2, 0.6);
    auto fit = fit_direct(kTarget, y, {}, spec_of(ModelKind::AR, 1, 4), make_split(200, 0.7));
    hits += fit.chosen_lag == 2;
  }
  CHECK(hits >= 180);
}

TEST_CASE("constant series and AR(0) predictions") {
  VectorXd c = VectorXd::Constant(30, 0.25);
  SplitSpec split = make_split(30, 0.7);
  auto fit = fit_direct(kTarget, c, {}, spec_of(ModelKind::AR, 1, 2), split);
  for (double p : predict_holdout(fit, c, {}, split).predictions) CHECK(p == doctest::Approx(0.25));
}

TEST_CASE("first prediction equals a hand-rolled dot product") {
  VectorXd y = ar_path(8, 80, 0.5, 0.2);
  auto rng = make_rng(8, 1);
  VectorXd x = oracle::random_normal(rng, 80, 1);
  SplitSpec split = make_split(80, 0.7);
  const int h = 2;
  auto fit = fit_direct(kTarget, y, {{"x", x}}, spec_of(ModelKind::ARX, h, 2), split);
  auto fs = predict_holdout(fit, y, {{"x", x}}, split);
  const int origin = static_cast<int>(split.boundary_index) - 1;
  REQUIRE(fs.dates.front() == origin + h);
  double manual = fit.coef(0);
  for (std::size_t k = 0; k < fit.terms.size(); ++k) {
    const auto& term = fit.terms[k];
    const double v = term.source < 0 ? y(origin - term.lag) : x(origin - term.lag);
    manual += fit.coef(1 + k) * v;
  }
  CHECK(std::abs(fs.predictions.front() - manual) < 1e-12);
  CHECK(fs.actuals.front() == y(origin + h));
}

TEST_CASE("no look-ahead: future values never change a prediction") {
  VectorXd y = ar_path(9, 60, 0.4, 0.3);
  auto rng = make_rng(9, 1);
  VectorXd x = oracle::random_normal(rng, 60, 1);
  SplitSpec split = make_split(60, 0.7);
  for (bool recursive : {false, true}) {
    ModelSpec s = spec_of(ModelKind::ARX, 1, 2);
    s.recursive = recursive;
    auto fit = fit_direct(kTarget, y, {{"x", x}}, s, split);
    auto base = predict_holdout(fit, y, {{"x", x}}, split);
    for (std::size_t k = 0; k < base.dates.size(); ++k) {
      const int origin = base.dates[k] - 1;
      VectorXd y2 = y, x2 = x;
      for (Eigen::Index t = origin + 1; t < 60; ++t) {
        y2(t) += 100.0;
        x2(t) -= 50.0;
      }
      auto moved = predict_holdout(fit, y2, {{"x", x2}}, split);
      CHECK(moved.predictions[k] == base.predictions[k]);
    }
  }
}

TEST_CASE("country LASSO finds the true regressor among 100 noise columns") {
  int hits = 0;
  for (int seed = 0; seed < 200; ++seed) {
    auto rng = make_rng(500 + seed, 0);
    const int T = 100;
    MatrixXd X = oracle::random_normal(rng, T, 101);
    VectorXd e = oracle::random_normal(rng, T, 1);
    VectorXd y = VectorXd::Zero(T);
    // noise small enough that OLS on the true regressor alone is well inside 0.1
    for (int t = 1; t < T; ++t) y(t) = X(t - 1, 0) + 0.3 * e(t);
    std::vector<LabeledSeries> cands;
    for (int j = 0; j < 101; ++j) cands.push_back({"c" + std::to_string(j), X.col(j)});
    auto fit = fit_lasso_i(kTarget, y, cands, spec_of(ModelKind::LASSO_I, 1, 0),
                           make_split(T, 0.7), {});
    for (std::size_t k = 0; k < fit.terms.size(); ++k)
      if (fit.terms[k].source == 0 && fit.terms[k].lag == 0 &&
          std::abs(fit.coef(1 + k) - 1.0) < 0.1)
        ++hits;
  }
  CHECK(hits >= 180);
}

TEST_CASE("country LASSO keeps one of a duplicated pair") {
  auto rng = make_rng(77, 0);
  const int T = 80;
  MatrixXd X = oracle::random_normal(rng, T, 10);
  X.col(1) = X.col(0);
  VectorXd y = VectorXd::Zero(T);
  VectorXd e = oracle::random_normal(rng, T, 1);
  for (int t = 1; t < T; ++t) y(t) = X(t - 1, 0) + 0.3 * e(t);
  std::vector<LabeledSeries> cands;
  for (int j = 0; j < 10; ++j) cands.push_back({"c" + std::to_string(j), X.col(j)});
  auto fit = fit_lasso_i(kTarget, y, cands, spec_of(ModelKind::LASSO_I, 1, 0), make_split(T, 0.7), {});
  int pair = 0;
  for (std::size_t k = 0; k < fit.terms.size(); ++k)
    if (fit.terms[k].source <= 1 && fit.terms[k].source >= 0 && fit.coef(1 + k) != 0.0) ++pair;
  CHECK(pair == 1);
}

TEST_CASE("country LASSO on pure noise collapses to own lags") {
  auto rng = make_rng(78, 0);
  const int T = 80;
  MatrixXd X = oracle::random_normal(rng, T, 30);
  VectorXd y = ar_path(78, T, 0.5, 0.0);
  std::vector<LabeledSeries> cands;
  for (int j = 0; j < 30; ++j) cands.push_back({"c" + std::to_string(j), X.col(j)});
  auto fit = fit_lasso_i(kTarget, y, cands, spec_of(ModelKind::LASSO_I, 1, 2), make_split(T, 0.7), {});
  for (const auto& t : fit.terms) CHECK(t.source == -1);
}

TEST_CASE("input checks") {
  VectorXd y = VectorXd::Ones(20);
  SplitSpec split = make_split(20, 0.7);
  CHECK_THROWS_AS(fit_direct(kTarget, y, {{"x", VectorXd::Ones(19)}}, spec_of(ModelKind::ARX, 1, 1), split),
                  AlignmentError);
  CHECK_THROWS_AS(fit_direct(kTarget, y, {}, spec_of(ModelKind::AR, 0, 1), split), ArgumentError);
  CHECK_THROWS_AS(fit_direct(kTarget, VectorXd::Ones(8), {}, spec_of(ModelKind::AR, 1, 1), make_split(8, 0.7)),
                  SampleSizeError);
  CHECK(parse_model_kind("LASSO_I") == ModelKind::LASSO_I);
  CHECK_THROWS(parse_model_kind("ARIMA"));
}

}  // TEST_SUITE

#include "doctest.h"
#include "oracles.hpp"

#include "ddnet/error.hpp"
#include "ddnet/rng.hpp"
#include "ddnet/select.hpp"

#include <cmath>
#include <random>

using namespace ddnet;

namespace {

// T x p design with X'X = T * I.
MatrixXd orthonormal_design(std::mt19937_64& rng, Eigen::Index T, Eigen::Index p) {
  Eigen::HouseholderQR<MatrixXd> qr(oracle::random_normal(rng, T, p));
  MatrixXd Q = qr.householderQ() * MatrixXd::Identity(T, p);
  return Q * std::sqrt(double(T));
}

CandidatePool make_pool(const MatrixXd& X) {
  CandidatePool pool;
  for (Eigen::Index j = 0; j < X.cols(); ++j) pool.ids.push_back({"U" + std::to_string(j), "x"});
  pool.X = X;
  return pool;
}

}  // namespace

TEST_SUITE("select") {

TEST_CASE("coordinate descent equals soft-threshold on orthonormal designs") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.05, 1.5);
  for (int rep = 0; rep < 5; ++rep) {
    const Eigen::Index T = 30, p = 6;
    MatrixXd X = orthonormal_design(rng, T, p);
    VectorXd y = oracle::random_normal(rng, T, 1);
    VectorXd psi(p);
    for (Eigen::Index j = 0; j < p; ++j) psi(j) = u(rng);
    const double lambda = u(rng) * 0.5;
    auto sol = solve_weighted_lasso(X, y, lambda, psi);
    for (Eigen::Index j = 0; j < p; ++j) {
      const double beta_ols = X.col(j).dot(y) / double(T);
      CHECK(std::abs(sol.coef(j) - oracle::soft_threshold(beta_ols, lambda * psi(j) / 2.0)) < 1e-10);
    }
  }
}

TEST_CASE("lasso objective never increases across sweeps") {
  std::mt19937_64 rng(2);
  MatrixXd X = oracle::random_normal(rng, 40, 15);
  X.col(3) = X.col(2) + 0.1 * oracle::random_normal(rng, 40, 1);
  VectorXd y = X.col(2) - X.col(7) + oracle::random_normal(rng, 40, 1);
  auto sol = solve_weighted_lasso(X, y, 0.1, VectorXd::Ones(15));
  for (std::size_t k = 1; k < sol.objective.size(); ++k)
    CHECK(sol.objective[k] <= sol.objective[k - 1] + 1e-12);
}

TEST_CASE("non-convergence reports the last change") {
  std::mt19937_64 rng(4);
  MatrixXd X = oracle::random_normal(rng, 40, 10);
  X.col(1) = X.col(0) * 0.999 + 0.001 * X.col(1);
  VectorXd y = X.col(0) + X.col(1);
  try {
    solve_weighted_lasso(X, y, 1e-4, VectorXd::Ones(10), 2, 1e-14);
    FAIL("expected non-convergence");
  } catch (const ConvergenceError& e) {
    CHECK(e.last_change() > 0.0);
  }
}

TEST_CASE("zero response selects nothing") {
  std::mt19937_64 rng(1);
  auto r = rigorous_lasso(VectorXd::Zero(30), oracle::random_normal(rng, 30, 8), {});
  CHECK(r.active.empty());
  CHECK(r.coef.isZero(0.0));
}

TEST_CASE("planted regressor is found among 50 irrelevant ones") {
  int hits = 0;
  for (int seed = 0; seed < 200; ++seed) {
    auto rng = make_rng(77, seed);
    MatrixXd X = oracle::random_normal(rng, 40, 51);
    VectorXd y = 2.0 * X.col(0) + 0.1 * oracle::random_normal(rng, 40, 1);
    auto r = rigorous_lasso(y, X, {});
    hits += std::find(r.active.begin(), r.active.end(), 0) != r.active.end();
  }
  CHECK(hits >= 190);
}

TEST_CASE("plug-in penalty and config checks") {
  CHECK(plugin_lambda(100, 10, 1.1, 0.05) ==
        doctest::Approx(2.0 * 1.1 * 2.8070338 / 10.0).epsilon(1e-6));
  LassoConfig bad;
  bad.c = 0.9;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.gamma = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("p-value adjustment: fixed examples") {
  using A = Adjustment;
  CHECK(adjust_pvalues({0.01, 0.02}, A::BONFERRONI, 0.05) == std::vector<bool>{true, true});
  CHECK(adjust_pvalues({0.03, 0.04}, A::BONFERRONI, 0.05) == std::vector<bool>{false, false});
  CHECK(adjust_pvalues({0.03, 0.04}, A::HOLM, 0.05) == std::vector<bool>{false, false});
  for (auto m : {A::BONFERRONI, A::HOLM, A::BH, A::BY})
    CHECK(adjust_pvalues({0.0, 0.0, 0.0}, m, 0.05) == std::vector<bool>{true, true, true});

  // Hand application: Bonferroni bound 0.0125 keeps the first two; BH bounds
  // (0.0125, 0.025, 0.0375, 0.05) keep the first two as well since 0.04 > 0.0375.
  const std::vector<double> p{0.001, 0.012, 0.04, 0.2};
  CHECK(adjust_pvalues(p, A::BONFERRONI, 0.05) == std::vector<bool>{true, true, false, false});
  CHECK(adjust_pvalues(p, A::BH, 0.05) == std::vector<bool>{true, true, false, false});
  CHECK_THROWS_AS(adjust_pvalues({1.5}, A::HOLM, 0.05), ArgumentError);
}

TEST_CASE("adjustments agree with enumeration on random p-vectors") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 300; ++rep) {
    std::vector<double> p(1 + rep % 12);
    for (auto& v : p) v = std::pow(u(rng), 3.0) * 0.2;
    CHECK(adjust_pvalues(p, Adjustment::BONFERRONI, 0.05) == oracle::bonferroni(p, 0.05));
    CHECK(adjust_pvalues(p, Adjustment::HOLM, 0.05) == oracle::holm(p, 0.05));
    CHECK(adjust_pvalues(p, Adjustment::BH, 0.05) == oracle::benjamini_hochberg(p, 0.05));
  }
}

TEST_CASE("perfect signal is retained with p-value 0") {
  std::mt19937_64 rng(6);
  MatrixXd X = oracle::random_normal(rng, 40, 6);
  VectorXd y = X.col(3);
  auto r = ocmt_select(y, X, MatrixXd(40, 0), {});
  CHECK(r.active == std::vector<int>{3});
  CHECK(r.p_values[3] < 1e-12);
}

TEST_CASE("ocmt family-wise error under the global null") {
  int any = 0;
  OcmtConfig cfg;
  cfg.adjustment = Adjustment::BONFERRONI;
  for (int d = 0; d < 500; ++d) {
    auto rng = make_rng(123, d);
    MatrixXd X = oracle::random_normal(rng, 60, 100);
    VectorXd y = oracle::random_normal(rng, 60, 1);
    any += !ocmt_select(y, X, MatrixXd(60, 0), cfg).active.empty();
  }
  CHECK(any / 500.0 <= 0.07);
}

TEST_CASE("ocmt skips candidates collinear with the factors") {
  std::mt19937_64 rng(8);
  MatrixXd F = oracle::random_normal(rng, 30, 1);
  MatrixXd X = oracle::random_normal(rng, 30, 3);
  X.col(1) = 2.0 * F.col(0);
  auto r = ocmt_select(X.col(0) + oracle::random_normal(rng, 30, 1), X, F, {});
  CHECK(r.skipped == std::vector<int>{1});
  OcmtConfig two;
  two.stages = 2;
  CHECK_THROWS_AS(two.validate(), ConfigError);
}

TEST_CASE("post-selection OLS") {
  VectorXd x = VectorXd::LinSpaced(20, 0.0, 1.9);
  VectorXd y = 3.0 + 2.0 * x.array();
  auto exact = post_ols(y, x, {{"A", "x"}}, MatrixXd(20, 0));
  CHECK(exact.intercept == doctest::Approx(3.0));
  CHECK(exact.coefficients[0] == doctest::Approx(2.0));
  CHECK(exact.degenerate);
  CHECK(exact.residual_sd == kResidualSdFloor);

  VectorXd z(5);
  z << 1, 2, 3, 4, 10;
  auto empty = post_ols(z, MatrixXd(5, 0), {}, MatrixXd(5, 0));
  CHECK(empty.intercept == doctest::Approx(4.0));
  CHECK(empty.residual_sd == doctest::Approx(std::sqrt(50.0 / 5.0)));

  CHECK_THROWS_AS(post_ols(z, MatrixXd::Ones(5, 4), {{}, {}, {}, {}}, MatrixXd(5, 0)),
                  SampleSizeError);
}

TEST_CASE("post-selection OLS matches a Gram-Schmidt solver") {
  std::mt19937_64 rng(12);
  for (int rep = 0; rep < 10; ++rep) {
    MatrixXd X = oracle::random_normal(rng, 50, 4);
    MatrixXd F = oracle::random_normal(rng, 50, 2);
    VectorXd y = oracle::random_normal(rng, 50, 1);
    auto row = post_ols(y, X, {{"a", "x"}, {"b", "x"}, {"c", "x"}, {"d", "x"}}, F);
    MatrixXd Z(50, 7);
    Z << VectorXd::Ones(50), F, X;
    VectorXd b = oracle::gram_schmidt_ls(Z, y);
    CHECK(std::abs(row.intercept - b(0)) < 1e-8);
    for (int f = 0; f < 2; ++f) CHECK(std::abs(row.factor_loadings[f] - b(1 + f)) < 1e-8);
    for (int j = 0; j < 4; ++j) CHECK(std::abs(row.coefficients[j] - b(3 + j)) < 1e-8);
  }
}

TEST_CASE("collinear selected column is dropped with a warning") {
  std::mt19937_64 rng(13);
  MatrixXd X = oracle::random_normal(rng, 30, 2);
  X.col(1) = X.col(0);
  auto row = post_ols(X.col(0) + oracle::random_normal(rng, 30, 1), X, {{"a", "x"}, {"b", "x"}},
                      MatrixXd(30, 0));
  CHECK(row.selected.size() == 1);
  CHECK(row.warnings.size() == 1);
}

TEST_CASE("row selection excludes the target and parallel matches serial") {
  std::mt19937_64 rng(14);
  MatrixXd X = oracle::random_normal(rng, 40, 12);
  X.col(5) += 1.2 * X.col(0);
  auto pool = make_pool(X);
  for (auto method : {SelectMethod::LASSO, SelectMethod::OCMT}) {
    SelectionConfig cfg;
    cfg.method = method;
    auto par = select_rows(pool.ids, pool, MatrixXd(40, 0), cfg, Exec::Parallel);
    auto ser = select_rows_serial(pool.ids, pool, MatrixXd(40, 0), cfg);
    REQUIRE(par.size() == ser.size());
    for (std::size_t i = 0; i < par.size(); ++i) {
      CHECK(par[i].selected == ser[i].selected);
      CHECK(par[i].coefficients == ser[i].coefficients);
      CHECK(par[i].residual_sd == ser[i].residual_sd);
      CHECK(std::find(par[i].selected.begin(), par[i].selected.end(), par[i].target) ==
            par[i].selected.end());
    }
    CHECK(std::find(par[5].selected.begin(), par[5].selected.end(), pool.ids[0]) !=
          par[5].selected.end());
  }
  CHECK_THROWS_AS(select_rows({{"nope", "x"}}, pool, MatrixXd(40, 0), {}), ArgumentError);
}

}  // TEST_SUITE

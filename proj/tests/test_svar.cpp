#include "doctest.h"
#include "oracles.hpp"

#include "ddnet/error.hpp"
#include "ddnet/rng.hpp"
#include "ddnet/svar.hpp"

#include <cmath>

using namespace ddnet;

namespace {

MatrixXd simulate_var(std::uint64_t seed, int T, const std::vector<MatrixXd>& A,
                      const MatrixXd& chol, int burn = 200) {
  auto rng = make_rng(seed, 0);
  const auto S = chol.rows();
  const int p = static_cast<int>(A.size());
  MatrixXd Y = MatrixXd::Zero(T + burn, S);
  MatrixXd E = oracle::random_normal(rng, T + burn, S);
  for (int t = p; t < T + burn; ++t) {
    VectorXd y = chol * E.row(t).transpose();
    for (int l = 1; l <= p; ++l) y += A[l - 1] * Y.row(t - l).transpose();
    Y.row(t) = y.transpose();
  }
  return Y.bottomRows(T);
}

SVARModel manual_model(const std::vector<MatrixXd>& A, const MatrixXd& sigma) {
  SVARModel m;
  m.A = A;
  m.lag = static_cast<int>(A.size());
  m.sigma_u = sigma;
  m.chol = cholesky_identify(sigma);
  for (Eigen::Index s = 0; s < sigma.rows(); ++s) m.variables.push_back("v" + std::to_string(s));
  return m;
}

}  // namespace

TEST_SUITE("svar") {

TEST_CASE("cholesky hand cases") {
  CHECK(cholesky_identify(MatrixXd::Identity(3, 3)).isApprox(MatrixXd::Identity(3, 3)));
  MatrixXd s(2, 2);
  s << 4, 2, 2, 2;
  MatrixXd b(2, 2);
  b << 2, 0, 1, 1;
  CHECK((cholesky_identify(s) - b).cwiseAbs().maxCoeff() < 1e-15);
  MatrixXd ns(2, 2);
  ns << 1, 0.5, 0.2, 1;
  CHECK_THROWS_AS(cholesky_identify(ns), DecompositionError);
  MatrixXd neg(2, 2);
  neg << 1, 2, 2, 1;
  CHECK_THROWS_AS(cholesky_identify(neg), DecompositionError);
}

TEST_CASE("cholesky reconstructs random PD matrices") {
  std::mt19937_64 rng(51);
  for (int rep = 0; rep < 20; ++rep) {
    MatrixXd M = oracle::random_normal(rng, 5, 5);
    MatrixXd sigma = M.transpose() * M + MatrixXd::Identity(5, 5);
    MatrixXd B = cholesky_identify(sigma);
    CHECK((B * B.transpose() - sigma).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(B.isLowerTriangular());
    CHECK((B.diagonal().array() > 0).all());
  }
}

TEST_CASE("bivariate VAR(1) estimates") {
  std::vector<MatrixXd> A{0.5 * MatrixXd::Identity(2, 2)};
  auto m = fit_var(simulate_var(3, 10000, A, MatrixXd::Identity(2, 2)), 2);
  CHECK(m.lag == 1);
  CHECK((m.A[0] - A[0]).cwiseAbs().maxCoeff() < 0.02);
  CHECK(std::abs(m.max_root - 0.5) < 0.02);
  CHECK(m.stable);

  auto w = fit_var(simulate_var(4, 10000, {MatrixXd::Zero(2, 2)}, MatrixXd::Identity(2, 2)), 1);
  CHECK(w.A[0].cwiseAbs().maxCoeff() < 0.05);
  CHECK(w.max_root < 0.05);
}

TEST_CASE("VAR sample size and lag checks") {
  CHECK_THROWS_AS(fit_var(MatrixXd::Ones(13, 2), 2), SampleSizeError);
  CHECK_THROWS_AS(fit_var(MatrixXd::Ones(40, 2), 0), ArgumentError);
}

TEST_CASE("log-likelihood does not depend on variable order") {
  MatrixXd A1(3, 3);
  A1 << 0.4, 0.1, 0, 0.2, 0.3, 0.1, 0, -0.2, 0.5;
  MatrixXd Y = simulate_var(5, 200, {A1}, MatrixXd::Identity(3, 3));
  MatrixXd P(200, 3);
  P << Y.col(2), Y.col(0), Y.col(1);
  auto a = fit_var(Y, 1), b = fit_var(P, 1);
  CHECK(var_loglik(a) == doctest::Approx(var_loglik(b)).epsilon(1e-10));
}

TEST_CASE("impulse responses") {
  auto zero = manual_model({MatrixXd::Zero(2, 2)}, MatrixXd::Identity(2, 2) * 2.0);
  auto r0 = irf(zero, 3);
  CHECK(r0[0].isApprox(zero.chol));
  for (int h = 1; h <= 3; ++h) CHECK(r0[h].isZero(0.0));

  MatrixXd a(1, 1);
  a << 0.5;
  auto uni = irf(manual_model({a}, MatrixXd::Identity(1, 1)), 6);
  for (int h = 0; h <= 6; ++h) CHECK(uni[h](0, 0) == doctest::Approx(std::pow(0.5, h)));
}

TEST_CASE("impulse responses match a direct shock simulation") {
  std::mt19937_64 rng(53);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<MatrixXd> A{0.3 * oracle::random_normal(rng, 3, 3), 0.2 * oracle::random_normal(rng, 3, 3)};
    MatrixXd M = oracle::random_normal(rng, 3, 3);
    auto m = manual_model(A, M.transpose() * M + MatrixXd::Identity(3, 3));
    auto got = irf(m, 12);
    auto want = oracle::simulate_irf(A, m.chol, 12);
    for (int h = 0; h <= 12; ++h) CHECK((got[h] - want[h]).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("FEVD rows sum to one and the first variable starts at 100 percent") {
  std::mt19937_64 rng(55);
  MatrixXd M = oracle::random_normal(rng, 4, 4);
  auto m = manual_model({0.3 * oracle::random_normal(rng, 4, 4)}, M.transpose() * M + MatrixXd::Identity(4, 4));
  auto f = fevd(m, 10);
  REQUIRE(f.shares.size() == 10);
  for (const auto& s : f.shares)
    for (int i = 0; i < 4; ++i) CHECK(std::abs(s.row(i).sum() - 1.0) < 1e-8);
  CHECK(f.shares[0](0, 0) == 1.0);
  for (int k = 1; k < 4; ++k) CHECK(f.shares[0](0, k) == 0.0);

  auto stat = fevd(manual_model({MatrixXd::Zero(3, 3)}, VectorXd::LinSpaced(3, 1, 3).asDiagonal()), 5);
  for (const auto& s : stat.shares) CHECK(s.isApprox(MatrixXd::Identity(3, 3)));
}

TEST_CASE("ordering range") {
  std::mt19937_64 rng(57);
  MatrixXd A1 = 0.3 * oracle::random_normal(rng, 3, 3);
  MatrixXd M = oracle::random_normal(rng, 3, 3);
  auto full = ordering_range(manual_model({A1}, M.transpose() * M + MatrixXd::Identity(3, 3)), 10);
  CHECK(full.permutations == 2);
  for (int k = 0; k < 3; ++k) CHECK(full.min_share[k] <= full.max_share[k]);

  MatrixXd diag = VectorXd::LinSpaced(4, 0.5, 2.0).asDiagonal();
  auto inv = ordering_range(manual_model({0.3 * oracle::random_normal(rng, 4, 4)}, diag), 10);
  CHECK(inv.permutations == 6);
  for (int k = 0; k < 4; ++k) CHECK(std::abs(inv.max_share[k] - inv.min_share[k]) < 1e-12);
}

TEST_CASE("bootstrap bands") {
  MatrixXd A1(2, 2);
  A1 << 0.5, 0.1, 0.2, 0.3;
  auto m = fit_var(simulate_var(7, 120, {A1}, MatrixXd::Identity(2, 2)), 2, {"a", "b"}, 1);
  auto a = bootstrap_irf_ci(m, 6, 200, 9, Exec::Parallel);
  auto b = bootstrap_irf_ci(m, 6, 200, 9, Exec::Serial);
  for (int h = 0; h <= 6; ++h) {
    CHECK((a.lower[h].array() <= a.upper[h].array()).all());
    CHECK(a.lower[h] == b.lower[h]);
    CHECK(a.upper[h] == b.upper[h]);
  }
}

TEST_CASE("bootstrap bands collapse on a deterministic system") {
  const int T = 60;
  MatrixXd Y(T, 2);
  Y.row(0) << 1.0, 0.0;
  MatrixXd A1(2, 2);
  const double c = 0.9 * std::cos(0.4), s = 0.9 * std::sin(0.4);
  A1 << c, -s, s, c;
  for (int t = 1; t < T; ++t) Y.row(t) = (A1 * Y.row(t - 1).transpose()).transpose();
  auto m = fit_var(Y, 1, {}, 1);
  auto bands = bootstrap_irf_ci(m, 5, 50, 3, Exec::Serial);
  for (int h = 0; h <= 5; ++h) {
    CHECK((bands.lower[h] - bands.point[h]).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((bands.upper[h] - bands.point[h]).cwiseAbs().maxCoeff() < 1e-9);
  }
}

}  // TEST_SUITE

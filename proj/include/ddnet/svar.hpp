#pragma once

#include "ddnet/linalg.hpp"
#include "ddnet/parallel.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ddnet {

// Reduced-form VAR y_t = c + sum_l A_l y_{t-l} + u_t with a Cholesky factor
// of the innovation covariance. Variable 0 is ordered first.
struct SVARModel {
  std::vector<std::string> variables;
  int lag = 1;
  VectorXd intercept;
  std::vector<MatrixXd> A;  // A[l-1] multiplies y_{t-l}
  MatrixXd sigma_u;         // residual cross-products / T_eff
  MatrixXd chol;            // lower triangular, chol * chol' = sigma_u
  double max_root = 0.0;
  bool stable = true;
  bool jittered = false;
  std::vector<double> aic_by_lag;
  int n_obs = 0;  // effective sample
  MatrixXd data;  // T x S input
  MatrixXd resid; // n_obs x S
};

// AIC over lags 1..max_lag on the common trimmed sample, then OLS at the
// chosen lag on its full effective sample. fixed_lag skips the AIC search.
SVARModel fit_var(const MatrixXd& Y, int max_lag = 2, std::vector<std::string> names = {},
                  std::optional<int> fixed_lag = std::nullopt);

double var_aic(const MatrixXd& sigma_u, int S, int p, int n_obs);
// Gaussian log-likelihood at the estimates.
double var_loglik(const SVARModel& m);

// Lower-triangular B with B B' = sigma and positive diagonal.
MatrixXd cholesky_identify(const MatrixXd& sigma);

// Spectral radius of the companion matrix.
double companion_max_root(const std::vector<MatrixXd>& A);

// MA coefficients Psi_0 = I, Psi_h = sum_l A_l Psi_{h-l}, h = 0..H.
std::vector<MatrixXd> ma_coefficients(const std::vector<MatrixXd>& A, int H);

// Orthogonalized responses IRF_h = Psi_h * chol, entry (response, shock).
std::vector<MatrixXd> irf(const SVARModel& m, int H);

struct IRFBundle {
  int H = 0;
  std::vector<MatrixXd> point, lower, upper;
  int reps = 0;
  int unstable_reps = 0;
  int failed_reps = 0;
  std::uint64_t seed = 0;
};

// Recursive residual bootstrap with 2.5 / 97.5 percentile bands.
IRFBundle bootstrap_irf_ci(const SVARModel& m, int H, int reps = 500, std::uint64_t seed = 7,
                           Exec exec = Exec::Parallel);

struct FEVDTable {
  // shares[h-1](variable, shock) for horizons h = 1..H; rows sum to one.
  std::vector<MatrixXd> shares;
};

FEVDTable fevd(const SVARModel& m, int H);
FEVDTable fevd_from_irf(const std::vector<MatrixXd>& irfs, int H);

struct OrderingRange {
  int horizon = 0;
  int permutations = 0;
  std::vector<double> min_share;  // per shock, original variable order
  std::vector<double> max_share;
};

// Enumerates every ordering of variables 1..S-1 with variable 0 fixed first,
// re-identifies, and reports the range of FEVD shares of `response` at H.
OrderingRange ordering_range(const SVARModel& m, int H, int response = 0);

}  // namespace ddnet

#pragma once

#include <Eigen/Dense>

#include <vector>

namespace ddnet {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Least-squares fit that tolerates rank deficiency: columns are screened left
// to right and any column lying (numerically) in the span of the columns
// already kept is dropped. Coefficients of dropped columns are zero.
struct OlsFit {
  VectorXd coef;             // one entry per input column, zeros for dropped
  VectorXd fitted;
  VectorXd resid;
  std::vector<int> kept;     // retained column indices, ascending
  std::vector<int> dropped;  // dropped column indices, ascending
  double ssr = 0.0;
};

OlsFit ols(const MatrixXd& X, const VectorXd& y, double rel_tol = 1e-10);

// Indices of columns of X that survive the left-to-right collinearity screen.
std::vector<int> independent_columns(const MatrixXd& X, double rel_tol = 1e-10);

// Heteroskedasticity-robust coefficient covariance for a full-rank design.
// lags == 0 gives HC3; lags > 0 gives Newey-West with Bartlett weights.
MatrixXd robust_covariance(const MatrixXd& X, const VectorXd& resid, int lags);

// Satterthwaite degrees of freedom for the HC3 variance of coefficient `col`
// (Bell-McCaffrey, homoskedastic working model). Full-rank X assumed.
double hc3_satterthwaite_df(const MatrixXd& X, Eigen::Index col);

// Design [1, F] with an intercept column prepended.
MatrixXd with_intercept(const MatrixXd& F, Eigen::Index rows);

// Columns of `targets` minus their projection on the column space of Z.
MatrixXd residualize(const MatrixXd& Z, const MatrixXd& targets);

double mean(const VectorXd& v);
// Sample standard deviation with divisor n - 1.
double sample_sd(const VectorXd& v);

// Type-7 (linear interpolation) empirical quantile, q in [0, 1].
double quantile(std::vector<double> values, double q);

double normal_cdf(double x);
double normal_quantile(double p);
// Two-sided p-value of a t statistic; df <= 0 selects the normal reference.
double two_sided_p(double t, double df);

}  // namespace ddnet

#pragma once

#include "ddnet/linalg.hpp"
#include "ddnet/panel.hpp"
#include "ddnet/parallel.hpp"
#include "ddnet/series_id.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ddnet {

enum class SelectMethod { LASSO, OCMT };
const char* to_string(SelectMethod m);
SelectMethod parse_select_method(const std::string& s);

struct LassoConfig {
  double c = 1.1;
  std::optional<double> gamma;  // defaults to 0.1 / ln(T)
  int max_iter = 10000;
  double tol = 1e-8;
  int loading_iterations = 2;
  // Starting residuals for the penalty loadings: OLS on the k regressors most
  // correlated with y. 0 starts from y - mean(y), which leaves the loadings
  // so large that a clean single signal is often missed.
  int initial_regressors = 5;

  void validate() const;
};

// Weighted LASSO on a design without intercept:
//   (1/T) ||y - X b||^2 + lambda * sum_j loadings_j |b_j|
// solved by cyclic coordinate descent.
struct LassoSolution {
  VectorXd coef;
  std::vector<int> active;
  std::vector<double> objective;  // after every sweep, starting with the initial point
  int sweeps = 0;
};

LassoSolution solve_weighted_lasso(const MatrixXd& X, const VectorXd& y, double lambda,
                                   const VectorXd& loadings, int max_iter = 10000,
                                   double tol = 1e-8, const VectorXd* warm_start = nullptr);

// Plug-in penalty per unit of loading: 2 c Phi^{-1}(1 - gamma / (2p)) / sqrt(T).
double plugin_lambda(std::size_t T, std::size_t p, double c, double gamma);

struct RigorousLassoResult {
  std::vector<int> active;
  VectorXd coef;      // penalized coefficients on the centered design
  VectorXd loadings;  // final regressor-specific loadings
  double lambda = 0.0;
};

// Rigorous LASSO with heteroskedastic loadings psi_j = sqrt(mean(x_j^2 e^2)).
// y and X are centered internally so the intercept is unpenalized.
RigorousLassoResult rigorous_lasso(const VectorXd& y, const MatrixXd& X, const LassoConfig& cfg);

enum class Adjustment { BONFERRONI, HOLM, BH, BY };
const char* to_string(Adjustment a);
Adjustment parse_adjustment(const std::string& s);

// Retention mask after multiplicity adjustment at level alpha. family_size
// overrides the number of hypotheses used in the thresholds (m^delta).
std::vector<bool> adjust_pvalues(const std::vector<double>& p, Adjustment method, double alpha,
                                 std::optional<double> family_size = std::nullopt);

struct OcmtConfig {
  double alpha = 0.05;
  Adjustment adjustment = Adjustment::HOLM;
  double delta = 1.0;
  int hac_lags = 0;
  int stages = 1;
  // HC3 t statistics are referred to a t distribution with Satterthwaite
  // degrees of freedom. Plain T - k is far too liberal at Bonferroni levels.
  bool satterthwaite_df = true;

  void validate() const;
};

struct OcmtResult {
  std::vector<int> active;
  std::vector<double> t_stats;
  std::vector<double> p_values;
  std::vector<int> skipped;  // collinear with the factor block
};

// One-covariate-at-a-time screening: y on (1, F, x_j) for every j, robust t
// statistics, multiplicity-adjusted p-values.
OcmtResult ocmt_select(const VectorXd& y, const MatrixXd& X, const MatrixXd& F,
                       const OcmtConfig& cfg);

struct RowSelection {
  SeriesId target;
  std::vector<SeriesId> selected;
  std::vector<double> coefficients;
  double intercept = 0.0;
  double residual_sd = 0.0;
  bool degenerate = false;
  SelectMethod method = SelectMethod::LASSO;
  std::vector<double> factor_loadings;
  std::vector<std::string> warnings;
};

inline constexpr double kResidualSdFloor = 1e-12;

// OLS of y on intercept, factors and the selected regressors. residual_sd
// uses divisor T. Collinear selected columns are dropped (later index first).
RowSelection post_ols(const VectorXd& y, const MatrixXd& X_selected,
                      const std::vector<SeriesId>& selected_ids, const MatrixXd& F);

// Candidate pool shared by every row: T x p matrix with labels.
struct CandidatePool {
  std::vector<SeriesId> ids;
  MatrixXd X;
};

struct SelectionConfig {
  SelectMethod method = SelectMethod::LASSO;
  LassoConfig lasso;
  OcmtConfig ocmt;
};

// Select regressors for one target from the pool (the target itself is
// excluded), then refit by OLS.
RowSelection select_row(const SeriesId& target, const VectorXd& y, const CandidatePool& pool,
                        const MatrixXd& F, const SelectionConfig& cfg);

// Row-wise selection over all targets. The parallel and serial paths write
// into pre-sized slots and produce identical results.
std::vector<RowSelection> select_rows(const std::vector<SeriesId>& targets,
                                      const CandidatePool& pool, const MatrixXd& F,
                                      const SelectionConfig& cfg, Exec exec = Exec::Parallel);

inline std::vector<RowSelection> select_rows_serial(const std::vector<SeriesId>& targets,
                                                    const CandidatePool& pool, const MatrixXd& F,
                                                    const SelectionConfig& cfg) {
  return select_rows(targets, pool, F, cfg, Exec::Serial);
}

}  // namespace ddnet

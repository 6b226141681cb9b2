#pragma once

#include "ddnet/linalg.hpp"
#include "ddnet/panel.hpp"
#include "ddnet/select.hpp"
#include "ddnet/series_id.hpp"

#include <string>
#include <vector>

namespace ddnet {

enum class ModelKind { AR, ARX, LASSO_I, DD };
const char* to_string(ModelKind k);
ModelKind parse_model_kind(const std::string& s);

struct ModelSpec {
  ModelKind kind = ModelKind::AR;
  int horizon = 1;
  int max_lag = 2;
  std::vector<SeriesId> regressor_ids;
  bool include_factors = false;
  bool recursive = false;  // re-estimate at every origin instead of freezing
  std::string label;       // display name, e.g. "LASSO(DD)"

  std::string name() const { return label.empty() ? to_string(kind) : label; }
};

struct LabeledSeries {
  std::string label;
  VectorXd values;
};

// One regressor term: source -1 is the target's own series, k >= 0 the k-th
// regressor, observed at origin minus lag.
struct Term {
  int source = -1;
  int lag = 0;
};

// Direct projection of y(t+h) on an intercept, own values y(t) .. y(t-L+1)
// and each regressor at x(t) .. x(t-L), with L picked by BIC.
struct ModelFit {
  ModelSpec spec;
  SeriesId target;
  int chosen_lag = 0;
  std::vector<Term> terms;
  std::vector<std::string> labels;  // "const" then one per term
  VectorXd coef;                    // intercept first
  double bic = 0.0;
  std::vector<double> bic_by_lag;   // NaN where a lag was infeasible
  double train_residual_sd = 0.0;
  double r_squared = 0.0;
  std::vector<std::string> regressor_labels;
};

struct LagCandidate {
  int lag = 0;
  double ssr = 0.0;
  int n_params = 0;
  int n_obs = 0;
  double tss = 0.0;
};

double bic_value(const LagCandidate& c);
// Smallest BIC, ties to the smaller lag. Candidates must share one sample.
int select_lags_bic(const std::vector<LagCandidate>& candidates);

ModelFit fit_direct(const SeriesId& target, const VectorXd& y,
                    const std::vector<LabeledSeries>& regressors, const ModelSpec& spec,
                    const SplitSpec& split);

// Country-specific rigorous LASSO over the full candidate block; own lags are
// always included and unpenalized.
ModelFit fit_lasso_i(const SeriesId& target, const VectorXd& y,
                     const std::vector<LabeledSeries>& candidates, const ModelSpec& spec,
                     const SplitSpec& split, const LassoConfig& cfg);

struct ForecastSet {
  SeriesId target;
  std::string model;
  int horizon = 1;
  std::vector<int> dates;  // index of the forecast target period
  std::vector<double> predictions;
  std::vector<double> actuals;
  ModelSpec spec;
};

// Forecasts every test period whose origin (period - h) is at or after the
// last training period. Only data dated at or before the origin enters a
// prediction.
ForecastSet predict_holdout(const ModelFit& fit, const VectorXd& y,
                            const std::vector<LabeledSeries>& regressors, const SplitSpec& split);

}  // namespace ddnet

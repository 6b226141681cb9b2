#include "ddnet/forecast.hpp"

#include "ddnet/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ddnet {

const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::AR: return "AR";
    case ModelKind::ARX: return "ARX";
    case ModelKind::LASSO_I: return "LASSO_i";
    case ModelKind::DD: return "DD";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& s) {
  if (s == "AR") return ModelKind::AR;
  if (s == "ARX") return ModelKind::ARX;
  if (s == "LASSO_i" || s == "LASSO_I") return ModelKind::LASSO_I;
  if (s == "DD") return ModelKind::DD;
  throw ConfigError("unknown model kind '" + s + "'");
}

double bic_value(const LagCandidate& c) {
  const double floor = 1e-20 * std::max(c.tss, std::numeric_limits<double>::min());
  const double ssr = std::max(c.ssr, floor);
  const double n = c.n_obs;
  return n * std::log(ssr / n) + double(c.n_params) * std::log(n);
}

int select_lags_bic(const std::vector<LagCandidate>& candidates) {
  if (candidates.empty()) throw ArgumentError("no lag candidates");
  int best = candidates.front().lag;
  double best_bic = bic_value(candidates.front());
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double b = bic_value(candidates[i]);
    if (b < best_bic || (b == best_bic && candidates[i].lag < best)) {
      best_bic = b;
      best = candidates[i].lag;
    }
  }
  return best;
}

namespace {

std::vector<Term> lag_terms(int L, int n_regressors, bool own) {
  std::vector<Term> terms;
  if (own)
    for (int l = 0; l < L; ++l) terms.push_back({-1, l});
  for (int k = 0; k < n_regressors; ++k)
    for (int l = 0; l <= L; ++l) terms.push_back({k, l});
  return terms;
}

double term_value(const Term& term, const VectorXd& y, const std::vector<LabeledSeries>& regs,
                  Eigen::Index origin) {
  const Eigen::Index t = origin - term.lag;
  const VectorXd& src = term.source < 0 ? y : regs[term.source].values;
  if (t < 0 || t >= src.size()) throw AlignmentError("lagged value outside the sample");
  const double v = src(t);
  if (!std::isfinite(v)) throw AlignmentError("missing regressor value at origin");
  return v;
}

MatrixXd design(const std::vector<Term>& terms, const VectorXd& y,
                const std::vector<LabeledSeries>& regs, const std::vector<Eigen::Index>& origins) {
  MatrixXd X(origins.size(), 1 + terms.size());
  for (std::size_t r = 0; r < origins.size(); ++r) {
    X(r, 0) = 1.0;
    for (std::size_t c = 0; c < terms.size(); ++c)
      X(r, 1 + c) = term_value(terms[c], y, regs, origins[r]);
  }
  return X;
}

std::string term_label(const Term& t, const std::vector<LabeledSeries>& regs) {
  const std::string base = t.source < 0 ? std::string("own") : regs[t.source].label;
  return base + "_L" + std::to_string(t.lag);
}

// Training origins t with t >= max_lag and t + h inside the training sample.
std::vector<Eigen::Index> training_origins(const ModelSpec& spec, std::size_t last_target) {
  std::vector<Eigen::Index> o;
  for (Eigen::Index t = spec.max_lag; t + spec.horizon <= static_cast<Eigen::Index>(last_target); ++t)
    o.push_back(t);
  return o;
}

VectorXd targets_at(const VectorXd& y, const std::vector<Eigen::Index>& origins, int h) {
  VectorXd v(origins.size());
  for (std::size_t r = 0; r < origins.size(); ++r) v(r) = y(origins[r] + h);
  return v;
}

void check_inputs(const VectorXd& y, const std::vector<LabeledSeries>& regs, const ModelSpec& spec,
                  const SplitSpec& split) {
  if (spec.horizon < 1) throw ArgumentError("horizon must be at least 1");
  if (spec.max_lag < 0) throw ArgumentError("max_lag must be non-negative");
  if (split.boundary_index > static_cast<std::size_t>(y.size()))
    throw ArgumentError("split boundary beyond the series");
  for (const auto& r : regs)
    if (r.values.size() != y.size())
      throw AlignmentError("regressor " + r.label + " is not aligned with the target");
}

struct LagFit {
  std::vector<Term> terms;
  OlsFit ols;
  LagCandidate cand;
};

void finish_fit(ModelFit& fit, const LagFit& lf, const std::vector<LabeledSeries>& regs,
                const VectorXd& ytrain) {
  fit.terms = lf.terms;
  fit.coef = lf.ols.coef;
  fit.labels = {"const"};
  for (const auto& t : fit.terms) fit.labels.push_back(term_label(t, regs));
  fit.train_residual_sd = std::sqrt(lf.ols.ssr / double(ytrain.size()));
  const double tss = (ytrain.array() - ytrain.mean()).square().sum();
  fit.r_squared = tss > 0.0 ? 1.0 - lf.ols.ssr / tss : 1.0;
  for (const auto& r : regs) fit.regressor_labels.push_back(r.label);
}

}  // namespace

ModelFit fit_direct(const SeriesId& target, const VectorXd& y,
                    const std::vector<LabeledSeries>& regressors, const ModelSpec& spec,
                    const SplitSpec& split) {
  check_inputs(y, regressors, spec, split);
  const auto origins = training_origins(spec, split.boundary_index - 1);
  const VectorXd yt = targets_at(y, origins, spec.horizon);
  const double tss = (yt.array() - (yt.size() ? yt.mean() : 0.0)).square().sum();
  const int n_regs = static_cast<int>(regressors.size());

  ModelFit fit;
  fit.spec = spec;
  fit.target = target;
  std::vector<LagFit> fits;
  std::vector<LagCandidate> cands;
  int required = 0;
  for (int L = 0; L <= spec.max_lag; ++L) {
    auto terms = lag_terms(L, n_regs, true);
    const int k = 1 + static_cast<int>(terms.size());
    if (L == 0) required = k + 5;
    if (static_cast<int>(origins.size()) < k + 5) {
      fit.bic_by_lag.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    LagFit lf{terms, ols(design(terms, y, regressors, origins), yt), {}};
    lf.cand = {L, lf.ols.ssr, static_cast<int>(lf.ols.kept.size()), static_cast<int>(origins.size()),
               tss};
    fit.bic_by_lag.push_back(bic_value(lf.cand));
    cands.push_back(lf.cand);
    fits.push_back(std::move(lf));
  }
  if (fits.empty())
    throw SampleSizeError("direct forecast for " + target.str() + " needs at least " +
                          std::to_string(required) + " training observations, have " +
                          std::to_string(origins.size()));
  fit.chosen_lag = select_lags_bic(cands);
  const auto& chosen = *std::find_if(fits.begin(), fits.end(),
                                     [&](const LagFit& f) { return f.cand.lag == fit.chosen_lag; });
  fit.bic = bic_value(chosen.cand);
  finish_fit(fit, chosen, regressors, yt);
  return fit;
}

ModelFit fit_lasso_i(const SeriesId& target, const VectorXd& y,
                     const std::vector<LabeledSeries>& candidates, const ModelSpec& spec,
                     const SplitSpec& split, const LassoConfig& cfg) {
  check_inputs(y, candidates, spec, split);
  const auto origins = training_origins(spec, split.boundary_index - 1);
  const VectorXd yt = targets_at(y, origins, spec.horizon);
  const auto T = static_cast<Eigen::Index>(origins.size());
  const double tss = (yt.array() - (T ? yt.mean() : 0.0)).square().sum();
  const int n_cand = static_cast<int>(candidates.size());

  ModelFit fit;
  fit.spec = spec;
  fit.target = target;
  std::vector<LagFit> fits;
  std::vector<LagCandidate> cands;
  for (int L = 0; L <= spec.max_lag; ++L) {
    if (T < L + 1 + 5 || T < 10) {
      fit.bic_by_lag.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const auto own = lag_terms(L, 0, true);
    const auto pool = lag_terms(L, n_cand, false);
    const MatrixXd Zown = design(own, y, candidates, origins);  // includes intercept
    const MatrixXd Xpool = design(pool, y, candidates, origins).rightCols(pool.size());
    auto sel = rigorous_lasso(residualize(Zown, yt), residualize(Zown, Xpool), cfg);
    std::vector<int> active = sel.active;
    const auto limit = static_cast<std::size_t>(std::max<Eigen::Index>(T - Zown.cols() - 5, 0));
    if (active.size() > limit) {
      std::stable_sort(active.begin(), active.end(), [&](int a, int b) {
        return std::abs(sel.coef(a)) > std::abs(sel.coef(b));
      });
      active.resize(limit);
      std::sort(active.begin(), active.end());
    }
    std::vector<Term> terms = own;
    for (int j : active) terms.push_back(pool[j]);
    LagFit lf{terms, ols(design(terms, y, candidates, origins), yt), {}};
    lf.cand = {L, lf.ols.ssr, static_cast<int>(lf.ols.kept.size()), static_cast<int>(T), tss};
    fit.bic_by_lag.push_back(bic_value(lf.cand));
    cands.push_back(lf.cand);
    fits.push_back(std::move(lf));
  }
  if (fits.empty())
    throw SampleSizeError("LASSO_i forecast for " + target.str() +
                          " needs at least 10 training observations, have " + std::to_string(T));
  fit.chosen_lag = select_lags_bic(cands);
  const auto& chosen = *std::find_if(fits.begin(), fits.end(),
                                     [&](const LagFit& f) { return f.cand.lag == fit.chosen_lag; });
  fit.bic = bic_value(chosen.cand);
  finish_fit(fit, chosen, candidates, yt);
  return fit;
}

ForecastSet predict_holdout(const ModelFit& fit, const VectorXd& y,
                            const std::vector<LabeledSeries>& regressors, const SplitSpec& split) {
  check_inputs(y, regressors, fit.spec, split);
  if (regressors.size() != fit.regressor_labels.size())
    throw AlignmentError("regressor list does not match the fitted model");
  ForecastSet fs;
  fs.target = fit.target;
  fs.model = fit.spec.name();
  fs.horizon = fit.spec.horizon;
  fs.spec = fit.spec;
  const int h = fit.spec.horizon;
  const auto n = static_cast<Eigen::Index>(y.size());
  for (Eigen::Index t = static_cast<Eigen::Index>(split.boundary_index) - 1; t + h < n; ++t) {
    VectorXd coef = fit.coef;
    if (fit.spec.recursive) {
      std::vector<Eigen::Index> origins;
      for (Eigen::Index s = fit.spec.max_lag; s + h <= t; ++s) origins.push_back(s);
      coef = ols(design(fit.terms, y, regressors, origins), targets_at(y, origins, h)).coef;
    }
    const MatrixXd x = design(fit.terms, y, regressors, {t});
    const double pred = x.row(0).dot(coef);
    if (!std::isfinite(pred)) throw AlignmentError("non-finite prediction");
    fs.dates.push_back(static_cast<int>(t + h));
    fs.predictions.push_back(pred);
    fs.actuals.push_back(y(t + h));
  }
  return fs;
}

}  // namespace ddnet

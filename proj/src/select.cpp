#include "ddnet/select.hpp"

#include "ddnet/error.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

namespace ddnet {

const char* to_string(SelectMethod m) { return m == SelectMethod::LASSO ? "LASSO" : "OCMT"; }

SelectMethod parse_select_method(const std::string& s) {
  if (s == "LASSO" || s == "lasso") return SelectMethod::LASSO;
  if (s == "OCMT" || s == "ocmt") return SelectMethod::OCMT;
  throw ConfigError("unknown selection method '" + s + "' (expected LASSO or OCMT)");
}

void LassoConfig::validate() const {
  if (!(c > 1.0)) throw ConfigError("lasso.c must exceed 1");
  if (gamma && !(*gamma > 0.0 && *gamma < 1.0)) throw ConfigError("lasso.gamma must lie in (0, 1)");
  if (!(tol > 0.0)) throw ConfigError("lasso.tol must be positive");
  if (max_iter < 1) throw ConfigError("lasso.max_iter must be at least 1");
  if (loading_iterations < 1) throw ConfigError("lasso.loading_iterations must be at least 1");
  if (initial_regressors < 0) throw ConfigError("lasso.initial_regressors must be non-negative");
}

void OcmtConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("ocmt.alpha must lie in (0, 1)");
  if (!(delta >= 1.0)) throw ConfigError("ocmt.delta must be at least 1");
  if (hac_lags < 0) throw ConfigError("ocmt.hac_lags must be non-negative");
  if (stages != 1) throw ConfigError("ocmt.stages: only single-stage OCMT is available");
}

namespace {

double soft_threshold(double z, double thr) {
  if (z > thr) return z - thr;
  if (z < -thr) return z + thr;
  return 0.0;
}

double lasso_objective(const VectorXd& r, const VectorXd& b, double lambda, const VectorXd& psi) {
  return r.squaredNorm() / double(r.size()) + lambda * (psi.array() * b.array().abs()).sum();
}

}  // namespace

LassoSolution solve_weighted_lasso(const MatrixXd& X, const VectorXd& y, double lambda,
                                   const VectorXd& loadings, int max_iter, double tol,
                                   const VectorXd* warm_start) {
  const Eigen::Index T = X.rows(), p = X.cols();
  if (y.size() != T || loadings.size() != p) throw ArgumentError("lasso: dimension mismatch");
  LassoSolution sol;
  sol.coef = warm_start ? *warm_start : VectorXd::Zero(p);
  VectorXd r = y - X * sol.coef;
  const VectorXd col_sq = X.colwise().squaredNorm().transpose() / double(T);
  sol.objective.push_back(lasso_objective(r, sol.coef, lambda, loadings));

  double max_change = 0.0;
  bool converged = p == 0;
  while (!converged && sol.sweeps < max_iter) {
    max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (col_sq(j) <= 0.0) {
        sol.coef(j) = 0.0;
        continue;
      }
      const double old = sol.coef(j);
      const double z = X.col(j).dot(r) / double(T) + col_sq(j) * old;
      const double updated = soft_threshold(z, 0.5 * lambda * loadings(j)) / col_sq(j);
      const double delta = updated - old;
      if (delta != 0.0) {
        r.noalias() -= delta * X.col(j);
        sol.coef(j) = updated;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    ++sol.sweeps;
    sol.objective.push_back(lasso_objective(r, sol.coef, lambda, loadings));
    converged = max_change < tol;
  }
  if (!converged)
    throw ConvergenceError("coordinate descent did not converge in " + std::to_string(max_iter) +
                               " sweeps",
                           max_change);
  for (Eigen::Index j = 0; j < p; ++j)
    if (sol.coef(j) != 0.0) sol.active.push_back(static_cast<int>(j));
  return sol;
}

double plugin_lambda(std::size_t T, std::size_t p, double c, double gamma) {
  if (p == 0 || T == 0) return 0.0;
  return 2.0 * c * normal_quantile(1.0 - gamma / (2.0 * double(p))) / std::sqrt(double(T));
}

RigorousLassoResult rigorous_lasso(const VectorXd& y, const MatrixXd& X, const LassoConfig& cfg) {
  cfg.validate();
  const Eigen::Index T = y.size(), p = X.cols();
  if (X.rows() != T) throw ArgumentError("rigorous_lasso: X and y have different lengths");
  RigorousLassoResult res;
  res.coef = VectorXd::Zero(p);
  res.loadings = VectorXd::Zero(p);
  if (p == 0) return res;
  if (T < 10) throw SampleSizeError("rigorous LASSO needs T >= 10, have " + std::to_string(T));

  const VectorXd yc = y.array() - y.mean();
  const MatrixXd Xc = X.rowwise() - X.colwise().mean();
  const double gamma = cfg.gamma.value_or(0.1 / std::log(double(T)));
  res.lambda = plugin_lambda(T, p, cfg.c, gamma);

  VectorXd e = yc;
  const double y_norm = yc.norm();
  if (cfg.initial_regressors > 0) {
    std::vector<std::pair<double, int>> corr;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double den = Xc.col(j).norm() * y_norm;
      corr.push_back({den > 0.0 ? -std::abs(Xc.col(j).dot(yc)) / den : 0.0, static_cast<int>(j)});
    }
    std::sort(corr.begin(), corr.end());
    const auto k = std::min<Eigen::Index>({cfg.initial_regressors, p, T - 2});
    MatrixXd Xk(T, k);
    for (Eigen::Index i = 0; i < k; ++i) Xk.col(i) = Xc.col(corr[static_cast<std::size_t>(i)].second);
    if (k > 0) e = ols(Xk, yc).resid;
  }
  for (int it = 0; it < cfg.loading_iterations; ++it) {
    res.loadings =
        (Xc.array().square().colwise() * e.array().square()).colwise().mean().sqrt().transpose();
    auto sol = solve_weighted_lasso(Xc, yc, res.lambda, res.loadings, cfg.max_iter,
                                    cfg.tol, it > 0 ? &res.coef : nullptr);
    res.coef = sol.coef;
    res.active = sol.active;
    if (res.active.empty()) {
      e = yc;
    } else {
      MatrixXd Xa(T, res.active.size());
      for (std::size_t k = 0; k < res.active.size(); ++k) Xa.col(k) = Xc.col(res.active[k]);
      e = ols(Xa, yc).resid;
    }
    // A perfect post-selection fit leaves nothing to build loadings from.
    if (e.norm() <= 1e-12 * std::max(y_norm, 1e-300)) break;
  }
  return res;
}

const char* to_string(Adjustment a) {
  switch (a) {
    case Adjustment::BONFERRONI: return "BONFERRONI";
    case Adjustment::HOLM: return "HOLM";
    case Adjustment::BH: return "BH";
    case Adjustment::BY: return "BY";
  }
  return "?";
}

Adjustment parse_adjustment(const std::string& s) {
  if (s == "BONFERRONI" || s == "bonferroni") return Adjustment::BONFERRONI;
  if (s == "HOLM" || s == "holm") return Adjustment::HOLM;
  if (s == "BH" || s == "bh") return Adjustment::BH;
  if (s == "BY" || s == "by") return Adjustment::BY;
  throw ConfigError("unknown p-value adjustment '" + s + "'");
}

std::vector<bool> adjust_pvalues(const std::vector<double>& p, Adjustment method, double alpha,
                                 std::optional<double> family_size) {
  const std::size_t m = p.size();
  std::vector<bool> keep(m, false);
  if (m == 0) return keep;
  for (double v : p)
    if (!(v >= 0.0 && v <= 1.0)) throw ArgumentError("p-values must lie in [0, 1]");
  const double M = family_size.value_or(double(m));
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return p[a] < p[b]; });

  switch (method) {
    case Adjustment::BONFERRONI:
      for (std::size_t j = 0; j < m; ++j) keep[j] = p[j] <= alpha / M;
      break;
    case Adjustment::HOLM:
      for (std::size_t k = 0; k < m; ++k) {
        if (p[order[k]] > alpha / std::max(M - double(k), 1.0)) break;
        keep[order[k]] = true;
      }
      break;
    case Adjustment::BH:
    case Adjustment::BY: {
      double level = alpha;
      if (method == Adjustment::BY) {
        double harmonic = 0.0;
        for (std::size_t i = 1; i <= m; ++i) harmonic += 1.0 / double(i);
        level /= harmonic;
      }
      std::size_t last = 0;  // number of rejections
      for (std::size_t k = 0; k < m; ++k)
        if (p[order[k]] <= double(k + 1) * level / M) last = k + 1;
      for (std::size_t k = 0; k < last; ++k) keep[order[k]] = true;
      break;
    }
  }
  return keep;
}

OcmtResult ocmt_select(const VectorXd& y, const MatrixXd& X, const MatrixXd& F,
                       const OcmtConfig& cfg) {
  cfg.validate();
  const Eigen::Index T = y.size(), p = X.cols();
  OcmtResult res;
  res.t_stats.assign(p, 0.0);
  res.p_values.assign(p, 1.0);
  if (p == 0) return res;
  MatrixXd Z(T, 2 + F.cols());
  Z.col(0).setOnes();
  if (F.cols() > 0) Z.middleCols(1, F.cols()) = F;
  const Eigen::Index k = Z.cols();
  const double df = double(T - k);
  if (df < 1) throw SampleSizeError("OCMT: too few observations for the auxiliary regressions");

  for (Eigen::Index j = 0; j < p; ++j) {
    Z.col(k - 1) = X.col(j);
    if (independent_columns(Z).size() != static_cast<std::size_t>(k)) {
      res.skipped.push_back(static_cast<int>(j));
      continue;
    }
    Eigen::HouseholderQR<MatrixXd> qr(Z);
    VectorXd b = qr.solve(y);
    VectorXd resid = y - Z * b;
    MatrixXd cov = robust_covariance(Z, resid, cfg.hac_lags);
    const double var = cov(k - 1, k - 1);
    const double coef = b(k - 1);
    double t;
    if (var > 0.0 && std::isfinite(var))
      t = coef / std::sqrt(var);
    else
      t = coef == 0.0 ? 0.0 : std::copysign(INFINITY, coef);
    res.t_stats[j] = t;
    const double dof =
        cfg.satterthwaite_df && cfg.hac_lags == 0 ? hc3_satterthwaite_df(Z, k - 1) : df;
    res.p_values[j] = two_sided_p(t, dof);
  }
  const double family = std::pow(double(p), cfg.delta);
  auto keep = adjust_pvalues(res.p_values, cfg.adjustment, cfg.alpha, family);
  for (Eigen::Index j = 0; j < p; ++j)
    if (keep[j]) res.active.push_back(static_cast<int>(j));
  return res;
}

RowSelection post_ols(const VectorXd& y, const MatrixXd& X_selected,
                      const std::vector<SeriesId>& selected_ids, const MatrixXd& F) {
  const Eigen::Index T = y.size();
  const Eigen::Index nf = F.cols(), ns = X_selected.cols();
  if (static_cast<std::size_t>(ns) != selected_ids.size())
    throw ArgumentError("post_ols: selected ids do not match columns");
  if (ns + nf + 1 >= T)
    throw SampleSizeError("post-selection OLS needs |selected| + |factors| + 1 < T (have " +
                          std::to_string(ns) + " + " + std::to_string(nf) + " + 1 vs T = " +
                          std::to_string(T) + ")");
  MatrixXd Z(T, 1 + nf + ns);
  Z.col(0).setOnes();
  if (nf > 0) Z.middleCols(1, nf) = F;
  if (ns > 0) Z.rightCols(ns) = X_selected;
  OlsFit fit = ols(Z, y);

  RowSelection row;
  row.intercept = fit.coef(0);
  for (Eigen::Index f = 0; f < nf; ++f) row.factor_loadings.push_back(fit.coef(1 + f));
  for (Eigen::Index j = 0; j < ns; ++j) {
    const int col = static_cast<int>(1 + nf + j);
    if (std::find(fit.dropped.begin(), fit.dropped.end(), col) != fit.dropped.end()) {
      row.warnings.push_back("dropped collinear regressor " + selected_ids[j].str());
      continue;
    }
    row.selected.push_back(selected_ids[j]);
    row.coefficients.push_back(fit.coef(col));
  }
  for (int d : fit.dropped)
    if (d <= nf) row.warnings.push_back("dropped collinear intercept/factor column " + std::to_string(d));
  row.residual_sd = std::sqrt(fit.ssr / double(T));
  if (!(row.residual_sd > kResidualSdFloor)) {
    row.degenerate = true;
    row.residual_sd = kResidualSdFloor;
  }
  return row;
}

RowSelection select_row(const SeriesId& target, const VectorXd& y, const CandidatePool& pool,
                        const MatrixXd& F, const SelectionConfig& cfg) {
  const Eigen::Index T = y.size();
  if (pool.X.rows() != T) throw ArgumentError("candidate pool length differs from target");
  std::vector<int> cols;
  for (std::size_t j = 0; j < pool.ids.size(); ++j)
    if (pool.ids[j] != target) cols.push_back(static_cast<int>(j));
  MatrixXd X(T, cols.size());
  for (std::size_t k = 0; k < cols.size(); ++k) X.col(k) = pool.X.col(cols[k]);

  std::vector<int> active;
  std::vector<double> strength;
  if (cfg.method == SelectMethod::LASSO) {
    RigorousLassoResult r;
    if (F.cols() > 0) {
      const MatrixXd Z = with_intercept(F, T);
      r = rigorous_lasso(residualize(Z, y), residualize(Z, X), cfg.lasso);
    } else {
      r = rigorous_lasso(y, X, cfg.lasso);
    }
    active = r.active;
    for (int j : active) strength.push_back(std::abs(r.coef(j)) * sample_sd(X.col(j)));
  } else {
    auto r = ocmt_select(y, X, F, cfg.ocmt);
    active = r.active;
    for (int j : active) strength.push_back(std::abs(r.t_stats[j]));
  }

  std::vector<std::string> warnings;
  const auto limit = static_cast<std::size_t>(std::max<Eigen::Index>(T - F.cols() - 2, 0));
  if (active.size() > limit) {
    std::vector<std::size_t> order(active.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return strength[a] > strength[b]; });
    std::vector<int> kept;
    for (std::size_t k = 0; k < limit; ++k) kept.push_back(active[order[k]]);
    std::sort(kept.begin(), kept.end());
    warnings.push_back("selection truncated from " + std::to_string(active.size()) + " to " +
                       std::to_string(limit) + " regressors");
    active = std::move(kept);
  }

  MatrixXd Xs(T, active.size());
  std::vector<SeriesId> ids;
  for (std::size_t k = 0; k < active.size(); ++k) {
    Xs.col(k) = X.col(active[k]);
    ids.push_back(pool.ids[cols[active[k]]]);
  }
  RowSelection row = post_ols(y, Xs, ids, F);
  row.target = target;
  row.method = cfg.method;
  row.warnings.insert(row.warnings.begin(), warnings.begin(), warnings.end());
  return row;
}

std::vector<RowSelection> select_rows(const std::vector<SeriesId>& targets,
                                      const CandidatePool& pool, const MatrixXd& F,
                                      const SelectionConfig& cfg, Exec exec) {
  std::vector<RowSelection> out(targets.size());
  std::vector<std::exception_ptr> errors(targets.size());
  run_for(exec, static_cast<std::ptrdiff_t>(targets.size()), [&](std::ptrdiff_t i) {
    try {
      auto it = std::find(pool.ids.begin(), pool.ids.end(), targets[i]);
      if (it == pool.ids.end()) throw ArgumentError("target " + targets[i].str() + " not in pool");
      const VectorXd y = pool.X.col(it - pool.ids.begin());
      out[i] = select_row(targets[i], y, pool, F, cfg);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace ddnet

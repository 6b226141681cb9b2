#include "ddnet/pipeline.hpp"

#include "ddnet/detect.hpp"
#include "ddnet/error.hpp"
#include "ddnet/rng.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace ddnet {

namespace {

std::string at(const std::string& out, const std::string& name) { return (fs::path(out) / name).string(); }

void require(const std::string& out, const std::string& name, const std::string& stage) {
  if (!fs::exists(at(out, name)))
    throw ArgumentError("missing " + at(out, name) + "; run the '" + stage + "' stage first");
}

Json vec_json(const VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(std::isfinite(v(i)) ? Json(v(i)) : Json(nullptr));
  return a;
}

VectorXd vec_from(const Json& a) {
  VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].is_null() ? NAN : a[i].get<double>();
  return v;
}

Json factors_json(const FactorSet& f) {
  std::vector<std::string> kinds;
  for (auto k : f.kinds) kinds.push_back(to_string(k));
  return {{"labels", f.labels}, {"kinds", kinds}, {"values", matrix_to_json(f.values)}};
}

FactorSet factors_from(const Json& j) {
  FactorSet f;
  f.labels = j.at("labels").get<std::vector<std::string>>();
  for (const auto& k : j.at("kinds")) {
    const auto s = k.get<std::string>();
    f.kinds.push_back(s == "PCA" ? FactorKind::PCA : s == "OBSERVED" ? FactorKind::OBSERVED : FactorKind::CCE_AVERAGES);
  }
  f.values = matrix_from_json(j.at("values"));
  if (f.labels.empty()) f.values.resize(0, 0);
  return f;
}

// Panel with only the given variables.
Panel subset_variables(const Panel& p, const std::vector<VariableId>& keep) {
  Panel out(p.units(), keep, p.years());
  out.meta = p.meta;
  for (std::size_t v = 0; v < keep.size(); ++v) {
    const auto src = p.variable_index(keep[v]);
    for (std::size_t u = 0; u < p.n_units(); ++u) out.set_series(u, v, p.series(u, static_cast<std::size_t>(src)));
  }
  return out;
}

// Common series live under the empty unit, taken from the first unit that
// reports them.
Panel extract_common(const Panel& raw, const std::vector<VariableId>& common) {
  Panel out({""}, common, raw.years());
  for (std::size_t v = 0; v < common.size(); ++v) {
    const auto src = static_cast<std::size_t>(raw.variable_index(common[v]));
    for (std::size_t u = 0; u < raw.n_units(); ++u) {
      const VectorXd s = raw.series(u, src);
      if (s.array().isFinite().any()) {
        out.set_series(0, v, s);
        out.meta["source:" + common[v]] = raw.units()[u];
        break;
      }
    }
  }
  return out;
}

// Growth and standardized views of everything the later stages need.
struct TransformedData {
  StoredPanel growth;        // delta-log panel, group units, non-common variables
  StoredPanel standardized;  // same, divided by training SD
  StoredPanel common_growth;
  StoredPanel common_std;
  SplitSpec split;
  FactorSet factors_std;
  FactorSet factors_growth;
  std::vector<int> years;
};

TransformedData load_transformed(const std::string& out) {
  require(out, "transformed/panel.json", "transform");
  TransformedData d;
  d.growth = read_panel_wide(at(out, "transformed"));
  d.standardized = read_panel_wide(at(out, "standardized"));
  d.common_growth = read_panel_wide(at(out, "common"));
  d.common_std = read_panel_wide(at(out, "common_standardized"));
  if (!d.growth.split) throw ParseError("transformed/panel.json lacks a split", 0);
  d.split = *d.growth.split;
  const Json fj = read_json(at(out, "factors.json"));
  d.factors_std = factors_from(fj.at("standardized"));
  d.factors_growth = factors_from(fj.at("growth"));
  d.years = d.growth.panel.years();
  return d;
}

std::vector<SeriesId> targets_of(const RunConfig& cfg, const Panel& p) {
  std::vector<SeriesId> t;
  for (const auto& u : p.units()) t.push_back({u, cfg.target_variable});
  return t;
}

std::string variant_file(const std::string& prefix, const DetectVariant& v, const std::string& ext) {
  return prefix + "_" + slug(v.label) + ext;
}

std::string method_file(const std::string& prefix, SelectMethod m, const std::string& ext) {
  return prefix + "_" + slug(to_string(m)) + ext;
}

struct SelectionArtifact {
  std::vector<RowSelection> rows;
  std::vector<SeriesId> columns;
  std::map<SeriesId, double> column_sigma;
};

SelectionArtifact load_selection(const std::string& out, SelectMethod m) {
  const std::string name = method_file("selection", m, ".json");
  require(out, name, "select");
  const Json j = read_json(at(out, name));
  SelectionArtifact a;
  for (const auto& r : j.at("rows")) a.rows.push_back(row_selection_from_json(r));
  for (const auto& c : j.at("columns")) a.columns.push_back(SeriesId::parse(c.get<std::string>()));
  for (const auto& [k, v] : j.at("column_sigma").items()) a.column_sigma[SeriesId::parse(k)] = v.get<double>();
  return a;
}

NetworkMatrix network_of(const SelectionArtifact& a) {
  return build_network_matrix(assemble_coefficients(a.rows, a.columns), a.column_sigma);
}

// Looks a series up in the growth panel or among the common series.
std::optional<VectorXd> lookup(const TransformedData& d, const SeriesId& id) {
  if (d.growth.panel.contains(id)) return d.growth.panel.series(id);
  const SeriesId common{"", id.variable};
  if (id.unit.empty() && d.common_growth.panel.contains(common)) return d.common_growth.panel.series(common);
  return std::nullopt;
}

template <class F>
void run_tasks(Exec exec, std::size_t n, F&& f) {
  std::vector<std::exception_ptr> errors(n);
  run_for(exec, static_cast<std::ptrdiff_t>(n), [&](std::ptrdiff_t i) {
    try {
      f(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  });
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

std::string ddnet_version() { return "0.1.0"; }

const std::vector<std::string>& pipeline_stages() {
  static const std::vector<std::string> s{"ingest",   "transform", "select", "network",
                                          "detect",   "forecast",  "evaluate", "svar"};
  return s;
}

// ingest ------------------------------------------------------------------------

void stage_ingest(const RunConfig& cfg, const std::string& out) {
  cfg.validate();
  Panel raw;
  if (cfg.synthetic) {
    SynthSpec spec = *cfg.synthetic;
    spec.seed = cfg.seed;
    auto sp = generate_panel(spec);
    raw = sp.panel;
    Json truth = Json::array();
    for (const auto& id : sp.truth) truth.push_back(id.str());
    write_json(at(out, "truth.json"), {{"truth", truth}, {"seed", cfg.seed}, {"loadings", matrix_to_json(sp.loadings)}});
  } else {
    raw = load_panel(cfg.data_path, cfg.schema);
    raw.meta["source"] = fs::path(cfg.data_path).filename().string();
  }
  cfg.validate_against(raw);
  raw.validate();
  write_panel_wide(at(out, "raw"), raw);
}

// transform ---------------------------------------------------------------------

void stage_transform(const RunConfig& cfg, const std::string& out) {
  require(out, "raw/panel.json", "ingest");
  const Panel raw = read_panel_wide(at(out, "raw")).panel;
  cfg.validate_against(raw);

  std::vector<VariableId> own_vars;
  for (const auto& v : raw.variables())
    if (std::find(cfg.common_variables.begin(), cfg.common_variables.end(), v) == cfg.common_variables.end())
      own_vars.push_back(v);
  const auto units = cfg.active_units(raw);
  const Panel group = subset_variables(raw.subset_units(units), own_vars);
  const Panel common = extract_common(raw, cfg.common_variables);

  Panel agg({""}, {cfg.aggregate_label}, raw.years());
  const VectorXd level = aggregate_series(raw, units, cfg.target_variable);
  agg.set_series(0, 0, level);

  Panel growth = cfg.delta_log ? delta_log_transform(group, cfg.epsilon) : group;
  Panel common_growth = cfg.delta_log ? delta_log_transform(common, cfg.epsilon) : common;
  Panel agg_growth = cfg.delta_log ? delta_log_transform(agg, cfg.epsilon) : agg;
  growth.validate(true);

  const SplitSpec split = make_split(growth.n_periods(), cfg.train_fraction);
  Standardized std_panel{growth, {}};
  Standardized std_common{common_growth, {}};
  if (cfg.standardize) {
    std_panel = standardize(growth, split);
    std_common = standardize(common_growth, split);
  }

  write_panel_wide(at(out, "transformed"), growth, split);
  write_panel_wide(at(out, "standardized"), std_panel.panel, split, &std_panel.scale);
  write_panel_wide(at(out, "common"), common_growth, split);
  write_panel_wide(at(out, "common_standardized"), std_common.panel, split, &std_common.scale);

  // Factors: observed common series plus CCE averages or principal components.
  auto build = [&](const Panel& p, const Panel& c) {
    FactorSet f;
    if (cfg.factor_mode == "cce") f = cross_section_averages(p);
    if (cfg.factor_mode == "pca") f = pca_factors(p, cfg.pca_r, split);
    if (!cfg.common_as_candidates)
      for (std::size_t v = 0; v < c.n_variables(); ++v)
        f.append(c.series(0, v), FactorKind::OBSERVED, "obs_" + c.variables()[v]);
    if (f.empty()) f.values.resize(static_cast<Eigen::Index>(p.n_periods()), 0);
    return f;
  };
  write_json(at(out, "factors.json"), {{"standardized", factors_json(build(std_panel.panel, std_common.panel))},
                                       {"growth", factors_json(build(growth, common_growth))}});

  const VectorXd ag = agg_growth.series(0, 0);
  write_json(at(out, "aggregate.json"), {{"label", cfg.aggregate_label},
                                         {"units", units},
                                         {"years", agg_growth.years()},
                                         {"growth", vec_json(ag)},
                                         {"level_years", raw.years()},
                                         {"level", vec_json(level)}});
  CsvTable tab({"year", "level", "growth"});
  for (std::size_t t = 0; t < raw.n_periods(); ++t) {
    const int year = raw.years()[t];
    const auto& gy = agg_growth.years();
    auto it = std::find(gy.begin(), gy.end(), year);
    tab.row({std::to_string(year), fmt_double(level(static_cast<Eigen::Index>(t))),
             it == gy.end() ? "" : fmt_double(ag(it - gy.begin()))});
  }
  tab.write(at(out, "aggregate.csv"));
}

// select ------------------------------------------------------------------------

void stage_select(const RunConfig& cfg, const std::string& out, Exec exec) {
  const TransformedData d = load_transformed(out);
  const Panel& sp = d.standardized.panel;
  const auto n_train = static_cast<Eigen::Index>(d.split.boundary_index);

  CandidatePool pool;
  for (const auto& id : sp.series_ids()) {
    if (d.standardized.scale.is_degenerate(id) && id.variable != cfg.target_variable) continue;
    pool.ids.push_back(id);
  }
  if (cfg.common_as_candidates)
    for (const auto& id : d.common_std.panel.series_ids())
      if (!d.common_std.scale.is_degenerate(id)) pool.ids.push_back(id);
  pool.X.resize(n_train, static_cast<Eigen::Index>(pool.ids.size()));
  for (std::size_t j = 0; j < pool.ids.size(); ++j) {
    const auto& id = pool.ids[j];
    const VectorXd s = sp.contains(id) ? sp.series(id) : d.common_std.panel.series(id);
    pool.X.col(static_cast<Eigen::Index>(j)) = s.head(n_train);
  }
  const MatrixXd F = d.factors_std.values.topRows(n_train);

  const auto targets = targets_of(cfg, sp);
  std::vector<SeriesId> extra;
  for (const auto& id : pool.ids)
    if (std::find(targets.begin(), targets.end(), id) == targets.end()) extra.push_back(id);

  for (SelectMethod m : cfg.methods()) {
    SelectionConfig sc{m, cfg.lasso, cfg.ocmt};
    const auto rows = select_rows(targets, pool, F, sc, exec);
    Json sigma = Json::object();
    if (cfg.column_scale == "regression" && !extra.empty()) {
      const auto aux = select_rows(extra, pool, F, sc, exec);
      for (const auto& r : aux) sigma[r.target.str()] = r.residual_sd;
    } else {
      for (const auto& id : extra) sigma[id.str()] = 1.0;
    }
    Json jrows = Json::array();
    for (const auto& r : rows) jrows.push_back(to_json(r));
    Json cols = Json::array();
    for (const auto& id : pool.ids) cols.push_back(id.str());
    write_json(at(out, method_file("selection", m, ".json")),
               {{"method", to_string(m)},
                {"config_hash", config_hash(cfg)},
                {"train_periods", n_train},
                {"factors", d.factors_std.labels},
                {"columns", cols},
                {"column_scale", cfg.column_scale},
                {"column_sigma", sigma},
                {"rows", jrows}});
  }
}

// network -----------------------------------------------------------------------

void stage_network(const RunConfig& cfg, const std::string& out) {
  for (SelectMethod m : cfg.methods()) {
    const auto nm = network_of(load_selection(out, m));
    write_text(at(out, method_file("network", m, ".csv")), network_csv(nm));
    CsvTable tab({"series", "is_target", "norm", "norm_share", "diag_ratio", "degree"});
    for (const auto& c : column_diagnostics(nm, cfg.filter.link_eps, cfg.filter.norm))
      tab.row({c.series.str(), c.is_target ? "1" : "0", fmt_double(c.norm), fmt_double(c.norm_share),
               fmt_double(c.diag_ratio), std::to_string(c.degree)});
    tab.write(at(out, method_file("network", m, "_diagnostics.csv")));
  }
}

// detect ------------------------------------------------------------------------

void stage_detect(const RunConfig& cfg, const std::string& out) {
  for (const auto& v : cfg.variants) {
    const auto nm = network_of(load_selection(out, v.method));
    FilterConfig f = cfg.filter;
    f.diag_filter = v.diag_filter;
    const auto dd = select_dominant(nm, f);
    Json j = to_json(dd);
    j["variant"] = {{"label", v.label}, {"method", to_string(v.method)}, {"diag_filter", v.diag_filter}};
    j["config_hash"] = config_hash(cfg);
    write_json(at(out, variant_file("drivers", v, ".json")), j);
    write_text(at(out, variant_file("network", v, ".dot")), network_dot(nm, dd.drivers, f.link_eps));
    CsvTable tab({"rank", "series", "norm", "share", "ratio_to_next", "driver"});
    for (std::size_t r = 0; r < dd.candidates_ranked.size(); ++r) {
      const bool is_driver = std::find(dd.drivers.begin(), dd.drivers.end(), dd.candidates_ranked[r]) != dd.drivers.end();
      tab.row({std::to_string(r + 1), dd.candidates_ranked[r].str(), fmt_double(dd.ranked_norms[r]),
               fmt_double(dd.ranked_shares[r]), r < dd.ratios.size() ? fmt_double(dd.ratios[r]) : "",
               is_driver ? "1" : "0"});
    }
    tab.write(at(out, variant_file("column_norms", v, ".csv")));
  }
}

// forecast ----------------------------------------------------------------------

namespace {

struct ForecastTask {
  SeriesId target;
  int horizon = 1;
  ModelKind kind = ModelKind::AR;
  std::string label;
  std::vector<SeriesId> regressor_ids;
  std::vector<LabeledSeries> regressors;
  std::vector<std::string> warnings;
};

}  // namespace

void stage_forecast(const RunConfig& cfg, const std::string& out, Exec exec) {
  const TransformedData d = load_transformed(out);
  const Panel& gp = d.growth.panel;
  const auto targets = targets_of(cfg, gp);

  std::map<std::string, std::vector<SeriesId>> drivers;
  for (const auto& v : cfg.variants) {
    const std::string name = variant_file("drivers", v, ".json");
    if (std::find(cfg.models.begin(), cfg.models.end(), ModelKind::DD) == cfg.models.end()) break;
    require(out, name, "detect");
    drivers[v.label] = drivers_from_json(read_json(at(out, name)));
  }

  std::vector<ForecastTask> tasks;
  for (const auto& target : targets) {
    for (int h : cfg.horizons) {
      for (ModelKind k : cfg.models) {
        if (k == ModelKind::DD) {
          for (const auto& v : cfg.variants) {
            ForecastTask t{target, h, k, v.label, {}, {}, {}};
            for (const auto& id : drivers[v.label]) {
              if (id == target) continue;
              auto s = lookup(d, id);
              if (!s) throw ArgumentError("driver " + id.str() + " is not in the transformed data");
              t.regressor_ids.push_back(id);
              t.regressors.push_back({id.str(), *s});
            }
            tasks.push_back(std::move(t));
          }
          continue;
        }
        ForecastTask t{target, h, k, to_string(k), {}, {}, {}};
        if (k == ModelKind::ARX) {
          for (const auto& var : cfg.arx_variables) {
            SeriesId own{target.unit, var};
            auto s = lookup(d, own);
            if (!s) s = lookup(d, {"", var});
            if (!s) {
              t.warnings.push_back("ARX variable " + var + " not available; skipped");
              continue;
            }
            const SeriesId id = gp.contains(own) ? own : SeriesId{"", var};
            t.regressor_ids.push_back(id);
            t.regressors.push_back({id.str(), *s});
          }
        } else if (k == ModelKind::LASSO_I) {
          // The country's own other variables, the common series and factors.
          for (const auto& var : gp.variables()) {
            const SeriesId id{target.unit, var};
            if (id == target) continue;
            t.regressor_ids.push_back(id);
            t.regressors.push_back({id.str(), gp.series(id)});
          }
          if (cfg.common_as_candidates) {
            for (const auto& id : d.common_growth.panel.series_ids()) {
              t.regressor_ids.push_back(id);
              t.regressors.push_back({id.str(), d.common_growth.panel.series(id)});
            }
          }
          for (std::size_t f = 0; f < d.factors_growth.size(); ++f)
            t.regressors.push_back({d.factors_growth.labels[f], d.factors_growth.values.col(static_cast<Eigen::Index>(f))});
        }
        tasks.push_back(std::move(t));
      }
    }
  }

  std::vector<ModelFit> fits(tasks.size());
  std::vector<ForecastSet> sets(tasks.size());
  run_tasks(exec, tasks.size(), [&](std::size_t i) {
    const auto& t = tasks[i];
    ModelSpec spec;
    spec.kind = t.kind;
    spec.horizon = t.horizon;
    spec.max_lag = cfg.max_lag;
    spec.regressor_ids = t.regressor_ids;
    spec.recursive = cfg.recursive;
    spec.label = t.label;
    spec.include_factors = t.kind == ModelKind::LASSO_I && !d.factors_growth.empty();
    const VectorXd y = gp.series(t.target);
    fits[i] = t.kind == ModelKind::LASSO_I ? fit_lasso_i(t.target, y, t.regressors, spec, d.split, cfg.lasso)
                                           : fit_direct(t.target, y, t.regressors, spec, d.split);
    sets[i] = predict_holdout(fits[i], y, t.regressors, d.split);
  });

  Json jfits = Json::array(), jsets = Json::array();
  CsvTable tab({"target", "model", "horizon", "year", "actual", "prediction"});
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    Json fj = to_json(fits[i]);
    fj["warnings"] = tasks[i].warnings;
    jfits.push_back(fj);
    jsets.push_back(to_json(sets[i]));
    for (std::size_t k = 0; k < sets[i].dates.size(); ++k)
      tab.row({sets[i].target.str(), sets[i].model, std::to_string(sets[i].horizon),
               std::to_string(d.years[static_cast<std::size_t>(sets[i].dates[k])]), fmt_double(sets[i].actuals[k]),
               fmt_double(sets[i].predictions[k])});
  }
  write_json(at(out, "fits.json"), {{"config_hash", config_hash(cfg)}, {"fits", jfits}});
  write_json(at(out, "forecasts.json"),
             {{"config_hash", config_hash(cfg)}, {"years", d.years}, {"boundary_index", d.split.boundary_index}, {"sets", jsets}});
  tab.write(at(out, "forecasts.csv"));
}

// evaluate ----------------------------------------------------------------------

void stage_evaluate(const RunConfig& cfg, const std::string& out, Exec exec) {
  require(out, "forecasts.json", "forecast");
  const Json fj = read_json(at(out, "forecasts.json"));
  const auto years = fj.at("years").get<std::vector<int>>();
  std::vector<ForecastSet> sets;
  for (const auto& s : fj.at("sets")) sets.push_back(forecast_set_from_json(s));

  std::vector<int> horizons;
  std::vector<std::string> models;
  std::vector<SeriesId> targets;
  for (const auto& s : sets) {
    if (std::find(horizons.begin(), horizons.end(), s.horizon) == horizons.end()) horizons.push_back(s.horizon);
    if (std::find(models.begin(), models.end(), s.model) == models.end()) models.push_back(s.model);
    if (std::find(targets.begin(), targets.end(), s.target) == targets.end()) targets.push_back(s.target);
  }
  std::map<std::tuple<SeriesId, int, std::string>, const ForecastSet*> index;
  for (const auto& s : sets) index[{s.target, s.horizon, s.model}] = &s;
  const std::string bench = to_string(ModelKind::AR);
  if (std::find(models.begin(), models.end(), bench) == models.end())
    throw ConfigError("evaluation needs the AR benchmark among forecast.models");

  CsvTable losses({"target", "model", "horizon", "n_obs", "rmse", "mae", "rmse_ratio", "mae_ratio"});
  CsvTable dm({"target", "model", "horizon", "statistic", "p_value", "hac_lag", "n_obs", "degenerate"});
  CsvTable shares({"horizon", "model", "n", "S_nonpositive_pct", "sig_nonpositive_pct", "S_positive_pct", "sig_positive_pct"});
  CsvTable xdm({"model", "horizon", "year", "statistic", "n_units"});
  CsvTable table({"horizon", "model", "rmse", "mae", "rmse_ratio_pct", "mae_ratio_pct", "mcs_rate_pct"});
  Json jeval = Json::object();
  jeval["config_hash"] = config_hash(cfg);
  Json jloss = Json::array(), jdm = Json::array(), jshare = Json::array(), jmcs = Json::array(), jtable = Json::array(),
       jxdm = Json::array();

  // MCS per (horizon, target) over every model, seeds from the run seed.
  struct McsSlot {
    int h;
    SeriesId target;
    std::optional<MCSResult> res;
    std::string skipped;
  };
  std::vector<McsSlot> mslots;
  for (int h : horizons)
    for (const auto& t : targets) mslots.push_back({h, t, std::nullopt, ""});
  run_tasks(exec, mslots.size(), [&](std::size_t i) {
    auto& slot = mslots[i];
    const auto* b = index.at({slot.target, slot.h, bench});
    const auto T = static_cast<Eigen::Index>(b->dates.size());
    MatrixXd L(T, static_cast<Eigen::Index>(models.size()));
    for (std::size_t m = 0; m < models.size(); ++m) {
      const auto* f = index.at({slot.target, slot.h, models[m]});
      if (f->dates != b->dates) throw AlignmentError("forecast dates differ for " + slot.target.str());
      const auto l = forecast_losses(*f, cfg.loss);
      for (Eigen::Index t = 0; t < T; ++t) L(t, static_cast<Eigen::Index>(m)) = l[static_cast<std::size_t>(t)];
    }
    MCSConfig mc{cfg.mcs_alpha, cfg.mcs_block_len, cfg.mcs_reps, stream_seed(cfg.seed, 7000 + i)};
    if (T < 10 || models.size() < 2) {
      slot.skipped = "fewer than 10 test periods or 2 models";
      return;
    }
    // Replications run serially inside each slot; slots are the parallel unit.
    slot.res = mcs(L, mc, Exec::Serial);
  });

  for (int h : horizons) {
    std::map<std::string, double> mean_rmse, mean_mae, mcs_in;
    for (const auto& m : models) {
      std::vector<DMResult> results;
      MatrixXd diffs;
      std::vector<int> dates;
      for (std::size_t ti = 0; ti < targets.size(); ++ti) {
        const auto& t = targets[ti];
        const auto* b = index.at({t, h, bench});
        const auto* f = index.at({t, h, m});
        const auto row = loss_metrics(*f, *b);
        mean_rmse[m] += row.rmse / double(targets.size());
        mean_mae[m] += row.mae / double(targets.size());
        losses.row({t.str(), m, std::to_string(h), std::to_string(row.n_obs), fmt_double(row.rmse), fmt_double(row.mae),
                    row.ratio_defined ? fmt_double(row.rmse_ratio) : "", row.ratio_defined ? fmt_double(row.mae_ratio) : ""});
        jloss.push_back({{"target", t.str()}, {"model", m}, {"horizon", h}, {"n_obs", row.n_obs}, {"rmse", row.rmse},
                         {"mae", row.mae}, {"rmse_ratio", row.ratio_defined ? Json(row.rmse_ratio) : Json(nullptr)},
                         {"mae_ratio", row.ratio_defined ? Json(row.mae_ratio) : Json(nullptr)}});
        if (m == bench) continue;
        const auto la = forecast_losses(*b, cfg.loss), lb = forecast_losses(*f, cfg.loss);
        const auto r = dm_test(la, lb, h);
        results.push_back(r);
        dm.row({t.str(), m, std::to_string(h), fmt_double(r.statistic), fmt_double(r.p_value), std::to_string(r.hac_lag),
                std::to_string(r.n_obs), r.degenerate ? "1" : "0"});
        Json jr = to_json(r);
        jr["target"] = t.str();
        jr["model"] = m;
        jr["horizon"] = h;
        jdm.push_back(jr);
        if (ti == 0) {
          dates = b->dates;
          diffs = MatrixXd::Constant(static_cast<Eigen::Index>(dates.size()), static_cast<Eigen::Index>(targets.size()), NAN);
        }
        for (std::size_t k = 0; k < la.size() && k < dates.size(); ++k)
          diffs(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(ti)) = la[k] - lb[k];
      }
      if (m != bench) {
        const auto s = dm_share_table(results, cfg.dm_alpha);
        shares.row({std::to_string(h), m, std::to_string(s.n), fmt_double(s.nonpositive_pct), fmt_double(s.sig_nonpositive_pct),
                    fmt_double(s.positive_pct), fmt_double(s.sig_positive_pct)});
        jshare.push_back({{"horizon", h}, {"model", m}, {"n", s.n}, {"nonpositive_pct", s.nonpositive_pct},
                          {"sig_nonpositive_pct", s.sig_nonpositive_pct}, {"positive_pct", s.positive_pct},
                          {"sig_positive_pct", s.sig_positive_pct}});
        std::vector<int> yrs;
        for (int dt : dates) yrs.push_back(years[static_cast<std::size_t>(dt)]);
        const auto cs = cross_section_dm(diffs, yrs);
        for (const auto& p : cs.points) {
          xdm.row({m, std::to_string(h), std::to_string(p.date), fmt_double(p.statistic), std::to_string(p.n_units)});
          jxdm.push_back({{"model", m}, {"horizon", h}, {"year", p.date}, {"statistic", p.statistic}, {"n_units", p.n_units}});
        }
      }
    }
    int mcs_n = 0;
    for (const auto& slot : mslots) {
      if (slot.h != h) continue;
      Json js = {{"horizon", h}, {"target", slot.target.str()}, {"models", models}};
      if (slot.res) {
        ++mcs_n;
        js["result"] = to_json(*slot.res);
        for (int m : slot.res->surviving) mcs_in[models[static_cast<std::size_t>(m)]] += 1.0;
      } else {
        js["skipped"] = slot.skipped;
      }
      jmcs.push_back(js);
    }
    for (const auto& m : models) {
      const double rr = mean_rmse[bench] > 0 ? 100.0 * mean_rmse[m] / mean_rmse[bench] : NAN;
      const double mr = mean_mae[bench] > 0 ? 100.0 * mean_mae[m] / mean_mae[bench] : NAN;
      const double rate = mcs_n ? 100.0 * mcs_in[m] / mcs_n : NAN;
      table.row({std::to_string(h), m, fmt_double(mean_rmse[m]), fmt_double(mean_mae[m]), fmt_double(rr), fmt_double(mr),
                 fmt_double(rate)});
      jtable.push_back({{"horizon", h}, {"model", m}, {"rmse", mean_rmse[m]}, {"mae", mean_mae[m]},
                        {"rmse_ratio_pct", std::isfinite(rr) ? Json(rr) : Json(nullptr)},
                        {"mae_ratio_pct", std::isfinite(mr) ? Json(mr) : Json(nullptr)},
                        {"mcs_rate_pct", std::isfinite(rate) ? Json(rate) : Json(nullptr)}});
    }
  }
  jeval["losses"] = jloss;
  jeval["dm"] = jdm;
  jeval["dm_shares"] = jshare;
  jeval["cross_section_dm"] = jxdm;
  jeval["mcs"] = jmcs;
  jeval["forecast_table"] = jtable;
  jeval["mcs_config"] = {{"alpha", cfg.mcs_alpha}, {"block_len", cfg.mcs_block_len}, {"reps", cfg.mcs_reps}};
  write_json(at(out, "evaluation.json"), jeval);
  losses.write(at(out, "losses.csv"));
  dm.write(at(out, "dm.csv"));
  shares.write(at(out, "dm_shares.csv"));
  xdm.write(at(out, "cross_section_dm.csv"));
  table.write(at(out, "forecast_table.csv"));
}

// svar --------------------------------------------------------------------------

void stage_svar(const RunConfig& cfg, const std::string& out, Exec exec) {
  if (!cfg.svar_enabled) return;
  const TransformedData d = load_transformed(out);
  require(out, "aggregate.json", "transform");
  const Json aj = read_json(at(out, "aggregate.json"));
  VectorXd agg = vec_from(aj.at("growth"));
  for (Eigen::Index t = 0; t < agg.size(); ++t)
    if (!std::isfinite(agg(t))) agg(t) = 0.0;

  std::vector<DetectVariant> chosen;
  for (const auto& v : cfg.variants)
    if (v.diag_filter) chosen.push_back(v);
  if (chosen.empty()) chosen = cfg.variants;

  CsvTable specs({"specification", "ordering", "p_aic", "max_root", "stable"});
  Json summary = Json::array();
  for (std::size_t k = 0; k < chosen.size(); ++k) {
    const auto& v = chosen[k];
    const std::string name = variant_file("drivers", v, ".json");
    require(out, name, "detect");
    auto drivers = drivers_from_json(read_json(at(out, name)));
    if (drivers.empty()) {
      summary.push_back({{"variant", v.label}, {"skipped", "no dominant drivers detected"}});
      continue;
    }
    if (static_cast<int>(drivers.size()) > cfg.svar_max_drivers) drivers.resize(static_cast<std::size_t>(cfg.svar_max_drivers));
    std::vector<std::string> names{aj.at("label").get<std::string>()};
    MatrixXd Y(agg.size(), static_cast<Eigen::Index>(drivers.size() + 1));
    Y.col(0) = agg;
    for (std::size_t j = 0; j < drivers.size(); ++j) {
      auto s = lookup(d, drivers[j]);
      if (!s) throw ArgumentError("driver " + drivers[j].str() + " is not in the transformed data");
      Y.col(static_cast<Eigen::Index>(j + 1)) = *s;
      names.push_back(drivers[j].str());
    }
    const auto model = fit_var(Y, cfg.svar_max_lag, names);
    const int H = cfg.svar_horizon;
    const auto bundle = bootstrap_irf_ci(model, H, cfg.svar_reps, stream_seed(cfg.seed, 9000 + k), exec);
    const auto fev = fevd(model, H);
    const auto range = ordering_range(model, H, 0);

    std::string ordering = "Aggregate";
    for (std::size_t j = 1; j < names.size(); ++j) ordering += " -> " + names[j];
    specs.row({v.label, ordering, std::to_string(model.lag), fmt_double(model.max_root), model.stable ? "1" : "0"});
    Json j = {{"variant", v.label},
              {"config_hash", config_hash(cfg)},
              {"model", to_json(model)},
              {"irf", to_json(bundle, names)},
              {"fevd", to_json(fev, names)},
              {"range_at_H", to_json(range, names)}};
    if (!model.stable) j["warnings"] = {"VAR is not stable (max root >= 1); IRFs computed anyway"};
    write_json(at(out, variant_file("svar", v, ".json")), j);

    CsvTable irf({"h", "response", "shock", "point", "lower", "upper"});
    for (int h = 0; h <= H; ++h)
      for (std::size_t r = 0; r < names.size(); ++r)
        for (std::size_t s = 0; s < names.size(); ++s) {
          const auto ri = static_cast<Eigen::Index>(r), si = static_cast<Eigen::Index>(s);
          irf.row({std::to_string(h), names[r], names[s], fmt_double(bundle.point[h](ri, si)),
                   fmt_double(bundle.lower[h](ri, si)), fmt_double(bundle.upper[h](ri, si))});
        }
    irf.write(at(out, variant_file("irf", v, ".csv")));

    // Aggregate row of the FEVD in percent, two decimals.
    std::vector<std::string> header{"horizon"};
    for (const auto& n : names) header.push_back(n);
    CsvTable ft(header);
    char buf[32];
    for (int h = 1; h <= H; ++h) {
      std::vector<std::string> cells{std::to_string(h)};
      for (std::size_t s = 0; s < names.size(); ++s) {
        std::snprintf(buf, sizeof buf, "%.2f", 100.0 * fev.shares[static_cast<std::size_t>(h - 1)](0, static_cast<Eigen::Index>(s)));
        cells.push_back(buf);
      }
      ft.row(cells);
    }
    std::vector<std::string> rcells{"Range@" + std::to_string(H)};
    for (std::size_t s = 0; s < names.size(); ++s) {
      if (s == 0) {
        rcells.push_back("---");
        continue;
      }
      std::snprintf(buf, sizeof buf, "[%.2f--%.2f]", 100.0 * range.min_share[s], 100.0 * range.max_share[s]);
      rcells.push_back(buf);
    }
    ft.row(rcells);
    ft.write(at(out, variant_file("fevd", v, ".csv")));
    summary.push_back({{"variant", v.label}, {"variables", names}, {"lag", model.lag}, {"max_root", model.max_root}});
  }
  specs.write(at(out, "svar_specs.csv"));
  write_json(at(out, "svar_summary.json"), {{"config_hash", config_hash(cfg)}, {"specifications", summary}});
}

void run_stage(const std::string& name, const RunConfig& cfg, const std::string& out, Exec exec) {
  if (name == "ingest") return stage_ingest(cfg, out);
  if (name == "transform") return stage_transform(cfg, out);
  if (name == "select") return stage_select(cfg, out, exec);
  if (name == "network") return stage_network(cfg, out);
  if (name == "detect") return stage_detect(cfg, out);
  if (name == "forecast") return stage_forecast(cfg, out, exec);
  if (name == "evaluate") return stage_evaluate(cfg, out, exec);
  if (name == "svar") return stage_svar(cfg, out, exec);
  throw ArgumentError("unknown stage '" + name + "'");
}

// simulate ----------------------------------------------------------------------

Json stage_simulate(const RunConfig& cfg, const std::string& out, int trials, Exec exec) {
  SynthSpec spec = cfg.synthetic.value_or(SynthSpec{});
  spec.seed = cfg.seed;
  spec.validate();
  CsvTable rows({"variant", "trial", "seed", "detected", "exact", "precision", "recall", "n_hat_error", "failed"});
  CsvTable sum({"variant", "trials", "exact_rate", "mean_precision", "mean_recall", "false_positive_rate"});
  Json jsum = Json::array();
  std::set<SeriesId> truth;
  for (int d = 0; d < spec.n_dominant; ++d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "U%02d", d);
    truth.insert({buf, "x"});
  }
  for (const auto& v : cfg.variants) {
    DetectionConfig dc;
    dc.selection = {v.method, cfg.lasso, cfg.ocmt};
    dc.filter = cfg.filter;
    dc.filter.diag_filter = v.diag_filter;
    const auto rep = simulate_detection(spec, trials, dc, exec);
    for (std::size_t k = 0; k < rep.trials.size(); ++k) {
      const auto& t = rep.trials[k];
      std::string det;
      for (const auto& id : t.detected) det += (det.empty() ? "" : ";") + id.str();
      rows.row({v.label, std::to_string(k), std::to_string(t.seed), det, t.accuracy.exact ? "1" : "0",
                fmt_double(t.accuracy.precision), fmt_double(t.accuracy.recall), std::to_string(t.accuracy.n_hat_error),
                t.failed ? "1" : "0"});
    }
    sum.row({v.label, std::to_string(trials), fmt_double(rep.exact_rate), fmt_double(rep.mean_precision),
             fmt_double(rep.mean_recall), fmt_double(rep.false_positive_rate)});
    jsum.push_back({{"variant", v.label}, {"trials", trials}, {"exact_rate", rep.exact_rate},
                    {"mean_precision", rep.mean_precision}, {"mean_recall", rep.mean_recall},
                    {"false_positive_rate", rep.false_positive_rate}});
  }
  rows.write(at(out, "simulate.csv"));
  sum.write(at(out, "simulate_summary.csv"));
  Json jt = Json::array();
  for (const auto& id : truth) jt.push_back(id.str());
  const Json j = {{"config_hash", config_hash(cfg)}, {"seed", cfg.seed}, {"trials", trials}, {"summary", jsum}};
  write_json(at(out, "simulate_summary.json"), j);
  write_json(at(out, "simulate_truth.json"), {{"truth", jt}});
  return j;
}

// pipeline ----------------------------------------------------------------------

PipelineOutcome run_pipeline(const RunConfig& cfg, const std::string& out, Exec exec,
                             const std::optional<std::string>& stop_after) {
  if (stop_after &&
      std::find(pipeline_stages().begin(), pipeline_stages().end(), *stop_after) == pipeline_stages().end())
    throw ArgumentError("unknown stage '" + *stop_after + "'");
  fs::create_directories(out);
  PipelineOutcome res;
  Json stages = Json::array();
  for (const auto& name : pipeline_stages()) {
    try {
      run_stage(name, cfg, out, exec);
      stages.push_back({{"name", name}, {"status", "ok"}});
    } catch (const std::exception& e) {
      res.ok = false;
      res.failed_stage = name;
      res.error = e.what();
      stages.push_back({{"name", name}, {"status", "failed"}, {"error", e.what()}});
      break;
    }
    if (stop_after && name == *stop_after) break;
  }

  write_json(at(out, "config.json"), config_to_json(cfg));
  Json drivers = Json::object();
  for (const auto& v : cfg.variants) {
    const std::string name = variant_file("drivers", v, ".json");
    if (!fs::exists(at(out, name))) continue;
    Json ids = Json::array();
    for (const auto& id : drivers_from_json(read_json(at(out, name)))) ids.push_back(id.str());
    drivers[v.label] = ids;
  }
  std::vector<std::string> artifacts;
  for (const auto& e : fs::recursive_directory_iterator(out)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), out).generic_string();
    if (rel.rfind("manifest.", 0) == 0) continue;
    artifacts.push_back(rel);
  }
  std::sort(artifacts.begin(), artifacts.end());

  Json m = {{"tool", "ddnet"},
            {"version", ddnet_version()},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"compiler", __VERSION__},
            {"config_hash", config_hash(cfg)},
            {"seed", cfg.seed},
            {"stages", stages},
            {"status", res.ok ? "ok" : "failed"},
            {"failed_stage", res.ok ? Json(nullptr) : Json(res.failed_stage)},
            {"drivers", drivers},
            {"artifacts", artifacts}};
  if (fs::exists(at(out, "truth.json"))) m["truth"] = read_json(at(out, "truth.json")).at("truth");
  write_json(at(out, "manifest.json"), m);

  std::ostringstream txt;
  txt << "ddnet " << ddnet_version() << "\n";
  txt << "config_hash " << config_hash(cfg) << "\n";
  txt << "seed " << cfg.seed << "\n";
  for (const auto& s : stages) txt << "stage " << s.at("name").get<std::string>() << " " << s.at("status").get<std::string>() << "\n";
  if (!res.ok) txt << "failed_stage " << res.failed_stage << "\nerror " << res.error << "\n";
  for (const auto& [label, ids] : drivers.items()) {
    txt << "drivers " << label << ":";
    for (const auto& id : ids) txt << " " << id.get<std::string>();
    txt << "\n";
  }
  write_text(at(out, "manifest.txt"), txt.str());
  return res;
}

}  // namespace ddnet

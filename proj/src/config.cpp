#include "ddnet/config.hpp"

#include "ddnet/error.hpp"

#include <algorithm>
#include <set>

namespace ddnet {

namespace {

// Walks one JSON object, remembering which keys were consumed so leftovers
// can be reported.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const Json::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  template <class T>
  void get_opt(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    if (j_.at(key).is_null()) {
      out.reset();
      return;
    }
    T v{};
    get(key, v);
    out = v;
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }
  Section sub(const char* key) {
    seen_.insert(key);
    return Section(j_.at(key), where(key));
  }
  const Json& raw(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }
  std::string where(const std::string& key = "") const {
    return key.empty() ? (path_.empty() ? "config" : path_) : (path_.empty() ? key : path_ + "." + key);
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError("unknown config key '" + where(k) + "'");
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class F>
auto wrap(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

const char* norm_name(NormKind n) { return n == NormKind::L1 ? "L1" : "L2"; }
NormKind parse_norm(const std::string& s) {
  if (s == "L1" || s == "l1") return NormKind::L1;
  if (s == "L2" || s == "l2") return NormKind::L2;
  throw ConfigError("unknown norm '" + s + "' (use L1 or L2)");
}

const char* loss_name(LossKind k) { return k == LossKind::SQUARED ? "squared" : "absolute"; }
LossKind parse_loss(const std::string& s) {
  if (s == "squared") return LossKind::SQUARED;
  if (s == "absolute") return LossKind::ABSOLUTE;
  throw ConfigError("unknown loss '" + s + "' (use squared or absolute)");
}

Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

void RunConfig::validate() const {
  if (data_path.empty() && !synthetic) throw ConfigError("data.path is required unless a synthetic block is given");
  if (synthetic) synthetic->validate();
  if (target_variable.empty()) throw ConfigError("data.target_variable must be set");
  if (!group.empty() && !groups.count(group))
    throw ConfigError("group '" + group + "' is not defined under groups");
  for (const auto& [name, members] : groups) {
    if (members.empty()) throw ConfigError("groups." + name + " is empty");
    std::set<CountryId> uniq(members.begin(), members.end());
    if (uniq.size() != members.size()) throw ConfigError("groups." + name + " lists a country twice");
  }
  if (!(epsilon > 0.0)) throw ConfigError("transform.epsilon must be positive");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("transform.train_fraction must lie in (0, 1)");
  if (factor_mode != "none" && factor_mode != "cce" && factor_mode != "pca")
    throw ConfigError("factors.mode must be none, cce or pca");
  if (factor_mode == "pca" && pca_r < 1) throw ConfigError("factors.pca_r must be at least 1");
  lasso.validate();
  ocmt.validate();
  filter.validate();
  if (variants.empty()) throw ConfigError("selection.variants must list at least one detection");
  std::set<std::string> labels;
  for (const auto& v : variants) {
    if (v.label.empty()) throw ConfigError("selection.variants: every variant needs a label");
    if (!labels.insert(v.label).second) throw ConfigError("selection.variants: duplicate label " + v.label);
  }
  if (column_scale != "regression" && column_scale != "unit")
    throw ConfigError("filter.column_scale must be regression or unit");
  if (horizons.empty()) throw ConfigError("forecast.horizons must be nonempty");
  for (int h : horizons)
    if (h < 1) throw ConfigError("forecast.horizons entries must be at least 1");
  if (models.empty()) throw ConfigError("forecast.models must be nonempty");
  if (max_lag < 0) throw ConfigError("forecast.max_lag must be non-negative");
  if (!(dm_alpha > 0.0 && dm_alpha < 1.0)) throw ConfigError("evaluate.alpha must lie in (0, 1)");
  MCSConfig{mcs_alpha, mcs_block_len, mcs_reps, 0}.validate();
  if (svar_max_lag < 1 || svar_max_lag > 2) throw ConfigError("svar.max_lag must be 1 or 2");
  if (svar_horizon < 1) throw ConfigError("svar.horizon must be at least 1");
  if (svar_reps < 1) throw ConfigError("svar.reps must be at least 1");
  if (svar_max_drivers < 1 || svar_max_drivers > 7) throw ConfigError("svar.max_drivers must lie in [1, 7]");
  if (sim_trials < 1) throw ConfigError("simulate.trials must be at least 1");
}

std::vector<CountryId> RunConfig::active_units(const Panel& raw) const {
  if (group.empty()) return raw.units();
  return groups.at(group);
}

void RunConfig::validate_against(const Panel& raw) const {
  for (const auto& [name, members] : groups)
    for (const auto& c : members)
      if (raw.unit_index(c) < 0)
        throw ConfigError("groups." + name + " references country '" + c + "' which is absent from the data");
  if (raw.variable_index(target_variable) < 0)
    throw ConfigError("data.target_variable '" + target_variable + "' is absent from the data");
  for (const auto& v : common_variables)
    if (raw.variable_index(v) < 0)
      throw ConfigError("data.common_variables entry '" + v + "' is absent from the data");
}

std::vector<SelectMethod> RunConfig::methods() const {
  std::vector<SelectMethod> out;
  for (const auto& v : variants)
    if (std::find(out.begin(), out.end(), v.method) == out.end()) out.push_back(v.method);
  return out;
}

RunConfig config_from_json(const Json& j) {
  RunConfig c;
  Section root(j, "");
  root.get("seed", c.seed);
  if (root.has("data")) {
    auto d = root.sub("data");
    d.get("path", c.data_path);
    if (d.has("columns")) {
      auto s = d.sub("columns");
      s.get("country", c.schema.country);
      s.get("year", c.schema.year);
      s.get("variable", c.schema.variable);
      s.get("value", c.schema.value);
      s.finish();
    }
    d.get("target_variable", c.target_variable);
    d.get("common_variables", c.common_variables);
    d.get("common_as_candidates", c.common_as_candidates);
    d.finish();
  }
  if (root.has("synthetic")) {
    auto s = root.sub("synthetic");
    SynthSpec sp;
    s.get("n_units", sp.n_units);
    s.get("n_periods", sp.n_periods);
    s.get("n_dominant", sp.n_dominant);
    s.get("loading_scale", sp.loading_scale);
    s.get("noise_sd", sp.noise_sd);
    s.get("loading_sparsity", sp.loading_sparsity);
    s.get("global_factor", sp.global_factor);
    s.get("factor_loading", sp.factor_loading);
    s.finish();
    c.synthetic = sp;
  }
  root.get("groups", c.groups);
  root.get("group", c.group);
  if (root.has("aggregate")) {
    auto a = root.sub("aggregate");
    a.get("label", c.aggregate_label);
    a.finish();
  }
  if (root.has("transform")) {
    auto t = root.sub("transform");
    t.get("epsilon", c.epsilon);
    t.get("delta_log", c.delta_log);
    t.get("standardize", c.standardize);
    t.get("train_fraction", c.train_fraction);
    t.finish();
  }
  if (root.has("factors")) {
    auto f = root.sub("factors");
    f.get("mode", c.factor_mode);
    f.get("pca_r", c.pca_r);
    f.finish();
  }
  if (root.has("selection")) {
    auto s = root.sub("selection");
    if (s.has("lasso")) {
      auto l = s.sub("lasso");
      l.get("c", c.lasso.c);
      l.get_opt("gamma", c.lasso.gamma);
      l.get("max_iter", c.lasso.max_iter);
      l.get("tol", c.lasso.tol);
      l.get("loading_iterations", c.lasso.loading_iterations);
      l.get("initial_regressors", c.lasso.initial_regressors);
      l.finish();
    }
    if (s.has("ocmt")) {
      auto o = s.sub("ocmt");
      o.get("alpha", c.ocmt.alpha);
      std::string adj = to_string(c.ocmt.adjustment);
      o.get("adjustment", adj);
      c.ocmt.adjustment = wrap(o.where("adjustment"), [&] { return parse_adjustment(adj); });
      o.get("delta", c.ocmt.delta);
      o.get("hac_lags", c.ocmt.hac_lags);
      o.get("stages", c.ocmt.stages);
      o.get("satterthwaite_df", c.ocmt.satterthwaite_df);
      o.finish();
    }
    if (s.has("variants")) {
      const Json& arr = s.raw("variants");
      if (!arr.is_array()) throw ConfigError("selection.variants: expected an array");
      c.variants.clear();
      for (std::size_t i = 0; i < arr.size(); ++i) {
        Section v(arr[i], "selection.variants[" + std::to_string(i) + "]");
        DetectVariant dv;
        std::string method = "LASSO";
        v.get("label", dv.label);
        v.get("method", method);
        dv.method = wrap(v.where("method"), [&] { return parse_select_method(method); });
        v.get("diag_filter", dv.diag_filter);
        v.finish();
        c.variants.push_back(dv);
      }
    }
    s.finish();
  }
  if (root.has("filter")) {
    auto f = root.sub("filter");
    f.get("R", c.filter.R);
    f.get("q", c.filter.q);
    f.get_opt("min_share", c.filter.min_share);
    f.get("link_eps", c.filter.link_eps);
    std::string norm = norm_name(c.filter.norm), prune = to_string(c.filter.prune);
    f.get("norm", norm);
    c.filter.norm = wrap(f.where("norm"), [&] { return parse_norm(norm); });
    f.get("prune", prune);
    c.filter.prune = wrap(f.where("prune"), [&] { return parse_prune_rule(prune); });
    f.get_opt("degree_cutoff", c.filter.degree_cutoff);
    f.get_opt("min_norm", c.filter.min_norm);
    f.get("column_scale", c.column_scale);
    f.finish();
  }
  if (root.has("forecast")) {
    auto f = root.sub("forecast");
    f.get("horizons", c.horizons);
    if (f.has("models")) {
      std::vector<std::string> names;
      f.get("models", names);
      c.models.clear();
      for (const auto& n : names) c.models.push_back(wrap(f.where("models"), [&] { return parse_model_kind(n); }));
    }
    f.get("max_lag", c.max_lag);
    f.get("recursive", c.recursive);
    f.get("arx_variables", c.arx_variables);
    f.finish();
  }
  if (root.has("evaluate")) {
    auto e = root.sub("evaluate");
    e.get("alpha", c.dm_alpha);
    std::string loss = loss_name(c.loss);
    e.get("loss", loss);
    c.loss = wrap(e.where("loss"), [&] { return parse_loss(loss); });
    if (e.has("mcs")) {
      auto m = e.sub("mcs");
      m.get("alpha", c.mcs_alpha);
      m.get("block_len", c.mcs_block_len);
      m.get("reps", c.mcs_reps);
      m.finish();
    }
    e.finish();
  }
  if (root.has("svar")) {
    auto s = root.sub("svar");
    s.get("enabled", c.svar_enabled);
    s.get("max_lag", c.svar_max_lag);
    s.get("horizon", c.svar_horizon);
    s.get("reps", c.svar_reps);
    s.get("max_drivers", c.svar_max_drivers);
    s.finish();
  }
  if (root.has("simulate")) {
    auto s = root.sub("simulate");
    s.get("trials", c.sim_trials);
    s.finish();
  }
  root.finish();
  c.validate();
  return c;
}

Json config_to_json(const RunConfig& c) {
  Json j;
  j["seed"] = c.seed;
  j["data"] = {{"path", c.data_path},
               {"columns",
                {{"country", c.schema.country},
                 {"year", c.schema.year},
                 {"variable", c.schema.variable},
                 {"value", c.schema.value}}},
               {"target_variable", c.target_variable},
               {"common_variables", c.common_variables},
               {"common_as_candidates", c.common_as_candidates}};
  if (c.synthetic) {
    const auto& s = *c.synthetic;
    j["synthetic"] = {{"n_units", s.n_units},
                      {"n_periods", s.n_periods},
                      {"n_dominant", s.n_dominant},
                      {"loading_scale", s.loading_scale},
                      {"noise_sd", s.noise_sd},
                      {"loading_sparsity", s.loading_sparsity},
                      {"global_factor", s.global_factor},
                      {"factor_loading", s.factor_loading}};
  } else {
    j["synthetic"] = nullptr;
  }
  j["groups"] = c.groups;
  j["group"] = c.group;
  j["aggregate"] = {{"label", c.aggregate_label}};
  j["transform"] = {{"epsilon", c.epsilon},
                    {"delta_log", c.delta_log},
                    {"standardize", c.standardize},
                    {"train_fraction", c.train_fraction}};
  j["factors"] = {{"mode", c.factor_mode}, {"pca_r", c.pca_r}};
  Json variants = Json::array();
  for (const auto& v : c.variants)
    variants.push_back({{"label", v.label}, {"method", to_string(v.method)}, {"diag_filter", v.diag_filter}});
  j["selection"] = {{"lasso",
                     {{"c", c.lasso.c},
                      {"gamma", opt(c.lasso.gamma)},
                      {"max_iter", c.lasso.max_iter},
                      {"tol", c.lasso.tol},
                      {"loading_iterations", c.lasso.loading_iterations},
                      {"initial_regressors", c.lasso.initial_regressors}}},
                    {"ocmt",
                     {{"alpha", c.ocmt.alpha},
                      {"adjustment", to_string(c.ocmt.adjustment)},
                      {"delta", c.ocmt.delta},
                      {"hac_lags", c.ocmt.hac_lags},
                      {"stages", c.ocmt.stages},
                      {"satterthwaite_df", c.ocmt.satterthwaite_df}}},
                    {"variants", variants}};
  j["filter"] = {{"R", c.filter.R},
                 {"q", c.filter.q},
                 {"min_share", opt(c.filter.min_share)},
                 {"link_eps", c.filter.link_eps},
                 {"norm", norm_name(c.filter.norm)},
                 {"prune", to_string(c.filter.prune)},
                 {"degree_cutoff", opt(c.filter.degree_cutoff)},
                 {"min_norm", opt(c.filter.min_norm)},
                 {"column_scale", c.column_scale}};
  std::vector<std::string> models;
  for (auto m : c.models) models.push_back(to_string(m));
  j["forecast"] = {{"horizons", c.horizons},
                   {"models", models},
                   {"max_lag", c.max_lag},
                   {"recursive", c.recursive},
                   {"arx_variables", c.arx_variables}};
  j["evaluate"] = {{"alpha", c.dm_alpha},
                   {"loss", loss_name(c.loss)},
                   {"mcs", {{"alpha", c.mcs_alpha}, {"block_len", c.mcs_block_len}, {"reps", c.mcs_reps}}}};
  j["svar"] = {{"enabled", c.svar_enabled},
               {"max_lag", c.svar_max_lag},
               {"horizon", c.svar_horizon},
               {"reps", c.svar_reps},
               {"max_drivers", c.svar_max_drivers}};
  j["simulate"] = {{"trials", c.sim_trials}};
  return j;
}

RunConfig load_config(const std::string& path) {
  Json j;
  try {
    j = Json::parse(read_text(path), nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return config_from_json(j);
}

std::string config_hash(const RunConfig& c) { return hex64(fnv1a64(config_to_json(c).dump())); }

}  // namespace ddnet

#pragma once

#include "ddnet/evaluate.hpp"
#include "ddnet/forecast.hpp"
#include "ddnet/io.hpp"
#include "ddnet/network.hpp"
#include "ddnet/panel.hpp"
#include "ddnet/select.hpp"
#include "ddnet/synthlab.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ddnet {

// One dominant-driver detection: a selection method and whether the
// diagonal-ratio filter is applied. Its DD forecast model carries the label.
struct DetectVariant {
  std::string label;
  SelectMethod method = SelectMethod::LASSO;
  bool diag_filter = true;
};

struct RunConfig {
  std::uint64_t seed = 1;

  // data
  std::string data_path;
  CsvSchema schema;
  std::optional<SynthSpec> synthetic;  // generated instead of read; seed comes from `seed`
  VariableId target_variable = "OC";
  std::vector<VariableId> common_variables{"WTI_price"};
  bool common_as_candidates = false;
  std::map<std::string, std::vector<CountryId>> groups;
  std::string group;  // empty: every unit in the data
  std::string aggregate_label = "Total_OC";

  // transform
  double epsilon = 1e-8;
  bool delta_log = true;
  bool standardize = true;
  double train_fraction = 0.7;

  // factors: "none", "cce" or "pca"
  std::string factor_mode = "none";
  int pca_r = 1;

  // selection and detection
  LassoConfig lasso;
  OcmtConfig ocmt;
  std::vector<DetectVariant> variants{{"LASSO(DD)", SelectMethod::LASSO, true},
                                      {"OCMT(DD)", SelectMethod::OCMT, true},
                                      {"LASSO(DD)-U", SelectMethod::LASSO, false},
                                      {"OCMT(DD)-U", SelectMethod::OCMT, false}};
  FilterConfig filter;
  std::string column_scale = "regression";  // or "unit"

  // forecast
  std::vector<int> horizons{1, 2, 4, 8};
  std::vector<ModelKind> models{ModelKind::AR, ModelKind::ARX, ModelKind::LASSO_I, ModelKind::DD};
  int max_lag = 2;
  bool recursive = false;
  std::vector<VariableId> arx_variables{"Pop", "GDP", "Eintensity", "WTI_price"};

  // evaluate
  double dm_alpha = 0.05;
  LossKind loss = LossKind::SQUARED;
  double mcs_alpha = 0.10;
  int mcs_block_len = 3;
  int mcs_reps = 2000;

  // svar
  bool svar_enabled = true;
  int svar_max_lag = 2;
  int svar_horizon = 10;
  int svar_reps = 500;
  int svar_max_drivers = 4;

  // simulate
  int sim_trials = 200;

  // Field-level checks that need no data.
  void validate() const;
  // Checks against the loaded data: groups, target and common variables.
  void validate_against(const Panel& raw) const;

  std::vector<CountryId> active_units(const Panel& raw) const;
  std::vector<SelectMethod> methods() const;  // distinct, in variant order
};

// Strict parse: unknown keys and wrong types raise ConfigError naming the path.
RunConfig config_from_json(const Json& j);
Json config_to_json(const RunConfig& c);
RunConfig load_config(const std::string& path);

// FNV-1a over the canonical JSON serialization.
std::string config_hash(const RunConfig& c);

}  // namespace ddnet

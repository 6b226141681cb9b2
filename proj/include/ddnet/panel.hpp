#pragma once

#include "ddnet/linalg.hpp"
#include "ddnet/series_id.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace ddnet {

// Rectangular unit x variable x year array. Absent observations are NaN.
class Panel {
 public:
  Panel() = default;
  Panel(std::vector<CountryId> units, std::vector<VariableId> variables, std::vector<int> years);

  const std::vector<CountryId>& units() const { return units_; }
  const std::vector<VariableId>& variables() const { return variables_; }
  const std::vector<int>& years() const { return years_; }
  std::size_t n_units() const { return units_.size(); }
  std::size_t n_variables() const { return variables_.size(); }
  std::size_t n_periods() const { return years_.size(); }

  double& at(std::size_t u, std::size_t v, std::size_t t) { return values_[index(u, v, t)]; }
  double at(std::size_t u, std::size_t v, std::size_t t) const { return values_[index(u, v, t)]; }

  // True where a value was zero-filled by the transform stage.
  bool imputed(std::size_t u, std::size_t v, std::size_t t) const;
  void set_imputed(std::size_t u, std::size_t v, std::size_t t, bool flag);
  bool has_mask() const { return !imputed_.empty(); }

  VectorXd series(std::size_t u, std::size_t v) const;
  VectorXd series(const SeriesId& id) const;
  void set_series(std::size_t u, std::size_t v, const VectorXd& s);

  std::ptrdiff_t unit_index(const CountryId& c) const;
  std::ptrdiff_t variable_index(const VariableId& v) const;
  bool contains(const SeriesId& id) const;

  // All (unit, variable) pairs, unit-major.
  std::vector<SeriesId> series_ids() const;

  // Throws ArgumentError when an invariant is violated.
  void validate(bool require_finite = false) const;

  // Copy restricted to the given units, in the given order.
  Panel subset_units(const std::vector<CountryId>& keep) const;

  std::map<std::string, std::string> meta;

 private:
  std::size_t index(std::size_t u, std::size_t v, std::size_t t) const {
    return (u * variables_.size() + v) * years_.size() + t;
  }

  std::vector<CountryId> units_;
  std::vector<VariableId> variables_;
  std::vector<int> years_;
  std::vector<double> values_;
  std::vector<unsigned char> imputed_;
};

struct SplitSpec {
  double train_fraction = 0.7;
  std::size_t boundary_index = 0;  // first test period
};

// boundary = floor(fraction * n_periods); at least two periods on each side.
SplitSpec make_split(std::size_t n_periods, double train_fraction);

struct CsvSchema {
  std::string country = "country";
  std::string year = "year";
  std::string variable = "variable";
  std::string value = "value";
};

// Long-format CSV (country, year, variable, value). Units and variables keep
// first-appearance order.
Panel load_panel(const std::string& path, const CsvSchema& schema = {});
Panel read_panel_csv(std::istream& in, const CsvSchema& schema = {});

// Delta-log transform. Series containing a zero are shifted by epsilon before
// logging; missing values after differencing become 0 and are recorded in the
// imputed mask. The first period is dropped.
Panel delta_log_transform(const Panel& raw, double epsilon = 1e-8);

struct ScaleTable {
  std::map<SeriesId, double> divisor;
  std::vector<SeriesId> degenerate;  // zero training SD, left unscaled
  bool is_degenerate(const SeriesId& id) const;
};

struct Standardized {
  Panel panel;
  ScaleTable scale;
};

// Divides each series by its training-sample standard deviation. The mean is
// not removed.
Standardized standardize(const Panel& p, const SplitSpec& split);
Panel unstandardize(const Panel& p, const ScaleTable& scale);

enum class FactorKind { CCE_AVERAGES, PCA, OBSERVED };
const char* to_string(FactorKind k);

// Factors stored time x factor.
struct FactorSet {
  MatrixXd values;
  std::vector<FactorKind> kinds;
  std::vector<std::string> labels;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  void append(const VectorXd& f, FactorKind kind, std::string label);
};

// Cross-country mean of each variable at every period. Excluded variables are
// carried as OBSERVED factors instead of CCE averages.
FactorSet cross_section_averages(const Panel& p, const std::vector<VariableId>& exclude = {});

// First r principal components of the panel's series, loadings estimated on
// the training sample.
FactorSet pca_factors(const Panel& p, int r, const SplitSpec& split,
                      const std::vector<SeriesId>& skip = {});

// Sum of `variable` across `group` at each period, on raw levels. Any missing
// member value makes that period NaN.
VectorXd aggregate_series(const Panel& p, const std::vector<CountryId>& group,
                          const VariableId& variable);

}  // namespace ddnet

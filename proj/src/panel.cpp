#include "ddnet/panel.hpp"

#include "ddnet/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>

namespace ddnet {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split_csv_line(const std::string& line, std::size_t lineno) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (quoted) throw ParseError("unterminated quoted field", lineno);
  out.push_back(std::move(cur));
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

Panel::Panel(std::vector<CountryId> units, std::vector<VariableId> variables, std::vector<int> years)
    : units_(std::move(units)), variables_(std::move(variables)), years_(std::move(years)) {
  values_.assign(units_.size() * variables_.size() * years_.size(), kNaN);
}

bool Panel::imputed(std::size_t u, std::size_t v, std::size_t t) const {
  return !imputed_.empty() && imputed_[index(u, v, t)] != 0;
}

void Panel::set_imputed(std::size_t u, std::size_t v, std::size_t t, bool flag) {
  if (imputed_.empty()) imputed_.assign(values_.size(), 0);
  imputed_[index(u, v, t)] = flag ? 1 : 0;
}

VectorXd Panel::series(std::size_t u, std::size_t v) const {
  VectorXd s(years_.size());
  for (std::size_t t = 0; t < years_.size(); ++t) s(t) = at(u, v, t);
  return s;
}

VectorXd Panel::series(const SeriesId& id) const {
  const auto u = unit_index(id.unit);
  const auto v = variable_index(id.variable);
  if (u < 0 || v < 0) throw ArgumentError("unknown series " + id.str());
  return series(u, v);
}

void Panel::set_series(std::size_t u, std::size_t v, const VectorXd& s) {
  for (std::size_t t = 0; t < years_.size(); ++t) at(u, v, t) = s(t);
}

std::ptrdiff_t Panel::unit_index(const CountryId& c) const {
  auto it = std::find(units_.begin(), units_.end(), c);
  return it == units_.end() ? -1 : it - units_.begin();
}

std::ptrdiff_t Panel::variable_index(const VariableId& v) const {
  auto it = std::find(variables_.begin(), variables_.end(), v);
  return it == variables_.end() ? -1 : it - variables_.begin();
}

bool Panel::contains(const SeriesId& id) const {
  return unit_index(id.unit) >= 0 && variable_index(id.variable) >= 0;
}

std::vector<SeriesId> Panel::series_ids() const {
  std::vector<SeriesId> ids;
  ids.reserve(units_.size() * variables_.size());
  for (const auto& u : units_)
    for (const auto& v : variables_) ids.push_back({u, v});
  return ids;
}

void Panel::validate(bool require_finite) const {
  for (std::size_t t = 1; t < years_.size(); ++t)
    if (years_[t] != years_[t - 1] + 1)
      throw ArgumentError("panel years must be consecutive: " + std::to_string(years_[t - 1]) +
                          " then " + std::to_string(years_[t]));
  if (values_.size() != units_.size() * variables_.size() * years_.size())
    throw ArgumentError("panel value array has wrong size");
  if (require_finite)
    for (std::size_t u = 0; u < units_.size(); ++u)
      for (std::size_t v = 0; v < variables_.size(); ++v)
        for (std::size_t t = 0; t < years_.size(); ++t)
          if (!std::isfinite(at(u, v, t)))
            throw ArgumentError("non-finite value at " + units_[u] + ":" + variables_[v] + " " +
                                std::to_string(years_[t]));
}

Panel Panel::subset_units(const std::vector<CountryId>& keep) const {
  Panel out(keep, variables_, years_);
  out.meta = meta;
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const auto u = unit_index(keep[k]);
    if (u < 0) throw ArgumentError("unknown unit " + keep[k]);
    for (std::size_t v = 0; v < variables_.size(); ++v)
      for (std::size_t t = 0; t < years_.size(); ++t) {
        out.at(k, v, t) = at(u, v, t);
        if (imputed(u, v, t)) out.set_imputed(k, v, t, true);
      }
  }
  return out;
}

SplitSpec make_split(std::size_t n_periods, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ArgumentError("train fraction must lie in (0, 1)");
  SplitSpec s;
  s.train_fraction = train_fraction;
  s.boundary_index = static_cast<std::size_t>(std::floor(train_fraction * double(n_periods)));
  if (s.boundary_index < 2 || n_periods - s.boundary_index < 2)
    throw SampleSizeError("split needs at least 2 periods on each side, have " +
                          std::to_string(n_periods) + " periods");
  return s;
}

Panel read_panel_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError("empty input, expected header row", 1);
  ++lineno;
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  auto header = split_csv_line(line, lineno);
  auto col = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (trim(header[i]) == name) return i;
    throw ParseError("missing column '" + name + "' in header", 1);
  };
  const std::size_t ci = col(schema.country), yi = col(schema.year), vi = col(schema.variable),
                    xi = col(schema.value);
  const std::size_t need = std::max({ci, yi, vi, xi}) + 1;

  struct Cell {
    std::size_t u, v;
    int year;
    double value;
    std::size_t line;
  };
  std::vector<CountryId> units;
  std::vector<VariableId> vars;
  std::unordered_map<std::string, std::size_t> uidx, vidx;
  std::vector<Cell> cells;
  std::map<std::tuple<std::size_t, std::size_t, int>, std::size_t> seen;

  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto f = split_csv_line(line, lineno);
    if (f.size() < need)
      throw ParseError("expected at least " + std::to_string(need) + " fields, got " +
                           std::to_string(f.size()),
                       lineno);
    const std::string country = trim(f[ci]), variable = trim(f[vi]);
    if (country.empty() || variable.empty()) throw ParseError("empty country or variable", lineno);
    int year = 0;
    try {
      std::size_t pos = 0;
      year = std::stoi(trim(f[yi]), &pos);
      if (pos != trim(f[yi]).size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError("invalid year '" + f[yi] + "'", lineno);
    }
    double value = kNaN;
    const std::string vs = trim(f[xi]);
    if (!vs.empty() && vs != "NA" && vs != "NaN" && vs != "nan") {
      try {
        std::size_t pos = 0;
        value = std::stod(vs, &pos);
        if (pos != vs.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ParseError("invalid value '" + vs + "'", lineno);
      }
    }
    auto [uit, unew] = uidx.try_emplace(country, units.size());
    if (unew) units.push_back(country);
    auto [vit, vnew] = vidx.try_emplace(variable, vars.size());
    if (vnew) vars.push_back(variable);
    auto key = std::make_tuple(uit->second, vit->second, year);
    if (auto it = seen.find(key); it != seen.end())
      throw ConflictError("duplicate observation (" + country + ", " + std::to_string(year) + ", " +
                          variable + ") on lines " + std::to_string(it->second) + " and " +
                          std::to_string(lineno));
    seen.emplace(key, lineno);
    cells.push_back({uit->second, vit->second, year, value, lineno});
  }
  if (cells.empty()) throw ParseError("no data rows", lineno);

  std::vector<std::set<int>> unit_years(units.size());
  int ymin = cells.front().year, ymax = ymin;
  for (const auto& c : cells) {
    unit_years[c.u].insert(c.year);
    ymin = std::min(ymin, c.year);
    ymax = std::max(ymax, c.year);
  }
  for (std::size_t u = 0; u < units.size(); ++u) {
    const auto& ys = unit_years[u];
    if (static_cast<int>(ys.size()) != *ys.rbegin() - *ys.begin() + 1) {
      std::ostringstream msg;
      msg << "non-consecutive years for " << units[u] << ":";
      for (int y : ys) msg << ' ' << y;
      throw GapError(msg.str());
    }
  }
  std::vector<int> years;
  for (int y = ymin; y <= ymax; ++y) years.push_back(y);
  Panel p(units, vars, years);
  for (const auto& c : cells) p.at(c.u, c.v, static_cast<std::size_t>(c.year - ymin)) = c.value;
  return p;
}

Panel load_panel(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open " + path);
  Panel p = read_panel_csv(in, schema);
  p.meta["source"] = path;
  return p;
}

Panel delta_log_transform(const Panel& raw, double epsilon) {
  if (!(epsilon > 0.0)) throw ArgumentError("epsilon must be positive");
  if (raw.n_periods() < 2) throw SampleSizeError("delta-log needs at least 2 periods");
  std::vector<int> years(raw.years().begin() + 1, raw.years().end());
  Panel out(raw.units(), raw.variables(), years);
  out.meta = raw.meta;
  out.meta["transform"] = "delta_log";
  for (std::size_t u = 0; u < raw.n_units(); ++u) {
    for (std::size_t v = 0; v < raw.n_variables(); ++v) {
      bool has_zero = false;
      for (std::size_t t = 0; t < raw.n_periods(); ++t) {
        const double x = raw.at(u, v, t);
        if (x < 0.0)
          throw DomainError("negative value in " + raw.units()[u] + ":" + raw.variables()[v] +
                            " at " + std::to_string(raw.years()[t]));
        if (x == 0.0) has_zero = true;
      }
      const double shift = has_zero ? epsilon : 0.0;
      for (std::size_t t = 1; t < raw.n_periods(); ++t) {
        const double d = std::log(raw.at(u, v, t) + shift) - std::log(raw.at(u, v, t - 1) + shift);
        if (std::isfinite(d)) {
          out.at(u, v, t - 1) = d;
        } else {
          out.at(u, v, t - 1) = 0.0;
          out.set_imputed(u, v, t - 1, true);
        }
      }
    }
  }
  return out;
}

bool ScaleTable::is_degenerate(const SeriesId& id) const {
  return std::find(degenerate.begin(), degenerate.end(), id) != degenerate.end();
}

Standardized standardize(const Panel& p, const SplitSpec& split) {
  if (split.boundary_index < 2 || split.boundary_index > p.n_periods())
    throw ArgumentError("split boundary outside the panel");
  Standardized out{p, {}};
  out.panel.meta["standardized"] = "train_sd";
  for (std::size_t u = 0; u < p.n_units(); ++u) {
    for (std::size_t v = 0; v < p.n_variables(); ++v) {
      const SeriesId id{p.units()[u], p.variables()[v]};
      VectorXd s = p.series(u, v);
      const double sd = sample_sd(s.head(split.boundary_index));
      if (!(sd > 1e-14) || !std::isfinite(sd)) {
        out.scale.degenerate.push_back(id);
        out.scale.divisor[id] = 1.0;
        continue;
      }
      out.scale.divisor[id] = sd;
      out.panel.set_series(u, v, s / sd);
    }
  }
  return out;
}

Panel unstandardize(const Panel& p, const ScaleTable& scale) {
  Panel out = p;
  for (std::size_t u = 0; u < p.n_units(); ++u)
    for (std::size_t v = 0; v < p.n_variables(); ++v) {
      auto it = scale.divisor.find({p.units()[u], p.variables()[v]});
      if (it == scale.divisor.end()) continue;
      out.set_series(u, v, p.series(u, v) * it->second);
    }
  return out;
}

const char* to_string(FactorKind k) {
  switch (k) {
    case FactorKind::CCE_AVERAGES: return "CCE_AVERAGES";
    case FactorKind::PCA: return "PCA";
    case FactorKind::OBSERVED: return "OBSERVED";
  }
  return "?";
}

void FactorSet::append(const VectorXd& f, FactorKind kind, std::string label) {
  if (values.cols() == 0) values.resize(f.size(), 0);
  if (values.rows() != f.size()) throw ArgumentError("factor length does not match time axis");
  values.conservativeResize(Eigen::NoChange, values.cols() + 1);
  values.col(values.cols() - 1) = f;
  kinds.push_back(kind);
  labels.push_back(std::move(label));
}

FactorSet cross_section_averages(const Panel& p, const std::vector<VariableId>& exclude) {
  FactorSet fs;
  fs.values.resize(p.n_periods(), 0);
  for (std::size_t v = 0; v < p.n_variables(); ++v) {
    VectorXd avg = VectorXd::Zero(p.n_periods());
    for (std::size_t u = 0; u < p.n_units(); ++u) avg += p.series(u, v);
    if (p.n_units() > 0) avg /= double(p.n_units());
    const auto& name = p.variables()[v];
    const bool observed = std::find(exclude.begin(), exclude.end(), name) != exclude.end();
    fs.append(avg, observed ? FactorKind::OBSERVED : FactorKind::CCE_AVERAGES,
              (observed ? "obs_" : "cce_") + name);
  }
  return fs;
}

FactorSet pca_factors(const Panel& p, int r, const SplitSpec& split,
                      const std::vector<SeriesId>& skip) {
  FactorSet fs;
  fs.values.resize(p.n_periods(), 0);
  if (r <= 0) return fs;
  std::vector<VectorXd> cols;
  for (const auto& id : p.series_ids())
    if (std::find(skip.begin(), skip.end(), id) == skip.end()) cols.push_back(p.series(id));
  if (cols.empty()) return fs;
  MatrixXd X(p.n_periods(), cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) X.col(j) = cols[j];
  MatrixXd train = X.topRows(split.boundary_index);
  VectorXd mu = train.colwise().mean();
  train.rowwise() -= mu.transpose();
  Eigen::JacobiSVD<MatrixXd> svd(train, Eigen::ComputeThinV);
  const int k = std::min<int>(r, static_cast<int>(svd.matrixV().cols()));
  MatrixXd centered = X.rowwise() - mu.transpose();
  for (int j = 0; j < k; ++j) {
    VectorXd loading = svd.matrixV().col(j);
    // Sign convention: largest-magnitude loading positive.
    Eigen::Index imax;
    loading.cwiseAbs().maxCoeff(&imax);
    if (loading(imax) < 0) loading = -loading;
    fs.append(centered * loading, FactorKind::PCA, "pc" + std::to_string(j + 1));
  }
  return fs;
}

VectorXd aggregate_series(const Panel& p, const std::vector<CountryId>& group,
                          const VariableId& variable) {
  if (group.empty()) throw ArgumentError("aggregation group is empty");
  const auto v = p.variable_index(variable);
  if (v < 0) throw ArgumentError("unknown variable " + variable);
  VectorXd total = VectorXd::Zero(p.n_periods());
  for (const auto& c : group) {
    const auto u = p.unit_index(c);
    if (u < 0) throw ArgumentError("unknown unit " + c + " in aggregation group");
    total += p.series(u, v);
  }
  return total;
}

}  // namespace ddnet

#include "ddnet/io.hpp"

#include "ddnet/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace ddnet {

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fmt_double(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string slug(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!out.empty() && out.back() != '_') {
      out += '_';
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

void write_text(const std::string& path, const std::string& content) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError("cannot write " + path);
  out << content;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json(const std::string& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

Json read_json(const std::string& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const Json::parse_error& e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

CsvTable& CsvTable::row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) throw ArgumentError("csv row width differs from header");
  rows_.push_back(std::move(cells));
  return *this;
}

std::string CsvTable::str() const {
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << csv_escape(cells[i]);
    out << "\n";
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return out.str();
}

void CsvTable::write(const std::string& path) const { write_text(path, str()); }

// Panel -------------------------------------------------------------------

namespace {

double parse_cell(const std::string& s) {
  if (s.empty()) return NAN;
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError("bad number '" + s + "'", 0);
  return v;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else if (c != '\r') {
      out.back() += c;
    }
  }
  return out;
}

}  // namespace

void write_panel_wide(const std::string& dir, const Panel& p, const std::optional<SplitSpec>& split,
                      const ScaleTable* scale) {
  Json side;
  side["units"] = p.units();
  side["variables"] = p.variables();
  side["years"] = p.years();
  side["meta"] = p.meta;
  Json files = Json::array();
  Json imputed = Json::array();
  for (std::size_t v = 0; v < p.n_variables(); ++v) {
    std::vector<std::string> header{"year"};
    for (const auto& u : p.units()) header.push_back(u);
    CsvTable tab(header);
    for (std::size_t t = 0; t < p.n_periods(); ++t) {
      std::vector<std::string> cells{std::to_string(p.years()[t])};
      for (std::size_t u = 0; u < p.n_units(); ++u) {
        cells.push_back(fmt_double(p.at(u, v, t)));
        if (p.has_mask() && p.imputed(u, v, t)) imputed.push_back({u, v, t});
      }
      tab.row(cells);
    }
    const std::string name = "panel_" + slug(p.variables()[v]) + ".csv";
    tab.write((fs::path(dir) / name).string());
    files.push_back(name);
  }
  side["files"] = files;
  side["imputed"] = imputed;
  if (split) side["split"] = {{"train_fraction", split->train_fraction}, {"boundary_index", split->boundary_index}};
  if (scale) {
    Json div = Json::object();
    for (const auto& [id, d] : scale->divisor) div[id.str()] = d;
    Json deg = Json::array();
    for (const auto& id : scale->degenerate) deg.push_back(id.str());
    side["scale"] = {{"divisor", div}, {"degenerate", deg}};
  }
  write_json((fs::path(dir) / "panel.json").string(), side);
}

StoredPanel read_panel_wide(const std::string& dir) {
  const Json side = read_json((fs::path(dir) / "panel.json").string());
  StoredPanel out;
  out.panel = Panel(side.at("units").get<std::vector<CountryId>>(),
                    side.at("variables").get<std::vector<VariableId>>(),
                    side.at("years").get<std::vector<int>>());
  out.panel.meta = side.at("meta").get<std::map<std::string, std::string>>();
  const auto files = side.at("files").get<std::vector<std::string>>();
  for (std::size_t v = 0; v < files.size(); ++v) {
    const std::string path = (fs::path(dir) / files[v]).string();
    std::istringstream in(read_text(path));
    std::string line;
    std::getline(in, line);
    const auto header = split_line(line);
    if (header.size() != out.panel.n_units() + 1) throw ParseError(path + ": header width", 1);
    std::size_t t = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto cells = split_line(line);
      if (cells.size() != header.size() || t >= out.panel.n_periods())
        throw ParseError(path + ": malformed row", static_cast<long>(t + 2));
      for (std::size_t u = 0; u < out.panel.n_units(); ++u) out.panel.at(u, v, t) = parse_cell(cells[u + 1]);
      ++t;
    }
  }
  for (const auto& c : side.at("imputed"))
    out.panel.set_imputed(c[0].get<std::size_t>(), c[1].get<std::size_t>(), c[2].get<std::size_t>(), true);
  if (side.contains("split")) {
    SplitSpec s;
    s.train_fraction = side["split"].at("train_fraction").get<double>();
    s.boundary_index = side["split"].at("boundary_index").get<std::size_t>();
    out.split = s;
  }
  if (side.contains("scale")) {
    for (const auto& [k, v] : side["scale"].at("divisor").items()) out.scale.divisor[SeriesId::parse(k)] = v.get<double>();
    for (const auto& s : side["scale"].at("degenerate")) out.scale.degenerate.push_back(SeriesId::parse(s.get<std::string>()));
  }
  return out;
}

// Selection -----------------------------------------------------------------

namespace {

Json ids_json(const std::vector<SeriesId>& ids) {
  Json a = Json::array();
  for (const auto& id : ids) a.push_back(id.str());
  return a;
}

std::vector<SeriesId> ids_from(const Json& a) {
  std::vector<SeriesId> out;
  for (const auto& s : a) out.push_back(SeriesId::parse(s.get<std::string>()));
  return out;
}

// JSON has no NaN / inf; store them as null.
Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }
double num_from(const Json& j) { return j.is_null() ? NAN : j.get<double>(); }

}  // namespace

Json to_json(const RowSelection& r) {
  Json j;
  j["target"] = r.target.str();
  j["selected"] = ids_json(r.selected);
  j["coefficients"] = r.coefficients;
  j["intercept"] = r.intercept;
  j["residual_sd"] = r.residual_sd;
  j["degenerate"] = r.degenerate;
  j["method"] = to_string(r.method);
  j["factor_loadings"] = r.factor_loadings;
  j["warnings"] = r.warnings;
  return j;
}

RowSelection row_selection_from_json(const Json& j) {
  RowSelection r;
  r.target = SeriesId::parse(j.at("target").get<std::string>());
  r.selected = ids_from(j.at("selected"));
  r.coefficients = j.at("coefficients").get<std::vector<double>>();
  r.intercept = j.at("intercept").get<double>();
  r.residual_sd = j.at("residual_sd").get<double>();
  r.degenerate = j.at("degenerate").get<bool>();
  r.method = parse_select_method(j.at("method").get<std::string>());
  r.factor_loadings = j.at("factor_loadings").get<std::vector<double>>();
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  if (r.selected.size() != r.coefficients.size())
    throw ParseError("selection for " + r.target.str() + ": coefficient count mismatch", 0);
  return r;
}

Json to_json(const ColumnDiag& d) {
  return {{"series", d.series.str()},   {"norm", d.norm},     {"norm_share", d.norm_share},
          {"diag_ratio", d.diag_ratio}, {"degree", d.degree}, {"is_target", d.is_target}};
}

Json to_json(const DominantDriverSet& d) {
  Json j;
  j["candidates_ranked"] = ids_json(d.candidates_ranked);
  j["ranked_norms"] = d.ranked_norms;
  j["ranked_shares"] = d.ranked_shares;
  j["ratios"] = d.ratios;
  j["n_hat_ratio"] = d.n_hat_ratio;
  j["n_hat"] = d.n_hat;
  j["drivers"] = ids_json(d.drivers);
  const auto& f = d.filters;
  j["filters"] = {{"R", f.R},
                  {"q", f.q},
                  {"min_share", f.min_share},
                  {"degree_cutoff", f.degree_cutoff},
                  {"min_norm", f.min_norm},
                  {"diag_filter", f.diag_filter},
                  {"considered", f.considered},
                  {"failed_diag", f.failed_diag},
                  {"failed_degree", f.failed_degree},
                  {"failed_share", f.failed_share}};
  Json diags = Json::array();
  for (const auto& c : d.diagnostics) diags.push_back(to_json(c));
  j["diagnostics"] = diags;
  j["warnings"] = d.warnings;
  return j;
}

std::vector<SeriesId> drivers_from_json(const Json& j) { return ids_from(j.at("drivers")); }

std::string network_csv(const NetworkMatrix& nm) {
  std::vector<std::string> header{"row"};
  for (const auto& l : nm.labels) header.push_back(l.str());
  CsvTable tab(header);
  for (std::size_t i = 0; i < nm.labels.size(); ++i) {
    std::vector<std::string> cells{nm.labels[i].str()};
    for (std::size_t k = 0; k < nm.labels.size(); ++k)
      cells.push_back(fmt_double(nm.kappa(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k))));
    tab.row(cells);
  }
  return tab.str();
}

std::string network_dot(const NetworkMatrix& nm, const std::vector<SeriesId>& drivers, double link_eps) {
  std::ostringstream out;
  out << "digraph network {\n";
  const auto n = static_cast<Eigen::Index>(nm.labels.size());
  std::vector<bool> linked(nm.labels.size(), false);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k)
      if (i != k && std::abs(nm.kappa(i, k)) > link_eps) linked[i] = linked[k] = true;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& id = nm.labels[i];
    const bool dom = std::find(drivers.begin(), drivers.end(), id) != drivers.end();
    if (!linked[i] && !dom && !nm.is_target[i]) continue;
    out << "  \"" << id.str() << "\" [dominant=" << (dom ? "true" : "false")
        << ", target=" << (nm.is_target[i] ? "true" : "false") << "];\n";
  }
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index i = 0; i < n; ++i)
      if (i != k && std::abs(nm.kappa(i, k)) > link_eps)
        out << "  \"" << nm.labels[k].str() << "\" -> \"" << nm.labels[i].str()
            << "\" [weight=" << fmt_double(nm.kappa(i, k)) << "];\n";
  out << "}\n";
  return out.str();
}

// Forecasts -----------------------------------------------------------------

namespace {

Json spec_json(const ModelSpec& s) {
  return {{"kind", to_string(s.kind)},
          {"horizon", s.horizon},
          {"max_lag", s.max_lag},
          {"regressor_ids", ids_json(s.regressor_ids)},
          {"include_factors", s.include_factors},
          {"recursive", s.recursive},
          {"label", s.label}};
}

ModelSpec spec_from(const Json& j) {
  ModelSpec s;
  s.kind = parse_model_kind(j.at("kind").get<std::string>());
  s.horizon = j.at("horizon").get<int>();
  s.max_lag = j.at("max_lag").get<int>();
  s.regressor_ids = ids_from(j.at("regressor_ids"));
  s.include_factors = j.at("include_factors").get<bool>();
  s.recursive = j.at("recursive").get<bool>();
  s.label = j.at("label").get<std::string>();
  return s;
}

}  // namespace

Json to_json(const ModelFit& f) {
  Json j;
  j["spec"] = spec_json(f.spec);
  j["target"] = f.target.str();
  j["chosen_lag"] = f.chosen_lag;
  j["labels"] = f.labels;
  j["coef"] = std::vector<double>(f.coef.data(), f.coef.data() + f.coef.size());
  j["bic"] = num(f.bic);
  Json bic = Json::array();
  for (double b : f.bic_by_lag) bic.push_back(num(b));
  j["bic_by_lag"] = bic;
  j["train_residual_sd"] = f.train_residual_sd;
  j["r_squared"] = num(f.r_squared);
  j["regressor_labels"] = f.regressor_labels;
  return j;
}

Json to_json(const ForecastSet& f) {
  Json pred = Json::array(), act = Json::array();
  for (double v : f.predictions) pred.push_back(num(v));
  for (double v : f.actuals) act.push_back(num(v));
  return {{"target", f.target.str()}, {"model", f.model},        {"horizon", f.horizon},
          {"dates", f.dates},         {"predictions", pred},     {"actuals", act},
          {"spec", spec_json(f.spec)}};
}

ForecastSet forecast_set_from_json(const Json& j) {
  ForecastSet f;
  f.target = SeriesId::parse(j.at("target").get<std::string>());
  f.model = j.at("model").get<std::string>();
  f.horizon = j.at("horizon").get<int>();
  f.dates = j.at("dates").get<std::vector<int>>();
  for (const auto& v : j.at("predictions")) f.predictions.push_back(num_from(v));
  for (const auto& v : j.at("actuals")) f.actuals.push_back(num_from(v));
  f.spec = spec_from(j.at("spec"));
  return f;
}

Json to_json(const MCSResult& r) {
  return {{"surviving", r.surviving},
          {"p_values", r.p_values},
          {"elimination_order", r.elimination_order},
          {"alpha", r.alpha},
          {"block_len", r.block_len},
          {"reps", r.reps},
          {"seed", r.seed}};
}

Json to_json(const DMResult& r) {
  return {{"statistic", num(r.statistic)}, {"statistic_sign", r.statistic > 0 ? 1 : (r.statistic < 0 ? -1 : 0)},
          {"p_value", r.p_value},          {"hac_lag", r.hac_lag},
          {"n_obs", r.n_obs},              {"degenerate", r.degenerate}};
}

// SVAR ------------------------------------------------------------------------

Json matrix_to_json(const MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) r.push_back(num(m(i, k)));
    rows.push_back(r);
  }
  return rows;
}

MatrixXd matrix_from_json(const Json& j) {
  const auto n = static_cast<Eigen::Index>(j.size());
  const Eigen::Index c = n ? static_cast<Eigen::Index>(j[0].size()) : 0;
  MatrixXd m(n, c);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < c; ++k) m(i, k) = num_from(j[i][k]);
  return m;
}

Json to_json(const SVARModel& m) {
  Json A = Json::array();
  for (const auto& a : m.A) A.push_back(matrix_to_json(a));
  Json aic = Json::array();
  for (double v : m.aic_by_lag) aic.push_back(num(v));
  return {{"variables", m.variables},
          {"lag", m.lag},
          {"intercept", std::vector<double>(m.intercept.data(), m.intercept.data() + m.intercept.size())},
          {"A", A},
          {"sigma_u", matrix_to_json(m.sigma_u)},
          {"chol", matrix_to_json(m.chol)},
          {"max_root", m.max_root},
          {"stable", m.stable},
          {"jittered", m.jittered},
          {"aic_by_lag", aic},
          {"n_obs", m.n_obs}};
}

namespace {
Json cube(const std::vector<MatrixXd>& v) {
  Json a = Json::array();
  for (const auto& m : v) a.push_back(matrix_to_json(m));
  return a;
}
}  // namespace

Json to_json(const IRFBundle& b, const std::vector<std::string>& names) {
  return {{"variables", names},
          {"H", b.H},
          {"layout", "[h][response][shock]"},
          {"point", cube(b.point)},
          {"lower", cube(b.lower)},
          {"upper", cube(b.upper)},
          {"reps", b.reps},
          {"unstable_reps", b.unstable_reps},
          {"failed_reps", b.failed_reps},
          {"seed", b.seed}};
}

Json to_json(const FEVDTable& t, const std::vector<std::string>& names) {
  return {{"variables", names}, {"layout", "[horizon-1][variable][shock]"}, {"shares", cube(t.shares)}};
}

Json to_json(const OrderingRange& r, const std::vector<std::string>& names) {
  return {{"variables", names},
          {"horizon", r.horizon},
          {"permutations", r.permutations},
          {"min_share", r.min_share},
          {"max_share", r.max_share}};
}

}  // namespace ddnet

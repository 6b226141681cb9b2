#pragma once

#include "ddnet/evaluate.hpp"
#include "ddnet/network.hpp"
#include "ddnet/panel.hpp"
#include "ddnet/select.hpp"
#include "ddnet/svar.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ddnet {

using Json = nlohmann::json;

std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

// Shortest round-trip formatting; NaN prints as an empty field.
std::string fmt_double(double v);
std::string csv_escape(const std::string& s);
// Lower-case file-name fragment: "LASSO(DD)-U" -> "lasso_dd_u".
std::string slug(const std::string& s);

void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);
void write_json(const std::string& path, const Json& j);
Json read_json(const std::string& path);

// Minimal CSV table builder.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  CsvTable& row(std::vector<std::string> cells);
  std::string str() const;
  void write(const std::string& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Wide per-variable CSVs (year, unit...) plus a panel.json sidecar holding
// units, variables, years, meta, imputed cells, split and scale table.
void write_panel_wide(const std::string& dir, const Panel& p,
                      const std::optional<SplitSpec>& split = std::nullopt,
                      const ScaleTable* scale = nullptr);
struct StoredPanel {
  Panel panel;
  std::optional<SplitSpec> split;
  ScaleTable scale;
};
StoredPanel read_panel_wide(const std::string& dir);

Json to_json(const RowSelection& r);
RowSelection row_selection_from_json(const Json& j);

Json to_json(const ColumnDiag& d);
Json to_json(const DominantDriverSet& d);
std::vector<SeriesId> drivers_from_json(const Json& j);

// Dense kappa with row / column labels.
std::string network_csv(const NetworkMatrix& nm);
// Edge j -> i whenever |kappa(i, j)| > link_eps off the diagonal.
std::string network_dot(const NetworkMatrix& nm, const std::vector<SeriesId>& drivers,
                        double link_eps);

Json to_json(const ModelFit& f);
Json to_json(const ForecastSet& f);
ForecastSet forecast_set_from_json(const Json& j);

Json to_json(const MCSResult& r);
Json to_json(const DMResult& r);

Json to_json(const SVARModel& m);
Json to_json(const IRFBundle& b, const std::vector<std::string>& names);
Json to_json(const FEVDTable& t, const std::vector<std::string>& names);
Json to_json(const OrderingRange& r, const std::vector<std::string>& names);

Json matrix_to_json(const MatrixXd& m);
MatrixXd matrix_from_json(const Json& j);

}  // namespace ddnet

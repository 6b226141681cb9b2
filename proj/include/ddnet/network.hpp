#pragma once

#include "ddnet/linalg.hpp"
#include "ddnet/select.hpp"
#include "ddnet/series_id.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ddnet {

// Row-wise coefficients stacked over targets. Columns span the candidate
// series; B(i, j) is zero whenever columns[j] == targets[i].
struct CoefMatrix {
  std::vector<SeriesId> targets;
  std::vector<SeriesId> columns;
  MatrixXd B;
  VectorXd sigma;  // residual SD per target
};

CoefMatrix assemble_coefficients(const std::vector<RowSelection>& rows,
                                 const std::vector<SeriesId>& columns);

// kappa = D (I - B) D over the union of columns and targets, D = diag(1/sigma).
// Rows of non-target series keep only their diagonal.
struct NetworkMatrix {
  std::vector<SeriesId> labels;
  std::vector<bool> is_target;
  MatrixXd kappa;

  std::ptrdiff_t index_of(const SeriesId& id) const;
};

// column_sigma supplies the scale of non-target columns (missing entries use 1).
NetworkMatrix build_network_matrix(const CoefMatrix& cm,
                                   const std::map<SeriesId, double>& column_sigma = {});

enum class NormKind { L1, L2 };

struct ColumnDiag {
  SeriesId series;
  double norm = 0.0;
  double norm_share = 0.0;
  double diag_ratio = 0.0;
  int degree = 0;
  bool is_target = false;
};

// Norms and degrees are taken over target rows only.
std::vector<ColumnDiag> column_diagnostics(const NetworkMatrix& nm, double link_eps = 1e-10,
                                           NormKind norm = NormKind::L1);

// Keeps columns with (not a target or diag_ratio < R), degree strictly above
// the q-quantile of all degrees, and norm_share > min_share.
std::vector<SeriesId> filter_candidates(const std::vector<ColumnDiag>& diags, double R, double q,
                                        double min_share);

struct RatioRule {
  int n_hat = 0;
  std::vector<double> ratios;
  bool short_input = false;  // fewer than two norms
};

// n_hat = argmax_s norms[s-1] / norms[s] (1-based), smallest s on ties.
RatioRule ratio_rule(const std::vector<double>& norms_desc);

// How trailing drivers are pruned after the ratio rule.
//   RELATIVE_TO_LEADER: keep driver s while norm_s >= norm_1 / n_hat.
//   SHARE_OF_FILTERED:  keep driver s while its share of the filtered norm
//                       total is >= 1 / n_hat.
enum class PruneRule { NONE, RELATIVE_TO_LEADER, SHARE_OF_FILTERED };
const char* to_string(PruneRule r);
PruneRule parse_prune_rule(const std::string& s);

struct FilterConfig {
  double R = 0.5;
  double q = 0.5;
  std::optional<double> min_share;  // default 1 / number of targets
  double link_eps = 1e-10;
  bool diag_filter = true;
  NormKind norm = NormKind::L1;
  PruneRule prune = PruneRule::RELATIVE_TO_LEADER;
  // Absolute thresholds. When set they replace the quantile / share rules.
  std::optional<double> degree_cutoff;
  std::optional<double> min_norm;

  void validate() const;
};

struct FilterTrace {
  double R = 0.0;
  double q = 0.0;
  double min_share = 0.0;
  double degree_cutoff = 0.0;  // resolved: degree must exceed this
  double min_norm = 0.0;       // resolved: norm must exceed this
  bool diag_filter = true;
  int considered = 0;
  int failed_diag = 0;
  int failed_degree = 0;
  int failed_share = 0;
};

struct DominantDriverSet {
  std::vector<SeriesId> candidates_ranked;
  std::vector<double> ranked_norms;
  std::vector<double> ranked_shares;  // share of the filtered norm total
  std::vector<double> ratios;
  int n_hat_ratio = 0;  // before pruning
  int n_hat = 0;
  std::vector<SeriesId> drivers;
  FilterTrace filters;
  std::vector<ColumnDiag> diagnostics;
  std::vector<std::string> warnings;
};

// Diagnostics, filtering, ranking, ratio rule and pruning. If `columns` is
// given, only those columns are eligible.
DominantDriverSet select_dominant(const NetworkMatrix& nm, const FilterConfig& cfg,
                                  const std::vector<SeriesId>* columns = nullptr);

}  // namespace ddnet

#include "ddnet/network.hpp"

#include "ddnet/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace ddnet {

CoefMatrix assemble_coefficients(const std::vector<RowSelection>& rows,
                                 const std::vector<SeriesId>& columns) {
  CoefMatrix cm;
  cm.columns = columns;
  cm.B = MatrixXd::Zero(rows.size(), columns.size());
  cm.sigma = VectorXd::Zero(rows.size());
  std::map<SeriesId, std::size_t> col_index;
  for (std::size_t j = 0; j < columns.size(); ++j) col_index.emplace(columns[j], j);
  std::set<SeriesId> seen;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (!seen.insert(row.target).second)
      throw ConflictError("duplicate target row " + row.target.str());
    cm.targets.push_back(row.target);
    cm.sigma(i) = row.residual_sd;
    for (std::size_t k = 0; k < row.selected.size(); ++k) {
      auto it = col_index.find(row.selected[k]);
      if (it == col_index.end())
        throw ArgumentError("target " + row.target.str() + " selects " + row.selected[k].str() +
                            ", which is not a column");
      if (row.selected[k] == row.target)
        throw ArgumentError("target " + row.target.str() + " selects itself");
      cm.B(i, it->second) = row.coefficients[k];
    }
  }
  return cm;
}

std::ptrdiff_t NetworkMatrix::index_of(const SeriesId& id) const {
  auto it = std::find(labels.begin(), labels.end(), id);
  return it == labels.end() ? -1 : it - labels.begin();
}

NetworkMatrix build_network_matrix(const CoefMatrix& cm,
                                   const std::map<SeriesId, double>& column_sigma) {
  NetworkMatrix nm;
  nm.labels = cm.columns;
  for (const auto& t : cm.targets)
    if (std::find(nm.labels.begin(), nm.labels.end(), t) == nm.labels.end()) nm.labels.push_back(t);
  const std::size_t n = nm.labels.size();
  nm.is_target.assign(n, false);

  VectorXd scale = VectorXd::Ones(n);
  for (std::size_t j = 0; j < n; ++j)
    if (auto it = column_sigma.find(nm.labels[j]); it != column_sigma.end()) scale(j) = it->second;
  std::vector<std::ptrdiff_t> target_row(cm.targets.size());
  for (std::size_t i = 0; i < cm.targets.size(); ++i) {
    target_row[i] = nm.index_of(cm.targets[i]);
    nm.is_target[target_row[i]] = true;
    if (!(cm.sigma(i) > 0.0)) throw ArgumentError("non-positive sigma for " + cm.targets[i].str());
    scale(target_row[i]) = cm.sigma(i);
  }
  for (std::size_t j = 0; j < n; ++j)
    if (!(scale(j) > 0.0)) throw ArgumentError("non-positive scale for " + nm.labels[j].str());

  nm.kappa = MatrixXd::Zero(n, n);
  for (std::size_t j = 0; j < n; ++j) nm.kappa(j, j) = 1.0 / (scale(j) * scale(j));
  for (std::size_t i = 0; i < cm.targets.size(); ++i) {
    const auto r = target_row[i];
    for (std::size_t c = 0; c < cm.columns.size(); ++c) {
      const double b = cm.B(i, c);
      if (b == 0.0) continue;
      const auto col = static_cast<std::size_t>(nm.index_of(cm.columns[c]));
      if (col == static_cast<std::size_t>(r)) continue;
      nm.kappa(r, col) = -b / (scale(r) * scale(col));
    }
  }
  return nm;
}

std::vector<ColumnDiag> column_diagnostics(const NetworkMatrix& nm, double link_eps,
                                           NormKind norm) {
  if (!(link_eps > 0.0)) throw ArgumentError("link_eps must be positive");
  const auto n = static_cast<std::size_t>(nm.kappa.cols());
  std::vector<ColumnDiag> out(n);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    auto& d = out[j];
    d.series = nm.labels[j];
    d.is_target = nm.is_target[j];
    double acc = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      if (!nm.is_target[r]) continue;
      const double v = std::abs(nm.kappa(r, j));
      acc += norm == NormKind::L1 ? v : v * v;
      if (r != j && v > link_eps) ++d.degree;
    }
    d.norm = norm == NormKind::L1 ? acc : std::sqrt(acc);
    if (d.is_target && d.norm > 0.0) d.diag_ratio = std::abs(nm.kappa(j, j)) / d.norm;
    total += d.norm;
  }
  for (auto& d : out) d.norm_share = total > 0.0 ? d.norm / total : 1.0 / double(n);
  return out;
}

std::vector<SeriesId> filter_candidates(const std::vector<ColumnDiag>& diags, double R, double q,
                                        double min_share) {
  std::vector<double> degrees;
  for (const auto& d : diags) degrees.push_back(d.degree);
  const double cutoff = quantile(degrees, q);
  std::vector<SeriesId> keep;
  for (const auto& d : diags) {
    if (d.is_target && !(d.diag_ratio < R)) continue;
    if (!(double(d.degree) > cutoff)) continue;
    if (!(d.norm_share > min_share)) continue;
    keep.push_back(d.series);
  }
  return keep;
}

RatioRule ratio_rule(const std::vector<double>& norms_desc) {
  RatioRule rr;
  if (norms_desc.size() < 2) {
    rr.n_hat = static_cast<int>(norms_desc.size());
    rr.short_input = true;
    return rr;
  }
  double best = -1.0;
  for (std::size_t s = 0; s + 1 < norms_desc.size(); ++s) {
    const double next = norms_desc[s + 1];
    const double ratio = next > 0.0 ? norms_desc[s] / next : INFINITY;
    rr.ratios.push_back(ratio);
    if (ratio > best) {
      best = ratio;
      rr.n_hat = static_cast<int>(s + 1);
    }
  }
  return rr;
}

const char* to_string(PruneRule r) {
  switch (r) {
    case PruneRule::NONE: return "none";
    case PruneRule::RELATIVE_TO_LEADER: return "relative_to_leader";
    case PruneRule::SHARE_OF_FILTERED: return "share_of_filtered";
  }
  return "?";
}

PruneRule parse_prune_rule(const std::string& s) {
  if (s == "none") return PruneRule::NONE;
  if (s == "relative_to_leader") return PruneRule::RELATIVE_TO_LEADER;
  if (s == "share_of_filtered") return PruneRule::SHARE_OF_FILTERED;
  throw ConfigError("unknown prune rule '" + s + "'");
}

void FilterConfig::validate() const {
  if (!(R > 0.0 && R <= 1.0)) throw ConfigError("filter.R must lie in (0, 1]");
  if (!(q > 0.0 && q <= 1.0)) throw ConfigError("filter.q must lie in (0, 1]");
  if (min_share && !(*min_share >= 0.0 && *min_share < 1.0))
    throw ConfigError("filter.min_share must lie in [0, 1)");
  if (!(link_eps > 0.0)) throw ConfigError("filter.link_eps must be positive");
}

DominantDriverSet select_dominant(const NetworkMatrix& nm, const FilterConfig& cfg,
                                  const std::vector<SeriesId>* columns) {
  cfg.validate();
  DominantDriverSet out;
  out.diagnostics = column_diagnostics(nm, cfg.link_eps, cfg.norm);

  std::vector<const ColumnDiag*> eligible;
  for (const auto& d : out.diagnostics)
    if (!columns || std::find(columns->begin(), columns->end(), d.series) != columns->end())
      eligible.push_back(&d);

  const auto n_targets = std::count(nm.is_target.begin(), nm.is_target.end(), true);
  auto& tr = out.filters;
  tr.R = cfg.R;
  tr.q = cfg.q;
  tr.diag_filter = cfg.diag_filter;
  tr.min_share = cfg.min_share.value_or(n_targets > 0 ? 1.0 / double(n_targets) : 0.0);
  tr.considered = static_cast<int>(eligible.size());
  double total = 0.0;
  std::vector<double> degrees;
  for (auto* d : eligible) {
    total += d->norm;
    degrees.push_back(d->degree);
  }
  tr.degree_cutoff = cfg.degree_cutoff ? *cfg.degree_cutoff : quantile(degrees, cfg.q);
  tr.min_norm = cfg.min_norm ? *cfg.min_norm : tr.min_share * total;

  std::vector<const ColumnDiag*> kept;
  for (auto* d : eligible) {
    if (cfg.diag_filter && d->is_target && !(d->diag_ratio < cfg.R)) {
      ++tr.failed_diag;
      continue;
    }
    if (!(double(d->degree) > tr.degree_cutoff)) {
      ++tr.failed_degree;
      continue;
    }
    if (!(d->norm > tr.min_norm)) {
      ++tr.failed_share;
      continue;
    }
    kept.push_back(d);
  }
  std::stable_sort(kept.begin(), kept.end(), [](auto* a, auto* b) {
    if (a->norm != b->norm) return a->norm > b->norm;
    return a->series < b->series;
  });
  double kept_total = 0.0;
  for (auto* d : kept) kept_total += d->norm;
  for (auto* d : kept) {
    out.candidates_ranked.push_back(d->series);
    out.ranked_norms.push_back(d->norm);
    out.ranked_shares.push_back(kept_total > 0.0 ? d->norm / kept_total : 0.0);
  }

  auto rr = ratio_rule(out.ranked_norms);
  out.ratios = rr.ratios;
  out.n_hat_ratio = rr.n_hat;
  if (rr.short_input)
    out.warnings.push_back("fewer than two candidates survived filtering; ratio rule skipped");

  int n_hat = rr.n_hat;
  auto passes = [&](int n) {
    const auto s = static_cast<std::size_t>(n - 1);
    switch (cfg.prune) {
      case PruneRule::NONE: return true;
      case PruneRule::RELATIVE_TO_LEADER: return out.ranked_norms[s] >= out.ranked_norms[0] / n;
      case PruneRule::SHARE_OF_FILTERED: return out.ranked_shares[s] >= 1.0 / n;
    }
    return true;
  };
  while (n_hat > 0 && !passes(n_hat)) --n_hat;
  if (n_hat < rr.n_hat)
    out.warnings.push_back("pruned " + std::to_string(rr.n_hat - n_hat) +
                           " trailing driver(s) by the minimum-share rule");
  out.n_hat = n_hat;
  out.drivers.assign(out.candidates_ranked.begin(), out.candidates_ranked.begin() + n_hat);
  return out;
}

}  // namespace ddnet

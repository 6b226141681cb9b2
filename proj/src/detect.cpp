#include "ddnet/detect.hpp"

#include <algorithm>

namespace ddnet {

DetectionRun run_detection(const std::vector<SeriesId>& targets, const CandidatePool& pool,
                           const MatrixXd& F, const DetectionConfig& cfg, Exec exec) {
  DetectionRun run;
  // Targets and non-target pool columns are all regressed on the pool, so
  // every column of kappa carries an estimated scale.
  std::vector<SeriesId> extra;
  for (const auto& id : pool.ids)
    if (std::find(targets.begin(), targets.end(), id) == targets.end()) extra.push_back(id);

  run.rows = select_rows(targets, pool, F, cfg.selection, exec);
  if (!extra.empty()) {
    auto aux = select_rows(extra, pool, F, cfg.selection, exec);
    for (const auto& r : aux) run.column_sigma[r.target] = r.residual_sd;
  }
  run.coefficients = assemble_coefficients(run.rows, pool.ids);
  run.network = build_network_matrix(run.coefficients, run.column_sigma);
  run.drivers = select_dominant(run.network, cfg.filter);
  return run;
}

}  // namespace ddnet

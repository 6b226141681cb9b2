#pragma once

#include "ddnet/network.hpp"
#include "ddnet/parallel.hpp"
#include "ddnet/select.hpp"

#include <map>
#include <vector>

namespace ddnet {

// Row selection, network matrix and dominant-driver selection in one pass.
struct DetectionConfig {
  SelectionConfig selection;
  FilterConfig filter;
};

struct DetectionRun {
  std::vector<RowSelection> rows;
  CoefMatrix coefficients;
  NetworkMatrix network;
  std::map<SeriesId, double> column_sigma;
  DominantDriverSet drivers;
};

// Every pool column that is also a target gets its own row. Non-target
// columns take their scale from an auxiliary selection on the remaining pool.
DetectionRun run_detection(const std::vector<SeriesId>& targets, const CandidatePool& pool,
                           const MatrixXd& F, const DetectionConfig& cfg,
                           Exec exec = Exec::Parallel);

}  // namespace ddnet

#pragma once

#include "ddnet/forecast.hpp"
#include "ddnet/linalg.hpp"
#include "ddnet/parallel.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ddnet {

struct LossRow {
  SeriesId target;
  std::string model;
  int horizon = 1;
  int n_obs = 0;
  double rmse = 0.0;
  double mae = 0.0;
  double rmse_ratio = 0.0;  // model / benchmark
  double mae_ratio = 0.0;
  bool ratio_defined = true;
};

LossRow loss_metrics(const ForecastSet& f, const ForecastSet& benchmark);

enum class LossKind { SQUARED, ABSOLUTE };
std::vector<double> forecast_losses(const ForecastSet& f, LossKind kind = LossKind::SQUARED);

struct DMResult {
  double statistic = 0.0;
  double p_value = 1.0;
  int hac_lag = 0;
  int n_obs = 0;
  bool degenerate = false;
};

// Diebold-Mariano test on d = loss_a - loss_b (benchmark first, so a positive
// statistic favours the competitor). Bartlett HAC with truncation lag h - 1,
// two-sided normal p-value.
DMResult dm_test(std::span<const double> loss_a, std::span<const double> loss_b, int h);

struct ShareRow {
  int n = 0;
  double nonpositive_pct = 0.0;
  double positive_pct = 0.0;
  double sig_nonpositive_pct = 0.0;  // significant and <= 0, percent of all units
  double sig_positive_pct = 0.0;     // significant and > 0, percent of all units
  bool empty = false;
};

ShareRow dm_share_table(const std::vector<DMResult>& results, double alpha = 0.05);

struct CrossSectionPoint {
  int date = 0;
  double statistic = 0.0;
  int n_units = 0;
};

struct CrossSectionDM {
  std::vector<CrossSectionPoint> points;
  std::vector<int> skipped_dates;  // fewer than min_units finite differentials
};

// Per-date mean of the loss differentials divided by SD / sqrt(N).
// diffs is dates x units with NaN where a unit has no differential.
CrossSectionDM cross_section_dm(const MatrixXd& diffs, const std::vector<int>& dates,
                                int min_units = 5);

struct MCSConfig {
  double alpha = 0.10;
  int block_len = 3;
  int reps = 2000;
  std::uint64_t seed = 20240601;

  void validate() const;
};

struct MCSResult {
  std::vector<int> surviving;         // model indices, ascending
  std::vector<double> p_values;       // MCS p-value per model
  std::vector<int> elimination_order;  // every model, worst first; last is the final survivor
  double alpha = 0.0;
  int block_len = 0;
  int reps = 0;
  std::uint64_t seed = 0;
};

// Moving-block bootstrap indices for one replication.
std::vector<int> moving_block_indices(int n, int block_len, std::uint64_t seed, std::uint64_t rep);

// Model Confidence Set with the range statistic (max |studentized pairwise
// mean loss differential|) and elimination of the worst model per step.
// losses is time x model.
MCSResult mcs(const MatrixXd& losses, const MCSConfig& cfg, Exec exec = Exec::Parallel);

inline MCSResult mcs_serial(const MatrixXd& losses, const MCSConfig& cfg) {
  return mcs(losses, cfg, Exec::Serial);
}

}  // namespace ddnet

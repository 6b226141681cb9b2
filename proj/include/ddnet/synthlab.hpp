#pragma once

#include "ddnet/detect.hpp"
#include "ddnet/panel.hpp"

#include <cstdint>
#include <set>
#include <vector>

namespace ddnet {

struct SynthSpec {
  int n_units = 20;
  int n_periods = 40;
  int n_dominant = 1;
  double loading_scale = 0.8;
  double noise_sd = 1.0;
  double loading_sparsity = 1.0;  // fraction of non-dominant units loading on each driver
  bool global_factor = false;
  double factor_loading = 1.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SynthPanel {
  Panel panel;                  // units U00.., one variable "x", years 1..T
  std::set<SeriesId> truth;     // dominant series
  MatrixXd loadings;            // n_units x n_dominant, zero rows for drivers
  VectorXd factor;              // empty unless global_factor
};

// Drivers are the first n_dominant units: x_d = u_d. Others
// x_i = sum_d b_id u_d (+ g_i f) + u_i with b = scale * sign * U(0.5, 1) on a
// sparsity fraction of rows.
SynthPanel generate_panel(const SynthSpec& spec);

// Unit-major matrix view (T x n_units) of a one-variable panel.
CandidatePool pool_from_panel(const Panel& p);

struct SelectionAccuracy {
  bool exact = false;
  double precision = 0.0;  // 0 when nothing was detected
  double recall = 0.0;     // 1 when the truth is empty
  int n_hat_error = 0;     // |n_hat - |truth||
};

SelectionAccuracy selection_accuracy(const std::set<SeriesId>& truth,
                                     const std::vector<SeriesId>& detected);

struct TrialRecord {
  std::uint64_t seed = 0;
  std::vector<SeriesId> detected;
  SelectionAccuracy accuracy;
  bool failed = false;
};

struct SimulationReport {
  std::vector<TrialRecord> trials;
  double exact_rate = 0.0;
  double mean_precision = 0.0;
  double mean_recall = 0.0;
  double false_positive_rate = 0.0;  // share of trials detecting any non-driver
};

// Trial k uses seed stream_seed(spec.seed, k). Detection runs on the full
// synthetic sample with every unit as a target and no factors.
SimulationReport simulate_detection(const SynthSpec& spec, int trials, const DetectionConfig& cfg,
                                    Exec exec = Exec::Parallel);

}  // namespace ddnet

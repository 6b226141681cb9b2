#pragma once

#include "ddnet/config.hpp"
#include "ddnet/parallel.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ddnet {

// Stage order of the full pipeline. Each stage reads the artifacts earlier
// stages left in the run directory, so any stage can be rerun on its own.
const std::vector<std::string>& pipeline_stages();

void stage_ingest(const RunConfig& cfg, const std::string& out);
void stage_transform(const RunConfig& cfg, const std::string& out);
void stage_select(const RunConfig& cfg, const std::string& out, Exec exec = Exec::Parallel);
void stage_network(const RunConfig& cfg, const std::string& out);
void stage_detect(const RunConfig& cfg, const std::string& out);
void stage_forecast(const RunConfig& cfg, const std::string& out, Exec exec = Exec::Parallel);
void stage_evaluate(const RunConfig& cfg, const std::string& out, Exec exec = Exec::Parallel);
void stage_svar(const RunConfig& cfg, const std::string& out, Exec exec = Exec::Parallel);

void run_stage(const std::string& name, const RunConfig& cfg, const std::string& out,
               Exec exec = Exec::Parallel);

// Monte Carlo detection accuracy for every configured variant. Writes
// simulate.csv, simulate_summary.csv/json and simulate_truth.json.
Json stage_simulate(const RunConfig& cfg, const std::string& out, int trials,
                    Exec exec = Exec::Parallel);

struct PipelineOutcome {
  bool ok = true;
  std::string failed_stage;
  std::string error;
};

// Runs the stages in order (stopping after `stop_after` when given) and
// writes manifest.json / manifest.txt, also on failure.
PipelineOutcome run_pipeline(const RunConfig& cfg, const std::string& out, Exec exec = Exec::Parallel,
                             const std::optional<std::string>& stop_after = std::nullopt);

std::string ddnet_version();

}  // namespace ddnet

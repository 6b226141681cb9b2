// Serial vs OpenMP paths of the kernels that fan out over independent work
// items. Both paths produce identical output (see the unit tests), so the
// timings compare like with like.

#include "ddnet/evaluate.hpp"
#include "ddnet/rng.hpp"
#include "ddnet/select.hpp"
#include "ddnet/svar.hpp"
#include "ddnet/synthlab.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace ddnet;

namespace {

Exec exec_of(const benchmark::State& st) { return st.range(0) ? Exec::Parallel : Exec::Serial; }

MatrixXd normals(std::uint64_t seed, Eigen::Index r, Eigen::Index c) {
  auto rng = make_rng(seed, 0);
  std::normal_distribution<double> nd;
  MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = nd(rng);
  return m;
}

void BM_select_rows(benchmark::State& st) {
  SynthSpec spec;
  spec.n_units = 40;
  auto panel = generate_panel(spec);
  auto pool = pool_from_panel(panel.panel);
  SelectionConfig cfg;
  cfg.method = st.range(1) ? SelectMethod::OCMT : SelectMethod::LASSO;
  for (auto _ : st)
    benchmark::DoNotOptimize(select_rows(pool.ids, pool, MatrixXd(pool.X.rows(), 0), cfg, exec_of(st)));
}
BENCHMARK(BM_select_rows)->ArgNames({"par", "ocmt"})->ArgsProduct({{0, 1}, {0, 1}})
    ->Unit(benchmark::kMillisecond);

void BM_mcs(benchmark::State& st) {
  MatrixXd losses = normals(3, 40, 4).array().square();
  MCSConfig cfg;
  cfg.reps = 1000;
  for (auto _ : st) benchmark::DoNotOptimize(mcs(losses, cfg, exec_of(st)));
}
BENCHMARK(BM_mcs)->ArgName("par")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_bootstrap_irf(benchmark::State& st) {
  MatrixXd e = normals(5, 200, 3);
  MatrixXd Y(200, 3);
  Y.row(0) = e.row(0);
  for (int t = 1; t < 200; ++t) Y.row(t) = 0.4 * Y.row(t - 1) + e.row(t);
  auto m = fit_var(Y, 2);
  for (auto _ : st) benchmark::DoNotOptimize(bootstrap_irf_ci(m, 10, 200, 7, exec_of(st)));
}
BENCHMARK(BM_bootstrap_irf)->ArgName("par")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_simulate_detection(benchmark::State& st) {
  SynthSpec spec;
  DetectionConfig cfg;
  for (auto _ : st) benchmark::DoNotOptimize(simulate_detection(spec, 8, cfg, exec_of(st)));
}
BENCHMARK(BM_simulate_detection)->ArgName("par")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

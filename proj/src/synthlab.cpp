#include "ddnet/synthlab.hpp"

#include "ddnet/error.hpp"
#include "ddnet/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>

namespace ddnet {

void SynthSpec::validate() const {
  if (n_units < 2) throw ConfigError("synth: n_units must be at least 2");
  if (n_periods < 2) throw ConfigError("synth: n_periods must be at least 2");
  if (n_dominant < 0 || n_dominant >= n_units)
    throw ConfigError("synth: n_dominant must be in [0, n_units)");
  if (!(loading_scale > 0.0)) throw ConfigError("synth: loading_scale must be positive");
  if (!(noise_sd > 0.0)) throw ConfigError("synth: noise_sd must be positive");
  if (!(loading_sparsity > 0.0 && loading_sparsity <= 1.0))
    throw ConfigError("synth: loading_sparsity must be in (0, 1]");
}

SynthPanel generate_panel(const SynthSpec& spec) {
  spec.validate();
  const int N = spec.n_units, T = spec.n_periods, D = spec.n_dominant;
  std::vector<CountryId> units;
  for (int i = 0; i < N; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "U%02d", i);
    units.emplace_back(buf);
  }
  std::vector<int> years(T);
  std::iota(years.begin(), years.end(), 1);

  SynthPanel out;
  out.panel = Panel(units, {"x"}, years);
  out.panel.meta["source"] = "synthlab";

  // Separate streams for loadings, membership and innovations.
  auto load_rng = make_rng(spec.seed, 0);
  auto noise_rng = make_rng(spec.seed, 1);
  std::uniform_real_distribution<double> unif(0.5, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> gauss(0.0, spec.noise_sd);

  const int n_followers = N - D;
  const int n_loaded = std::max(1, static_cast<int>(std::lround(spec.loading_sparsity * n_followers)));
  out.loadings = MatrixXd::Zero(N, D);
  for (int d = 0; d < D; ++d) {
    std::vector<int> followers(n_followers);
    std::iota(followers.begin(), followers.end(), D);
    std::shuffle(followers.begin(), followers.end(), load_rng);
    for (int k = 0; k < n_loaded; ++k) {
      const double sign = coin(load_rng) ? 1.0 : -1.0;
      out.loadings(followers[k], d) = spec.loading_scale * sign * unif(load_rng);
    }
  }
  VectorXd g = VectorXd::Zero(N);
  if (spec.global_factor) {
    std::uniform_real_distribution<double> gl(0.5, 1.5);
    for (int i = 0; i < N; ++i) g(i) = spec.factor_loading * gl(load_rng);
  }

  MatrixXd U(T, N);
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < N; ++i) U(t, i) = gauss(noise_rng);
  if (spec.global_factor) {
    std::normal_distribution<double> fd(0.0, 1.0);
    out.factor.resize(T);
    for (int t = 0; t < T; ++t) out.factor(t) = fd(noise_rng);
  }

  for (int i = 0; i < N; ++i) {
    VectorXd x = U.col(i);
    if (i >= D) {
      for (int d = 0; d < D; ++d) x += out.loadings(i, d) * U.col(d);
      if (spec.global_factor) x += g(i) * out.factor;
    }
    out.panel.set_series(static_cast<std::size_t>(i), 0, x);
  }
  for (int d = 0; d < D; ++d) out.truth.insert({units[d], "x"});
  return out;
}

CandidatePool pool_from_panel(const Panel& p) {
  CandidatePool pool;
  pool.ids = p.series_ids();
  pool.X.resize(static_cast<Eigen::Index>(p.n_periods()), static_cast<Eigen::Index>(pool.ids.size()));
  for (std::size_t j = 0; j < pool.ids.size(); ++j)
    pool.X.col(static_cast<Eigen::Index>(j)) = p.series(pool.ids[j]);
  return pool;
}

SelectionAccuracy selection_accuracy(const std::set<SeriesId>& truth,
                                     const std::vector<SeriesId>& detected) {
  SelectionAccuracy a;
  std::set<SeriesId> det(detected.begin(), detected.end());
  int hits = 0;
  for (const auto& d : det) hits += truth.count(d) ? 1 : 0;
  a.exact = det == truth;
  a.precision = det.empty() ? 0.0 : double(hits) / double(det.size());
  a.recall = truth.empty() ? 1.0 : double(hits) / double(truth.size());
  a.n_hat_error = std::abs(static_cast<int>(det.size()) - static_cast<int>(truth.size()));
  return a;
}

SimulationReport simulate_detection(const SynthSpec& spec, int trials, const DetectionConfig& cfg,
                                    Exec exec) {
  if (trials < 1) throw ArgumentError("simulate: trials must be at least 1");
  spec.validate();
  SimulationReport rep;
  rep.trials.resize(trials);
  // Trials run in parallel; rows inside a trial stay serial.
  run_for(exec, trials, [&](std::ptrdiff_t k) {
    SynthSpec s = spec;
    s.seed = stream_seed(spec.seed, static_cast<std::uint64_t>(k));
    TrialRecord& rec = rep.trials[k];
    rec.seed = s.seed;
    try {
      auto sp = generate_panel(s);
      auto pool = pool_from_panel(sp.panel);
      auto run = run_detection(pool.ids, pool, MatrixXd(), cfg, Exec::Serial);
      rec.detected = run.drivers.drivers;
      rec.accuracy = selection_accuracy(sp.truth, rec.detected);
    } catch (const std::exception&) {
      rec.failed = true;
      rec.accuracy = selection_accuracy({}, {});
      rec.accuracy.exact = false;
    }
  });
  int fp = 0;
  for (const auto& r : rep.trials) {
    rep.exact_rate += r.accuracy.exact ? 1.0 : 0.0;
    rep.mean_precision += r.accuracy.precision;
    rep.mean_recall += r.accuracy.recall;
    if (!r.failed && r.accuracy.precision < 1.0 && !r.detected.empty()) ++fp;
  }
  rep.exact_rate /= trials;
  rep.mean_precision /= trials;
  rep.mean_recall /= trials;
  rep.false_positive_rate = double(fp) / trials;
  return rep;
}

}  // namespace ddnet

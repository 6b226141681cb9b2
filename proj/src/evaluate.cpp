#include "ddnet/evaluate.hpp"

#include "ddnet/error.hpp"
#include "ddnet/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ddnet {

namespace {

void check_aligned(const ForecastSet& a, const ForecastSet& b) {
  if (a.dates != b.dates) throw AlignmentError("forecast sets are not aligned on the same dates");
}

}  // namespace

LossRow loss_metrics(const ForecastSet& f, const ForecastSet& benchmark) {
  check_aligned(f, benchmark);
  auto metrics = [](const ForecastSet& s) {
    double se = 0.0, ae = 0.0;
    for (std::size_t i = 0; i < s.predictions.size(); ++i) {
      const double e = s.actuals[i] - s.predictions[i];
      se += e * e;
      ae += std::abs(e);
    }
    const double n = std::max<double>(1.0, double(s.predictions.size()));
    return std::pair{std::sqrt(se / n), ae / n};
  };
  LossRow row;
  row.target = f.target;
  row.model = f.model;
  row.horizon = f.horizon;
  row.n_obs = static_cast<int>(f.predictions.size());
  auto [rmse, mae] = metrics(f);
  auto [brmse, bmae] = metrics(benchmark);
  row.rmse = rmse;
  row.mae = mae;
  if (brmse > 0.0 && bmae > 0.0) {
    row.rmse_ratio = rmse / brmse;
    row.mae_ratio = mae / bmae;
  } else {
    row.ratio_defined = false;
    row.rmse_ratio = row.mae_ratio = std::numeric_limits<double>::quiet_NaN();
  }
  return row;
}

std::vector<double> forecast_losses(const ForecastSet& f, LossKind kind) {
  std::vector<double> out(f.predictions.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double e = f.actuals[i] - f.predictions[i];
    out[i] = kind == LossKind::SQUARED ? e * e : std::abs(e);
  }
  return out;
}

DMResult dm_test(std::span<const double> loss_a, std::span<const double> loss_b, int h) {
  if (loss_a.size() != loss_b.size()) throw ArgumentError("DM test: loss series differ in length");
  if (loss_a.size() < 5) throw SampleSizeError("DM test needs at least 5 observations");
  if (h < 1) throw ArgumentError("DM test: horizon must be at least 1");
  const std::size_t n = loss_a.size();
  std::vector<double> d(n);
  double sum = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    d[t] = loss_a[t] - loss_b[t];
    sum += d[t];
  }
  const double m = sum / double(n);
  auto autocov = [&](std::size_t lag) {
    double acc = 0.0;
    for (std::size_t t = lag; t < n; ++t) acc += (d[t] - m) * (d[t - lag] - m);
    return acc / double(n);
  };
  DMResult r;
  r.n_obs = static_cast<int>(n);
  r.hac_lag = h - 1;
  double var = autocov(0);
  for (int l = 1; l <= r.hac_lag && static_cast<std::size_t>(l) < n; ++l)
    var += 2.0 * (1.0 - double(l) / double(h)) * autocov(l);
  if (!(var > 0.0)) {
    r.degenerate = true;
    if (m == 0.0) {
      r.statistic = 0.0;
      r.p_value = 1.0;
    } else {
      r.statistic = std::copysign(INFINITY, m);
      r.p_value = 0.0;
    }
    return r;
  }
  r.statistic = m / std::sqrt(var / double(n));
  r.p_value = two_sided_p(r.statistic, 0.0);
  return r;
}

ShareRow dm_share_table(const std::vector<DMResult>& results, double alpha) {
  ShareRow row;
  row.n = static_cast<int>(results.size());
  if (results.empty()) {
    row.empty = true;
    return row;
  }
  int pos = 0, sig_pos = 0, sig_neg = 0;
  for (const auto& r : results) {
    const bool sig = r.p_value <= alpha;
    if (r.statistic > 0.0) {
      ++pos;
      if (sig) ++sig_pos;
    } else if (sig) {
      ++sig_neg;
    }
  }
  const double n = double(results.size());
  row.positive_pct = 100.0 * pos / n;
  row.nonpositive_pct = 100.0 * (n - pos) / n;
  row.sig_positive_pct = 100.0 * sig_pos / n;
  row.sig_nonpositive_pct = 100.0 * sig_neg / n;
  return row;
}

CrossSectionDM cross_section_dm(const MatrixXd& diffs, const std::vector<int>& dates,
                                int min_units) {
  if (static_cast<Eigen::Index>(dates.size()) != diffs.rows())
    throw ArgumentError("cross_section_dm: one date per row required");
  CrossSectionDM out;
  for (Eigen::Index t = 0; t < diffs.rows(); ++t) {
    std::vector<double> v;
    for (Eigen::Index i = 0; i < diffs.cols(); ++i)
      if (std::isfinite(diffs(t, i))) v.push_back(diffs(t, i));
    if (static_cast<int>(v.size()) < min_units) {
      out.skipped_dates.push_back(dates[t]);
      continue;
    }
    double s = 0.0;
    for (double x : v) s += x;
    const double n = double(v.size());
    const double m = s / n;
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    const double sd = std::sqrt(ss / (n - 1.0));
    double stat;
    if (sd > 0.0)
      stat = m / (sd / std::sqrt(n));
    else
      stat = m == 0.0 ? 0.0 : std::copysign(INFINITY, m);
    out.points.push_back({dates[t], stat, static_cast<int>(v.size())});
  }
  return out;
}

void MCSConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("mcs.alpha must lie in (0, 1)");
  if (block_len < 1) throw ConfigError("mcs.block_len must be at least 1");
  if (reps < 100) throw ConfigError("mcs.reps must be at least 100");
}

std::vector<int> moving_block_indices(int n, int block_len, std::uint64_t seed, std::uint64_t rep) {
  auto rng = make_rng(seed, rep);
  const int b = std::min(block_len, n);
  std::uniform_int_distribution<int> start(0, n - b);
  std::vector<int> idx;
  idx.reserve(n);
  while (static_cast<int>(idx.size()) < n) {
    const int s = start(rng);
    for (int k = 0; k < b && static_cast<int>(idx.size()) < n; ++k) idx.push_back(s + k);
  }
  return idx;
}

MCSResult mcs(const MatrixXd& losses, const MCSConfig& cfg, Exec exec) {
  cfg.validate();
  const int n = static_cast<int>(losses.rows());
  const int m = static_cast<int>(losses.cols());
  if (m < 2) throw ArgumentError("MCS needs at least 2 models");
  if (n < 10) throw SampleSizeError("MCS needs at least 10 periods");

  const VectorXd mean_loss = losses.colwise().mean().transpose();
  MatrixXd boot(cfg.reps, m);
  run_for(exec, cfg.reps, [&](std::ptrdiff_t b) {
    const auto idx = moving_block_indices(n, cfg.block_len, cfg.seed, static_cast<std::uint64_t>(b));
    for (int i = 0; i < m; ++i) {
      double s = 0.0;
      for (int t : idx) s += losses(t, i);
      boot(b, i) = s / double(n);
    }
  });

  // Bootstrap variance of every pairwise mean differential.
  MatrixXd var = MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      const double dbar = mean_loss(i) - mean_loss(j);
      double acc = 0.0;
      for (int b = 0; b < cfg.reps; ++b) {
        const double e = boot(b, i) - boot(b, j) - dbar;
        acc += e * e;
      }
      var(i, j) = var(j, i) = acc / double(cfg.reps);
    }
  auto tstat = [&](int i, int j) {
    const double dbar = mean_loss(i) - mean_loss(j);
    if (var(i, j) > 0.0) return dbar / std::sqrt(var(i, j));
    return dbar == 0.0 ? 0.0 : std::copysign(INFINITY, dbar);
  };

  MCSResult res;
  res.alpha = cfg.alpha;
  res.block_len = cfg.block_len;
  res.reps = cfg.reps;
  res.seed = cfg.seed;
  res.p_values.assign(m, 1.0);
  std::vector<int> alive(m);
  for (int i = 0; i < m; ++i) alive[i] = i;
  double running = 0.0;
  bool stopped = false;
  std::vector<bool> survives(m, false);

  while (alive.size() > 1) {
    double T_R = 0.0;
    int worst = alive.front();
    double worst_score = -INFINITY;
    for (int i : alive) {
      double score = -INFINITY;
      for (int j : alive) {
        if (i == j) continue;
        const double t = tstat(i, j);
        score = std::max(score, t);
        T_R = std::max(T_R, std::abs(t));
      }
      if (score > worst_score) {
        worst_score = score;
        worst = i;
      }
    }
    int exceed = 0;
    for (int b = 0; b < cfg.reps; ++b) {
      double tb = 0.0;
      for (std::size_t a = 0; a < alive.size(); ++a)
        for (std::size_t c = a + 1; c < alive.size(); ++c) {
          const int i = alive[a], j = alive[c];
          if (!(var(i, j) > 0.0)) continue;
          const double dstar = boot(b, i) - boot(b, j) - (mean_loss(i) - mean_loss(j));
          tb = std::max(tb, std::abs(dstar) / std::sqrt(var(i, j)));
        }
      if (tb >= T_R) ++exceed;
    }
    const double P = double(exceed) / double(cfg.reps);
    running = std::max(running, P);
    if (!stopped && P >= cfg.alpha) {
      stopped = true;
      for (int i : alive) survives[i] = true;
    }
    res.p_values[worst] = running;
    res.elimination_order.push_back(worst);
    alive.erase(std::find(alive.begin(), alive.end(), worst));
  }
  res.elimination_order.push_back(alive.front());
  res.p_values[alive.front()] = 1.0;
  if (!stopped) survives[alive.front()] = true;
  for (int i = 0; i < m; ++i)
    if (survives[i]) res.surviving.push_back(i);
  return res;
}

}  // namespace ddnet

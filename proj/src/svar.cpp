#include "ddnet/svar.hpp"

#include "ddnet/error.hpp"
#include "ddnet/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <numeric>

namespace ddnet {

namespace {

struct VarOls {
  VectorXd c;
  std::vector<MatrixXd> A;
  MatrixXd resid;
};

// OLS of y_t on [1, y_{t-1}, ..., y_{t-p}] for t in [start, T).
VarOls var_ols(const MatrixXd& Y, int p, int start) {
  const int T = static_cast<int>(Y.rows()), S = static_cast<int>(Y.cols());
  const int n = T - start;
  MatrixXd X(n, 1 + S * p);
  MatrixXd Yt(n, S);
  for (int r = 0; r < n; ++r) {
    const int t = start + r;
    X(r, 0) = 1.0;
    for (int l = 1; l <= p; ++l) X.block(r, 1 + S * (l - 1), 1, S) = Y.row(t - l);
    Yt.row(r) = Y.row(t);
  }
  MatrixXd B = X.colPivHouseholderQr().solve(Yt);
  VarOls out;
  out.c = B.row(0).transpose();
  for (int l = 1; l <= p; ++l) out.A.push_back(B.block(1 + S * (l - 1), 0, S, S).transpose());
  out.resid = Yt - X * B;
  return out;
}

bool try_cholesky(const MatrixXd& sigma, MatrixXd& L) {
  Eigen::LLT<MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) return false;
  L = llt.matrixL();
  for (Eigen::Index i = 0; i < L.rows(); ++i)
    if (!(L(i, i) > 0.0)) return false;
  return true;
}

}  // namespace

double var_aic(const MatrixXd& sigma_u, int S, int p, int n_obs) {
  return std::log(sigma_u.determinant()) + 2.0 * double(S * S * p + S) / double(n_obs);
}

double var_loglik(const SVARModel& m) {
  const double S = double(m.sigma_u.rows());
  const double n = double(m.n_obs);
  return -0.5 * n * (S * std::log(2.0 * std::numbers::pi) + std::log(m.sigma_u.determinant()) + S);
}

MatrixXd cholesky_identify(const MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols()) throw DecompositionError("covariance must be square");
  if (!sigma.isApprox(sigma.transpose(), 1e-12))
    throw DecompositionError("covariance must be symmetric");
  MatrixXd L;
  if (!try_cholesky(sigma, L)) throw DecompositionError("covariance is not positive definite");
  return L;
}

double companion_max_root(const std::vector<MatrixXd>& A) {
  if (A.empty()) return 0.0;
  const Eigen::Index S = A.front().rows();
  const Eigen::Index p = static_cast<Eigen::Index>(A.size());
  MatrixXd C = MatrixXd::Zero(S * p, S * p);
  for (Eigen::Index l = 0; l < p; ++l) C.block(0, S * l, S, S) = A[l];
  if (p > 1) C.block(S, 0, S * (p - 1), S * (p - 1)).setIdentity();
  Eigen::EigenSolver<MatrixXd> es(C, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

SVARModel fit_var(const MatrixXd& Y, int max_lag, std::vector<std::string> names,
                  std::optional<int> fixed_lag) {
  const int T = static_cast<int>(Y.rows()), S = static_cast<int>(Y.cols());
  if (S < 1) throw ArgumentError("VAR needs at least one variable");
  if (max_lag < 1) throw ArgumentError("VAR max_lag must be at least 1");
  if (fixed_lag && (*fixed_lag < 1)) throw ArgumentError("VAR lag must be at least 1");
  const int search_max = fixed_lag ? *fixed_lag : max_lag;
  if (T < S * search_max + 10)
    throw SampleSizeError("VAR needs T >= S * max_lag + 10 = " + std::to_string(S * search_max + 10) +
                          ", have " + std::to_string(T));
  SVARModel m;
  m.variables = std::move(names);
  if (m.variables.empty())
    for (int s = 0; s < S; ++s) m.variables.push_back("y" + std::to_string(s));
  if (static_cast<int>(m.variables.size()) != S) throw ArgumentError("VAR: one name per column");
  m.data = Y;

  if (fixed_lag) {
    m.lag = *fixed_lag;
  } else {
    double best = INFINITY;
    for (int p = 1; p <= max_lag; ++p) {
      auto fit = var_ols(Y, p, max_lag);
      const int n = T - max_lag;
      const MatrixXd sig = fit.resid.transpose() * fit.resid / double(n);
      const double aic = var_aic(sig, S, p, n);
      m.aic_by_lag.push_back(aic);
      if (aic < best) {
        best = aic;
        m.lag = p;
      }
    }
  }
  auto fit = var_ols(Y, m.lag, m.lag);
  m.intercept = fit.c;
  m.A = fit.A;
  m.resid = fit.resid;
  m.n_obs = T - m.lag;
  m.sigma_u = fit.resid.transpose() * fit.resid / double(m.n_obs);
  m.sigma_u = 0.5 * (m.sigma_u + m.sigma_u.transpose());
  if (!try_cholesky(m.sigma_u, m.chol)) {
    MatrixXd jittered = m.sigma_u + 1e-12 * MatrixXd::Identity(S, S);
    if (!try_cholesky(jittered, m.chol))
      throw DecompositionError("VAR innovation covariance is not positive definite");
    m.sigma_u = jittered;
    m.jittered = true;
  }
  m.max_root = companion_max_root(m.A);
  m.stable = m.max_root < 1.0;
  return m;
}

std::vector<MatrixXd> ma_coefficients(const std::vector<MatrixXd>& A, int H) {
  const Eigen::Index S = A.empty() ? 0 : A.front().rows();
  std::vector<MatrixXd> psi;
  psi.push_back(MatrixXd::Identity(S, S));
  for (int h = 1; h <= H; ++h) {
    MatrixXd acc = MatrixXd::Zero(S, S);
    for (int l = 1; l <= static_cast<int>(A.size()) && l <= h; ++l) acc += A[l - 1] * psi[h - l];
    psi.push_back(acc);
  }
  return psi;
}

std::vector<MatrixXd> irf(const SVARModel& m, int H) {
  auto psi = ma_coefficients(m.A, H);
  for (auto& p : psi) p = p * m.chol;
  return psi;
}

IRFBundle bootstrap_irf_ci(const SVARModel& m, int H, int reps, std::uint64_t seed, Exec exec) {
  if (reps < 1) throw ArgumentError("bootstrap needs at least one replication");
  const int T = static_cast<int>(m.data.rows()), S = static_cast<int>(m.data.cols());
  const int p = m.lag;
  IRFBundle out;
  out.H = H;
  out.reps = reps;
  out.seed = seed;
  out.point = irf(m, H);

  MatrixXd centered = m.resid.rowwise() - m.resid.colwise().mean();
  const int n_res = static_cast<int>(centered.rows());
  std::vector<std::vector<MatrixXd>> draws(reps);
  std::vector<char> unstable(reps, 0), failed(reps, 0);
  run_for(exec, reps, [&](std::ptrdiff_t b) {
    auto rng = make_rng(seed, static_cast<std::uint64_t>(b));
    std::uniform_int_distribution<int> pick(0, n_res - 1);
    MatrixXd Y(T, S);
    Y.topRows(p) = m.data.topRows(p);
    for (int t = p; t < T; ++t) {
      VectorXd y = m.intercept + centered.row(pick(rng)).transpose();
      for (int l = 1; l <= p; ++l) y += m.A[l - 1] * Y.row(t - l).transpose();
      Y.row(t) = y.transpose();
    }
    try {
      SVARModel mb = fit_var(Y, p, m.variables, p);
      unstable[b] = !mb.stable;
      draws[b] = irf(mb, H);
    } catch (const std::exception&) {
      failed[b] = 1;
    }
  });
  out.unstable_reps = static_cast<int>(std::count(unstable.begin(), unstable.end(), 1));
  out.failed_reps = static_cast<int>(std::count(failed.begin(), failed.end(), 1));

  out.lower.assign(H + 1, MatrixXd::Zero(S, S));
  out.upper.assign(H + 1, MatrixXd::Zero(S, S));
  std::vector<double> vals;
  for (int h = 0; h <= H; ++h)
    for (int i = 0; i < S; ++i)
      for (int k = 0; k < S; ++k) {
        vals.clear();
        for (int b = 0; b < reps; ++b)
          if (!failed[b]) vals.push_back(draws[b][h](i, k));
        if (vals.empty()) {
          out.lower[h](i, k) = out.upper[h](i, k) = out.point[h](i, k);
          continue;
        }
        out.lower[h](i, k) = quantile(vals, 0.025);
        out.upper[h](i, k) = quantile(vals, 0.975);
      }
  return out;
}

FEVDTable fevd_from_irf(const std::vector<MatrixXd>& irfs, int H) {
  if (H < 1 || static_cast<int>(irfs.size()) < H) throw ArgumentError("FEVD horizon exceeds IRFs");
  const Eigen::Index S = irfs.front().rows();
  FEVDTable tab;
  MatrixXd cum = MatrixXd::Zero(S, S);
  for (int h = 1; h <= H; ++h) {
    cum += irfs[h - 1].array().square().matrix();
    MatrixXd share(S, S);
    for (Eigen::Index i = 0; i < S; ++i) {
      const double total = cum.row(i).sum();
      share.row(i) = total > 0.0 ? MatrixXd(cum.row(i) / total) : MatrixXd::Zero(1, S);
    }
    tab.shares.push_back(share);
  }
  return tab;
}

FEVDTable fevd(const SVARModel& m, int H) { return fevd_from_irf(irf(m, H), H); }

OrderingRange ordering_range(const SVARModel& m, int H, int response) {
  const int S = static_cast<int>(m.sigma_u.rows());
  if (S > 8)
    throw ArgumentError("ordering_range: " + std::to_string(S - 1) +
                        " drivers would need too many permutations; restrict to at most 7");
  OrderingRange out;
  out.horizon = H;
  out.min_share.assign(S, INFINITY);
  out.max_share.assign(S, -INFINITY);
  std::vector<int> perm(S);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    MatrixXd P = MatrixXd::Zero(S, S);  // new index r holds old variable perm[r]
    for (int r = 0; r < S; ++r) P(r, perm[r]) = 1.0;
    SVARModel pm;
    pm.sigma_u = P * m.sigma_u * P.transpose();
    for (const auto& A : m.A) pm.A.push_back(P * A * P.transpose());
    pm.chol = cholesky_identify(pm.sigma_u);
    const auto tab = fevd(pm, H);
    const MatrixXd& share = tab.shares[H - 1];
    int resp_new = 0;
    while (perm[resp_new] != response) ++resp_new;
    for (int r = 0; r < S; ++r) {
      const double v = share(resp_new, r);
      out.min_share[perm[r]] = std::min(out.min_share[perm[r]], v);
      out.max_share[perm[r]] = std::max(out.max_share[perm[r]], v);
    }
    ++out.permutations;
  } while (std::next_permutation(perm.begin() + 1, perm.end()));
  return out;
}

}  // namespace ddnet

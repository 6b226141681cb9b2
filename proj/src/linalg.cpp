#include "ddnet/linalg.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace ddnet {

std::vector<int> independent_columns(const MatrixXd& X, double rel_tol) {
  std::vector<int> kept;
  MatrixXd basis(X.rows(), 0);
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    VectorXd v = X.col(j);
    const double norm0 = v.norm();
    if (norm0 == 0.0) continue;
    // Two passes of Gram-Schmidt keep the basis orthonormal to working precision.
    for (int pass = 0; pass < 2 && basis.cols() > 0; ++pass) v -= basis * (basis.transpose() * v);
    const double norm1 = v.norm();
    if (norm1 <= rel_tol * norm0 || norm1 <= 1e-14 * std::sqrt(double(X.rows()))) continue;
    basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
    basis.col(basis.cols() - 1) = v / norm1;
    kept.push_back(static_cast<int>(j));
  }
  return kept;
}

OlsFit ols(const MatrixXd& X, const VectorXd& y, double rel_tol) {
  OlsFit fit;
  fit.kept = independent_columns(X, rel_tol);
  for (int j = 0, k = 0; j < X.cols(); ++j) {
    if (k < static_cast<int>(fit.kept.size()) && fit.kept[k] == j)
      ++k;
    else
      fit.dropped.push_back(j);
  }
  fit.coef = VectorXd::Zero(X.cols());
  if (!fit.kept.empty()) {
    MatrixXd Xk(X.rows(), fit.kept.size());
    for (std::size_t k = 0; k < fit.kept.size(); ++k) Xk.col(k) = X.col(fit.kept[k]);
    VectorXd b = Xk.householderQr().solve(y);
    for (std::size_t k = 0; k < fit.kept.size(); ++k) fit.coef(fit.kept[k]) = b(k);
    fit.fitted = Xk * b;
  } else {
    fit.fitted = VectorXd::Zero(y.size());
  }
  fit.resid = y - fit.fitted;
  fit.ssr = fit.resid.squaredNorm();
  return fit;
}

MatrixXd robust_covariance(const MatrixXd& X, const VectorXd& resid, int lags) {
  const Eigen::Index n = X.rows();
  MatrixXd xtx_inv = (X.transpose() * X).ldlt().solve(MatrixXd::Identity(X.cols(), X.cols()));
  MatrixXd meat = MatrixXd::Zero(X.cols(), X.cols());
  if (lags <= 0) {
    for (Eigen::Index t = 0; t < n; ++t) {
      const double h = X.row(t) * xtx_inv * X.row(t).transpose();
      const double denom = std::max(1.0 - h, 1e-12);
      const double w = resid(t) * resid(t) / (denom * denom);
      meat.noalias() += w * X.row(t).transpose() * X.row(t);
    }
  } else {
    MatrixXd scores = X.array().colwise() * resid.array();
    meat = scores.transpose() * scores;
    for (int l = 1; l <= lags && l < n; ++l) {
      const double w = 1.0 - double(l) / double(lags + 1);
      MatrixXd g = scores.bottomRows(n - l).transpose() * scores.topRows(n - l);
      meat += w * (g + g.transpose());
    }
  }
  return xtx_inv * meat * xtx_inv;
}

double hc3_satterthwaite_df(const MatrixXd& X, Eigen::Index col) {
  const Eigen::Index n = X.rows(), k = X.cols();
  Eigen::HouseholderQR<MatrixXd> qr(X);
  MatrixXd Q = qr.householderQ() * MatrixXd::Identity(n, k);
  // a = X (X'X)^{-1} e_col
  MatrixXd xtx_inv = (X.transpose() * X).ldlt().solve(MatrixXd::Identity(k, k));
  VectorXd a = X * xtx_inv.col(col);
  VectorXd d(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    const double om = std::max(1.0 - Q.row(t).squaredNorm(), 1e-12);
    d(t) = a(t) * a(t) / (om * om);
  }
  // G = M D M with M = I - QQ'
  MatrixXd DQ = d.asDiagonal() * Q;
  MatrixXd G = -Q * DQ.transpose();
  G += G.transpose().eval();
  G += Q * (Q.transpose() * DQ) * Q.transpose();
  G.diagonal() += d;
  const double ss = G.squaredNorm();
  if (!(ss > 0.0)) return double(n - k);
  const double tr = G.trace();
  return tr * tr / ss;
}

MatrixXd with_intercept(const MatrixXd& F, Eigen::Index rows) {
  MatrixXd Z(rows, 1 + F.cols());
  Z.col(0).setOnes();
  if (F.cols() > 0) Z.rightCols(F.cols()) = F;
  return Z;
}

MatrixXd residualize(const MatrixXd& Z, const MatrixXd& targets) {
  if (Z.cols() == 0) return targets;
  auto keep = independent_columns(Z);
  MatrixXd Zk(Z.rows(), keep.size());
  for (std::size_t k = 0; k < keep.size(); ++k) Zk.col(k) = Z.col(keep[k]);
  Eigen::HouseholderQR<MatrixXd> qr(Zk);
  MatrixXd coef = qr.solve(targets);
  return targets - Zk * coef;
}

double mean(const VectorXd& v) { return v.size() ? v.mean() : 0.0; }

double sample_sd(const VectorXd& v) {
  if (v.size() < 2) return 0.0;
  const double m = v.mean();
  return std::sqrt((v.array() - m).square().sum() / double(v.size() - 1));
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double pos = q * double(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - double(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double two_sided_p(double t, double df) {
  if (std::isnan(t)) return 1.0;
  if (std::isinf(t)) return 0.0;
  const double a = std::abs(t);
  if (df <= 0) return std::erfc(a / std::sqrt(2.0));
  boost::math::students_t_distribution<double> dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, a));
}

}  // namespace ddnet

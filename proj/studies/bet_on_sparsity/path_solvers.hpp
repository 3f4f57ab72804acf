#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <simkit/simkit.hpp>

namespace betsparse {

inline Eigen::MatrixXd to_eigen(const simkit::NumMatrix& m) {
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                        Eigen::RowMajor>>(
      m.data.data(), static_cast<Eigen::Index>(m.rows), static_cast<Eigen::Index>(m.cols));
}

inline simkit::NumMatrix from_eigen(const Eigen::MatrixXd& m) {
  simkit::NumMatrix out;
  out.rows = static_cast<std::size_t>(m.rows());
  out.cols = static_cast<std::size_t>(m.cols());
  out.data.resize(out.rows * out.cols);
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      out.data.data(), m.rows(), m.cols()) = m;
  return out;
}

inline Eigen::VectorXd to_eigen_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// A solution path over a tuning-parameter grid. beta is p x L, yhat = X*beta
/// is n x L, lambda and df have length L.
struct PathFit {
  Eigen::MatrixXd beta;
  Eigen::MatrixXd yhat;
  std::vector<double> lambda;
  std::vector<double> df;
};

inline double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

struct LassoOptions {
  int nlambda = 50;
  double lambda_min_ratio = 1e-4;
  double tol = 1e-7;      // relative to max(1, ||beta||_inf)
  long max_sweeps = 100000;
};

/// Lasso path by cyclic coordinate descent with warm starts: minimizes
/// (1/(2n)) ||y - X b||^2 + lambda ||b||_1, no intercept, no
/// standardization. The default grid has 50 log-spaced values from
/// lambda_max = max|X^T y|/n down to lambda_min_ratio * lambda_max.
inline PathFit lasso_path(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          std::optional<std::vector<double>> lambda = std::nullopt,
                          const LassoOptions& opts = {}) {
  const auto n = x.rows();
  const auto p = x.cols();
  if (y.size() != n) throw simkit::ContractError("lasso: y length does not match rows of x");
  if (!y.allFinite() || !x.allFinite())
    throw simkit::ContractError("lasso: non-finite inputs");
  const double dn = static_cast<double>(n);

  Eigen::VectorXd col_scale(p);  // ||x_j||^2 / n
  for (Eigen::Index j = 0; j < p; ++j) col_scale[j] = x.col(j).squaredNorm() / dn;

  std::vector<double> grid;
  if (lambda) {
    grid = *lambda;
    if (grid.empty()) throw simkit::ContractError("lasso: empty lambda grid");
  } else {
    // same per-column dot products as the descent sweeps, so beta stays
    // exactly zero at the grid head
    double lambda_max = 0.0;
    for (Eigen::Index j = 0; j < p; ++j)
      lambda_max = std::max(lambda_max, std::fabs(x.col(j).dot(y)) / dn);
    if (lambda_max <= 0) lambda_max = 1.0;  // y orthogonal to every column
    grid.resize(opts.nlambda);
    double log_max = std::log(lambda_max);
    double log_min = std::log(lambda_max * opts.lambda_min_ratio);
    for (int i = 0; i < opts.nlambda; ++i)
      grid[static_cast<std::size_t>(i)] =
          std::exp(log_max + (log_min - log_max) * i / (opts.nlambda - 1));
    grid[0] = lambda_max;
  }
  const auto L = static_cast<Eigen::Index>(grid.size());

  PathFit fit;
  fit.beta.setZero(p, L);
  fit.lambda = grid;
  fit.df.assign(grid.size(), 0.0);

  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd r = y;  // residual y - X b
  std::vector<Eigen::Index> active;
  std::vector<char> is_active(static_cast<std::size_t>(p), 0);

  auto sweep = [&](const std::vector<Eigen::Index>* subset, double lam) {
    double max_update = 0.0;
    auto update_one = [&](Eigen::Index j) {
      if (col_scale[j] == 0.0) return;
      double rho = x.col(j).dot(r) / dn + col_scale[j] * b[j];
      double bj = soft_threshold(rho, lam) / col_scale[j];
      double delta = bj - b[j];
      if (delta != 0.0) {
        r.noalias() -= delta * x.col(j);
        b[j] = bj;
        max_update = std::max(max_update, std::fabs(delta));
        if (bj != 0.0 && !is_active[static_cast<std::size_t>(j)]) {
          is_active[static_cast<std::size_t>(j)] = 1;
          active.push_back(j);
        }
      }
    };
    if (subset) {
      for (Eigen::Index j : *subset) update_one(j);
    } else {
      for (Eigen::Index j = 0; j < p; ++j) update_one(j);
    }
    return max_update;
  };

  for (Eigen::Index l = 0; l < L; ++l) {
    double lam = grid[static_cast<std::size_t>(l)];
    long sweeps = 0;
    while (true) {
      // full pass; converged when no coordinate (active or not) moves much
      double full_update = sweep(nullptr, lam);
      if (++sweeps > opts.max_sweeps)
        throw simkit::Error("lasso did not converge within sweep budget");
      double scale = std::max(1.0, b.lpNorm<Eigen::Infinity>());
      if (full_update < opts.tol * scale) break;
      // iterate on the active set until it settles, then re-check in full
      while (true) {
        double active_update = sweep(&active, lam);
        if (++sweeps > opts.max_sweeps)
          throw simkit::Error("lasso did not converge within sweep budget");
        scale = std::max(1.0, b.lpNorm<Eigen::Infinity>());
        if (active_update < opts.tol * scale) break;
      }
    }
    fit.beta.col(l) = b;
    int nonzero = 0;
    for (Eigen::Index j = 0; j < p; ++j)
      if (b[j] != 0.0) ++nonzero;
    fit.df[static_cast<std::size_t>(l)] = nonzero;
  }
  fit.yhat = x * fit.beta;
  return fit;
}

/// Effective degrees of freedom of ridge at penalty lam: sum d_i^2/(d_i^2+lam)
/// over the singular values of X.
inline double ridge_df(const Eigen::VectorXd& d, double lam) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    double d2 = d[i] * d[i];
    acc += d2 / (d2 + lam);
  }
  return acc;
}

/// Penalty value hitting a target df, by bisection on [0, 100 max d^2].
inline double ridge_lambda_for_df(const Eigen::VectorXd& d, double target,
                                  double tol = 1e-9) {
  double lo = 0.0;
  double hi = 100.0 * d.cwiseAbs2().maxCoeff();
  double f_lo = ridge_df(d, lo) - target;
  double f_hi = ridge_df(d, hi) - target;
  if (f_lo < 0.0 || f_hi > 0.0)
    throw simkit::Error("ridge df target " + simkit::double_to_string(target) +
                        " is not bracketed by [0, 100 max d^2]");
  for (int iter = 0; iter < 400; ++iter) {
    double mid = 0.5 * (lo + hi);
    double f = ridge_df(d, mid) - target;
    if (std::fabs(f) <= tol) return mid;
    if (f > 0.0) lo = mid;
    else hi = mid;
    if (lo == hi) break;
  }
  double best = 0.5 * (lo + hi);
  if (std::fabs(ridge_df(d, best) - target) > 1e-6)
    throw simkit::Error("ridge df bisection failed to reach tolerance");
  return best;
}

/// Ridge path via the SVD X = U diag(d) V^T: beta(lam) = V diag(d/(d^2+lam))
/// U^T y. Without an explicit grid, 50 lambda values are chosen to hit df
/// targets evenly spaced from 1 to n.
inline PathFit ridge_path(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          std::optional<std::vector<double>> lambda = std::nullopt,
                          int nlambda = 50) {
  const auto n = x.rows();
  if (y.size() != n) throw simkit::ContractError("ridge: y length does not match rows of x");
  if (!y.allFinite() || !x.allFinite())
    throw simkit::ContractError("ridge: non-finite inputs");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& d = svd.singularValues();

  PathFit fit;
  if (lambda) {
    fit.lambda = *lambda;
    if (fit.lambda.empty()) throw simkit::ContractError("ridge: empty lambda grid");
  } else {
    fit.lambda.resize(static_cast<std::size_t>(nlambda));
    for (int i = 0; i < nlambda; ++i) {
      double target = 1.0 + (static_cast<double>(n) - 1.0) * i / (nlambda - 1);
      fit.lambda[static_cast<std::size_t>(i)] = ridge_lambda_for_df(d, target);
    }
  }
  const auto L = static_cast<Eigen::Index>(fit.lambda.size());
  Eigen::VectorXd uty = svd.matrixU().transpose() * y;
  fit.beta.resize(x.cols(), L);
  fit.df.resize(fit.lambda.size());
  for (Eigen::Index l = 0; l < L; ++l) {
    double lam = fit.lambda[static_cast<std::size_t>(l)];
    Eigen::VectorXd w(d.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) w[i] = d[i] / (d[i] * d[i] + lam) * uty[i];
    fit.beta.col(l) = svd.matrixV() * w;
    fit.df[static_cast<std::size_t>(l)] = ridge_df(d, lam);
  }
  fit.yhat = x * fit.beta;
  return fit;
}

inline simkit::OutMap path_fit_to_out(const PathFit& fit) {
  return simkit::OutMap{{"beta", from_eigen(fit.beta)},
                        {"yhat", from_eigen(fit.yhat)},
                        {"lambda", fit.lambda},
                        {"df", fit.df}};
}

}  // namespace betsparse

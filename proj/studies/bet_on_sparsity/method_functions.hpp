#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <simkit/simkit.hpp>

#include "path_solvers.hpp"

namespace betsparse {

inline std::optional<std::vector<double>> lambda_from_extra(const simkit::ParamMap& extra) {
  if (const simkit::ParamValue* v = extra.find("lambda")) return v->vector();
  return std::nullopt;
}

inline simkit::MethodSpec lasso_method() {
  return simkit::new_method_spec(
      "lasso", "Lasso",
      [](const simkit::ModelSpec& model, const simkit::Draw& draw, simkit::RngStream&,
         const simkit::ParamMap& extra) {
        Eigen::MatrixXd x = to_eigen(model.params.at("x").matrix());
        Eigen::VectorXd y = to_eigen_vec(draw.payload.vector());
        return path_fit_to_out(lasso_path(x, y, lambda_from_extra(extra)));
      });
}

inline simkit::MethodSpec ridge_method() {
  return simkit::new_method_spec(
      "ridge", "Ridge",
      [](const simkit::ModelSpec& model, const simkit::Draw& draw, simkit::RngStream&,
         const simkit::ParamMap& extra) {
        Eigen::MatrixXd x = to_eigen(model.params.at("x").matrix());
        Eigen::VectorXd y = to_eigen_vec(draw.payload.vector());
        return path_fit_to_out(ridge_path(x, y, lambda_from_extra(extra)));
      });
}

/// Splits 0..n-1 into nfolds random folds: each fold gets round(n/nfolds)
/// indexes of a uniform random permutation, the last fold absorbing the
/// remainder.
inline std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t nfolds,
                                                        simkit::RngStream& rng) {
  if (nfolds < 1 || nfolds > n)
    throw simkit::ContractError("make_folds requires 1 <= nfolds <= n");
  auto base = static_cast<std::size_t>(
      std::nearbyint(static_cast<double>(n) / static_cast<double>(nfolds)));
  std::vector<std::size_t> sizes(nfolds, base);
  sizes[nfolds - 1] = base + n - base * nfolds;
  std::vector<std::size_t> perm = simkit::random_permutation(n, rng);
  std::vector<std::vector<std::size_t>> folds(nfolds);
  std::size_t at = 0;
  for (std::size_t f = 0; f < nfolds; ++f) {
    folds[f].assign(perm.begin() + static_cast<std::ptrdiff_t>(at),
                    perm.begin() + static_cast<std::ptrdiff_t>(at + sizes[f]));
    at += sizes[f];
  }
  return folds;
}

/// Ordinal j of a draw id "r<chunk>.<j>".
inline std::uint64_t draw_ordinal(const std::string& draw_id) {
  auto dot = draw_id.rfind('.');
  if (dot == std::string::npos)
    throw simkit::ContractError("draw id \"" + draw_id + "\" has no ordinal suffix");
  return static_cast<std::uint64_t>(std::stoull(draw_id.substr(dot + 1)));
}

/// Cross-validation as a method extension: refits the base method on each
/// training fold at the base fit's lambda grid, averages held-out squared
/// prediction error, and picks both the minimizing position and the
/// one-standard-error position (the largest grid position whose error is
/// within one SE of the minimum).
///
/// Folds are drawn from a substream forked by draw ordinal off the chunk
/// end state, so every method extended with cv sees identical folds on a
/// given draw.
inline simkit::MethodExtensionSpec cv_extension(std::size_t nfolds = 5) {
  return simkit::new_method_extension(
      "cv", "cross validated",
      [nfolds](const simkit::ModelSpec& model, const simkit::Draw& draw,
               const simkit::OutMap& base_out, const simkit::MethodSpec& base_method,
               simkit::RngStream& rng) {
        if (!base_out.contains("lambda"))
          throw simkit::ContractError("base method \"" + base_method.id.name +
                                      "\" output lacks a lambda grid; cannot cross validate");
        const std::vector<double>& lambda = base_out.at("lambda").vector();
        const auto L = lambda.size();
        const simkit::NumMatrix& x_full = model.params.at("x").matrix();
        const std::vector<double>& y_full = draw.payload.vector();
        const std::size_t n = x_full.rows;
        if (y_full.size() != n)
          throw simkit::ContractError("draw length does not match model rows");

        simkit::RngStream fold_rng = rng.fork(draw_ordinal(draw.id));
        auto folds = make_folds(n, nfolds, fold_rng);

        Eigen::MatrixXd err(static_cast<Eigen::Index>(L),
                            static_cast<Eigen::Index>(nfolds));
        for (std::size_t f = 0; f < nfolds; ++f) {
          std::vector<char> in_test(n, 0);
          for (std::size_t i : folds[f]) in_test[i] = 1;

          simkit::NumMatrix x_train, x_test;
          x_train.cols = x_test.cols = x_full.cols;
          std::vector<double> y_train, y_test;
          for (std::size_t i = 0; i < n; ++i) {
            auto row_begin = x_full.data.begin() + static_cast<std::ptrdiff_t>(i * x_full.cols);
            auto row_end = row_begin + static_cast<std::ptrdiff_t>(x_full.cols);
            if (in_test[i]) {
              x_test.data.insert(x_test.data.end(), row_begin, row_end);
              y_test.push_back(y_full[i]);
            } else {
              x_train.data.insert(x_train.data.end(), row_begin, row_end);
              y_train.push_back(y_full[i]);
            }
          }
          x_train.rows = y_train.size();
          x_test.rows = y_test.size();

          simkit::ModelSpec train = model;
          train.params.set("x", x_train);
          train.params.set("n", static_cast<std::int64_t>(x_train.rows));

          simkit::Draw train_draw{draw.id, y_train};
          simkit::OutMap fit = base_method.apply(train, train_draw, rng,
                                                 simkit::ParamMap{{"lambda", lambda}});

          Eigen::MatrixXd yhat =
              to_eigen(x_test) * to_eigen(fit.at("beta").matrix());
          Eigen::VectorXd yt = to_eigen_vec(y_test);
          for (Eigen::Index l = 0; l < yhat.cols(); ++l)
            err(l, static_cast<Eigen::Index>(f)) =
                (yhat.col(l) - yt).squaredNorm() / static_cast<double>(yt.size());
        }

        std::vector<double> m(L), se(L);
        for (std::size_t l = 0; l < L; ++l) {
          double mean = err.row(static_cast<Eigen::Index>(l)).mean();
          double ss = 0.0;
          for (std::size_t f = 0; f < nfolds; ++f) {
            double dlt = err(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(f)) - mean;
            ss += dlt * dlt;
          }
          m[l] = mean;
          se[l] = std::sqrt(ss / static_cast<double>(nfolds - 1)) /
                  std::sqrt(static_cast<double>(nfolds));
        }
        std::size_t imin = 0;
        for (std::size_t l = 1; l < L; ++l)
          if (m[l] < m[imin]) imin = l;
        std::size_t ioneserule = imin;
        for (std::size_t l = 0; l < L; ++l)
          if (m[l] <= m[imin] + se[imin]) ioneserule = l;  // last qualifying position

        const simkit::NumMatrix& base_beta = base_out.at("beta").matrix();
        std::vector<double> beta(base_beta.rows);
        for (std::size_t j = 0; j < base_beta.rows; ++j) beta[j] = base_beta.at(j, imin);
        Eigen::VectorXd yhat_full = to_eigen(x_full) * to_eigen_vec(beta);

        return simkit::OutMap{
            {"err", from_eigen(err)},
            {"m", m},
            {"se", se},
            {"imin", static_cast<std::int64_t>(imin)},
            {"ioneserule", static_cast<std::int64_t>(ioneserule)},
            {"beta", beta},
            {"yhat", std::vector<double>(yhat_full.data(), yhat_full.data() + yhat_full.size())}};
      });
}

}  // namespace betsparse

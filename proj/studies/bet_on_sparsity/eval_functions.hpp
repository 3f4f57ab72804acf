#pragma once

#include <algorithm>
#include <vector>

#include <simkit/simkit.hpp>

namespace betsparse {

/// Per-position mean over coordinates of squared coefficient error. For a
/// path output (beta is p x L) this is a length-L vector; for a selected
/// fit (beta is a p-vector, as after cross validation) it is a scalar.
inline std::vector<double> sqr_err_values(const simkit::ModelSpec& model,
                                          const simkit::OutMap& out) {
  const std::vector<double>& truth = model.params.at("beta").vector();
  const simkit::ParamValue& est = out.at("beta");
  std::vector<double> result;
  if (est.is_matrix()) {
    const simkit::NumMatrix& b = est.matrix();
    if (b.rows != truth.size())
      throw simkit::ContractError("estimated beta has wrong dimension");
    result.assign(b.cols, 0.0);
    for (std::size_t j = 0; j < b.rows; ++j)
      for (std::size_t l = 0; l < b.cols; ++l) {
        double d = b.at(j, l) - truth[j];
        result[l] += d * d;
      }
    for (double& v : result) v /= static_cast<double>(b.rows);
  } else {
    const std::vector<double>& b = est.vector();
    if (b.size() != truth.size())
      throw simkit::ContractError("estimated beta has wrong dimension");
    double acc = 0.0;
    for (std::size_t j = 0; j < b.size(); ++j) acc += (b[j] - truth[j]) * (b[j] - truth[j]);
    result.push_back(acc / static_cast<double>(b.size()));
  }
  return result;
}

inline simkit::MetricSpec sqr_err_metric() {
  return simkit::new_metric_spec(
      "sqr_err", "Mean squared error",
      [](const simkit::ModelSpec& model, const simkit::OutMap& out) {
        std::vector<double> v = sqr_err_values(model, out);
        if (v.size() == 1) return simkit::ParamValue(v.front());
        return simkit::ParamValue(std::move(v));
      });
}

inline simkit::MetricSpec best_sqr_err_metric() {
  return simkit::new_metric_spec(
      "best_sqr_err", "Best mean squared error",
      [](const simkit::ModelSpec& model, const simkit::OutMap& out) {
        std::vector<double> v = sqr_err_values(model, out);
        return simkit::ParamValue(*std::min_element(v.begin(), v.end()));
      });
}

inline simkit::MetricSpec df_metric() {
  return simkit::new_metric_spec(
      "df", "Degrees of freedom",
      [](const simkit::ModelSpec&, const simkit::OutMap& out) {
        return simkit::ParamValue(out.at("df").vector());
      });
}

}  // namespace betsparse

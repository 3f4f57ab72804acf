#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <simkit/simkit.hpp>

namespace betsparse {

/// Sparse linear model y = X b + e with X fixed (iid standard normal
/// entries, drawn once per model), b = (1,...,1,0,...,0) with k ones, and
/// noise sd chosen so the signal-to-noise ratio is 2.
inline simkit::ModelSpec make_sparse_linear_model(const simkit::ParamMap& args,
                                                  simkit::RngStream& rng) {
  auto n = args.at("n").integer();
  auto p = args.at("p").integer();
  auto k = args.at("k").integer();
  if (n < 1) throw simkit::ContractError("n must be >= 1");
  if (k < 1 || k > p)
    throw simkit::ContractError("k must satisfy 1 <= k <= p (got k=" + std::to_string(k) +
                                ", p=" + std::to_string(p) + ")");

  simkit::NumMatrix x;
  x.rows = static_cast<std::size_t>(n);
  x.cols = static_cast<std::size_t>(p);
  x.data.resize(x.rows * x.cols);
  for (double& v : x.data) v = rng.normal();

  std::vector<double> beta(static_cast<std::size_t>(p), 0.0);
  for (std::int64_t j = 0; j < k; ++j) beta[static_cast<std::size_t>(j)] = 1.0;

  std::vector<double> mu(static_cast<std::size_t>(n), 0.0);
  for (std::size_t i = 0; i < x.rows; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < static_cast<std::size_t>(k); ++j) acc += x.at(i, j);
    mu[i] = acc;  // x * beta with the 0/1 beta pattern
  }
  double sum_mu2 = 0.0;
  for (double v : mu) sum_mu2 += v * v;
  double sigma = std::sqrt(sum_mu2 / (static_cast<double>(n) * 2.0));

  char label[64];
  std::snprintf(label, sizeof(label), "n = %lld, p = %lld, k = %lld",
                static_cast<long long>(n), static_cast<long long>(p),
                static_cast<long long>(k));

  simkit::ParamMap params{{"x", std::move(x)}, {"beta", std::move(beta)},
                          {"mu", std::move(mu)}, {"sigma", sigma},
                          {"n", n},             {"p", p},
                          {"k", k}};
  return simkit::new_model_spec(
      "slm", label, std::move(params),
      [](const simkit::ParamMap& params, int nsim, simkit::RngStream& rng) {
        const auto& mu = params.at("mu").vector();
        double sigma = params.at("sigma").number();
        std::vector<simkit::ParamValue> draws;
        draws.reserve(static_cast<std::size_t>(nsim));
        for (int j = 0; j < nsim; ++j) {
          std::vector<double> y(mu.size());
          for (std::size_t i = 0; i < mu.size(); ++i) y[i] = mu[i] + sigma * rng.normal();
          draws.emplace_back(std::move(y));
        }
        return draws;
      });
}

}  // namespace betsparse

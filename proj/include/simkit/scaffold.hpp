#pragma once

#include <filesystem>
#include <string>

#include "simkit/detail/binio.hpp"
#include "simkit/errors.hpp"

namespace simkit {

namespace detail_scaffold {

inline constexpr const char* kModelFunctions = R"cpp(#pragma once

#include <simkit/simkit.hpp>

// Declares the data-generating model(s) of the study.
inline simkit::ModelSpec make_shifted_normal_model(const simkit::ParamMap& args,
                                                   simkit::RngStream&) {
  double theta = args.at("theta").as_double();
  auto n = args.at("n").integer();
  return simkit::new_model_spec(
      "shifted-normal", "theta = " + simkit::double_to_string(theta),
      simkit::ParamMap{{"theta", theta}, {"n", n}},
      [](const simkit::ParamMap& params, int nsim, simkit::RngStream& rng) {
        double mu = params.at("theta").as_double();
        auto len = params.at("n").integer();
        std::vector<simkit::ParamValue> draws;
        for (int j = 0; j < nsim; ++j) {
          std::vector<double> y(static_cast<std::size_t>(len));
          for (double& v : y) v = rng.normal(mu, 1.0);
          draws.emplace_back(std::move(y));
        }
        return draws;
      });
}
)cpp";

inline constexpr const char* kMethodFunctions = R"cpp(#pragma once

#include <numeric>

#include <simkit/simkit.hpp>

// Declares the method(s) compared by the study.
inline simkit::MethodSpec sample_mean_method() {
  return simkit::new_method_spec(
      "sample-mean", "Sample mean",
      [](const simkit::ModelSpec&, const simkit::Draw& draw, simkit::RngStream&,
         const simkit::ParamMap&) {
        const auto& y = draw.payload.vector();
        double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
        return simkit::OutMap{{"est", mean}};
      });
}
)cpp";

inline constexpr const char* kEvalFunctions = R"cpp(#pragma once

#include <cmath>

#include <simkit/simkit.hpp>

// Declares the metric(s) used to evaluate method outputs.
inline simkit::MetricSpec abs_error_metric() {
  return simkit::new_metric_spec(
      "abs_err", "Absolute error",
      [](const simkit::ModelSpec& model, const simkit::OutMap& out) {
        return simkit::ParamValue(
            std::fabs(out.at("est").as_double() - model.params.at("theta").as_double()));
      });
}
)cpp";

inline constexpr const char* kMain = R"cpp(#include <simkit/cli.hpp>
#include <simkit/simkit.hpp>

#include "eval_functions.hpp"
#include "method_functions.hpp"
#include "model_functions.hpp"

int main(int argc, char** argv) {
  simkit::StudyDef study;
  study.name = "my-study";
  study.label = "My study";
  study.default_nsim = 10;
  study.sources = {__FILE__};
  study.run = [](const simkit::RunOptions& opts) {
    simkit::Simulation sim = simkit::open_or_new_simulation("my-study", "My study", opts);
    simkit::generate_model(sim, make_shifted_normal_model,
                           simkit::ParamMap{{"theta", 2.0}, {"n", std::int64_t{50}}});
    simkit::simulate_from_model(sim, opts.nsim, opts.indexes, {opts.workers});
    simkit::run_method(sim, {sample_mean_method()}, {opts.workers});
    simkit::evaluate(sim, {abs_error_metric()});
    return sim;
  };
  return simkit::cli_main(argc, argv, study);
}
)cpp";

inline constexpr const char* kWriteup = R"md(# {{label}}

{{staleness}}

## Setup

Describe the models, methods and metrics here.

{{summary}}

## Results

{{table abs_err}}
)md";

}  // namespace detail_scaffold

/// Creates the skeleton of a new study: component stubs, a main program
/// wired to the CLI, and a writeup template. Refuses to touch an existing
/// non-empty directory.
inline void create_scaffold(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  if (fs::exists(path) && !fs::is_directory(path))
    throw Error(path.string() + " exists and is not a directory");
  if (fs::exists(path) && !fs::is_empty(path))
    throw Error("refusing to scaffold into non-empty directory " + path.string());
  fs::create_directories(path);
  detail::atomic_write_file(path / "model_functions.hpp", detail_scaffold::kModelFunctions);
  detail::atomic_write_file(path / "method_functions.hpp", detail_scaffold::kMethodFunctions);
  detail::atomic_write_file(path / "eval_functions.hpp", detail_scaffold::kEvalFunctions);
  detail::atomic_write_file(path / "main.cpp", detail_scaffold::kMain);
  detail::atomic_write_file(path / "writeup.md", detail_scaffold::kWriteup);
}

}  // namespace simkit

#pragma once

#include <simkit/cli.hpp>
#include <simkit/simkit.hpp>

#include "eval_functions.hpp"
#include "method_functions.hpp"
#include "model_functions.hpp"

namespace betsparse {

inline constexpr const char* kSimName = "bet-on-sparsity";
inline constexpr const char* kSimLabel = "Bet on sparsity";
inline constexpr const char* kCvSimName = "bet-on-sparsity-cv";
inline constexpr const char* kCvSimLabel = "Bet on sparsity (with cross validation)";

inline simkit::ParamMap model_args(std::int64_t n = 200, std::int64_t p = 500,
                                   std::vector<std::int64_t> k_values = {}) {
  if (k_values.empty())
    for (std::int64_t k = 5; k <= 80; k += 5) k_values.push_back(k);
  simkit::ParamValue::List k_list;
  for (std::int64_t k : k_values) k_list.emplace_back(k);
  return simkit::ParamMap{{"n", n}, {"p", p}, {"k", std::move(k_list)}};
}

/// The full pipeline: sparse linear models over a sparsity grid, lasso and
/// ridge paths, error metrics, then a second simulation sharing the same
/// draws where both methods are cross validated.
inline simkit::Simulation study_main(const simkit::RunOptions& opts) {
  using namespace simkit;
  Simulation sim = open_or_new_simulation(kSimName, kSimLabel, opts);
  generate_model(sim, make_sparse_linear_model, model_args(), {"k"});
  simulate_from_model(sim, opts.nsim, opts.indexes, {opts.workers});
  run_method(sim, {lasso_method(), ridge_method()}, {opts.workers});
  evaluate(sim, {sqr_err_metric(), best_sqr_err_metric(), df_metric()});

  // follow-on simulation: same models and draws, cross-validated methods
  Simulation cv = subset_simulation(sim, {}, std::vector<std::string>{});
  cv.name = kCvSimName;
  cv.label = kCvSimLabel;
  save_simulation(cv);
  run_method(cv, {lasso_method() + cv_extension(), ridge_method() + cv_extension()},
             {opts.workers});
  evaluate(cv, {sqr_err_metric()});
  return sim;
}

inline simkit::StudyDef study_def() {
  simkit::StudyDef study;
  study.name = kSimName;
  study.label = kSimLabel;
  study.default_nsim = 5;
  study.sources = {__FILE__};
  study.report_template =
      "# {{label}}\n"
      "\n"
      "{{staleness}}\n"
      "\n"
      "{{summary}}\n"
      "\n"
      "## Best achievable error by sparsity\n"
      "\n"
      "{{plot_eval_by best_sqr_err k}}\n";
  study.run = study_main;
  return study;
}

}  // namespace betsparse

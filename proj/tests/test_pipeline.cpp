#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include <simkit/simkit.hpp>

#include "test_helpers.hpp"

using namespace simkit;
using testutil::TempDir;

namespace {

ParamMap tiny_args(std::vector<double> mus = {0.0, 1.0}) {
  ParamValue::List mu_list;
  for (double m : mus) mu_list.emplace_back(m);
  return ParamMap{{"mu", std::move(mu_list)}, {"n", std::int64_t{6}}};
}

Simulation run_tiny(const std::filesystem::path& dir, int workers,
                    const std::vector<std::vector<int>>& index_batches) {
  Simulation sim = [&] {
    if (std::filesystem::exists(simulation_record_path("tiny-study", dir)))
      return load_simulation("tiny-study", dir);
    return new_simulation("tiny-study", "Tiny study", dir);
  }();
  generate_model(sim, testutil::tiny_model_fn, tiny_args(), {"mu"});
  for (const auto& indexes : index_batches) {
    simulate_from_model(sim, 4, indexes, {workers});
    run_method(sim, {testutil::mean_method(), testutil::noisy_method()}, {workers});
    evaluate(sim, {testutil::abs_err_metric()});
  }
  return sim;
}

}  // namespace

TEST_CASE("generate_model expands vary_along cross products") {
  TempDir tmp("gen");
  SECTION("16 element list gives 16 model refs") {
    Simulation sim = new_simulation("s16", "S", tmp.path());
    ParamValue::List ks;
    for (int k = 5; k <= 80; k += 5) ks.emplace_back(k);
    generate_model(sim, testutil::tiny_model_fn,
                   ParamMap{{"mu", ks}, {"n", std::int64_t{4}}}, {"mu"});
    CHECK(sim.model_refs.size() == 16);
    Simulation back = load_simulation("s16", tmp.path());
    CHECK(back.model_refs.size() == 16);
  }
  SECTION("3 x 4 grid gives 12 models") {
    Simulation sim = new_simulation("s12", "S", tmp.path());
    ParamValue::List mus{ParamValue(0.0), ParamValue(1.0), ParamValue(2.0)};
    ParamValue::List ns{ParamValue(std::int64_t{2}), ParamValue(std::int64_t{3}),
                        ParamValue(std::int64_t{4}), ParamValue(std::int64_t{5})};
    generate_model(sim, testutil::tiny_model_fn, ParamMap{{"mu", mus}, {"n", ns}},
                   {"mu", "n"});
    CHECK(sim.model_refs.size() == 12);
  }
  SECTION("vary_along naming a scalar argument is an error") {
    Simulation sim = new_simulation("sbad", "S", tmp.path());
    CHECK_THROWS_AS(generate_model(sim, testutil::tiny_model_fn,
                                   ParamMap{{"mu", 0.5}, {"n", std::int64_t{4}}}, {"mu"}),
                    ContractError);
    CHECK_THROWS_AS(generate_model(sim, testutil::tiny_model_fn, tiny_args(), {"zzz"}),
                    ContractError);
  }
}

TEST_CASE("generated model names, labels and varied args") {
  TempDir tmp("names");
  Simulation sim = new_simulation("s", "S", tmp.path());
  generate_model(sim, testutil::tiny_model_fn, tiny_args({0.0, 1.5}), {"mu"});
  REQUIRE(sim.model_refs.size() == 2);
  CHECK(sim.model_refs[0].model_name == "tiny/mu_0/n_6");
  CHECK(sim.model_refs[1].model_name == "tiny/mu_1.5/n_6");
  const ModelSpec& m = sim.live_models.at("tiny/mu_1.5/n_6");
  CHECK(m.base_name == "tiny");
  CHECK(m.varied.at("mu").number() == 1.5);
  CHECK(store::load_model_header("tiny/mu_1.5/n_6", tmp.path()).varied.at("mu").number() == 1.5);
}

TEST_CASE("model construction randomness is reproducible per model") {
  TempDir tmp1("modelrng1");
  TempDir tmp2("modelrng2");
  auto x_of = [](const std::filesystem::path& dir) {
    Simulation sim = [&] {
      if (std::filesystem::exists(simulation_record_path("s", dir)))
        return load_simulation("s", dir);
      return new_simulation("s", "S", dir);
    }();
    ParamMap args{{"n", std::int64_t{5}}};
    generate_model(sim, [](const ParamMap& a, RngStream& rng) {
      std::vector<double> noise(8);
      for (double& v : noise) v = rng.normal();
      ParamMap params{{"noise", noise}, {"n", a.at("n")}, {"mu", 0.0}};
      return new_model_spec("randmodel", "R", params,
                            [](const ParamMap&, int nsim, RngStream&) {
                              return std::vector<ParamValue>(static_cast<std::size_t>(nsim),
                                                             ParamValue(0.0));
                            });
    }, args);
    return sim.live_models.at("randmodel/n_5").params.at("noise").vector();
  };
  auto x1 = x_of(tmp1.path());
  auto x2 = x_of(tmp2.path());
  CHECK(x1 == x2);  // same seed, same dirname => same model-level randomness
  auto x1_again = x_of(tmp1.path());
  CHECK(x1 == x1_again);  // regeneration on rerun matches the stored model
}

TEST_CASE("full tiny pipeline produces the expected refs and files") {
  TempDir tmp("full");
  Simulation sim = run_tiny(tmp.path(), 1, {{1, 2}});
  CHECK(sim.model_refs.size() == 2);
  CHECK(sim.draws_refs.size() == 4);    // 2 models x 2 chunks
  CHECK(sim.output_refs.size() == 8);   // x 2 methods
  CHECK(sim.evals_refs.size() == 8);
  validate_integrity(sim);
  for (const Ref& r : sim.draws_refs) CHECK(std::filesystem::exists(path_for(r, tmp.path())));
  for (const Ref& r : sim.output_refs) CHECK(std::filesystem::exists(path_for(r, tmp.path())));
  for (const Ref& r : sim.evals_refs) CHECK(std::filesystem::exists(path_for(r, tmp.path())));

  std::vector<EvalsBatch> evals = get_evals(sim, {}, std::vector<std::string>{"mean"},
                                            std::vector<int>{1});
  REQUIRE(evals.size() == 2);
  CHECK(evals[0].nsim == 4);
  REQUIRE(evals[0].metrics.size() == 2);
  CHECK(evals[0].metrics[0].name == "abs_err");
  CHECK(evals[0].metrics[1].name == "time");
  for (const ParamValue& t : evals[0].values[1]) CHECK(t.number() >= 0.0);
}

TEST_CASE("evals printout lists user metrics then time") {
  TempDir tmp("printout");
  Simulation sim = run_tiny(tmp.path(), 1, {{1}});
  std::vector<EvalsBatch> group = get_evals(sim, {}, std::nullopt, std::vector<int>{1});
  // keep only one model's batches (two methods)
  std::vector<EvalsBatch> one_model;
  for (auto& b : group)
    if (b.model_name == sim.model_refs[0].model_name) one_model.push_back(b);
  std::string text = describe_evals(one_model);
  CHECK(text.find("metric_name(s): abs_err, time") != std::string::npos);
  CHECK(text.find("method_name(s): mean, noisy") != std::string::npos);
  CHECK(text.find("(labeled: Sample mean, Noisy mean (noisy))") != std::string::npos);
  CHECK(text.find("metric_label(s): Absolute error, Computing time") != std::string::npos);
}

TEST_CASE("rerunning every stage with identical arguments changes no payload byte") {
  TempDir tmp("idem");
  run_tiny(tmp.path(), 1, {{1, 2}});
  auto before = testutil::payload_snapshot(tmp.path());
  run_tiny(tmp.path(), 1, {{1, 2}});
  auto after = testutil::payload_snapshot(tmp.path());
  CHECK(before == after);
}

TEST_CASE("simulate_from_model argument validation") {
  TempDir tmp("simargs");
  Simulation sim = new_simulation("s", "S", tmp.path());
  CHECK_THROWS_AS(simulate_from_model(sim, 4, {1}), MissingStageError);  // no models yet
  generate_model(sim, testutil::tiny_model_fn, tiny_args(), {"mu"});
  CHECK_THROWS_AS(simulate_from_model(sim, 0, {1}), ContractError);
  CHECK_THROWS_AS(simulate_from_model(sim, -2, {1}), ContractError);
  CHECK_THROWS_AS(simulate_from_model(sim, 4, {0}), ContractError);
  CHECK_THROWS_AS(simulate_from_model(sim, 4, {}), ContractError);
  simulate_from_model(sim, 4, {1});
  // adding draws to an existing chunk under a different nsim must be refused
  CHECK_THROWS_WITH(simulate_from_model(sim, 5, {1}),
                    Catch::Matchers::ContainsSubstring("new chunk index"));
}

TEST_CASE("method execution order does not change any output bytes") {
  TempDir tmp1("order1");
  TempDir tmp2("order2");
  auto run_in_order = [](const std::filesystem::path& dir, bool noisy_first) {
    Simulation sim = new_simulation("s", "S", dir);
    generate_model(sim, testutil::tiny_model_fn, tiny_args(), {"mu"});
    simulate_from_model(sim, 4, {1, 2});
    if (noisy_first) {
      run_method(sim, {testutil::noisy_method()});
      run_method(sim, {testutil::mean_method()});
    } else {
      run_method(sim, {testutil::mean_method()});
      run_method(sim, {testutil::noisy_method()});
    }
  };
  run_in_order(tmp1.path(), false);
  run_in_order(tmp2.path(), true);
  CHECK(testutil::payload_snapshot(tmp1.path()) == testutil::payload_snapshot(tmp2.path()));
}

TEST_CASE("two randomized methods on one chunk start from the same state") {
  TempDir tmp("samestate");
  Simulation sim = new_simulation("s", "S", tmp.path());
  generate_model(sim, testutil::tiny_model_fn, tiny_args({0.0}), {"mu"});
  simulate_from_model(sim, 3, {1});
  run_method(sim, {testutil::noisy_method("noisy_a"), testutil::noisy_method("noisy_b")});
  auto outs = get_outputs(sim);
  REQUIRE(outs.size() == 2);
  // identical procedure bodies under identical restored states: identical outputs
  CHECK(outs[0].outputs == outs[1].outputs);
}

TEST_CASE("worker count never changes results") {
  TempDir tmp1("w1");
  TempDir tmp4("w4");
  run_tiny(tmp1.path(), 1, {{1, 2, 3}});
  run_tiny(tmp4.path(), 4, {{1, 2, 3}});
  CHECK(testutil::payload_snapshot(tmp1.path()) == testutil::payload_snapshot(tmp4.path()));
}

TEST_CASE("chunks split across separate sessions in scrambled order match") {
  TempDir seq("split_seq");
  TempDir mix("split_mix");
  run_tiny(seq.path(), 1, {{1, 2, 3, 4, 5, 6}});
  // separate "sessions": each call reloads the record from disk
  run_tiny(mix.path(), 1, {{1, 2}});
  run_tiny(mix.path(), 4, {{5, 6}});
  run_tiny(mix.path(), 2, {{3, 4}});
  CHECK(testutil::payload_snapshot(seq.path()) == testutil::payload_snapshot(mix.path()));
}

TEST_CASE("adding a method later recomputes nothing for the first two") {
  TempDir tmp("addmethod");
  Simulation sim = run_tiny(tmp.path(), 1, {{1}});
  auto before = testutil::dir_snapshot(tmp.path() / "files");
  run_method(sim, {testutil::noisy_method("third")});
  evaluate(sim, {testutil::abs_err_metric()});
  auto after = testutil::dir_snapshot(tmp.path() / "files");
  for (const auto& [path, hash] : before) {
    REQUIRE(after.count(path) == 1);
    CHECK(after.at(path) == hash);  // old files untouched, timing sidecars included
  }
  CHECK(after.size() > before.size());
}

TEST_CASE("evaluate with an extra metric touches only evals files") {
  TempDir tmp("addmetric");
  Simulation sim = run_tiny(tmp.path(), 1, {{1, 2}});
  auto before = testutil::dir_snapshot(tmp.path());
  MetricSpec doubled = new_metric_spec("twice_err", "Twice the error",
                                       [](const ModelSpec& model, const OutMap& out) {
                                         double mu = model.params.at("mu").as_double();
                                         double est = out.at("est").as_double();
                                         return ParamValue(2 * std::fabs(est - mu));
                                       });
  evaluate(sim, {testutil::abs_err_metric(), doubled});
  auto after = testutil::dir_snapshot(tmp.path());
  REQUIRE(before.size() == after.size());
  for (const auto& [path, hash] : before) {
    bool is_evals = path.size() > 6 && path.compare(path.size() - 6, 6, ".evals") == 0;
    bool is_record = path.rfind("sim_", 0) == 0;
    if (is_evals) {
      CHECK(after.at(path) != hash);  // merged in place
    } else if (!is_record) {
      CHECK(after.at(path) == hash);
    }
  }
  // merged batch holds old metric, new metric, then time
  EvalsBatch merged = store::load_evals(sim.model_refs[0].model_name, 1, "mean", tmp.path());
  REQUIRE(merged.metrics.size() == 3);
  CHECK(merged.metrics[0].name == "abs_err");
  CHECK(merged.metrics[1].name == "twice_err");
  CHECK(merged.metrics[2].name == "time");
  // and a second evaluate with the same metrics is a byte-level no-op
  auto snap2 = testutil::dir_snapshot(tmp.path());
  evaluate(sim, {testutil::abs_err_metric(), doubled});
  CHECK(testutil::dir_snapshot(tmp.path()) == snap2);
}

TEST_CASE("constant-zero metric evaluates to all zeros") {
  TempDir tmp("zeros");
  Simulation sim = run_tiny(tmp.path(), 1, {{1}});
  evaluate(sim, {new_metric_spec("zero", "Zero",
                                 [](const ModelSpec&, const OutMap&) { return ParamValue(0.0); })});
  for (const EvalsBatch& b : get_evals(sim)) {
    int zi = b.metric_index("zero");
    REQUIRE(zi >= 0);
    for (const ParamValue& v : b.values[static_cast<std::size_t>(zi)]) CHECK(v.number() == 0.0);
  }
}

TEST_CASE("pass-through extension reproduces the base method outputs") {
  TempDir tmp("passthrough");
  Simulation sim = new_simulation("s", "S", tmp.path());
  generate_model(sim, testutil::tiny_model_fn, tiny_args(), {"mu"});
  simulate_from_model(sim, 3, {1});
  MethodExtensionSpec pass = new_method_extension(
      "pass", "passed through",
      [](const ModelSpec&, const Draw&, const OutMap& base_out, const MethodSpec&, RngStream&) {
        return base_out;
      });
  run_method(sim, {testutil::noisy_method(), testutil::noisy_method() + pass});
  auto base = get_outputs(sim, {}, std::vector<std::string>{"noisy"});
  auto ext = get_outputs(sim, {}, std::vector<std::string>{"noisy_pass"});
  REQUIRE(base.size() == ext.size());
  for (std::size_t i = 0; i < base.size(); ++i) CHECK(base[i].outputs == ext[i].outputs);
  CHECK(ext[0].method.label == "Noisy mean (noisy) passed through");
}

TEST_CASE("extended methods reuse a persisted base and recompute otherwise") {
  TempDir with_base("extbase1");
  TempDir without_base("extbase2");
  MethodExtensionSpec pass = new_method_extension(
      "pass", "passed through",
      [](const ModelSpec&, const Draw&, const OutMap& base_out, const MethodSpec&, RngStream&) {
        return base_out;
      });
  auto run_one = [&pass](const std::filesystem::path& dir, bool persist_base) {
    Simulation sim = new_simulation("s", "S", dir);
    generate_model(sim, testutil::tiny_model_fn, tiny_args({0.5}), {"mu"});
    simulate_from_model(sim, 3, {1});
    if (persist_base) run_method(sim, {testutil::noisy_method()});
    run_method(sim, {testutil::noisy_method() + pass});
    return get_outputs(sim, {}, std::vector<std::string>{"noisy_pass"}).front();
  };
  OutputBatch a = run_one(with_base.path(), true);
  OutputBatch b = run_one(without_base.path(), false);
  CHECK(a.outputs == b.outputs);  // deterministic either way
  // the in-memory base is not persisted
  CHECK_FALSE(std::filesystem::exists(
      path_for(Ref::output("tiny/mu_0.5/n_6", 1, "noisy"), without_base.path())));
  CHECK(std::filesystem::exists(
      path_for(Ref::output("tiny/mu_0.5/n_6", 1, "noisy"), with_base.path())));
}

TEST_CASE("subset_simulation filters and shares files") {
  TempDir tmp("subset");
  Simulation sim = run_tiny(tmp.path(), 1, {{1, 2}});
  Predicate low = Predicate::parse("mu == 0");
  Simulation sub = subset_simulation(sim, low);
  CHECK(sub.model_refs.size() == 1);
  CHECK(sub.draws_refs.size() == 2);
  CHECK(sub.output_refs.size() == 4);
  CHECK(sub.evals_refs.size() == 4);

  // complement partition conserves ref counts
  Simulation rest = subset_simulation(sim, Predicate::parse("mu != 0"));
  CHECK(sub.model_refs.size() + rest.model_refs.size() == sim.model_refs.size());
  CHECK(sub.draws_refs.size() + rest.draws_refs.size() == sim.draws_refs.size());
  CHECK(sub.output_refs.size() + rest.output_refs.size() == sim.output_refs.size());
  CHECK(sub.evals_refs.size() + rest.evals_refs.size() == sim.evals_refs.size());

  // methods = empty list keeps models+draws only
  Simulation no_methods = subset_simulation(sim, {}, std::vector<std::string>{});
  CHECK(no_methods.model_refs.size() == 2);
  CHECK(no_methods.draws_refs.size() == 4);
  CHECK(no_methods.output_refs.empty());
  CHECK(no_methods.evals_refs.empty());

  // index subset
  Simulation chunk1 = subset_simulation(sim, {}, std::nullopt, std::vector<int>{1});
  CHECK(chunk1.draws_refs.size() == 2);
  CHECK(chunk1.output_refs.size() == 4);

  // matching nothing is empty but valid
  Simulation none = subset_simulation(sim, Predicate::parse("mu == 123"));
  CHECK(none.model_refs.empty());
  CHECK(none.draws_refs.empty());
  validate_integrity(none);

  // nothing was copied: no new files appeared
  CHECK(get_draws(sub).size() == 2);
}

TEST_CASE("rename and relabel") {
  TempDir tmp("rename");
  Simulation sim = run_tiny(tmp.path(), 1, {{1}});
  Simulation sub = subset_simulation(sim, {}, std::vector<std::string>{});
  rename(sub, "tiny-study-cv");
  relabel(sub, "Tiny study (cv)");
  CHECK(std::filesystem::exists(simulation_record_path("tiny-study-cv", tmp.path())));
  Simulation back = load_simulation("tiny-study-cv", tmp.path());
  CHECK(back.label == "Tiny study (cv)");
  CHECK(back.output_refs.empty());
  CHECK(back.draws_refs.size() == sim.draws_refs.size());
  // original untouched
  Simulation original = load_simulation("tiny-study", tmp.path());
  CHECK(original.output_refs.size() == sim.output_refs.size());
  // renaming onto an existing name collides
  Simulation sub2 = subset_simulation(sim);
  CHECK_THROWS_AS(rename(sub2, "tiny-study-cv"), CollisionError);
}

TEST_CASE("accessor selectors mirror subset semantics") {
  TempDir tmp("accessors");
  Simulation sim = run_tiny(tmp.path(), 1, {{1}});
  auto models = get_models(sim, Predicate::parse("mu == 1"));
  REQUIRE(models.size() == 1);
  CHECK(models[0].id.name == "tiny/mu_1/n_6");
  CHECK(models[0].id.label == "mu = 1");

  auto outputs = get_outputs(sim, Predicate::parse("mu == 1"), std::vector<std::string>{"mean"});
  REQUIRE(outputs.size() == 1);
  CHECK(outputs[0].method.label == "Sample mean");

  CHECK(get_evals(sim, Predicate::parse("mu == 99")).empty());
}

TEST_CASE("stage order errors and failure context") {
  TempDir tmp("stageerr");
  Simulation sim = new_simulation("s", "S", tmp.path());
  CHECK_THROWS_AS(run_method(sim, {testutil::mean_method()}), MissingStageError);
  CHECK_THROWS_AS(evaluate(sim, {testutil::abs_err_metric()}), MissingStageError);
  generate_model(sim, testutil::tiny_model_fn, tiny_args({0.0}), {"mu"});
  simulate_from_model(sim, 2, {1});
  MethodSpec broken = new_method_spec("broken", "Broken",
                                      [](const ModelSpec&, const Draw&, RngStream&,
                                         const ParamMap&) -> OutMap {
                                        throw std::runtime_error("numerical meltdown");
                                      });
  CHECK_THROWS_WITH(run_method(sim, {broken}),
                    Catch::Matchers::ContainsSubstring("broken") &&
                        Catch::Matchers::ContainsSubstring("numerical meltdown") &&
                        Catch::Matchers::ContainsSubstring("tiny/mu_0/n_6"));
  run_method(sim, {testutil::mean_method()});
  MetricSpec bad_metric = new_metric_spec("bad", "Bad",
                                          [](const ModelSpec&, const OutMap&) -> ParamValue {
                                            throw std::runtime_error("metric beyond repair");
                                          });
  CHECK_THROWS_WITH(evaluate(sim, {bad_metric}),
                    Catch::Matchers::ContainsSubstring("bad") &&
                        Catch::Matchers::ContainsSubstring("mean") &&
                        Catch::Matchers::ContainsSubstring("r1.1"));
}

TEST_CASE("loaded simulations need re-declared models before simulating further") {
  TempDir tmp("redeclare");
  run_tiny(tmp.path(), 1, {{1}});
  Simulation sim = load_simulation("tiny-study", tmp.path());
  CHECK_THROWS_AS(simulate_from_model(sim, 4, {2}), MissingProcedureError);
  generate_model(sim, testutil::tiny_model_fn, tiny_args(), {"mu"});  // re-attach simulate
  simulate_from_model(sim, 4, {2});
  CHECK(sim.draws_refs.size() == 4);
}

TEST_CASE("new_simulation defaults the directory to the working directory") {
  TempDir tmp("cwd");
  auto old_cwd = std::filesystem::current_path();
  std::filesystem::current_path(tmp.path());
  try {
    Simulation sim = new_simulation("here", "Here");
    CHECK(std::filesystem::exists(tmp.path() / "sim_here.srec"));
  } catch (...) {
    std::filesystem::current_path(old_cwd);
    throw;
  }
  std::filesystem::current_path(old_cwd);
}

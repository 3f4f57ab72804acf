#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include <simkit/simkit.hpp>

#include "test_helpers.hpp"

using namespace simkit;

namespace {
OutMap echo_apply(const ModelSpec&, const Draw& draw, RngStream&, const ParamMap&) {
  return OutMap{{"yhat", draw.payload}};
}
}  // namespace

TEST_CASE("component name grammar") {
  CHECK(is_valid_slug("slm"));
  CHECK(is_valid_slug("bet-on-sparsity"));
  CHECK(is_valid_slug("a_b.c-d"));
  CHECK_FALSE(is_valid_slug(""));
  CHECK_FALSE(is_valid_slug("has space"));
  CHECK_FALSE(is_valid_slug("slm/k_10"));
  CHECK(is_valid_slug("slm/k_10", /*allow_slash=*/true));
}

TEST_CASE("new_model_spec validates name and simulate") {
  auto sim_fn = [](const ParamMap&, int nsim, RngStream&) {
    return std::vector<ParamValue>(static_cast<std::size_t>(nsim), ParamValue(0.0));
  };
  CHECK_THROWS_AS(new_model_spec("", "L", {}, sim_fn), InvalidNameError);
  CHECK_THROWS_AS(new_model_spec("m", "L", {}, nullptr), MissingProcedureError);
  ModelSpec m = new_model_spec("m", "L", {}, sim_fn);
  RngStream rng = RngStream::derive({1, "m", 1});
  auto draws = m.run_simulate(5, rng);
  REQUIRE(draws.size() == 5);
  for (const auto& d : draws) CHECK(d.number() == 0.0);
}

TEST_CASE("simulate returning the wrong count is a contract error") {
  ModelSpec m = new_model_spec("m", "L", {}, [](const ParamMap&, int, RngStream&) {
    return std::vector<ParamValue>{ParamValue(1.0)};
  });
  RngStream rng = RngStream::derive({1, "m", 1});
  CHECK_THROWS_AS(m.run_simulate(3, rng), ContractError);
}

TEST_CASE("method and metric validation") {
  CHECK_THROWS_AS(new_method_spec("has space", "L", echo_apply), InvalidNameError);
  CHECK_THROWS_AS(new_method_spec("m", "", echo_apply), InvalidNameError);
  MethodSpec m = new_method_spec("lasso", "Lasso", echo_apply);
  CHECK(m.id.name == "lasso");
  CHECK(m.id.label == "Lasso");
  CHECK_THROWS_AS(new_metric_spec("time", "Anything",
                                  [](const ModelSpec&, const OutMap&) { return ParamValue(0.0); }),
                  ReservedNameError);
  MetricSpec df = new_metric_spec("df", "Degrees of freedom",
                                  [](const ModelSpec&, const OutMap&) { return ParamValue(0.0); });
  CHECK(df.id.label == "Degrees of freedom");
}

TEST_CASE("method extension composition follows the naming rule") {
  MethodSpec lasso = new_method_spec("lasso", "Lasso", echo_apply);
  MethodSpec ridge = new_method_spec("ridge", "Ridge", echo_apply);
  MethodExtensionSpec cv = new_method_extension(
      "cv", "cross validated",
      [](const ModelSpec&, const Draw&, const OutMap& base_out, const MethodSpec&, RngStream&) {
        return base_out;
      });
  ExtendedMethodSpec lasso_cv = lasso + cv;
  CHECK(lasso_cv.id.name == "lasso_cv");
  CHECK(lasso_cv.id.label == "Lasso cross validated");
  CHECK((ridge + cv).id.name == "ridge_cv");
  CHECK_THROWS_AS(new_method_extension("bad slug", "x", cv.extend), InvalidNameError);
}

TEST_CASE("aggregators: builtin mean and stderr, custom median") {
  CHECK(mean_aggregator().aggregate({1, 2, 3}) == 2.0);
  CHECK_THAT(stderr_aggregator().aggregate({1, 2, 3}),
             Catch::Matchers::WithinAbs(0.5773502691896258, 1e-15));
  CHECK(stderr_aggregator().aggregate({42.0}) == 0.0);
  AggregatorSpec median = new_aggregator("median", [](const std::vector<double>& v) {
    std::vector<double> s = v;
    std::sort(s.begin(), s.end());
    return s.size() % 2 ? s[s.size() / 2] : 0.5 * (s[s.size() / 2 - 1] + s[s.size() / 2]);
  });
  CHECK(median.aggregate({9, 1, 2}) == 2.0);
  CHECK_THROWS_AS(mean_aggregator().aggregate({}), ContractError);
  CHECK_THROWS_AS(new_aggregator("", [](const std::vector<double>&) { return 0.0; }),
                  InvalidNameError);
}

TEST_CASE("method apply is referentially transparent under a fixed stream state") {
  MethodSpec noisy = testutil::noisy_method();
  RngStream model_rng = RngStream::derive({1, "x", 0});
  ModelSpec model =
      testutil::tiny_model_fn(ParamMap{{"mu", 1.0}, {"n", std::int64_t{8}}}, model_rng);
  Draw draw{"r1.1", ParamValue(std::vector<double>{1, 2, 3})};
  RngState st = RngStream::derive({5, "ref-transparent", 1}).capture();
  RngStream s1 = RngStream::restore(st);
  RngStream s2 = RngStream::restore(st);
  OutMap a = noisy.apply(model, draw, s1, {});
  OutMap b = noisy.apply(model, draw, s2, {});
  CHECK(a == b);
}

TEST_CASE("model printout follows the component format") {
  ModelSpec m;
  m.id = {"slm/k_10/n_200/p_500", "n = 200, p = 500, k = 10"};
  m.params = ParamMap{{"x", 0.0}, {"beta", 0.0}, {"mu", 0.0}, {"sigma", 0.0},
                      {"n", 0.0},  {"p", 0.0},   {"k", 0.0}};
  CHECK(describe(m) ==
        "Model Component\n"
        " name: slm/k_10/n_200/p_500\n"
        " label: n = 200, p = 500, k = 10\n"
        " params: x beta mu sigma n p k\n");
}

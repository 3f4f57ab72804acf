#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include <simkit/simkit.hpp>

#include "test_helpers.hpp"

using namespace simkit;
using testutil::TempDir;

namespace {

Simulation report_fixture(const std::filesystem::path& dir) {
  Simulation sim = new_simulation("rpt", "Report fixture", dir);
  ParamValue::List mus{ParamValue(0.0), ParamValue(1.0)};
  generate_model(sim, testutil::tiny_model_fn, ParamMap{{"mu", mus}, {"n", std::int64_t{5}}},
                 {"mu"});
  simulate_from_model(sim, 4, {1});
  run_method(sim, {testutil::mean_method()});
  evaluate(sim, {testutil::abs_err_metric()});
  return sim;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("provenance: fresh sources pass, edited sources go stale") {
  TempDir tmp("prov");
  Simulation sim = report_fixture(tmp.path());
  auto src = tmp.path() / "study_source.cpp";
  write_text(src, "int main() { return 0; }\n");

  record_provenance(sim, {src}, "build-1");
  ProvenanceStatus fresh = check_provenance(sim, "build-1");
  CHECK(fresh.recorded);
  CHECK(fresh.stale.empty());

  write_text(src, "int main() { return 1; }\n");
  ProvenanceStatus stale = check_provenance(sim, "build-1");
  CHECK(stale.recorded);
  REQUIRE_FALSE(stale.stale.empty());
  CHECK(stale.stale.front().find("study_source.cpp") != std::string::npos);

  write_text(src, "int main() { return 0; }\n");
  CHECK(check_provenance(sim, "build-1").stale.empty());
  CHECK_FALSE(check_provenance(sim, "build-2").stale.empty());  // build id change
}

TEST_CASE("report carries a staleness warning only when provenance disagrees") {
  TempDir tmp("stale");
  Simulation sim = report_fixture(tmp.path());
  auto src = tmp.path() / "src.cpp";
  write_text(src, "alpha\n");
  record_provenance(sim, {src}, "b");

  std::string fresh_md =
      generate_report(sim, kDefaultReportTemplate, tmp.path() / "report", "b");
  CHECK(fresh_md.find("Warning: results may be stale") == std::string::npos);
  CHECK(fresh_md.find("# Report fixture") != std::string::npos);

  write_text(src, "beta\n");
  std::string stale_md =
      generate_report(sim, kDefaultReportTemplate, tmp.path() / "report", "b");
  CHECK(stale_md.find("Warning: results may be stale") != std::string::npos);
  CHECK(stale_md.find("src.cpp") != std::string::npos);
}

TEST_CASE("report without provenance notes the absence") {
  TempDir tmp("noprov");
  Simulation sim = report_fixture(tmp.path());
  std::string md = generate_report(sim, kDefaultReportTemplate, tmp.path() / "report");
  CHECK(md.find("no provenance recorded") != std::string::npos);
}

TEST_CASE("report embeds tables verbatim and links plot assets") {
  TempDir tmp("embed");
  Simulation sim = report_fixture(tmp.path());
  std::string tmpl =
      "# {{label}}\n"
      "\n"
      "{{table abs_err}}\n"
      "\n"
      "{{plot_eval_by abs_err mu}}\n";
  std::string md = generate_report(sim, tmpl, tmp.path() / "report");
  Table t = tabulate_eval(sim, "abs_err");
  CHECK(md.find(t.caption) != std::string::npos);  // auto caption verbatim
  CHECK(md.find("![rpt_evalby_abs_err_mu](assets/rpt_evalby_abs_err_mu.svg)") !=
        std::string::npos);
  CHECK(std::filesystem::exists(tmp.path() / "report" / "assets" /
                                "rpt_evalby_abs_err_mu.svg"));
  CHECK(std::filesystem::exists(tmp.path() / "report" / "assets" /
                                "rpt_evalby_abs_err_mu.csv"));
  CHECK(std::filesystem::exists(tmp.path() / "report" / "rpt_report.md"));
}

TEST_CASE("report generation never touches pipeline files") {
  TempDir tmp("notouch");
  Simulation sim = report_fixture(tmp.path());
  auto before = testutil::dir_snapshot(tmp.path() / "files");
  auto record_before =
      detail::read_file(simulation_record_path(sim.name, tmp.path()));
  generate_report(sim,
                  "# {{label}}\n{{summary}}\n{{table abs_err}}\n{{plot_eval abs_err}}\n",
                  tmp.path() / "report");
  CHECK(testutil::dir_snapshot(tmp.path() / "files") == before);
  CHECK(detail::read_file(simulation_record_path(sim.name, tmp.path())) == record_before);
}

TEST_CASE("unknown report directives fail loudly") {
  TempDir tmp("baddirective");
  Simulation sim = report_fixture(tmp.path());
  CHECK_THROWS_AS(generate_report(sim, "{{frobnicate}}\n", tmp.path() / "report"), ParseError);
}

TEST_CASE("scaffold creates the five stub files once") {
  TempDir tmp("scaffold");
  auto study_dir = tmp.path() / "study1";
  create_scaffold(study_dir);
  for (const char* name : {"model_functions.hpp", "method_functions.hpp", "eval_functions.hpp",
                           "main.cpp", "writeup.md"})
    CHECK(std::filesystem::exists(study_dir / name));
  // stub content is wired to the library surface
  std::string main_cpp = detail::read_file(study_dir / "main.cpp");
  CHECK(main_cpp.find("simkit::cli_main") != std::string::npos);
  CHECK(main_cpp.find("generate_model") != std::string::npos);
  std::string writeup = detail::read_file(study_dir / "writeup.md");
  CHECK(writeup.find("{{staleness}}") != std::string::npos);

  // refusal on rerun and on any non-empty directory
  CHECK_THROWS_WITH(create_scaffold(study_dir),
                    Catch::Matchers::ContainsSubstring("non-empty"));
  auto other = tmp.path() / "occupied";
  std::filesystem::create_directories(other);
  write_text(other / "keep.txt", "do not clobber");
  CHECK_THROWS_AS(create_scaffold(other), Error);
  CHECK(detail::read_file(other / "keep.txt") == "do not clobber");
}

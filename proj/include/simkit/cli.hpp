#pragma once

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "simkit/pipeline.hpp"
#include "simkit/plot.hpp"
#include "simkit/report.hpp"
#include "simkit/scaffold.hpp"
#include "simkit/simulation.hpp"
#include "simkit/table.hpp"
#include "simkit/version.hpp"

namespace simkit {

/// Options shared by study pipelines; filled by the `run` subcommand.
struct RunOptions {
  std::filesystem::path dir = ".";
  std::optional<std::uint64_t> seed;  // unset -> record's seed or the default
  int workers = 1;
  int nsim = 0;  // 0 -> study default
  std::vector<int> indexes = {1};
};

/// A study program: component declarations plus the pipeline it runs.
/// cli_main gives every study the same subcommands.
struct StudyDef {
  std::string name;
  std::string label;
  int default_nsim = 1;
  std::vector<std::filesystem::path> sources;  // digested for provenance
  std::string build_id;                        // defaults to library version + name
  std::string report_template;                 // defaults to kDefaultReportTemplate
  std::function<Simulation(const RunOptions&)> run;
};

/// Loads the named simulation if its record exists, otherwise creates it.
/// A seed override that contradicts an existing record is an error.
inline Simulation open_or_new_simulation(const std::string& name, const std::string& label,
                                         const RunOptions& opts) {
  if (std::filesystem::exists(simulation_record_path(name, opts.dir))) {
    Simulation sim = load_simulation(name, opts.dir);
    if (opts.seed && *opts.seed != sim.global_seed)
      throw ContractError("simulation \"" + name + "\" was created with seed " +
                          std::to_string(sim.global_seed) + "; cannot rerun with seed " +
                          std::to_string(*opts.seed));
    return sim;
  }
  return new_simulation(name, label, opts.dir, opts.seed.value_or(kDefaultSeed));
}

/// Parses chunk index specs: "3", "1:10", "1:2,5:10".
inline std::vector<int> parse_index_spec(const std::string& spec) {
  std::vector<int> out;
  std::size_t start = 0;
  while (start <= spec.size()) {
    std::size_t comma = spec.find(',', start);
    std::string tok = spec.substr(start, comma == std::string::npos ? std::string::npos
                                                                    : comma - start);
    if (!tok.empty()) {
      std::size_t colon = tok.find(':');
      try {
        if (colon == std::string::npos) {
          out.push_back(std::stoi(tok));
        } else {
          int lo = std::stoi(tok.substr(0, colon));
          int hi = std::stoi(tok.substr(colon + 1));
          if (hi < lo) throw ParseError("descending index range \"" + tok + "\"");
          for (int i = lo; i <= hi; ++i) out.push_back(i);
        }
      } catch (const std::invalid_argument&) {
        throw ParseError("bad index spec \"" + tok + "\" (expected N or A:B)");
      }
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw ParseError("empty index spec");
  return out;
}

namespace detail_cli {

inline std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = s.find(',', start);
    std::string tok = s.substr(start, comma == std::string::npos ? std::string::npos
                                                                 : comma - start);
    if (!tok.empty()) out.push_back(tok);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

inline void print_listing(const Simulation& sim) {
  std::cout << "Simulation Component\n name: " << sim.name << "\n label: " << sim.label
            << "\n dir: " << std::filesystem::absolute(sim.dir).string()
            << "\n seed: " << sim.global_seed << "\n";
  std::cout << "Models (" << sim.model_refs.size() << "):\n";
  for (const Ref& m : sim.model_refs) {
    std::cout << " " << m.model_name;
    try {
      std::cout << "  \"" << model_label_for(sim, m.model_name) << "\"";
    } catch (const Error&) {
      std::cout << "  (file missing)";
    }
    std::cout << "\n";
  }
  std::cout << "Draws (" << sim.draws_refs.size() << " chunks):\n";
  for (const Ref& d : sim.draws_refs) {
    std::cout << " " << d.model_name << ": r" << d.index;
    try {
      auto header = store::read_header(path_for(d, sim.dir));
      std::cout << " (" << header.at("nsim").get<int>() << " draws)";
    } catch (const Error&) {
    }
    std::cout << "\n";
  }
  std::cout << "Outputs (" << sim.output_refs.size() << "):\n";
  for (const Ref& o : sim.output_refs)
    std::cout << " " << o.model_name << ": r" << o.index << " " << o.method_name << "\n";
  std::cout << "Evals (" << sim.evals_refs.size() << "):\n";
  for (const Ref& e : sim.evals_refs) {
    std::cout << " " << e.model_name << ": r" << e.index << " " << e.method_name;
    try {
      auto header = store::read_header(path_for(e, sim.dir));
      auto names = header.at("metric_names").get<std::vector<std::string>>();
      std::cout << " [";
      for (const auto& n : names) std::cout << n << ", ";
      std::cout << kTimeMetricName << "]";
    } catch (const Error&) {
    }
    std::cout << "\n";
  }
}

}  // namespace detail_cli

/// Shared CLI entry point. `study` may be null (the bare tool): everything
/// but `run` works on saved simulations without study code.
inline int cli_main_impl(int argc, char** argv, const StudyDef* study) {
  CLI::App app{study ? study->label + " (simkit study)" : "simkit simulation tool"};
  app.require_subcommand(1);

  std::string default_sim = study ? study->name : "";
  std::string dir = ".";
  std::string sim_name = default_sim;
  auto add_common = [&](CLI::App* cmd, bool with_sim = true) {
    cmd->add_option("--dir", dir, "simulation directory root")->capture_default_str();
    if (with_sim) {
      auto* opt = cmd->add_option("--sim", sim_name, "simulation name");
      if (default_sim.empty()) opt->required();
      else opt->capture_default_str();
    }
  };

  // run
  auto* run_cmd = app.add_subcommand("run", "execute the study pipeline");
  RunOptions run_opts;
  std::uint64_t seed_arg = kDefaultSeed;
  std::string index_spec = "1";
  int nsim_arg = 0;
  run_cmd->add_option("--dir", dir, "simulation directory root")->capture_default_str();
  auto* seed_opt = run_cmd->add_option("--seed", seed_arg, "global seed for new simulations");
  run_cmd->add_option("--workers", run_opts.workers, "parallel worker count")
      ->capture_default_str();
  run_cmd->add_option("--nsim", nsim_arg, "draws per chunk (default: study setting)");
  run_cmd->add_option("--index", index_spec, "chunk indexes, e.g. 1 or 1:10 or 1:2,5:10")
      ->capture_default_str();

  // ls
  auto* ls_cmd = app.add_subcommand("ls", "list models/draws/outputs/evals of a simulation");
  add_common(ls_cmd);

  // subset
  auto* subset_cmd = app.add_subcommand("subset", "save a filtered copy of a simulation record");
  std::string subset_as, subset_filter, subset_methods, subset_index;
  add_common(subset_cmd);
  subset_cmd->add_option("--as", subset_as, "name for the subset record")->required();
  subset_cmd->add_option("--filter", subset_filter, "model predicate, e.g. \"k == 20 | k == 80\"");
  auto* methods_opt = subset_cmd->add_option(
      "--methods", subset_methods, "comma-separated method names; empty keeps models+draws only");
  subset_cmd->add_option("--index", subset_index, "chunk indexes to keep");

  // rename / relabel
  auto* rename_cmd = app.add_subcommand("rename", "save the record under a new name");
  std::string new_name;
  add_common(rename_cmd);
  rename_cmd->add_option("new_name", new_name, "new simulation name")->required();
  auto* relabel_cmd = app.add_subcommand("relabel", "change the human-readable label");
  std::string new_label;
  add_common(relabel_cmd);
  relabel_cmd->add_option("new_label", new_label, "new label")->required();

  // table
  auto* table_cmd = app.add_subcommand("table", "aggregate table of a metric");
  std::string table_metric, table_format = "markdown", table_filter, table_out;
  int nsmall = 2, digits = 0;
  add_common(table_cmd);
  table_cmd->add_option("metric", table_metric, "metric name")->required();
  table_cmd->add_option("--format", table_format, "markdown|latex|html")->capture_default_str();
  table_cmd->add_option("--nsmall", nsmall, "decimals in cells")->capture_default_str();
  table_cmd->add_option("--digits", digits, "significant digits (0 = off)")
      ->capture_default_str();
  table_cmd->add_option("--filter", table_filter, "model predicate");
  table_cmd->add_option("--out", table_out, "write the table to this file");

  // plot
  auto* plot_cmd = app.add_subcommand("plot", "emit plot data (CSV) and chart (SVG)");
  plot_cmd->require_subcommand(1);
  std::string plot_metric, plot_metric_y, plot_varying, plot_type = "aggregate", plot_title,
              plot_filter, plot_out = "plots";
  auto add_plot_common = [&](CLI::App* cmd) {
    add_common(cmd);
    cmd->add_option("--filter", plot_filter, "model predicate");
    cmd->add_option("--out", plot_out, "output directory for CSV/SVG")->capture_default_str();
  };
  auto* pe_cmd = plot_cmd->add_subcommand("eval", "box plots of a metric by method");
  pe_cmd->add_option("metric", plot_metric, "metric name")->required();
  add_plot_common(pe_cmd);
  auto* pes_cmd = plot_cmd->add_subcommand("evals", "one metric versus another");
  pes_cmd->add_option("metric_x", plot_metric, "x metric")->required();
  pes_cmd->add_option("metric_y", plot_metric_y, "y metric")->required();
  add_plot_common(pes_cmd);
  auto* peb_cmd = plot_cmd->add_subcommand("eval-by", "metric versus a varied model parameter");
  peb_cmd->add_option("metric", plot_metric, "metric name")->required();
  peb_cmd->add_option("varying", plot_varying, "varied parameter name")->required();
  peb_cmd->add_option("--type", plot_type, "aggregate|raw")->capture_default_str();
  peb_cmd->add_option("--title", plot_title, "plot title");
  add_plot_common(peb_cmd);

  // report
  auto* report_cmd = app.add_subcommand("report", "generate the markdown report");
  std::string report_out = "report", template_file;
  add_common(report_cmd);
  report_cmd->add_option("--out", report_out, "output directory")->capture_default_str();
  report_cmd->add_option("--template", template_file, "markdown template file");

  // create
  auto* create_cmd = app.add_subcommand("create", "scaffold a new study directory");
  std::string create_path;
  create_cmd->add_option("path", create_path, "directory to create")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      if (!study || !study->run)
        throw Error("this binary has no study attached; use a study program for `run`");
      if (seed_opt->count() > 0) run_opts.seed = seed_arg;
      run_opts.dir = dir;
      run_opts.nsim = nsim_arg > 0 ? nsim_arg : study->default_nsim;
      run_opts.indexes = parse_index_spec(index_spec);
      Simulation sim = study->run(run_opts);
      std::string build_id = study->build_id.empty()
                                 ? std::string(kVersionString) + ":" + study->name
                                 : study->build_id;
      record_provenance(sim, study->sources, build_id);
      std::cout << "run complete: " << sim.name << " (" << sim.model_refs.size() << " models, "
                << sim.draws_refs.size() << " chunks, " << sim.output_refs.size()
                << " outputs, " << sim.evals_refs.size() << " evals)\n";
      return 0;
    }
    if (ls_cmd->parsed()) {
      detail_cli::print_listing(load_simulation(sim_name, dir));
      return 0;
    }
    if (subset_cmd->parsed()) {
      Simulation sim = load_simulation(sim_name, dir);
      Predicate pred;
      if (!subset_filter.empty()) pred = Predicate::parse(subset_filter);
      std::optional<std::vector<std::string>> methods;
      if (methods_opt->count() > 0) methods = detail_cli::split_csv_list(subset_methods);
      std::optional<std::vector<int>> indexes;
      if (!subset_index.empty()) indexes = parse_index_spec(subset_index);
      Simulation sub = subset_simulation(sim, pred, methods, indexes);
      rename(sub, subset_as);
      std::cout << "saved subset as " << subset_as << " (" << sub.model_refs.size()
                << " models)\n";
      return 0;
    }
    if (rename_cmd->parsed()) {
      Simulation sim = load_simulation(sim_name, dir);
      rename(sim, new_name);
      std::cout << "renamed " << sim_name << " -> " << new_name << "\n";
      return 0;
    }
    if (relabel_cmd->parsed()) {
      Simulation sim = load_simulation(sim_name, dir);
      relabel(sim, new_label);
      std::cout << "relabeled " << sim_name << "\n";
      return 0;
    }
    if (table_cmd->parsed()) {
      Simulation sim = load_simulation(sim_name, dir);
      if (!table_filter.empty()) sim = subset_simulation(sim, Predicate::parse(table_filter));
      TableOptions opts;
      opts.format = table_format_from_string(table_format);
      opts.nsmall = nsmall;
      opts.digits = digits;
      Table t = tabulate_eval(sim, table_metric, opts);
      if (!table_out.empty()) {
        detail::atomic_write_file(table_out, t.rendered);
        std::cout << "wrote " << table_out << "\n";
      } else {
        std::cout << t.rendered;
      }
      return 0;
    }
    if (plot_cmd->parsed()) {
      Simulation sim = load_simulation(sim_name, dir);
      Predicate pred;
      if (!plot_filter.empty()) pred = Predicate::parse(plot_filter);
      PlotResult plot;
      std::string basename = sim.name;
      if (pe_cmd->parsed()) {
        plot = plot_eval(sim, plot_metric, pred);
        basename += "_eval_" + plot_metric;
      } else if (pes_cmd->parsed()) {
        plot = plot_evals(sim, plot_metric, plot_metric_y, pred);
        basename += "_evals_" + plot_metric + "_" + plot_metric_y;
      } else {
        PlotEvalByOptions opts;
        if (plot_type == "raw") opts.type = EvalByType::kRaw;
        else if (plot_type != "aggregate") throw ParseError("--type must be aggregate or raw");
        opts.title = plot_title;
        plot = plot_eval_by(sim, plot_metric, plot_varying, opts, pred);
        basename += "_evalby_" + plot_metric + "_" + plot_varying;
      }
      write_plot(plot, plot_out, basename);
      for (const auto& w : plot.warnings) std::cerr << "warning: " << w << "\n";
      std::cout << "wrote " << (std::filesystem::path(plot_out) / (basename + ".csv")).string()
                << " and .svg\n";
      return 0;
    }
    if (report_cmd->parsed()) {
      Simulation sim = load_simulation(sim_name, dir);
      std::string tmpl;
      if (!template_file.empty()) tmpl = detail::read_file(template_file);
      else if (study && !study->report_template.empty()) tmpl = study->report_template;
      else tmpl = kDefaultReportTemplate;
      std::string build_id =
          study ? (study->build_id.empty() ? std::string(kVersionString) + ":" + study->name
                                           : study->build_id)
                : "";
      generate_report(sim, tmpl, report_out, build_id);
      std::cout << "wrote " << (std::filesystem::path(report_out) / (sim.name + "_report.md")).string()
                << "\n";
      return 0;
    }
    if (create_cmd->parsed()) {
      create_scaffold(create_path);
      std::cout << "created study skeleton in " << create_path << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

inline int cli_main(int argc, char** argv, const StudyDef& study) {
  return cli_main_impl(argc, argv, &study);
}

inline int tool_main(int argc, char** argv) { return cli_main_impl(argc, argv, nullptr); }

}  // namespace simkit

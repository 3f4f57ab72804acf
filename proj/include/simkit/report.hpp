#pragma once

#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "simkit/plot.hpp"
#include "simkit/simulation.hpp"
#include "simkit/table.hpp"

namespace simkit {

/// Where run-time provenance (source digests + build id) is recorded for a
/// simulation; the report compares against it instead of rerunning anything.
inline std::filesystem::path provenance_path(const Simulation& sim) {
  return sim.dir / ("sim_" + sim.name + ".prov");
}

inline std::string digest_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return "missing";
  return detail::hex64(detail::fnv1a64(detail::read_file(path)));
}

/// Called by study programs after a run: records the digest of each source
/// file and the build id.
inline void record_provenance(const Simulation& sim,
                              const std::vector<std::filesystem::path>& sources,
                              const std::string& build_id) {
  nlohmann::json j;
  j["simkit"] = store::kFormatVersion;
  j["kind"] = "provenance";
  j["build_id"] = build_id;
  nlohmann::json src = nlohmann::json::object();
  for (const auto& p : sources) src[p.string()] = digest_file(p);
  j["sources"] = src;
  detail::atomic_write_file(provenance_path(sim), j.dump() + "\n");
}

struct ProvenanceStatus {
  bool recorded = false;
  std::vector<std::string> stale;  // empty and recorded => results are fresh
};

/// Compares current source digests (and optionally the build id) against
/// the recorded provenance.
inline ProvenanceStatus check_provenance(const Simulation& sim,
                                         const std::string& build_id = "") {
  ProvenanceStatus status;
  auto path = provenance_path(sim);
  if (!std::filesystem::exists(path)) return status;
  status.recorded = true;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    status.stale.push_back(std::string("provenance file unreadable: ") + e.what());
    return status;
  }
  if (!build_id.empty() && j.value("build_id", "") != build_id)
    status.stale.push_back("build id changed (recorded \"" + j.value("build_id", "") +
                           "\", current \"" + build_id + "\")");
  for (auto it = j.at("sources").begin(); it != j.at("sources").end(); ++it) {
    std::string now = digest_file(it.key());
    if (now != it.value().get<std::string>())
      status.stale.push_back("source changed since the run: " + it.key());
  }
  return status;
}

namespace detail_report {

inline std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

inline std::string summary_text(const Simulation& sim) {
  std::string s;
  s += "- simulation: `" + sim.name + "` (" + sim.label + ")\n";
  s += "- models: " + std::to_string(sim.model_refs.size()) + "\n";
  s += "- draws chunks: " + std::to_string(sim.draws_refs.size()) + "\n";
  std::vector<std::string> methods;
  for (const Ref& o : sim.output_refs)
    if (std::find(methods.begin(), methods.end(), o.method_name) == methods.end())
      methods.push_back(o.method_name);
  s += "- methods: ";
  for (std::size_t i = 0; i < methods.size(); ++i) s += (i ? ", " : "") + methods[i];
  s += "\n";
  if (!sim.evals_refs.empty()) {
    const Ref& e = sim.evals_refs.front();
    auto header = store::read_header(path_for(e, sim.dir));
    auto names = header.at("metric_names").get<std::vector<std::string>>();
    s += "- metrics: ";
    for (std::size_t i = 0; i < names.size(); ++i) s += (i ? ", " : "") + names[i];
    s += std::string(names.empty() ? "" : ", ") + kTimeMetricName + "\n";
  }
  return s;
}

}  // namespace detail_report

inline constexpr const char* kDefaultReportTemplate =
    "# {{label}}\n"
    "\n"
    "{{staleness}}\n"
    "\n"
    "{{summary}}\n";

/// Renders a markdown report from a template. Directives on their own line:
///
///   {{summary}}                         record overview
///   {{staleness}}                       provenance warning block (or empty)
///   {{table <metric> [nsmall] [digits]}}
///   {{plot_eval <metric>}}
///   {{plot_evals <metric_x> <metric_y>}}
///   {{plot_eval_by <metric> <varying>}}
///
/// {{name}} and {{label}} are substituted anywhere. Plot assets (CSV + SVG)
/// are written under <out_dir>/assets/. The pipeline is never rerun: a
/// stale provenance check only adds a warning block.
inline std::string generate_report(const Simulation& sim, const std::string& template_text,
                                   const std::filesystem::path& out_dir,
                                   const std::string& build_id = "") {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "assets");
  ProvenanceStatus prov = check_provenance(sim, build_id);

  std::string staleness;
  if (!prov.recorded) {
    staleness = "*(no provenance recorded for this simulation)*\n";
  } else if (!prov.stale.empty()) {
    staleness = "> **Warning: results may be stale.** The simulation outputs on disk were "
                "produced by a different version of the study code; rerun the study to "
                "refresh them.\n";
    for (const auto& r : prov.stale) staleness += ">\n> - " + r + "\n";
  }

  std::ostringstream out;
  std::istringstream in(template_text);
  std::string line;
  while (std::getline(in, line)) {
    std::string trimmed = line;
    while (!trimmed.empty() && (trimmed.back() == ' ' || trimmed.back() == '\r'))
      trimmed.pop_back();
    std::size_t lead = trimmed.find_first_not_of(' ');
    std::string core = lead == std::string::npos ? "" : trimmed.substr(lead);
    bool is_directive = core.rfind("{{", 0) == 0 && core.size() > 4 &&
                        core.compare(core.size() - 2, 2, "}}") == 0;
    if (is_directive) {
      auto tokens = detail_report::split_ws(core.substr(2, core.size() - 4));
      const std::string& cmd = tokens.empty() ? core : tokens[0];
      if (cmd == "summary") {
        out << detail_report::summary_text(sim);
        continue;
      }
      if (cmd == "staleness") {
        out << staleness;
        continue;
      }
      if (cmd == "table" && tokens.size() >= 2) {
        TableOptions opts;
        if (tokens.size() >= 3) opts.nsmall = static_cast<int>(string_to_double(tokens[2]));
        if (tokens.size() >= 4) opts.digits = static_cast<int>(string_to_double(tokens[3]));
        out << tabulate_eval(sim, tokens[1], opts).rendered;
        continue;
      }
      if ((cmd == "plot_eval" || cmd == "plot_evals" || cmd == "plot_eval_by") &&
          tokens.size() >= 2) {
        PlotResult plot;
        std::string basename = sim.name;
        if (cmd == "plot_eval") {
          plot = plot_eval(sim, tokens[1]);
          basename += "_eval_" + tokens[1];
        } else if (cmd == "plot_evals" && tokens.size() >= 3) {
          plot = plot_evals(sim, tokens[1], tokens[2]);
          basename += "_evals_" + tokens[1] + "_" + tokens[2];
        } else {
          if (tokens.size() < 3) throw ParseError("plot_eval_by needs <metric> <varying>");
          plot = plot_eval_by(sim, tokens[1], tokens[2]);
          basename += "_evalby_" + tokens[1] + "_" + tokens[2];
        }
        write_plot(plot, out_dir / "assets", basename);
        out << "![" << basename << "](assets/" << basename << ".svg)\n";
        out << "*(data: [assets/" << basename << ".csv](assets/" << basename << ".csv))*\n";
        continue;
      }
      throw ParseError("unknown report directive: " + core);
    }
    // inline substitutions
    auto replace_all = [&line](const std::string& from, const std::string& to) {
      std::size_t pos = 0;
      while ((pos = line.find(from, pos)) != std::string::npos) {
        line.replace(pos, from.size(), to);
        pos += to.size();
      }
    };
    replace_all("{{name}}", sim.name);
    replace_all("{{label}}", sim.label);
    out << line << "\n";
  }
  std::string md = out.str();
  detail::atomic_write_file(out_dir / (sim.name + "_report.md"), md);
  return md;
}

}  // namespace simkit

#pragma once

#include <string>
#include <vector>

#include "simkit/component.hpp"
#include "simkit/format.hpp"
#include "simkit/records.hpp"
#include "simkit/simulation.hpp"

namespace simkit {

enum class TableFormat { kMarkdown, kLatex, kHtml };

inline TableFormat table_format_from_string(const std::string& s) {
  if (s == "markdown") return TableFormat::kMarkdown;
  if (s == "latex") return TableFormat::kLatex;
  if (s == "html") return TableFormat::kHtml;
  throw ParseError("unknown table format \"" + s + "\" (markdown|latex|html)");
}

struct TableOptions {
  AggregatorSpec center = mean_aggregator();
  AggregatorSpec spread = stderr_aggregator();
  TableFormat format = TableFormat::kMarkdown;
  int nsmall = 2;
  int digits = 0;
};

/// An aggregate table: one row per model (in generation order), one column
/// per method. Cell strings are shared across the three render formats.
struct Table {
  std::string caption;
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  std::vector<std::vector<std::string>> cells;  // [row][col]
  std::vector<std::vector<double>> centers;     // aggregate behind each cell
  std::vector<std::vector<double>> spreads;
  std::string rendered;
};

inline std::string model_label_for(const Simulation& sim, const std::string& model_name) {
  auto it = sim.live_models.find(model_name);
  if (it != sim.live_models.end()) return it->second.id.label;
  return store::load_model_header(model_name, sim.dir).label;
}

namespace detail_table {

inline std::string render_markdown(const Table& t) {
  std::string out = "Table: " + t.caption + "\n\n";
  out += "| |";
  for (const auto& c : t.col_labels) out += " " + c + " |";
  out += "\n|---|";
  for (std::size_t i = 0; i < t.col_labels.size(); ++i) out += "---|";
  out += "\n";
  for (std::size_t r = 0; r < t.row_labels.size(); ++r) {
    out += "| " + t.row_labels[r] + " |";
    for (const auto& cell : t.cells[r]) out += " " + cell + " |";
    out += "\n";
  }
  return out;
}

inline std::string render_latex(const Table& t) {
  std::string cols = "l";
  for (std::size_t i = 0; i < t.col_labels.size(); ++i) cols += "|l";
  std::string out = "\\begin{table}\n\n\\caption{" + t.caption + "}\n\\centering\n";
  out += "\\begin{tabular}[t]{" + cols + "}\n\\hline\n ";
  for (const auto& c : t.col_labels) out += " & " + c;
  out += "\\\\\n\\hline\n";
  for (std::size_t r = 0; r < t.row_labels.size(); ++r) {
    out += t.row_labels[r];
    for (const auto& cell : t.cells[r]) out += " & " + cell;
    out += "\\\\\n\\hline\n";
  }
  out += "\\end{tabular}\n\\end{table}\n";
  return out;
}

inline std::string html_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline std::string render_html(const Table& t) {
  std::string out = "<table>\n<caption>" + html_escape(t.caption) + "</caption>\n<tr><th></th>";
  for (const auto& c : t.col_labels) out += "<th>" + html_escape(c) + "</th>";
  out += "</tr>\n";
  for (std::size_t r = 0; r < t.row_labels.size(); ++r) {
    out += "<tr><td>" + html_escape(t.row_labels[r]) + "</td>";
    for (const auto& cell : t.cells[r]) out += "<td>" + html_escape(cell) + "</td>";
    out += "</tr>\n";
  }
  out += "</table>\n";
  return out;
}

}  // namespace detail_table

/// Aggregate table of a scalar metric: cell text is
/// "<center> (<spread>)" with both numbers formatted by the same
/// (nsmall, digits) rule. The caption is generated from the metric label
/// and the replicate count.
inline Table tabulate_eval(const Simulation& sim, const std::string& metric_name,
                           TableOptions opts = {}) {
  std::vector<EvalsBatch> batches = get_evals(sim);
  if (batches.empty())
    throw MissingStageError("no evals in simulation \"" + sim.name + "\"; run evaluate first",
                            "evaluate");

  // per (model, method) draw values in record order
  std::vector<std::string> methods;  // first-seen order
  std::string metric_label;
  bool metric_seen = false;
  for (const EvalsBatch& b : batches) {
    if (std::find(methods.begin(), methods.end(), b.method.name) == methods.end())
      methods.push_back(b.method.name);
    int m = b.metric_index(metric_name);
    if (m >= 0 && !metric_seen) {
      metric_label = b.metrics[m].label;
      metric_seen = true;
    }
  }
  if (!metric_seen)
    throw MissingStageError("metric \"" + metric_name +
                                "\" has not been evaluated; run evaluate with it first",
                            "evaluate");

  Table t;
  std::vector<std::string> method_labels(methods.size());
  std::size_t nsim_for_caption = 0;
  for (const Ref& model_ref : sim.model_refs) {
    std::vector<std::vector<double>> cell_values(methods.size());
    for (const EvalsBatch& b : batches) {
      if (b.model_name != model_ref.model_name) continue;
      auto mpos = std::find(methods.begin(), methods.end(), b.method.name) - methods.begin();
      method_labels[mpos] = b.method.label;
      int m = b.metric_index(metric_name);
      if (m < 0)
        throw MissingStageError("metric \"" + metric_name + "\" missing for model " +
                                    b.model_name + ", method " + b.method.name +
                                    "; run evaluate with it",
                                "evaluate");
      for (const ParamValue& v : b.values[m]) {
        if (!v.is_number())
          throw ContractError("tabulate_eval requires a scalar metric; \"" + metric_name +
                              "\" is vector-valued");
        cell_values[mpos].push_back(v.number());
      }
    }
    bool any = false;
    for (const auto& vals : cell_values) any = any || !vals.empty();
    if (!any) continue;
    t.row_labels.push_back(model_label_for(sim, model_ref.model_name));
    std::vector<std::string> row;
    std::vector<double> row_centers, row_spreads;
    for (std::size_t c = 0; c < methods.size(); ++c) {
      if (cell_values[c].empty())
        throw MissingStageError("metric \"" + metric_name + "\" missing for model " +
                                    model_ref.model_name + ", method " + methods[c] +
                                    "; run evaluate with it",
                                "evaluate");
      nsim_for_caption = std::max(nsim_for_caption, cell_values[c].size());
      double center = opts.center.aggregate(cell_values[c]);
      double spread = opts.spread.aggregate(cell_values[c]);
      row.push_back(format_number(center, opts.nsmall, opts.digits) + " (" +
                    format_number(spread, opts.nsmall, opts.digits) + ")");
      row_centers.push_back(center);
      row_spreads.push_back(spread);
    }
    t.cells.push_back(std::move(row));
    t.centers.push_back(std::move(row_centers));
    t.spreads.push_back(std::move(row_spreads));
  }
  t.col_labels = method_labels;
  t.caption = "A comparison of " + metric_label + " (averaged over " +
              std::to_string(nsim_for_caption) + " replicates).";
  switch (opts.format) {
    case TableFormat::kMarkdown: t.rendered = detail_table::render_markdown(t); break;
    case TableFormat::kLatex: t.rendered = detail_table::render_latex(t); break;
    case TableFormat::kHtml: t.rendered = detail_table::render_html(t); break;
  }
  return t;
}

}  // namespace simkit

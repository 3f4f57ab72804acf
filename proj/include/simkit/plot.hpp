#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "simkit/records.hpp"
#include "simkit/simulation.hpp"
#include "simkit/svg.hpp"
#include "simkit/table.hpp"

namespace simkit {

/// Tukey box statistics: hinges are type-7 quartiles (linear
/// interpolation), whiskers reach the most extreme points within 1.5 IQR
/// of the hinges, everything beyond is an outlier.
struct BoxStats {
  double whisker_lo = 0, q1 = 0, median = 0, q3 = 0, whisker_hi = 0;
  std::vector<double> outliers;
};

/// Type-7 quantile (linear interpolation) of an ascending-sorted sample.
inline double quantile_type7(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw ContractError("quantile of empty sample");
  double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  auto lo = static_cast<std::size_t>(std::floor(h));
  auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - std::floor(h)) * (sorted[hi] - sorted[lo]);
}

inline BoxStats tukey_box_stats(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  BoxStats b;
  b.q1 = quantile_type7(values, 0.25);
  b.median = quantile_type7(values, 0.5);
  b.q3 = quantile_type7(values, 0.75);
  double iqr = b.q3 - b.q1;
  double fence_lo = b.q1 - 1.5 * iqr, fence_hi = b.q3 + 1.5 * iqr;
  b.whisker_lo = b.q3;
  b.whisker_hi = b.q1;
  bool any_in = false;
  for (double v : values) {
    if (v < fence_lo || v > fence_hi) {
      b.outliers.push_back(v);
    } else {
      if (!any_in) {
        b.whisker_lo = b.whisker_hi = v;
        any_in = true;
      }
      b.whisker_lo = std::min(b.whisker_lo, v);
      b.whisker_hi = std::max(b.whisker_hi, v);
    }
  }
  return b;
}

/// Rows parsed back from a records CSV. Plot geometry is computed from
/// this, never from in-memory evals, so the emitted CSV and SVG always
/// agree.
struct CsvRecords {
  struct Row {
    std::string model, method, draw, metric;
    std::optional<int> value_index;
    double value = 0;
    std::vector<std::string> varied;  // aligned with varied_names
  };
  std::vector<std::string> varied_names;
  std::vector<Row> rows;
};

inline CsvRecords parse_records_csv(const std::string& csv) {
  auto table = detail_csv::parse_csv(csv);
  if (table.empty()) throw ParseError("records CSV has no header");
  const auto& header = table.front();
  if (header.size() < 6 || header.front() != "model_name")
    throw ParseError("records CSV header is not in the expected schema");
  CsvRecords out;
  std::size_t fixed_tail = 5;  // method, draw, metric, value_index, value
  for (std::size_t c = 1; c + fixed_tail < header.size(); ++c)
    out.varied_names.push_back(header[c]);
  std::size_t method_col = 1 + out.varied_names.size();
  for (std::size_t r = 1; r < table.size(); ++r) {
    const auto& cells = table[r];
    if (cells.size() != header.size())
      throw ParseError("records CSV row " + std::to_string(r) + " has " +
                       std::to_string(cells.size()) + " fields, header has " +
                       std::to_string(header.size()));
    CsvRecords::Row row;
    row.model = cells[0];
    for (std::size_t c = 0; c < out.varied_names.size(); ++c) row.varied.push_back(cells[1 + c]);
    row.method = cells[method_col];
    row.draw = cells[method_col + 1];
    row.metric = cells[method_col + 2];
    if (!cells[method_col + 3].empty())
      row.value_index = static_cast<int>(string_to_double(cells[method_col + 3]));
    row.value = string_to_double(cells[method_col + 4]);
    out.rows.push_back(std::move(row));
  }
  return out;
}

/// Display names resolved from the records and the simulation; the CSV
/// itself carries only component names.
struct PlotLabels {
  std::map<std::string, std::string> method;  // name -> label
  std::map<std::string, std::string> metric;
  std::map<std::string, std::string> model;
};

inline PlotLabels collect_labels(const Simulation& sim,
                                 const std::vector<EvalRecord>& records) {
  PlotLabels labels;
  for (const EvalRecord& r : records) {
    labels.method.emplace(r.method_name, r.method_label);
    labels.metric.emplace(r.metric_name, r.metric_label);
    if (!labels.model.count(r.model_name))
      labels.model.emplace(r.model_name, model_label_for(sim, r.model_name));
  }
  return labels;
}

struct PlotResult {
  std::string csv;
  std::string svg;
  std::vector<std::string> warnings;
};

inline void write_plot(const PlotResult& plot, const std::filesystem::path& out_dir,
                       const std::string& basename) {
  std::filesystem::create_directories(out_dir);
  detail::atomic_write_file(out_dir / (basename + ".csv"), plot.csv);
  detail::atomic_write_file(out_dir / (basename + ".svg"), plot.svg);
}

// ---------------------------------------------------------------------------
// plot_eval: side-by-side box plots of a scalar metric, one facet per model

struct PlotEvalFacet {
  std::string model_name;
  std::string model_label;
  std::vector<std::string> method_names;
  std::vector<std::string> method_labels;
  std::vector<BoxStats> boxes;  // aligned with method_names
};

struct PlotEvalData {
  std::string metric_name;
  std::string metric_label;
  std::vector<PlotEvalFacet> facets;
};

inline PlotEvalData build_plot_eval_data(const CsvRecords& records, const std::string& metric,
                                         const PlotLabels& labels,
                                         const std::vector<std::string>& model_order) {
  PlotEvalData data;
  data.metric_name = metric;
  data.metric_label = labels.metric.count(metric) ? labels.metric.at(metric) : metric;
  std::map<std::string, std::map<std::string, std::vector<double>>> values;  // model -> method
  std::vector<std::string> method_order;
  for (const auto& row : records.rows) {
    if (row.metric != metric) continue;
    if (row.value_index)
      throw ContractError("plot_eval requires a scalar metric; \"" + metric +
                          "\" is vector-valued");
    values[row.model][row.method].push_back(row.value);
    if (std::find(method_order.begin(), method_order.end(), row.method) == method_order.end())
      method_order.push_back(row.method);
  }
  if (values.empty())
    throw ContractError("no values of metric \"" + metric + "\" to plot");
  for (const auto& model : model_order) {
    auto it = values.find(model);
    if (it == values.end()) continue;
    PlotEvalFacet facet;
    facet.model_name = model;
    facet.model_label = labels.model.count(model) ? labels.model.at(model) : model;
    for (const auto& method : method_order) {
      auto vit = it->second.find(method);
      if (vit == it->second.end()) continue;
      facet.method_names.push_back(method);
      facet.method_labels.push_back(labels.method.count(method) ? labels.method.at(method)
                                                                : method);
      facet.boxes.push_back(tukey_box_stats(vit->second));
    }
    data.facets.push_back(std::move(facet));
  }
  return data;
}

namespace detail_plot {

constexpr double kPanelW = 260, kPanelH = 280, kMarginL = 56, kMarginR = 16, kMarginT = 40,
                 kMarginB = 60;

inline std::pair<double, double> span_of(const BoxStats& b) {
  double lo = std::min(b.whisker_lo, b.q1), hi = std::max(b.whisker_hi, b.q3);
  for (double v : b.outliers) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

inline std::string render_plot_eval(const PlotEvalData& data) {
  using namespace simkit::detail;
  std::size_t nf = data.facets.size();
  double width = kMarginL + kPanelW * std::max<std::size_t>(nf, 1) + kMarginR;
  double height = kMarginT + kPanelH + kMarginB;
  SvgCanvas svg(width, height);
  double lo = 0, hi = 1;
  bool first = true;
  for (const auto& f : data.facets)
    for (const auto& b : f.boxes) {
      auto [l, h] = span_of(b);
      if (first) {
        lo = l;
        hi = h;
        first = false;
      }
      lo = std::min(lo, l);
      hi = std::max(hi, h);
    }
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  double pad = 0.05 * (hi - lo);
  LinearScale ys{lo - pad, hi + pad, kMarginT + kPanelH, kMarginT};
  auto yticks = nice_ticks(lo - pad, hi + pad);
  for (std::size_t fi = 0; fi < nf; ++fi) {
    const auto& facet = data.facets[fi];
    double x0 = kMarginL + kPanelW * fi;
    double x1 = x0 + kPanelW - 24;
    LinearScale xs{0, 1, x0, x1};  // unused ticks
    svg.axes(x0, kMarginT + kPanelH, x1, kMarginT, xs, ys, {}, fi == 0 ? yticks : std::vector<double>{});
    svg.text((x0 + x1) / 2, kMarginT - 10, facet.model_label, 12, "middle");
    std::size_t nb = facet.boxes.size();
    for (std::size_t bi = 0; bi < nb; ++bi) {
      const BoxStats& b = facet.boxes[bi];
      double cx = x0 + (bi + 0.5) * (x1 - x0) / std::max<std::size_t>(nb, 1);
      double bw = 0.5 * (x1 - x0) / std::max<std::size_t>(nb, 1);
      const char* color = series_color(bi);
      svg.line(cx, ys(b.whisker_lo), cx, ys(b.q1), "black");
      svg.line(cx, ys(b.q3), cx, ys(b.whisker_hi), "black");
      svg.line(cx - bw / 4, ys(b.whisker_lo), cx + bw / 4, ys(b.whisker_lo), "black");
      svg.line(cx - bw / 4, ys(b.whisker_hi), cx + bw / 4, ys(b.whisker_hi), "black");
      svg.rect(cx - bw / 2, ys(b.q3), bw, std::fabs(ys(b.q1) - ys(b.q3)), color);
      svg.line(cx - bw / 2, ys(b.median), cx + bw / 2, ys(b.median), "black", 2.0);
      for (double v : b.outliers) svg.circle(cx, ys(v), 2.5, "black");
      svg.text(cx, kMarginT + kPanelH + 30, facet.method_labels[bi], 11, "middle", 0);
    }
  }
  svg.text(14, kMarginT + kPanelH / 2, data.metric_label, 12, "middle", -90);
  return svg.render();
}

}  // namespace detail_plot

/// Side-by-side box plots of each method, faceted by model. The returned
/// CSV holds the raw per-draw records; box geometry is recomputed from it.
inline PlotResult plot_eval(const Simulation& sim, const std::string& metric,
                            const Predicate& predicate = {}) {
  std::vector<EvalRecord> all = get_records(sim, predicate);
  std::vector<EvalRecord> filtered;
  for (auto& r : all)
    if (r.metric_name == metric) filtered.push_back(std::move(r));
  if (filtered.empty())
    throw MissingStageError("metric \"" + metric + "\" has not been evaluated", "evaluate");
  PlotResult result;
  result.csv = records_to_csv(filtered);
  PlotLabels labels = collect_labels(sim, filtered);
  std::vector<std::string> model_order;
  for (const Ref& m : sim.model_refs) model_order.push_back(m.model_name);
  PlotEvalData data = build_plot_eval_data(parse_records_csv(result.csv), metric, labels,
                                           model_order);
  result.svg = detail_plot::render_plot_eval(data);
  return result;
}

// ---------------------------------------------------------------------------
// plot_evals: metric_x versus metric_y, one polyline per (method, draw)

struct PlotEvalsCurve {
  std::string method_name;
  std::string method_label;
  std::string draw_id;
  std::vector<std::pair<double, double>> points;  // ordered by value_index
};

struct PlotEvalsFacet {
  std::string model_name;
  std::string model_label;
  std::vector<PlotEvalsCurve> curves;
};

struct PlotEvalsData {
  std::string x_label, y_label;
  std::vector<PlotEvalsFacet> facets;
};

inline PlotEvalsData build_plot_evals_data(const CsvRecords& records, const std::string& mx,
                                           const std::string& my, const PlotLabels& labels,
                                           const std::vector<std::string>& model_order) {
  PlotEvalsData data;
  data.x_label = labels.metric.count(mx) ? labels.metric.at(mx) : mx;
  data.y_label = labels.metric.count(my) ? labels.metric.at(my) : my;
  // (model, method, draw) -> indexed values per metric
  std::map<std::tuple<std::string, std::string, std::string>,
           std::pair<std::vector<double>, std::vector<double>>>
      series;
  for (const auto& row : records.rows) {
    if (row.metric != mx && row.metric != my) continue;
    auto key = std::make_tuple(row.model, row.method, row.draw);
    auto& entry = series[key];
    auto& vec = (row.metric == mx) ? entry.first : entry.second;
    std::size_t pos = row.value_index ? static_cast<std::size_t>(*row.value_index - 1) : 0;
    if (vec.size() <= pos) vec.resize(pos + 1);
    vec[pos] = row.value;
  }
  for (const auto& model : model_order) {
    PlotEvalsFacet facet;
    facet.model_name = model;
    facet.model_label = labels.model.count(model) ? labels.model.at(model) : model;
    for (const auto& [key, xy] : series) {
      if (std::get<0>(key) != model) continue;
      if (xy.first.size() != xy.second.size())
        throw ContractError("metrics \"" + mx + "\" and \"" + my +
                            "\" have mismatched lengths (" + std::to_string(xy.first.size()) +
                            " vs " + std::to_string(xy.second.size()) + ") on draw " +
                            std::get<2>(key));
      PlotEvalsCurve curve;
      curve.method_name = std::get<1>(key);
      curve.method_label = labels.method.count(curve.method_name)
                               ? labels.method.at(curve.method_name)
                               : curve.method_name;
      curve.draw_id = std::get<2>(key);
      for (std::size_t i = 0; i < xy.first.size(); ++i)
        curve.points.emplace_back(xy.first[i], xy.second[i]);
      facet.curves.push_back(std::move(curve));
    }
    if (!facet.curves.empty()) data.facets.push_back(std::move(facet));
  }
  if (data.facets.empty())
    throw ContractError("no values of metrics \"" + mx + "\"/\"" + my + "\" to plot");
  return data;
}

namespace detail_plot {

inline std::string render_plot_evals(const PlotEvalsData& data) {
  using namespace simkit::detail;
  std::size_t nf = data.facets.size();
  double width = kMarginL + kPanelW * std::max<std::size_t>(nf, 1) + kMarginR + 130;
  double height = kMarginT + kPanelH + kMarginB;
  SvgCanvas svg(width, height);
  double xlo = 0, xhi = 1, ylo = 0, yhi = 1;
  bool first = true;
  for (const auto& f : data.facets)
    for (const auto& c : f.curves)
      for (auto [x, y] : c.points) {
        if (first) {
          xlo = xhi = x;
          ylo = yhi = y;
          first = false;
        }
        xlo = std::min(xlo, x);
        xhi = std::max(xhi, x);
        ylo = std::min(ylo, y);
        yhi = std::max(yhi, y);
      }
  if (xlo == xhi) { xlo -= 0.5; xhi += 0.5; }
  if (ylo == yhi) { ylo -= 0.5; yhi += 0.5; }
  LinearScale ys{ylo, yhi, kMarginT + kPanelH, kMarginT};
  auto yticks = nice_ticks(ylo, yhi);
  std::vector<std::pair<std::string, std::string>> legend;  // label, color
  for (std::size_t fi = 0; fi < nf; ++fi) {
    const auto& facet = data.facets[fi];
    double x0 = kMarginL + kPanelW * fi;
    double x1 = x0 + kPanelW - 24;
    LinearScale xs{xlo, xhi, x0, x1};
    svg.axes(x0, kMarginT + kPanelH, x1, kMarginT, xs, ys, nice_ticks(xlo, xhi),
             fi == 0 ? yticks : std::vector<double>{});
    svg.text((x0 + x1) / 2, kMarginT - 10, facet.model_label, 12, "middle");
    std::map<std::string, std::size_t> method_color;
    for (const auto& curve : facet.curves) {
      auto [cit, inserted] = method_color.emplace(curve.method_name, method_color.size());
      const char* color = series_color(cit->second);
      if (inserted) legend.emplace_back(curve.method_label, color);
      std::vector<std::pair<double, double>> px;
      px.reserve(curve.points.size());
      for (auto [x, y] : curve.points) px.emplace_back(xs(x), ys(y));
      svg.polyline(px, color, 1.0);
    }
    svg.text((x0 + x1) / 2, kMarginT + kPanelH + 34, data.x_label, 12, "middle");
  }
  svg.text(14, kMarginT + kPanelH / 2, data.y_label, 12, "middle", -90);
  // dedupe legend labels across facets
  std::vector<std::pair<std::string, std::string>> uniq;
  for (const auto& e : legend)
    if (std::find(uniq.begin(), uniq.end(), e) == uniq.end()) uniq.push_back(e);
  double lx = width - 120, ly = kMarginT + 10;
  for (const auto& [label, color] : uniq) {
    svg.line(lx, ly - 4, lx + 18, ly - 4, color, 2.0);
    svg.text(lx + 24, ly, label, 11);
    ly += 16;
  }
  return svg.render();
}

}  // namespace detail_plot

/// Plots metric_x against metric_y with one polyline per (method, draw),
/// points ordered along the vector metrics (e.g. df versus error along a
/// regularization path).
inline PlotResult plot_evals(const Simulation& sim, const std::string& metric_x,
                             const std::string& metric_y, const Predicate& predicate = {}) {
  std::vector<EvalRecord> all = get_records(sim, predicate);
  std::vector<EvalRecord> filtered;
  for (auto& r : all)
    if (r.metric_name == metric_x || r.metric_name == metric_y)
      filtered.push_back(std::move(r));
  if (filtered.empty())
    throw MissingStageError("metrics \"" + metric_x + "\"/\"" + metric_y +
                                "\" have not been evaluated",
                            "evaluate");
  PlotResult result;
  result.csv = records_to_csv(filtered);
  PlotLabels labels = collect_labels(sim, filtered);
  std::vector<std::string> model_order;
  for (const Ref& m : sim.model_refs) model_order.push_back(m.model_name);
  PlotEvalsData data = build_plot_evals_data(parse_records_csv(result.csv), metric_x, metric_y,
                                             labels, model_order);
  result.svg = detail_plot::render_plot_evals(data);
  return result;
}

// ---------------------------------------------------------------------------
// plot_eval_by: metric versus a varied model parameter

enum class EvalByType { kAggregate, kRaw };

struct PlotEvalByOptions {
  EvalByType type = EvalByType::kAggregate;
  AggregatorSpec center = mean_aggregator();
  AggregatorSpec spread = stderr_aggregator();
  std::string title;
};

struct EvalByPoint {
  double x = 0;
  double y = 0;         // aggregate center, or raw value
  double half_width = 0;  // error bar half-width (aggregate type)
};

struct EvalBySeries {
  std::string method_name;
  std::string method_label;
  std::vector<EvalByPoint> points;  // sorted by x
};

struct PlotEvalByData {
  std::string x_label, y_label, title;
  EvalByType type = EvalByType::kAggregate;
  std::vector<EvalBySeries> series;
  std::vector<std::string> warnings;
};

inline PlotEvalByData build_plot_eval_by_data(const CsvRecords& records,
                                              const std::string& metric,
                                              const std::string& varying,
                                              const PlotEvalByOptions& opts,
                                              const PlotLabels& labels) {
  auto vit = std::find(records.varied_names.begin(), records.varied_names.end(), varying);
  if (vit == records.varied_names.end())
    throw ContractError("\"" + varying + "\" is not a varied model parameter of these records");
  std::size_t vcol = static_cast<std::size_t>(vit - records.varied_names.begin());

  PlotEvalByData data;
  data.type = opts.type;
  data.x_label = varying;
  data.y_label = labels.metric.count(metric) ? labels.metric.at(metric) : metric;
  data.title = opts.title;

  // method -> x -> per-draw values (in record order)
  std::map<std::string, std::map<double, std::vector<double>>> values;
  std::vector<std::string> method_order;
  for (const auto& row : records.rows) {
    if (row.metric != metric) continue;
    if (row.value_index)
      throw ContractError("plot_eval_by requires a scalar metric; \"" + metric +
                          "\" is vector-valued");
    double x = string_to_double(row.varied[vcol]);
    values[row.method][x].push_back(row.value);
    if (std::find(method_order.begin(), method_order.end(), row.method) == method_order.end())
      method_order.push_back(row.method);
  }
  if (values.empty()) throw ContractError("no values of metric \"" + metric + "\" to plot");

  bool warned_single = false;
  for (const auto& method : method_order) {
    EvalBySeries series;
    series.method_name = method;
    series.method_label = labels.method.count(method) ? labels.method.at(method) : method;
    for (const auto& [x, draws] : values[method]) {  // std::map keeps x ascending
      if (opts.type == EvalByType::kRaw) {
        for (double v : draws) series.points.push_back({x, v, 0});
        continue;
      }
      EvalByPoint p;
      p.x = x;
      p.y = opts.center.aggregate(draws);
      if (draws.size() == 1) {
        p.half_width = 0;
        if (!warned_single) {
          data.warnings.push_back(
              "single draw at " + varying + " = " + detail::tick_label(x) +
              ": spread is undefined, error bar width set to 0");
          warned_single = true;
        }
      } else {
        p.half_width = opts.spread.aggregate(draws);
      }
      series.points.push_back(p);
    }
    data.series.push_back(std::move(series));
  }
  return data;
}

namespace detail_plot {

inline std::string render_plot_eval_by(const PlotEvalByData& data) {
  using namespace simkit::detail;
  double width = kMarginL + 2 * kPanelW + kMarginR + 150;
  double height = kMarginT + kPanelH + kMarginB;
  SvgCanvas svg(width, height);
  double xlo = 0, xhi = 1, ylo = 0, yhi = 1;
  bool first = true;
  for (const auto& s : data.series)
    for (const auto& p : s.points) {
      double lo = p.y - p.half_width, hi = p.y + p.half_width;
      if (first) {
        xlo = xhi = p.x;
        ylo = lo;
        yhi = hi;
        first = false;
      }
      xlo = std::min(xlo, p.x);
      xhi = std::max(xhi, p.x);
      ylo = std::min(ylo, lo);
      yhi = std::max(yhi, hi);
    }
  if (xlo == xhi) { xlo -= 0.5; xhi += 0.5; }
  if (ylo == yhi) { ylo -= 0.5; yhi += 0.5; }
  double x0 = kMarginL, x1 = kMarginL + 2 * kPanelW;
  LinearScale xs{xlo, xhi, x0, x1};
  LinearScale ys{ylo, yhi, kMarginT + kPanelH, kMarginT};
  svg.axes(x0, kMarginT + kPanelH, x1, kMarginT, xs, ys, nice_ticks(xlo, xhi),
           nice_ticks(ylo, yhi));
  if (!data.title.empty()) svg.text((x0 + x1) / 2, kMarginT - 14, data.title, 14, "middle");
  double ly = kMarginT + 10;
  for (std::size_t si = 0; si < data.series.size(); ++si) {
    const auto& s = data.series[si];
    const char* color = series_color(si);
    if (data.type == EvalByType::kAggregate) {
      std::vector<std::pair<double, double>> px;
      for (const auto& p : s.points) px.emplace_back(xs(p.x), ys(p.y));
      svg.polyline(px, color, 1.5);
      for (const auto& p : s.points) {
        svg.circle(xs(p.x), ys(p.y), 2.5, color);
        if (p.half_width > 0) {
          svg.line(xs(p.x), ys(p.y - p.half_width), xs(p.x), ys(p.y + p.half_width), color);
          svg.line(xs(p.x) - 3, ys(p.y - p.half_width), xs(p.x) + 3, ys(p.y - p.half_width),
                   color);
          svg.line(xs(p.x) - 3, ys(p.y + p.half_width), xs(p.x) + 3, ys(p.y + p.half_width),
                   color);
        }
      }
    } else {
      for (const auto& p : s.points) svg.circle(xs(p.x), ys(p.y), 2.5, color);
    }
    svg.line(x1 + 16, ly - 4, x1 + 34, ly - 4, color, 2.0);
    svg.text(x1 + 40, ly, s.method_label, 11);
    ly += 16;
  }
  svg.text((x0 + x1) / 2, kMarginT + kPanelH + 34, data.x_label, 12, "middle");
  svg.text(14, kMarginT + kPanelH / 2, data.y_label, 12, "middle", -90);
  return svg.render();
}

}  // namespace detail_plot

/// Plots a scalar metric against a model parameter that was varied across
/// models. Default: a line per method through the across-draw means with
/// error bars of one standard error; type=raw shows every draw.
inline PlotResult plot_eval_by(const Simulation& sim, const std::string& metric,
                               const std::string& varying, PlotEvalByOptions opts = {},
                               const Predicate& predicate = {}) {
  std::vector<EvalRecord> all = get_records(sim, predicate);
  std::vector<EvalRecord> filtered;
  for (auto& r : all)
    if (r.metric_name == metric) filtered.push_back(std::move(r));
  if (filtered.empty())
    throw MissingStageError("metric \"" + metric + "\" has not been evaluated", "evaluate");
  PlotResult result;
  result.csv = records_to_csv(filtered);
  PlotLabels labels = collect_labels(sim, filtered);
  if (opts.title.empty()) opts.title = sim.label;
  PlotEvalByData data =
      build_plot_eval_by_data(parse_records_csv(result.csv), metric, varying, opts, labels);
  result.warnings = data.warnings;
  result.svg = detail_plot::render_plot_eval_by(data);
  return result;
}

}  // namespace simkit

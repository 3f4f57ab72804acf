#pragma once

#include <string>
#include <vector>

#include "simkit/component.hpp"
#include "simkit/rng.hpp"

namespace simkit {

/// One chunk of random draws from a model, plus the generator end state
/// that every method run on this chunk is restored from.
struct DrawsBatch {
  std::string model_name;
  std::string model_label;
  int index = 0;
  std::vector<Draw> draws;  // ids "r<index>.<j>", j = 1..nsim
  RngState rng_end_state;

  int nsim() const { return static_cast<int>(draws.size()); }
};

/// Per-draw outputs of one method on one chunk. Wall-clock seconds per draw
/// are tracked alongside; they are persisted separately from the output
/// payload so payload files stay byte-identical across reruns.
struct OutputBatch {
  std::string model_name;
  int index = 0;
  int nsim = 0;
  ComponentId method;
  std::vector<OutMap> outputs;    // one per draw
  std::vector<double> time_sec;   // one per draw, >= 0
};

/// Metric values of one method on one chunk. The implicit "time" metric is
/// always present in memory, injected from the output timings; it is never
/// part of the persisted evals payload.
struct EvalsBatch {
  std::string model_name;
  int index = 0;
  int nsim = 0;
  ComponentId method;
  std::vector<std::string> draw_ids;
  std::vector<ComponentId> metrics;
  std::vector<std::vector<ParamValue>> values;  // [metric][draw], number or vector

  int metric_index(std::string_view name) const {
    for (std::size_t i = 0; i < metrics.size(); ++i)
      if (metrics[i].name == name) return static_cast<int>(i);
    return -1;
  }
  bool has_metric(std::string_view name) const { return metric_index(name) >= 0; }
};

inline std::string draw_id_for(int chunk_index, int j) {
  return "r" + std::to_string(chunk_index) + "." + std::to_string(j);
}

inline std::string describe(const DrawsBatch& d) {
  return "Draws Component\n name: " + d.model_name + "\n label: (Block " +
         std::to_string(d.index) + ":) " + std::to_string(d.nsim()) + " draws from " +
         d.model_label + "\n";
}

inline std::string describe(const OutputBatch& o) {
  std::string keys;
  if (!o.outputs.empty()) {
    for (const auto& [name, value] : o.outputs.front()) {
      if (!keys.empty()) keys += ", ";
      keys += name;
    }
  }
  if (!keys.empty()) keys += ", ";
  keys += kTimeMetricName;
  return "Output Component\n model_name: " + o.model_name + "\n index: " +
         std::to_string(o.index) + "\n nsim: " + std::to_string(o.nsim) +
         "\n method_name: " + o.method.name + "\n method_label: " + o.method.label +
         "\n out: " + keys + "\n";
}

/// Printout for the evals of one (model, chunk) across methods, matching the
/// layout used by `ls`.
inline std::string describe_evals(const std::vector<EvalsBatch>& group) {
  if (group.empty()) return "Evals Component\n (empty)\n";
  const EvalsBatch& first = group.front();
  std::string methods, labels;
  for (const auto& e : group) {
    if (!methods.empty()) {
      methods += ", ";
      labels += ", ";
    }
    methods += e.method.name;
    labels += e.method.label;
  }
  std::string metric_names, metric_labels;
  for (const auto& m : first.metrics) {
    if (!metric_names.empty()) {
      metric_names += ", ";
      metric_labels += ", ";
    }
    metric_names += m.name;
    metric_labels += m.label;
  }
  return "Evals Component\n model_name: " + first.model_name + "    index: " +
         std::to_string(first.index) + " (" + std::to_string(first.nsim) + " nsim)" +
         "\n method_name(s): " + methods + " (labeled: " + labels + ")" +
         "\n metric_name(s): " + metric_names + "\n metric_label(s): " + metric_labels + "\n";
}

}  // namespace simkit

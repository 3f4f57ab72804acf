#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "simkit/errors.hpp"
#include "simkit/param_value.hpp"
#include "simkit/rng.hpp"

namespace simkit {

/// Name/label pair carried by every component. The name is a short slug
/// used in file names; the label is the human-readable string that shows up
/// in printouts, plot legends, axes and table headers.
struct ComponentId {
  std::string name;
  std::string label;

  friend bool operator==(const ComponentId&, const ComponentId&) = default;
};

/// Slug grammar for component names. '/' is only legal in generated model
/// names (parameter suffixes), never in user-supplied names.
inline bool is_valid_slug(std::string_view name, bool allow_slash = false) {
  if (name.empty()) return false;
  for (char c : name) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
              c == '_' || c == '.' || c == '-' || (allow_slash && c == '/');
    if (!ok) return false;
  }
  return true;
}

inline void validate_component_id(std::string_view kind, const ComponentId& id,
                                  bool allow_slash = false) {
  if (!is_valid_slug(id.name, allow_slash))
    throw InvalidNameError(std::string(kind) + " name \"" + id.name +
                           "\" is not a valid slug ([a-zA-Z0-9_.-]+" +
                           (allow_slash ? ", '/' for generated models)" : ")"));
  if (id.label.empty())
    throw InvalidNameError(std::string(kind) + " \"" + id.name + "\" has an empty label");
}

/// The metric name reserved for automatic method timings.
inline constexpr const char* kTimeMetricName = "time";
inline constexpr const char* kTimeMetricLabel = "Computing time";

/// One simulated realization. Ids look like "r<chunk>.<j>" with j starting
/// at 1 within the chunk.
struct Draw {
  std::string id;
  ParamValue payload;

  friend bool operator==(const Draw&, const Draw&) = default;
};

/// Ordered output map produced by a method for one draw.
using OutMap = ParamMap;

using SimulateFn =
    std::function<std::vector<ParamValue>(const ParamMap& params, int nsim, RngStream& rng)>;

/// A named, parameterized data-generating distribution.
struct ModelSpec {
  ComponentId id;         // name becomes "<base>/<param suffixes>" once generated
  std::string base_name;  // slug the model was declared with
  ParamMap params;
  ParamMap varied;  // vary_along arguments this instance was built from
  SimulateFn simulate;

  /// Draws exactly nsim payloads and validates the count.
  std::vector<ParamValue> run_simulate(int nsim, RngStream& rng) const {
    if (!simulate)
      throw MissingProcedureError("model \"" + id.name +
                                  "\" has no simulate procedure (loaded from disk?)");
    std::vector<ParamValue> out = simulate(params, nsim, rng);
    if (static_cast<int>(out.size()) != nsim)
      throw ContractError("model \"" + id.name + "\" simulate returned " +
                          std::to_string(out.size()) + " draws, expected " +
                          std::to_string(nsim));
    return out;
  }
};

struct MethodSpec;

using MethodApplyFn = std::function<OutMap(const ModelSpec& model, const Draw& draw,
                                           RngStream& rng, const ParamMap& extra_args)>;

/// A statistical procedure mapping (model, draw) to an output map.
struct MethodSpec {
  ComponentId id;
  ParamMap settings;
  MethodApplyFn apply;
};

using ExtendFn =
    std::function<OutMap(const ModelSpec& model, const Draw& draw, const OutMap& base_out,
                         const MethodSpec& base_method, RngStream& rng)>;

/// A transformation on top of another method's output (e.g. cross
/// validation). Added to a MethodSpec it yields an ExtendedMethodSpec.
struct MethodExtensionSpec {
  ComponentId id;
  ExtendFn extend;
};

/// base + extension. Behaves like a method; the engine feeds it the base
/// method's per-draw outputs.
struct ExtendedMethodSpec {
  ComponentId id;  // "<base>_<ext>" / "<Base label> <ext label>"
  MethodSpec base;
  MethodExtensionSpec extension;
};

using MetricComputeFn = std::function<ParamValue(const ModelSpec& model, const OutMap& out)>;

/// A pure evaluation mapping (model, method output) to a scalar or vector.
struct MetricSpec {
  ComponentId id;
  MetricComputeFn compute;
};

/// Collapses a vector of per-draw values to one number (table cells, error
/// bar centers and widths).
struct AggregatorSpec {
  std::string label;
  std::function<double(const std::vector<double>&)> aggregate;
};

inline ModelSpec new_model_spec(std::string name, std::string label, ParamMap params,
                                SimulateFn simulate) {
  ModelSpec m;
  m.id = {std::move(name), std::move(label)};
  validate_component_id("model", m.id);
  if (!simulate) throw MissingProcedureError("model \"" + m.id.name + "\" needs a simulate procedure");
  m.base_name = m.id.name;
  m.params = std::move(params);
  m.simulate = std::move(simulate);
  return m;
}

inline MethodSpec new_method_spec(std::string name, std::string label, MethodApplyFn apply,
                                  ParamMap settings = {}) {
  MethodSpec m;
  m.id = {std::move(name), std::move(label)};
  validate_component_id("method", m.id);
  if (!apply) throw MissingProcedureError("method \"" + m.id.name + "\" needs an apply procedure");
  m.settings = std::move(settings);
  m.apply = std::move(apply);
  return m;
}

inline MetricSpec new_metric_spec(std::string name, std::string label, MetricComputeFn compute) {
  MetricSpec m;
  m.id = {std::move(name), std::move(label)};
  validate_component_id("metric", m.id);
  if (m.id.name == kTimeMetricName)
    throw ReservedNameError("metric name \"time\" is reserved for automatic method timings");
  if (!compute)
    throw MissingProcedureError("metric \"" + m.id.name + "\" needs a compute procedure");
  m.compute = std::move(compute);
  return m;
}

inline MethodExtensionSpec new_method_extension(std::string name, std::string label,
                                                ExtendFn extend) {
  MethodExtensionSpec e;
  e.id = {std::move(name), std::move(label)};
  validate_component_id("method extension", e.id);
  if (!extend)
    throw MissingProcedureError("method extension \"" + e.id.name +
                                "\" needs an extend procedure");
  e.extend = std::move(extend);
  return e;
}

/// Composition rule: name "<base>_<ext>", label "<Base label> <ext label>".
inline ExtendedMethodSpec compose_extended(MethodSpec base, MethodExtensionSpec ext) {
  ExtendedMethodSpec m;
  m.id = {base.id.name + "_" + ext.id.name, base.id.label + " " + ext.id.label};
  m.base = std::move(base);
  m.extension = std::move(ext);
  return m;
}

inline ExtendedMethodSpec operator+(const MethodSpec& base, const MethodExtensionSpec& ext) {
  return compose_extended(base, ext);
}

inline AggregatorSpec new_aggregator(std::string label,
                                     std::function<double(const std::vector<double>&)> fn) {
  if (label.empty()) throw InvalidNameError("aggregator label must be nonempty");
  if (!fn) throw MissingProcedureError("aggregator \"" + label + "\" needs a procedure");
  return AggregatorSpec{std::move(label), std::move(fn)};
}

// Summation order is part of the contract: left-to-right in draw order, so
// independently coded passes over the same records agree exactly.
inline double mean_in_order(const std::vector<double>& v) {
  if (v.empty()) throw ContractError("aggregator requires at least one value");
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

/// Standard error of the mean, sd/sqrt(n). Defined as 0 for n = 1.
inline double stderr_in_order(const std::vector<double>& v) {
  if (v.empty()) throw ContractError("aggregator requires at least one value");
  std::size_t n = v.size();
  if (n == 1) return 0.0;
  double m = mean_in_order(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  double sd = std::sqrt(ss / static_cast<double>(n - 1));
  return sd / std::sqrt(static_cast<double>(n));
}

inline AggregatorSpec mean_aggregator() { return new_aggregator("mean", mean_in_order); }
inline AggregatorSpec stderr_aggregator() { return new_aggregator("se", stderr_in_order); }

/// A plain method or an extended one; run_method accepts either.
using AnyMethod = std::variant<MethodSpec, ExtendedMethodSpec>;

inline const ComponentId& method_id(const AnyMethod& m) {
  if (const auto* p = std::get_if<MethodSpec>(&m)) return p->id;
  return std::get<ExtendedMethodSpec>(m).id;
}

inline bool is_extended(const AnyMethod& m) {
  return std::holds_alternative<ExtendedMethodSpec>(m);
}

inline std::string describe(const ModelSpec& m) {
  std::string s = "Model Component\n name: " + m.id.name + "\n label: " + m.id.label +
                  "\n params:";
  for (const auto& [name, value] : m.params) s += " " + name;
  s += "\n";
  return s;
}

}  // namespace simkit

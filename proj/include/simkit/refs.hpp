#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "simkit/component.hpp"
#include "simkit/format.hpp"
#include "simkit/param_value.hpp"

namespace simkit {

enum class RefKind { kModel, kDraws, kOutput, kEvals };

inline const char* ref_kind_name(RefKind k) {
  switch (k) {
    case RefKind::kModel: return "model";
    case RefKind::kDraws: return "draws";
    case RefKind::kOutput: return "output";
    case RefKind::kEvals: return "evals";
  }
  return "?";
}

/// Typed locator for a persisted object. A Ref plus a directory root
/// resolves to exactly one file path; simulations hold refs, never payloads.
struct Ref {
  RefKind kind = RefKind::kModel;
  std::string model_name;  // generated dir name, e.g. "slm/k_10/n_200/p_500"
  int index = 0;           // draws/output/evals
  std::string method_name; // output/evals

  friend bool operator==(const Ref&, const Ref&) = default;

  static Ref model(std::string model_name) {
    return Ref{RefKind::kModel, std::move(model_name), 0, {}};
  }
  static Ref draws(std::string model_name, int index) {
    return Ref{RefKind::kDraws, std::move(model_name), index, {}};
  }
  static Ref output(std::string model_name, int index, std::string method) {
    return Ref{RefKind::kOutput, std::move(model_name), index, std::move(method)};
  }
  static Ref evals(std::string model_name, int index, std::string method) {
    return Ref{RefKind::kEvals, std::move(model_name), index, std::move(method)};
  }
};

/// Directory name for a generated model: the base slug followed by one
/// "<param>_<value>" segment per generation argument, in lexicographic
/// parameter order. Non-scalar arguments contribute an 8-hex-digit content
/// digest instead of a value.
inline std::string encode_model_dirname(const std::string& base_name,
                                        const ParamMap& generation_args) {
  std::vector<std::pair<std::string, std::string>> parts;
  for (const auto& [name, value] : generation_args) {
    std::string text;
    if (value.is_integer()) {
      text = std::to_string(value.integer());
    } else if (value.is_number()) {
      text = scalar_suffix_string(value.number());
    } else if (value.is_bool()) {
      text = value.boolean() ? "true" : "false";
    } else if (value.is_string() && is_valid_slug(value.string())) {
      text = value.string();
    } else {
      text = short_digest(value);
    }
    parts.emplace_back(name, text);
  }
  std::sort(parts.begin(), parts.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::string out = base_name;
  for (const auto& [name, text] : parts) out += "/" + name + "_" + text;
  return out;
}

/// On-disk layout. Payload files live under files/<model dirname>/; the
/// simulation record sits at the root.
inline std::filesystem::path path_for(const Ref& ref, const std::filesystem::path& dir) {
  std::filesystem::path base = dir / "files" / ref.model_name;
  switch (ref.kind) {
    case RefKind::kModel:
      return base / "model.cfg";
    case RefKind::kDraws:
      return base / ("r" + std::to_string(ref.index) + ".draws");
    case RefKind::kOutput:
      return base / ("r" + std::to_string(ref.index) + "_" + ref.method_name + ".out");
    case RefKind::kEvals:
      return base / ("r" + std::to_string(ref.index) + "_" + ref.method_name + ".evals");
  }
  throw Error("unreachable ref kind");
}

/// Wall-time sidecar for an output ref; kept out of the .out payload so
/// output bytes do not depend on machine speed.
inline std::filesystem::path timing_path_for(const Ref& output_ref,
                                             const std::filesystem::path& dir) {
  std::filesystem::path base = dir / "files" / output_ref.model_name;
  return base / ("r" + std::to_string(output_ref.index) + "_" + output_ref.method_name +
                 ".timing");
}

inline std::filesystem::path simulation_record_path(const std::string& sim_name,
                                                    const std::filesystem::path& dir) {
  return dir / ("sim_" + sim_name + ".srec");
}

}  // namespace simkit

#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "simkit/batches.hpp"
#include "simkit/component.hpp"
#include "simkit/detail/binio.hpp"
#include "simkit/detail/hash.hpp"
#include "simkit/errors.hpp"
#include "simkit/refs.hpp"
#include "simkit/rng.hpp"

namespace simkit::store {

using nlohmann::json;

inline constexpr int kFormatVersion = 1;

/// Pipeline stage that produces each ref kind; used in "not yet computed"
/// error messages.
inline const char* producing_stage(RefKind kind) {
  switch (kind) {
    case RefKind::kModel: return "generate_model";
    case RefKind::kDraws: return "simulate_from_model";
    case RefKind::kOutput: return "run_method";
    case RefKind::kEvals: return "evaluate";
  }
  return "?";
}

inline json rng_state_to_json(const RngState& s) {
  return json{{"algorithm", s.algorithm},
              {"version", s.version},
              {"state", detail::to_hex(s.state.data(), s.state.size())}};
}

inline RngState rng_state_from_json(const json& j) {
  RngState s;
  s.algorithm = j.at("algorithm").get<std::string>();
  s.version = j.at("version").get<int>();
  if (!detail::from_hex(j.at("state").get<std::string>(), s.state))
    throw ParseError("RNG state is not valid hex");
  return s;
}

// Scalar params are mirrored into file headers as plain JSON so that
// subsetting and record extraction never need to read payload bytes.
// Non-finite numbers cannot be represented in JSON and are omitted from
// the mirror; the binary payload stays authoritative either way.
inline json scalar_to_json(const ParamValue& v) {
  if (v.is_integer()) return json(v.integer());
  if (v.is_number()) return json(v.number());
  if (v.is_bool()) return json(v.boolean());
  return json(v.string());
}

inline ParamValue scalar_from_json(const json& j) {
  if (j.is_number_integer()) return ParamValue(j.get<std::int64_t>());
  if (j.is_number_float()) return ParamValue(j.get<double>());
  if (j.is_boolean()) return ParamValue(j.get<bool>());
  return ParamValue(j.get<std::string>());
}

inline json scalar_map_to_json(const ParamMap& m, bool scalars_only) {
  json out = json::object();
  for (const auto& [name, value] : m) {
    if (!value.is_scalar()) {
      if (!scalars_only) out[name] = short_digest(value);
      continue;
    }
    if (value.is_number() && !std::isfinite(value.number())) continue;
    out[name] = scalar_to_json(value);
  }
  return out;
}

inline ParamMap scalar_map_from_json(const json& j) {
  ParamMap m;
  for (auto it = j.begin(); it != j.end(); ++it) m.set(it.key(), scalar_from_json(it.value()));
  return m;
}

enum class WritePolicy {
  kErrorIfDifferent,     // payload files: identical rewrite is a no-op, different is an error
  kOverwriteIfDifferent  // evals merges, records, timing sidecars
};

/// Serializes a container file: one JSON header line, then the binary
/// payload. Returns true when bytes were written, false when the identical
/// file already existed (nothing touched).
inline bool write_container(const std::filesystem::path& path, json header, std::string payload,
                            WritePolicy policy) {
  header["simkit"] = kFormatVersion;
  header["payload_bytes"] = payload.size();
  header["payload_fnv64"] = detail::hex64(detail::fnv1a64(payload));
  std::string bytes = header.dump();
  bytes.push_back('\n');
  bytes += payload;
  if (std::filesystem::exists(path)) {
    std::string existing = detail::read_file(path);
    if (existing == bytes) return false;
    if (policy == WritePolicy::kErrorIfDifferent)
      throw OverwriteError("refusing to overwrite " + path.string() +
                           " with different content");
  }
  detail::atomic_write_file(path, bytes);
  return true;
}

struct Container {
  json header;
  std::string payload;
};

inline Container read_container(const std::filesystem::path& path, const char* expect_kind,
                                RefKind kind_for_error) {
  if (!std::filesystem::exists(path))
    throw MissingStageError("not yet computed: " + path.string() + " does not exist; the " +
                                std::string(producing_stage(kind_for_error)) +
                                " stage creates it",
                            producing_stage(kind_for_error));
  std::string bytes = detail::read_file(path);
  auto nl = bytes.find('\n');
  if (nl == std::string::npos) throw ParseError("missing header line in " + path.string());
  json header;
  try {
    header = json::parse(bytes.substr(0, nl));
  } catch (const json::exception& e) {
    throw ParseError("bad header in " + path.string() + ": " + e.what());
  }
  if (header.value("simkit", -1) != kFormatVersion)
    throw VersionMismatchError("unsupported container version in " + path.string());
  if (header.value("kind", "") != expect_kind)
    throw ParseError("expected kind \"" + std::string(expect_kind) + "\" in " + path.string() +
                     ", found \"" + header.value("kind", "") + "\"");
  Container c;
  c.header = std::move(header);
  c.payload = bytes.substr(nl + 1);
  auto expect_bytes = c.header.at("payload_bytes").get<std::uint64_t>();
  if (c.payload.size() != expect_bytes)
    throw ChecksumError("payload of " + path.string() + " has " +
                        std::to_string(c.payload.size()) + " bytes, header says " +
                        std::to_string(expect_bytes));
  std::string sum = detail::hex64(detail::fnv1a64(c.payload));
  if (sum != c.header.at("payload_fnv64").get<std::string>())
    throw ChecksumError("checksum mismatch in " + path.string() +
                        " (file is corrupt or was modified)");
  return c;
}

/// Header line of a container file as JSON, payload untouched.
inline json read_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file for reading: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing header line in " + path.string());
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError("bad header in " + path.string() + ": " + e.what());
  }
}

/// True when the ref's file exists, parses, and passes its checksum.
/// Stages use this to decide whether a unit of work can be skipped.
inline bool ref_exists_valid(const Ref& ref, const std::filesystem::path& dir) {
  auto path = path_for(ref, dir);
  if (!std::filesystem::exists(path)) return false;
  try {
    read_container(path, ref_kind_name(ref.kind), ref.kind);
    return true;
  } catch (const Error&) {
    return false;
  }
}

// ---------------------------------------------------------------------------
// Models

/// Header-only view of a persisted model; reading it never touches payload
/// bytes beyond the first line of the file.
struct ModelHeaderView {
  std::string name;
  std::string base_name;
  std::string label;
  std::vector<std::string> param_names;
  ParamMap scalars;  // scalar params only
  ParamMap varied;   // vary_along arguments (digest strings for non-scalars)
};

inline bool save_model(const ModelSpec& model, const std::filesystem::path& dir) {
  json header;
  header["kind"] = "model";
  header["name"] = model.id.name;
  header["base_name"] = model.base_name;
  header["label"] = model.id.label;
  header["param_names"] = model.params.names();
  header["scalars"] = scalar_map_to_json(model.params, /*scalars_only=*/true);
  header["varied"] = scalar_map_to_json(model.varied, /*scalars_only=*/false);
  std::string payload;
  model.params.encode(payload);
  model.varied.encode(payload);
  return write_container(path_for(Ref::model(model.id.name), dir), std::move(header),
                         std::move(payload), WritePolicy::kErrorIfDifferent);
}

/// Loads the full model record. The returned spec has no simulate
/// procedure; study programs re-attach behavior by re-declaring the model.
inline ModelSpec load_model(const std::string& model_name, const std::filesystem::path& dir) {
  Container c = read_container(path_for(Ref::model(model_name), dir), "model", RefKind::kModel);
  ModelSpec m;
  m.id = {c.header.at("name").get<std::string>(), c.header.at("label").get<std::string>()};
  m.base_name = c.header.at("base_name").get<std::string>();
  detail::Reader r(c.payload, "model " + model_name);
  m.params = ParamMap::decode(r);
  m.varied = ParamMap::decode(r);
  return m;
}

inline ModelHeaderView load_model_header(const std::string& model_name,
                                         const std::filesystem::path& dir) {
  auto path = path_for(Ref::model(model_name), dir);
  if (!std::filesystem::exists(path))
    throw MissingStageError("not yet computed: model \"" + model_name +
                                "\"; the generate_model stage creates it",
                            "generate_model");
  std::ifstream in(path, std::ios::binary);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing header line in " + path.string());
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError("bad header in " + path.string() + ": " + e.what());
  }
  ModelHeaderView v;
  v.name = header.at("name").get<std::string>();
  v.base_name = header.at("base_name").get<std::string>();
  v.label = header.at("label").get<std::string>();
  v.param_names = header.at("param_names").get<std::vector<std::string>>();
  v.scalars = scalar_map_from_json(header.at("scalars"));
  v.varied = scalar_map_from_json(header.at("varied"));
  return v;
}

// ---------------------------------------------------------------------------
// Draws

inline bool save_draws(const DrawsBatch& batch, const std::filesystem::path& dir) {
  json header;
  header["kind"] = "draws";
  header["model"] = batch.model_name;
  header["model_label"] = batch.model_label;
  header["index"] = batch.index;
  header["nsim"] = batch.nsim();
  json ids = json::array();
  for (const auto& d : batch.draws) ids.push_back(d.id);
  header["draw_ids"] = ids;
  header["rng_end_state"] = rng_state_to_json(batch.rng_end_state);
  std::string payload;
  detail::put_u64(payload, batch.draws.size());
  for (const auto& d : batch.draws) d.payload.encode(payload);
  return write_container(path_for(Ref::draws(batch.model_name, batch.index), dir),
                         std::move(header), std::move(payload), WritePolicy::kErrorIfDifferent);
}

inline DrawsBatch load_draws(const std::string& model_name, int index,
                             const std::filesystem::path& dir) {
  Container c =
      read_container(path_for(Ref::draws(model_name, index), dir), "draws", RefKind::kDraws);
  DrawsBatch b;
  b.model_name = c.header.at("model").get<std::string>();
  b.model_label = c.header.value("model_label", "");
  b.index = c.header.at("index").get<int>();
  b.rng_end_state = rng_state_from_json(c.header.at("rng_end_state"));
  auto ids = c.header.at("draw_ids").get<std::vector<std::string>>();
  detail::Reader r(c.payload, "draws " + model_name);
  std::uint64_t n = r.u64();
  if (n != ids.size()) throw ParseError("draw id count mismatch in draws file");
  b.draws.reserve(n);
  for (std::uint64_t j = 0; j < n; ++j) b.draws.push_back({ids[j], ParamValue::decode(r)});
  return b;
}

// ---------------------------------------------------------------------------
// Outputs and wall-time sidecars

inline void save_timing(const OutputBatch& batch, const std::filesystem::path& dir) {
  json j;
  j["simkit"] = kFormatVersion;
  j["kind"] = "timing";
  j["model"] = batch.model_name;
  j["index"] = batch.index;
  j["method"] = batch.method.name;
  j["seconds"] = batch.time_sec;
  detail::atomic_write_file(timing_path_for(Ref::output(batch.model_name, batch.index,
                                                        batch.method.name), dir),
                            j.dump() + "\n");
}

inline std::vector<double> load_timing(const std::string& model_name, int index,
                                       const std::string& method,
                                       const std::filesystem::path& dir) {
  auto path = timing_path_for(Ref::output(model_name, index, method), dir);
  if (!std::filesystem::exists(path))
    throw MissingStageError("not yet computed: " + path.string() +
                                "; the run_method stage creates it",
                            "run_method");
  json j;
  try {
    j = json::parse(detail::read_file(path));
  } catch (const json::exception& e) {
    throw ParseError("bad timing sidecar " + path.string() + ": " + e.what());
  }
  return j.at("seconds").get<std::vector<double>>();
}

inline bool save_output(const OutputBatch& batch, const std::filesystem::path& dir) {
  if (static_cast<int>(batch.outputs.size()) != batch.nsim ||
      static_cast<int>(batch.time_sec.size()) != batch.nsim)
    throw ContractError("output batch shape mismatch for method \"" + batch.method.name + "\"");
  json header;
  header["kind"] = "output";
  header["model"] = batch.model_name;
  header["index"] = batch.index;
  header["nsim"] = batch.nsim;
  header["method"] = batch.method.name;
  header["method_label"] = batch.method.label;
  std::string payload;
  detail::put_u64(payload, batch.outputs.size());
  for (const auto& out : batch.outputs) out.encode(payload);
  bool wrote =
      write_container(path_for(Ref::output(batch.model_name, batch.index, batch.method.name), dir),
                      std::move(header), std::move(payload), WritePolicy::kErrorIfDifferent);
  save_timing(batch, dir);
  return wrote;
}

inline OutputBatch load_output(const std::string& model_name, int index,
                               const std::string& method, const std::filesystem::path& dir) {
  Container c = read_container(path_for(Ref::output(model_name, index, method), dir), "output",
                               RefKind::kOutput);
  OutputBatch b;
  b.model_name = c.header.at("model").get<std::string>();
  b.index = c.header.at("index").get<int>();
  b.nsim = c.header.at("nsim").get<int>();
  b.method = {c.header.at("method").get<std::string>(),
              c.header.at("method_label").get<std::string>()};
  detail::Reader r(c.payload, "output " + model_name + "/" + method);
  std::uint64_t n = r.u64();
  b.outputs.reserve(n);
  for (std::uint64_t j = 0; j < n; ++j) b.outputs.push_back(OutMap::decode(r));
  b.time_sec = load_timing(model_name, index, method, dir);
  if (b.time_sec.size() != b.outputs.size())
    throw ContractError("timing sidecar length does not match outputs for " + model_name + "/" +
                        method);
  return b;
}

// ---------------------------------------------------------------------------
// Evals

/// Persists the user metrics of an evals batch. The implicit "time" metric
/// is never written; it is re-injected from the timing sidecar on load.
inline bool save_evals(const EvalsBatch& batch, const std::filesystem::path& dir) {
  json header;
  header["kind"] = "evals";
  header["model"] = batch.model_name;
  header["index"] = batch.index;
  header["nsim"] = batch.nsim;
  header["method"] = batch.method.name;
  header["method_label"] = batch.method.label;
  header["draw_ids"] = batch.draw_ids;
  json names = json::array(), labels = json::array();
  std::string payload;
  std::size_t user_metrics = 0;
  for (std::size_t m = 0; m < batch.metrics.size(); ++m) {
    if (batch.metrics[m].name == kTimeMetricName) continue;
    ++user_metrics;
    names.push_back(batch.metrics[m].name);
    labels.push_back(batch.metrics[m].label);
  }
  detail::put_u64(payload, user_metrics);
  for (std::size_t m = 0; m < batch.metrics.size(); ++m) {
    if (batch.metrics[m].name == kTimeMetricName) continue;
    if (batch.values[m].size() != static_cast<std::size_t>(batch.nsim))
      throw ContractError("evals metric \"" + batch.metrics[m].name + "\" has " +
                          std::to_string(batch.values[m].size()) + " values, expected nsim=" +
                          std::to_string(batch.nsim));
    detail::put_u64(payload, batch.values[m].size());
    for (const auto& v : batch.values[m]) v.encode(payload);
  }
  header["metric_names"] = names;
  header["metric_labels"] = labels;
  return write_container(path_for(Ref::evals(batch.model_name, batch.index, batch.method.name),
                                  dir),
                         std::move(header), std::move(payload),
                         WritePolicy::kOverwriteIfDifferent);
}

/// Loads an evals batch and appends the "time" metric from the output
/// timing sidecar.
inline EvalsBatch load_evals(const std::string& model_name, int index, const std::string& method,
                             const std::filesystem::path& dir) {
  Container c = read_container(path_for(Ref::evals(model_name, index, method), dir), "evals",
                               RefKind::kEvals);
  EvalsBatch b;
  b.model_name = c.header.at("model").get<std::string>();
  b.index = c.header.at("index").get<int>();
  b.nsim = c.header.at("nsim").get<int>();
  b.method = {c.header.at("method").get<std::string>(),
              c.header.at("method_label").get<std::string>()};
  b.draw_ids = c.header.at("draw_ids").get<std::vector<std::string>>();
  auto names = c.header.at("metric_names").get<std::vector<std::string>>();
  auto labels = c.header.at("metric_labels").get<std::vector<std::string>>();
  detail::Reader r(c.payload, "evals " + model_name + "/" + method);
  std::uint64_t nmetrics = r.u64();
  if (nmetrics != names.size()) throw ParseError("metric count mismatch in evals file");
  for (std::uint64_t m = 0; m < nmetrics; ++m) {
    b.metrics.push_back({names[m], labels[m]});
    std::uint64_t n = r.u64();
    std::vector<ParamValue> col;
    col.reserve(n);
    for (std::uint64_t j = 0; j < n; ++j) col.push_back(ParamValue::decode(r));
    b.values.push_back(std::move(col));
  }
  std::vector<double> times = load_timing(model_name, index, method, dir);
  b.metrics.push_back({kTimeMetricName, kTimeMetricLabel});
  std::vector<ParamValue> tcol;
  tcol.reserve(times.size());
  for (double t : times) tcol.push_back(ParamValue(t));
  b.values.push_back(std::move(tcol));
  return b;
}

}  // namespace simkit::store

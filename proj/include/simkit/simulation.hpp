#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "simkit/batches.hpp"
#include "simkit/component.hpp"
#include "simkit/errors.hpp"
#include "simkit/predicate.hpp"
#include "simkit/refs.hpp"
#include "simkit/store.hpp"

namespace simkit {

inline constexpr std::uint64_t kDefaultSeed = 2016;

/// The ledger of a simulation study: a name, a directory root, and lists of
/// references to everything generated so far. Never holds payloads, so it
/// loads in time proportional to the record, not the results.
///
/// Models generated in-process keep their live specs (with simulate
/// procedures) in `live_models`; a simulation loaded from disk has an empty
/// registry until the study program re-declares its models.
struct Simulation {
  std::string name;
  std::string label;
  std::filesystem::path dir;
  std::uint64_t global_seed = kDefaultSeed;

  std::vector<Ref> model_refs;   // generation order; rows of every table
  std::vector<Ref> draws_refs;   // canonical order (model, index)
  std::vector<Ref> output_refs;  // canonical order (model, index, method)
  std::vector<Ref> evals_refs;

  std::unordered_map<std::string, ModelSpec> live_models;

  int model_position(std::string_view model_name) const {
    for (std::size_t i = 0; i < model_refs.size(); ++i)
      if (model_refs[i].model_name == model_name) return static_cast<int>(i);
    return -1;
  }

  bool has_ref(const Ref& r) const {
    const std::vector<Ref>* list = nullptr;
    switch (r.kind) {
      case RefKind::kModel: list = &model_refs; break;
      case RefKind::kDraws: list = &draws_refs; break;
      case RefKind::kOutput: list = &output_refs; break;
      case RefKind::kEvals: list = &evals_refs; break;
    }
    return std::find(list->begin(), list->end(), r) != list->end();
  }
};

namespace detail_sim {

/// Non-model refs are kept sorted by (model position, index, method) so the
/// saved record does not depend on the order chunks happened to execute.
inline void canonicalize(Simulation& sim) {
  auto key = [&sim](const Ref& r) {
    return std::tuple<int, int, std::string>(sim.model_position(r.model_name), r.index,
                                             r.method_name);
  };
  auto sorter = [&key](std::vector<Ref>& refs) {
    std::stable_sort(refs.begin(), refs.end(),
                     [&key](const Ref& a, const Ref& b) { return key(a) < key(b); });
    refs.erase(std::unique(refs.begin(), refs.end()), refs.end());
  };
  sorter(sim.draws_refs);
  sorter(sim.output_refs);
  sorter(sim.evals_refs);
}

}  // namespace detail_sim

/// Referential integrity: evals need outputs, outputs need draws, draws
/// need models. Checked after every pipeline stage.
inline void validate_integrity(const Simulation& sim) {
  for (const Ref& d : sim.draws_refs)
    if (!sim.has_ref(Ref::model(d.model_name)))
      throw ContractError("draws ref " + d.model_name + "/r" + std::to_string(d.index) +
                          " has no matching model ref");
  for (const Ref& o : sim.output_refs)
    if (!sim.has_ref(Ref::draws(o.model_name, o.index)))
      throw ContractError("output ref " + o.model_name + "/r" + std::to_string(o.index) + "_" +
                          o.method_name + " has no matching draws ref");
  for (const Ref& e : sim.evals_refs)
    if (!sim.has_ref(Ref::output(e.model_name, e.index, e.method_name)))
      throw ContractError("evals ref " + e.model_name + "/r" + std::to_string(e.index) + "_" +
                          e.method_name + " has no matching output ref");
}

/// Writes the record to sim_<name>.srec under the simulation directory.
/// A byte-identical record is not rewritten.
inline void save_simulation(Simulation& sim) {
  using nlohmann::json;
  detail_sim::canonicalize(sim);
  validate_integrity(sim);
  json j;
  j["simkit"] = store::kFormatVersion;
  j["kind"] = "simulation";
  j["name"] = sim.name;
  j["label"] = sim.label;
  j["seed"] = sim.global_seed;
  json models = json::array();
  for (const Ref& r : sim.model_refs) models.push_back(r.model_name);
  j["models"] = models;
  auto pack = [](const std::vector<Ref>& refs, bool with_method) {
    json arr = json::array();
    for (const Ref& r : refs) {
      json e;
      e["model"] = r.model_name;
      e["index"] = r.index;
      if (with_method) e["method"] = r.method_name;
      arr.push_back(std::move(e));
    }
    return arr;
  };
  j["draws"] = pack(sim.draws_refs, false);
  j["outputs"] = pack(sim.output_refs, true);
  j["evals"] = pack(sim.evals_refs, true);
  std::string bytes = j.dump() + "\n";
  auto path = simulation_record_path(sim.name, sim.dir);
  if (std::filesystem::exists(path) && detail::read_file(path) == bytes) return;
  detail::atomic_write_file(path, bytes);
}

/// Creates a new named simulation and immediately saves an empty record.
/// Refuses to clobber an existing record of the same name.
inline Simulation new_simulation(std::string name, std::string label,
                                 std::filesystem::path dir = ".",
                                 std::uint64_t seed = kDefaultSeed) {
  if (!is_valid_slug(name))
    throw InvalidNameError("simulation name \"" + name + "\" is not a valid slug");
  if (label.empty()) throw InvalidNameError("simulation label must be nonempty");
  Simulation sim;
  sim.name = std::move(name);
  sim.label = std::move(label);
  sim.dir = std::move(dir);
  sim.global_seed = seed;
  auto path = simulation_record_path(sim.name, sim.dir);
  if (std::filesystem::exists(path))
    throw CollisionError("a simulation named \"" + sim.name + "\" already exists at " +
                         path.string());
  std::filesystem::create_directories(sim.dir);
  save_simulation(sim);
  return sim;
}

/// Loads a record by name. Reads only the record file, never payloads.
inline Simulation load_simulation(const std::string& name, std::filesystem::path dir = ".") {
  using nlohmann::json;
  auto path = simulation_record_path(name, dir);
  if (!std::filesystem::exists(path))
    throw Error("no simulation named \"" + name + "\" in " +
                std::filesystem::absolute(dir).string());
  json j;
  try {
    j = json::parse(detail::read_file(path));
  } catch (const json::exception& e) {
    throw ParseError("bad simulation record " + path.string() + ": " + e.what());
  }
  if (j.value("kind", "") != "simulation")
    throw ParseError(path.string() + " is not a simulation record");
  Simulation sim;
  sim.name = j.at("name").get<std::string>();
  sim.label = j.at("label").get<std::string>();
  sim.dir = std::move(dir);
  sim.global_seed = j.at("seed").get<std::uint64_t>();
  for (const auto& m : j.at("models")) sim.model_refs.push_back(Ref::model(m.get<std::string>()));
  for (const auto& e : j.at("draws"))
    sim.draws_refs.push_back(Ref::draws(e.at("model").get<std::string>(), e.at("index").get<int>()));
  for (const auto& e : j.at("outputs"))
    sim.output_refs.push_back(Ref::output(e.at("model").get<std::string>(),
                                          e.at("index").get<int>(),
                                          e.at("method").get<std::string>()));
  for (const auto& e : j.at("evals"))
    sim.evals_refs.push_back(Ref::evals(e.at("model").get<std::string>(),
                                        e.at("index").get<int>(),
                                        e.at("method").get<std::string>()));
  return sim;
}

/// Scalar parameters of a model, from the live registry when present,
/// otherwise from the file header (payload untouched).
inline ParamMap scalar_params_for(const Simulation& sim, const std::string& model_name) {
  auto it = sim.live_models.find(model_name);
  if (it != sim.live_models.end()) {
    ParamMap scalars;
    for (const auto& [name, value] : it->second.params)
      if (value.is_scalar()) scalars.set(name, value);
    return scalars;
  }
  return store::load_model_header(model_name, sim.dir).scalars;
}

/// New in-memory simulation holding the filtered subset of refs, pointing
/// at the same files. Nothing is copied or deleted on disk.
///
/// `methods` given-but-empty keeps models and draws only; absent keeps all.
inline Simulation subset_simulation(const Simulation& sim,
                                    const Predicate& model_predicate = {},
                                    std::optional<std::vector<std::string>> methods = std::nullopt,
                                    std::optional<std::vector<int>> indexes = std::nullopt) {
  Simulation out;
  out.name = sim.name;
  out.label = sim.label;
  out.dir = sim.dir;
  out.global_seed = sim.global_seed;

  for (const Ref& m : sim.model_refs) {
    if (!model_predicate.matches(scalar_params_for(sim, m.model_name))) continue;
    out.model_refs.push_back(m);
    auto it = sim.live_models.find(m.model_name);
    if (it != sim.live_models.end()) out.live_models.insert(*it);
  }
  auto keep_model = [&out](const std::string& name) { return out.model_position(name) >= 0; };
  auto keep_index = [&indexes](int idx) {
    return !indexes ||
           std::find(indexes->begin(), indexes->end(), idx) != indexes->end();
  };
  auto keep_method = [&methods](const std::string& name) {
    return !methods || std::find(methods->begin(), methods->end(), name) != methods->end();
  };
  for (const Ref& d : sim.draws_refs)
    if (keep_model(d.model_name) && keep_index(d.index)) out.draws_refs.push_back(d);
  for (const Ref& o : sim.output_refs)
    if (keep_model(o.model_name) && keep_index(o.index) && keep_method(o.method_name))
      out.output_refs.push_back(o);
  for (const Ref& e : sim.evals_refs)
    if (keep_model(e.model_name) && keep_index(e.index) && keep_method(e.method_name))
      out.evals_refs.push_back(e);
  validate_integrity(out);
  return out;
}

/// Saves the record under a new name; payload refs are unchanged and shared
/// with the original, which stays loadable under its old name.
inline Simulation& rename(Simulation& sim, std::string new_name) {
  if (!is_valid_slug(new_name))
    throw InvalidNameError("simulation name \"" + new_name + "\" is not a valid slug");
  if (new_name != sim.name &&
      std::filesystem::exists(simulation_record_path(new_name, sim.dir)))
    throw CollisionError("a simulation named \"" + new_name + "\" already exists in " +
                         sim.dir.string());
  sim.name = std::move(new_name);
  save_simulation(sim);
  return sim;
}

inline Simulation& relabel(Simulation& sim, std::string new_label) {
  if (new_label.empty()) throw InvalidNameError("simulation label must be nonempty");
  sim.label = std::move(new_label);
  save_simulation(sim);
  return sim;
}

// ---------------------------------------------------------------------------
// Accessors: load payloads on demand through refs. Selectors mirror
// subset_simulation.

inline std::vector<ModelSpec> get_models(const Simulation& sim,
                                         const Predicate& predicate = {}) {
  std::vector<ModelSpec> out;
  for (const Ref& m : sim.model_refs) {
    if (!predicate.matches(scalar_params_for(sim, m.model_name))) continue;
    auto it = sim.live_models.find(m.model_name);
    out.push_back(it != sim.live_models.end() ? it->second
                                              : store::load_model(m.model_name, sim.dir));
  }
  return out;
}

inline std::vector<DrawsBatch> get_draws(const Simulation& sim, const Predicate& predicate = {},
                                         std::optional<std::vector<int>> indexes = std::nullopt) {
  Simulation sub = subset_simulation(sim, predicate, std::nullopt, std::move(indexes));
  std::vector<DrawsBatch> out;
  for (const Ref& d : sub.draws_refs) out.push_back(store::load_draws(d.model_name, d.index, sim.dir));
  return out;
}

inline std::vector<OutputBatch> get_outputs(
    const Simulation& sim, const Predicate& predicate = {},
    std::optional<std::vector<std::string>> methods = std::nullopt,
    std::optional<std::vector<int>> indexes = std::nullopt) {
  Simulation sub = subset_simulation(sim, predicate, std::move(methods), std::move(indexes));
  std::vector<OutputBatch> out;
  for (const Ref& o : sub.output_refs)
    out.push_back(store::load_output(o.model_name, o.index, o.method_name, sim.dir));
  return out;
}

inline std::vector<EvalsBatch> get_evals(
    const Simulation& sim, const Predicate& predicate = {},
    std::optional<std::vector<std::string>> methods = std::nullopt,
    std::optional<std::vector<int>> indexes = std::nullopt) {
  Simulation sub = subset_simulation(sim, predicate, std::move(methods), std::move(indexes));
  std::vector<EvalsBatch> out;
  for (const Ref& e : sub.evals_refs)
    out.push_back(store::load_evals(e.model_name, e.index, e.method_name, sim.dir));
  return out;
}

}  // namespace simkit

#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "simkit/batches.hpp"
#include "simkit/component.hpp"
#include "simkit/parallel.hpp"
#include "simkit/simulation.hpp"
#include "simkit/store.hpp"

namespace simkit {

/// Builds one model instance from a set of generation arguments.
using ModelFn = std::function<ModelSpec(const ParamMap& args, RngStream& rng)>;

namespace detail_pipe {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// All combinations of the vary_along lists, row-major (last name varies
/// fastest); each combination is the full argument map for one model.
inline std::vector<ParamMap> expand_vary(const ParamMap& args,
                                         const std::vector<std::string>& vary_along) {
  for (const auto& name : vary_along) {
    const ParamValue* v = args.find(name);
    if (!v) throw ContractError("vary_along names \"" + name + "\", which is not an argument");
    if (!v->is_list())
      throw ContractError("vary_along argument \"" + name +
                          "\" must be list-valued (got " + v->type_name() + ")");
    if (v->list().empty())
      throw ContractError("vary_along argument \"" + name + "\" is an empty list");
  }
  std::vector<ParamMap> combos{ParamMap{}};
  // fixed args keep their declaration order; varied ones are substituted in place
  for (const auto& [name, value] : args) {
    bool varied = std::find(vary_along.begin(), vary_along.end(), name) != vary_along.end();
    if (!varied) {
      for (auto& c : combos) c.set(name, value);
      continue;
    }
    std::vector<ParamMap> next;
    next.reserve(combos.size() * value.list().size());
    for (const auto& c : combos) {
      for (const auto& element : value.list()) {
        ParamMap extended = c;
        extended.set(name, element);
        next.push_back(std::move(extended));
      }
    }
    combos = std::move(next);
  }
  return combos;
}

/// Model specs needed by a stage, live ones preferred, persisted otherwise.
inline std::unordered_map<std::string, std::shared_ptr<const ModelSpec>> preload_models(
    const Simulation& sim) {
  std::unordered_map<std::string, std::shared_ptr<const ModelSpec>> out;
  for (const Ref& m : sim.model_refs) {
    auto it = sim.live_models.find(m.model_name);
    if (it != sim.live_models.end())
      out.emplace(m.model_name, std::make_shared<const ModelSpec>(it->second));
    else
      out.emplace(m.model_name,
                  std::make_shared<const ModelSpec>(store::load_model(m.model_name, sim.dir)));
  }
  return out;
}

inline OutputBatch compute_plain_output(const ModelSpec& model, const DrawsBatch& draws,
                                        const MethodSpec& method) {
  OutputBatch batch;
  batch.model_name = draws.model_name;
  batch.index = draws.index;
  batch.nsim = draws.nsim();
  batch.method = method.id;
  RngStream stream = RngStream::restore(draws.rng_end_state);
  for (const Draw& draw : draws.draws) {
    auto t0 = std::chrono::steady_clock::now();
    OutMap out;
    try {
      out = method.apply(model, draw, stream, ParamMap{});
    } catch (const std::exception& e) {
      throw Error("method \"" + method.id.name + "\" failed on model " + model.id.name +
                  ", draw " + draw.id + ": " + e.what());
    }
    batch.time_sec.push_back(seconds_since(t0));
    batch.outputs.push_back(std::move(out));
  }
  return batch;
}

inline OutputBatch compute_extended_output(const ModelSpec& model, const DrawsBatch& draws,
                                           const ExtendedMethodSpec& method,
                                           const OutputBatch* persisted_base) {
  OutputBatch base;
  if (persisted_base == nullptr) base = compute_plain_output(model, draws, method.base);
  const OutputBatch& base_ref = persisted_base ? *persisted_base : base;
  if (static_cast<int>(base_ref.outputs.size()) != draws.nsim())
    throw ContractError("base outputs of \"" + method.base.id.name + "\" have nsim " +
                        std::to_string(base_ref.outputs.size()) + ", draws have " +
                        std::to_string(draws.nsim()));
  OutputBatch batch;
  batch.model_name = draws.model_name;
  batch.index = draws.index;
  batch.nsim = draws.nsim();
  batch.method = method.id;
  RngStream stream = RngStream::restore(draws.rng_end_state);
  for (int j = 0; j < draws.nsim(); ++j) {
    auto t0 = std::chrono::steady_clock::now();
    OutMap out;
    try {
      out = method.extension.extend(model, draws.draws[j], base_ref.outputs[j], method.base,
                                    stream);
    } catch (const std::exception& e) {
      throw Error("extended method \"" + method.id.name + "\" failed on model " +
                  model.id.name + ", draw " + draws.draws[j].id + ": " + e.what());
    }
    double dt = seconds_since(t0);
    if (persisted_base == nullptr) dt += base.time_sec[j];
    batch.time_sec.push_back(dt);
    batch.outputs.push_back(std::move(out));
  }
  return batch;
}

}  // namespace detail_pipe

/// Builds one model per combination of the vary_along value lists, persists
/// each, and appends refs. Model-level randomness is drawn from a stream
/// keyed by (seed, model dirname, chunk 0), so regeneration is exact.
inline Simulation& generate_model(Simulation& sim, const ModelFn& model_fn, ParamMap args,
                                  std::vector<std::string> vary_along = {}) {
  if (!model_fn) throw MissingProcedureError("generate_model needs a model function");
  for (const ParamMap& combo : detail_pipe::expand_vary(args, vary_along)) {
    // probe call to learn the base slug; the real build below is keyed by
    // the full generated dir name
    RngStream probe = RngStream::derive({sim.global_seed, "generate_model.probe", 0});
    ModelSpec probed = model_fn(combo, probe);
    validate_component_id("model", probed.id);
    std::string dirname = encode_model_dirname(probed.id.name, combo);

    RngStream stream = RngStream::derive({sim.global_seed, dirname, 0});
    ModelSpec model = model_fn(combo, stream);
    model.base_name = model.id.name;
    model.id.name = dirname;
    for (const auto& name : vary_along) model.varied.set(name, combo.at(name));

    store::save_model(model, sim.dir);  // no-op when the identical file exists
    Ref ref = Ref::model(dirname);
    if (!sim.has_ref(ref)) sim.model_refs.push_back(ref);
    sim.live_models.insert_or_assign(dirname, std::move(model));
  }
  save_simulation(sim);
  return sim;
}

/// Simulates `nsim` draws per (model, chunk index). Chunks that already
/// exist on disk are skipped; each chunk is one unit of parallel work with
/// its own stream keyed by (seed, model dirname, index).
inline Simulation& simulate_from_model(Simulation& sim, int nsim, std::vector<int> indexes,
                                       ParallelOptions parallel = {}) {
  if (nsim <= 0) throw ContractError("nsim must be positive (got " + std::to_string(nsim) + ")");
  if (indexes.empty()) throw ContractError("at least one chunk index is required");
  for (int idx : indexes)
    if (idx < 1)
      throw ContractError("chunk indexes start at 1 (got " + std::to_string(idx) + ")");
  if (sim.model_refs.empty())
    throw MissingStageError("no models in simulation \"" + sim.name +
                                "\"; run generate_model first",
                            "generate_model");

  std::vector<Ref> wanted;
  std::vector<std::function<void()>> tasks;
  for (const Ref& m : sim.model_refs) {
    for (int idx : indexes) {
      Ref ref = Ref::draws(m.model_name, idx);
      wanted.push_back(ref);
      if (store::ref_exists_valid(ref, sim.dir)) {
        int existing = store::read_header(path_for(ref, sim.dir)).at("nsim").get<int>();
        if (existing != nsim)
          throw ContractError("chunk r" + std::to_string(idx) + " of " + m.model_name +
                              " already holds " + std::to_string(existing) +
                              " draws; adding draws requires a new chunk index");
        continue;
      }
      auto it = sim.live_models.find(m.model_name);
      if (it == sim.live_models.end())
        throw MissingProcedureError(
            "model \"" + m.model_name +
            "\" has no live simulate procedure; re-declare it with generate_model before "
            "simulating");
      const ModelSpec* model = &it->second;
      auto dir = sim.dir;
      auto seed = sim.global_seed;
      tasks.push_back([model, idx, nsim, dir, seed]() {
        RngStream stream = RngStream::derive({seed, model->id.name, static_cast<std::uint64_t>(idx)});
        std::vector<ParamValue> payloads = model->run_simulate(nsim, stream);
        DrawsBatch batch;
        batch.model_name = model->id.name;
        batch.model_label = model->id.label;
        batch.index = idx;
        for (int j = 0; j < nsim; ++j)
          batch.draws.push_back({draw_id_for(idx, j + 1), std::move(payloads[j])});
        batch.rng_end_state = stream.capture();
        store::save_draws(batch, dir);
      });
    }
  }
  try {
    detail::run_tasks(parallel.worker_count, tasks);
  } catch (...) {
    for (const Ref& r : wanted)
      if (!sim.has_ref(r) && store::ref_exists_valid(r, sim.dir)) sim.draws_refs.push_back(r);
    save_simulation(sim);
    throw;
  }
  for (const Ref& r : wanted)
    if (!sim.has_ref(r)) sim.draws_refs.push_back(r);
  save_simulation(sim);
  return sim;
}

/// Runs methods on every (model, chunk); one (model, chunk, method) is one
/// unit of parallel work. Existing outputs are skipped. Extended methods
/// run after plain ones so a persisted base output can be reused; a missing
/// base is computed in memory and not persisted.
inline Simulation& run_method(Simulation& sim, const std::vector<AnyMethod>& methods,
                              ParallelOptions parallel = {}) {
  if (methods.empty()) throw ContractError("run_method needs at least one method");
  {
    std::unordered_set<std::string> seen;
    for (const AnyMethod& m : methods)
      if (!seen.insert(method_id(m).name).second)
        throw ContractError("duplicate method \"" + method_id(m).name + "\" in run_method");
  }
  if (sim.draws_refs.empty())
    throw MissingStageError("no draws in simulation \"" + sim.name +
                                "\"; run simulate_from_model first",
                            "simulate_from_model");

  auto models = detail_pipe::preload_models(sim);
  std::vector<Ref> wanted;
  // two waves: plain methods first, then extended ones
  for (int wave = 0; wave < 2; ++wave) {
    std::vector<std::function<void()>> tasks;
    std::vector<Ref> wave_refs;
    for (const AnyMethod& any : methods) {
      if (is_extended(any) != (wave == 1)) continue;
      for (const Ref& d : sim.draws_refs) {
        Ref ref = Ref::output(d.model_name, d.index, method_id(any).name);
        wave_refs.push_back(ref);
        if (store::ref_exists_valid(ref, sim.dir)) continue;
        auto model = models.at(d.model_name);
        auto dir = sim.dir;
        const AnyMethod* method = &any;
        tasks.push_back([model, d, method, dir]() {
          DrawsBatch draws = store::load_draws(d.model_name, d.index, dir);
          OutputBatch batch;
          if (const auto* plain = std::get_if<MethodSpec>(method)) {
            batch = detail_pipe::compute_plain_output(*model, draws, *plain);
          } else {
            const auto& ext = std::get<ExtendedMethodSpec>(*method);
            Ref base_ref = Ref::output(d.model_name, d.index, ext.base.id.name);
            if (store::ref_exists_valid(base_ref, dir)) {
              OutputBatch base =
                  store::load_output(d.model_name, d.index, ext.base.id.name, dir);
              batch = detail_pipe::compute_extended_output(*model, draws, ext, &base);
            } else {
              batch = detail_pipe::compute_extended_output(*model, draws, ext, nullptr);
            }
          }
          store::save_output(batch, dir);
        });
      }
    }
    try {
      detail::run_tasks(parallel.worker_count, tasks);
    } catch (...) {
      for (const Ref& r : wave_refs)
        if (!sim.has_ref(r) && store::ref_exists_valid(r, sim.dir)) sim.output_refs.push_back(r);
      save_simulation(sim);
      throw;
    }
    wanted.insert(wanted.end(), wave_refs.begin(), wave_refs.end());
  }
  for (const Ref& r : wanted)
    if (!sim.has_ref(r)) sim.output_refs.push_back(r);
  save_simulation(sim);
  return sim;
}

/// Computes metrics for every persisted output. The "time" metric is
/// injected from the output timings; re-evaluating with new metrics merges
/// them into the existing evals without touching any other file.
inline Simulation& evaluate(Simulation& sim, const std::vector<MetricSpec>& metrics) {
  if (metrics.empty()) throw ContractError("evaluate needs at least one metric");
  {
    std::unordered_set<std::string> seen;
    for (const MetricSpec& m : metrics) {
      if (m.id.name == kTimeMetricName)
        throw ReservedNameError("metric name \"time\" is reserved for automatic timings");
      if (!seen.insert(m.id.name).second)
        throw ContractError("duplicate metric \"" + m.id.name + "\" in evaluate");
    }
  }
  if (sim.output_refs.empty())
    throw MissingStageError("no outputs in simulation \"" + sim.name +
                                "\"; run run_method first",
                            "run_method");

  auto models = detail_pipe::preload_models(sim);
  for (const Ref& o : sim.output_refs) {
    Ref ref = Ref::evals(o.model_name, o.index, o.method_name);
    bool have_file = store::ref_exists_valid(ref, sim.dir);

    std::vector<ComponentId> existing_names;
    if (have_file) {
      auto header = store::read_header(path_for(ref, sim.dir));
      auto names = header.at("metric_names").get<std::vector<std::string>>();
      auto labels = header.at("metric_labels").get<std::vector<std::string>>();
      for (std::size_t i = 0; i < names.size(); ++i)
        existing_names.push_back({names[i], labels[i]});
    }
    auto already = [&existing_names](const std::string& name) {
      for (const auto& id : existing_names)
        if (id.name == name) return true;
      return false;
    };
    bool all_present = have_file;
    for (const MetricSpec& m : metrics)
      if (!already(m.id.name)) all_present = false;
    if (all_present) {
      if (!sim.has_ref(ref)) sim.evals_refs.push_back(ref);
      continue;
    }

    OutputBatch out = store::load_output(o.model_name, o.index, o.method_name, sim.dir);
    const ModelSpec& model = *models.at(o.model_name);

    EvalsBatch batch;
    if (have_file) {
      batch = store::load_evals(o.model_name, o.index, o.method_name, sim.dir);
      // drop the injected time column; save_evals never persists it
      int t = batch.metric_index(kTimeMetricName);
      if (t >= 0) {
        batch.metrics.erase(batch.metrics.begin() + t);
        batch.values.erase(batch.values.begin() + t);
      }
    } else {
      batch.model_name = o.model_name;
      batch.index = o.index;
      batch.nsim = out.nsim;
      batch.method = out.method;
      for (int j = 0; j < out.nsim; ++j) batch.draw_ids.push_back(draw_id_for(o.index, j + 1));
    }

    for (const MetricSpec& metric : metrics) {
      if (already(metric.id.name) || batch.has_metric(metric.id.name)) continue;
      std::vector<ParamValue> col;
      col.reserve(out.nsim);
      for (int j = 0; j < out.nsim; ++j) {
        ParamValue v;
        try {
          v = metric.compute(model, out.outputs[j]);
        } catch (const std::exception& e) {
          throw Error("metric \"" + metric.id.name + "\" failed on model " + o.model_name +
                      ", method " + o.method_name + ", draw " + batch.draw_ids[j] + ": " +
                      e.what());
        }
        if (!v.is_number() && !v.is_vector())
          throw ContractError("metric \"" + metric.id.name +
                              "\" must return a number or numeric vector, got " + v.type_name());
        col.push_back(std::move(v));
      }
      batch.metrics.push_back(metric.id);
      batch.values.push_back(std::move(col));
    }
    store::save_evals(batch, sim.dir);
    if (!sim.has_ref(ref)) sim.evals_refs.push_back(ref);
  }
  save_simulation(sim);
  return sim;
}

}  // namespace simkit

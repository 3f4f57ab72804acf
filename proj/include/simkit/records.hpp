#pragma once

#include <optional>
#include <string>
#include <vector>

#include "simkit/batches.hpp"
#include "simkit/format.hpp"
#include "simkit/simulation.hpp"

namespace simkit {

/// One row of the long-format extraction: exactly one row per
/// (draw, method, metric[, vector position]). Vector metrics are unrolled
/// with a 1-based value_index.
struct EvalRecord {
  std::string model_name;
  ParamMap varied;  // one column per varied model parameter
  std::string method_name;
  std::string method_label;
  std::string draw_id;
  std::string metric_name;
  std::string metric_label;
  std::optional<int> value_index;
  double value = 0.0;
};

/// Flattens evals batches to long-format records, joining each model's
/// varied parameters from its header (payloads untouched).
inline std::vector<EvalRecord> evals_to_records(const Simulation& sim,
                                                const std::vector<EvalsBatch>& batches) {
  std::vector<EvalRecord> out;
  std::unordered_map<std::string, ParamMap> varied_cache;
  for (const EvalsBatch& b : batches) {
    auto it = varied_cache.find(b.model_name);
    if (it == varied_cache.end()) {
      ParamMap varied;
      auto live = sim.live_models.find(b.model_name);
      if (live != sim.live_models.end())
        varied = live->second.varied;
      else
        varied = store::load_model_header(b.model_name, sim.dir).varied;
      it = varied_cache.emplace(b.model_name, std::move(varied)).first;
    }
    for (std::size_t m = 0; m < b.metrics.size(); ++m) {
      for (int j = 0; j < b.nsim; ++j) {
        const ParamValue& v = b.values[m][j];
        EvalRecord base;
        base.model_name = b.model_name;
        base.varied = it->second;
        base.method_name = b.method.name;
        base.method_label = b.method.label;
        base.draw_id = b.draw_ids.empty() ? draw_id_for(b.index, j + 1) : b.draw_ids[j];
        base.metric_name = b.metrics[m].name;
        base.metric_label = b.metrics[m].label;
        if (v.is_number()) {
          base.value = v.number();
          out.push_back(std::move(base));
        } else if (v.is_vector()) {
          const auto& vec = v.vector();
          for (std::size_t i = 0; i < vec.size(); ++i) {
            EvalRecord r = base;
            r.value_index = static_cast<int>(i) + 1;
            r.value = vec[i];
            out.push_back(std::move(r));
          }
        } else {
          throw ContractError("eval value for metric \"" + base.metric_name +
                              "\" is neither number nor vector");
        }
      }
    }
  }
  return out;
}

inline std::vector<EvalRecord> get_records(
    const Simulation& sim, const Predicate& predicate = {},
    std::optional<std::vector<std::string>> methods = std::nullopt,
    std::optional<std::vector<int>> indexes = std::nullopt) {
  return evals_to_records(sim,
                          get_evals(sim, predicate, std::move(methods), std::move(indexes)));
}

namespace detail_csv {

inline std::string csv_quote(const std::string& s) {
  bool needs = s.find_first_of(",\"\n") != std::string::npos;
  if (!needs) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

inline std::string scalar_text(const ParamValue& v) {
  if (v.is_integer()) return std::to_string(v.integer());
  if (v.is_number()) return double_to_string(v.number());
  if (v.is_bool()) return v.boolean() ? "true" : "false";
  return v.string();
}

/// Splits one CSV document into rows of fields (minimal quoting rules).
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  auto end_field = [&]() {
    row.push_back(field);
    field.clear();
  };
  auto end_row = [&]() {
    end_field();
    rows.push_back(row);
    row.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_row();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  if (!field.empty() || !row.empty()) end_row();
  return rows;
}

}  // namespace detail_csv

/// Varied parameter names across records, in first-seen order.
inline std::vector<std::string> varied_param_names(const std::vector<EvalRecord>& records) {
  std::vector<std::string> names;
  for (const EvalRecord& r : records)
    for (const auto& [name, value] : r.varied)
      if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
  return names;
}

/// Long-format CSV with header
/// model_name,<varied params...>,method,draw,metric,value_index,value.
/// Values are written with shortest round-trip formatting, so the file
/// preserves every double exactly.
inline std::string records_to_csv(const std::vector<EvalRecord>& records) {
  using detail_csv::csv_quote;
  std::vector<std::string> varied = varied_param_names(records);
  std::string out = "model_name";
  for (const auto& name : varied) out += "," + csv_quote(name);
  out += ",method,draw,metric,value_index,value\n";
  for (const EvalRecord& r : records) {
    out += csv_quote(r.model_name);
    for (const auto& name : varied) {
      out += ",";
      if (const ParamValue* v = r.varied.find(name)) out += csv_quote(detail_csv::scalar_text(*v));
    }
    out += "," + csv_quote(r.method_name);
    out += "," + csv_quote(r.draw_id);
    out += "," + csv_quote(r.metric_name);
    out += ",";
    if (r.value_index) out += std::to_string(*r.value_index);
    out += "," + double_to_string(r.value);
    out += "\n";
  }
  return out;
}

}  // namespace simkit

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "simkit/detail/binio.hpp"
#include "simkit/detail/hash.hpp"
#include "simkit/errors.hpp"

namespace simkit {

/// Dense numeric matrix, row-major.
struct NumMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // rows * cols entries

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  friend bool operator==(const NumMatrix&, const NumMatrix&) = default;
};

/// Value carried through the pipeline: model parameters, draw payloads,
/// method outputs and metric results are all ParamValues. Serialization is
/// binary and round-trips floats bit-exactly.
class ParamValue {
 public:
  using List = std::vector<ParamValue>;
  using Variant = std::variant<double, std::int64_t, bool, std::string, std::vector<double>,
                               NumMatrix, List>;

  ParamValue() : v_(0.0) {}
  ParamValue(double v) : v_(v) {}
  ParamValue(std::int64_t v) : v_(v) {}
  ParamValue(int v) : v_(static_cast<std::int64_t>(v)) {}
  ParamValue(bool v) : v_(v) {}
  ParamValue(std::string v) : v_(std::move(v)) {}
  ParamValue(const char* v) : v_(std::string(v)) {}
  ParamValue(std::vector<double> v) : v_(std::move(v)) {}
  ParamValue(NumMatrix v) : v_(std::move(v)) {}
  ParamValue(List v) : v_(std::move(v)) {}

  bool is_number() const { return std::holds_alternative<double>(v_); }
  bool is_integer() const { return std::holds_alternative<std::int64_t>(v_); }
  bool is_bool() const { return std::holds_alternative<bool>(v_); }
  bool is_string() const { return std::holds_alternative<std::string>(v_); }
  bool is_vector() const { return std::holds_alternative<std::vector<double>>(v_); }
  bool is_matrix() const { return std::holds_alternative<NumMatrix>(v_); }
  bool is_list() const { return std::holds_alternative<List>(v_); }

  /// number | integer | boolean | string; the kinds that appear in model
  /// dir names and predicate comparisons.
  bool is_scalar() const { return is_number() || is_integer() || is_bool() || is_string(); }
  bool is_numeric_scalar() const { return is_number() || is_integer(); }

  double number() const { return get<double>("number"); }
  std::int64_t integer() const { return get<std::int64_t>("integer"); }
  bool boolean() const { return get<bool>("boolean"); }
  const std::string& string() const { return get<std::string>("string"); }
  const std::vector<double>& vector() const { return get<std::vector<double>>("numeric vector"); }
  std::vector<double>& vector() { return get<std::vector<double>>("numeric vector"); }
  const NumMatrix& matrix() const { return get<NumMatrix>("numeric matrix"); }
  NumMatrix& matrix() { return get<NumMatrix>("numeric matrix"); }
  const List& list() const { return get<List>("list"); }
  List& list() { return get<List>("list"); }

  /// Numeric scalar as double regardless of number/integer storage.
  double as_double() const {
    if (is_number()) return number();
    if (is_integer()) return static_cast<double>(integer());
    throw ContractError("ParamValue is not numeric (got " + type_name() + ")");
  }

  std::string type_name() const {
    static const char* names[] = {"number", "integer",        "boolean", "string",
                                  "vector", "numeric matrix", "list"};
    return names[v_.index()];
  }

  friend bool operator==(const ParamValue&, const ParamValue&) = default;

  void encode(std::string& buf) const;
  static ParamValue decode(detail::Reader& r);

 private:
  template <typename T>
  const T& get(const char* what) const {
    if (const T* p = std::get_if<T>(&v_)) return *p;
    throw ContractError(std::string("ParamValue is not a ") + what + " (got " + type_name() +
                        ")");
  }
  template <typename T>
  T& get(const char* what) {
    if (T* p = std::get_if<T>(&v_)) return *p;
    throw ContractError(std::string("ParamValue is not a ") + what + " (got " + type_name() +
                        ")");
  }

  Variant v_;
};

/// Order-preserving name -> ParamValue map. Order matters: it is part of the
/// serialized form and of left-to-right aggregation guarantees.
class ParamMap {
 public:
  using Entry = std::pair<std::string, ParamValue>;

  ParamMap() = default;
  ParamMap(std::initializer_list<Entry> init) : entries_(init) {}

  void set(std::string name, ParamValue value) {
    for (auto& e : entries_) {
      if (e.first == name) {
        e.second = std::move(value);
        return;
      }
    }
    entries_.emplace_back(std::move(name), std::move(value));
  }

  bool contains(std::string_view name) const { return find(name) != nullptr; }

  const ParamValue* find(std::string_view name) const {
    for (const auto& e : entries_)
      if (e.first == name) return &e.second;
    return nullptr;
  }

  const ParamValue& at(std::string_view name) const {
    if (const ParamValue* p = find(name)) return *p;
    throw ContractError("missing entry \"" + std::string(name) + "\"");
  }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.first);
    return out;
  }

  friend bool operator==(const ParamMap&, const ParamMap&) = default;

  void encode(std::string& buf) const {
    detail::put_u64(buf, entries_.size());
    for (const auto& [name, value] : entries_) {
      detail::put_str(buf, name);
      value.encode(buf);
    }
  }

  static ParamMap decode(detail::Reader& r) {
    ParamMap m;
    std::uint64_t n = r.u64();
    for (std::uint64_t i = 0; i < n; ++i) {
      std::string name = r.str();
      m.entries_.emplace_back(std::move(name), ParamValue::decode(r));
    }
    return m;
  }

 private:
  std::vector<Entry> entries_;
};

namespace detail {
enum : std::uint8_t {
  kTagNumber = 1,
  kTagInteger = 2,
  kTagBool = 3,
  kTagString = 4,
  kTagVector = 5,
  kTagMatrix = 6,
  kTagList = 7,
};
}  // namespace detail

inline void ParamValue::encode(std::string& buf) const {
  using namespace detail;
  if (is_number()) {
    put_u8(buf, kTagNumber);
    put_f64(buf, number());
  } else if (is_integer()) {
    put_u8(buf, kTagInteger);
    put_i64(buf, integer());
  } else if (is_bool()) {
    put_u8(buf, kTagBool);
    put_u8(buf, boolean() ? 1 : 0);
  } else if (is_string()) {
    put_u8(buf, kTagString);
    put_str(buf, string());
  } else if (is_vector()) {
    put_u8(buf, kTagVector);
    const auto& v = vector();
    put_u64(buf, v.size());
    for (double x : v) put_f64(buf, x);
  } else if (is_matrix()) {
    put_u8(buf, kTagMatrix);
    const auto& m = matrix();
    if (m.data.size() != m.rows * m.cols)
      throw ContractError("matrix dims inconsistent with data size");
    put_u64(buf, m.rows);
    put_u64(buf, m.cols);
    for (double x : m.data) put_f64(buf, x);
  } else {
    put_u8(buf, kTagList);
    const auto& l = list();
    put_u64(buf, l.size());
    for (const auto& x : l) x.encode(buf);
  }
}

inline ParamValue ParamValue::decode(detail::Reader& r) {
  using namespace detail;
  std::uint8_t tag = r.u8();
  switch (tag) {
    case kTagNumber:
      return ParamValue(r.f64());
    case kTagInteger:
      return ParamValue(r.i64());
    case kTagBool:
      return ParamValue(r.u8() != 0);
    case kTagString:
      return ParamValue(r.str());
    case kTagVector: {
      std::uint64_t n = r.u64();
      std::vector<double> v(n);
      for (auto& x : v) x = r.f64();
      return ParamValue(std::move(v));
    }
    case kTagMatrix: {
      NumMatrix m;
      m.rows = r.u64();
      m.cols = r.u64();
      m.data.resize(m.rows * m.cols);
      for (auto& x : m.data) x = r.f64();
      return ParamValue(std::move(m));
    }
    case kTagList: {
      std::uint64_t n = r.u64();
      List l;
      l.reserve(n);
      for (std::uint64_t i = 0; i < n; ++i) l.push_back(decode(r));
      return ParamValue(std::move(l));
    }
    default:
      throw ParseError("unknown ParamValue tag " + std::to_string(tag));
  }
}

inline std::string encode_param_value(const ParamValue& v) {
  std::string buf;
  v.encode(buf);
  return buf;
}

inline ParamValue decode_param_value(std::string_view data) {
  detail::Reader r(data, "ParamValue");
  ParamValue v = ParamValue::decode(r);
  if (!r.done()) throw ParseError("trailing bytes after ParamValue");
  return v;
}

/// First 8 hex chars of the 64-bit content hash of the canonical binary
/// serialization. Used for non-scalar arguments in model dir names.
inline std::string short_digest(const ParamValue& v) {
  std::string buf;
  v.encode(buf);
  return detail::hex64(detail::fnv1a64(buf)).substr(0, 8);
}

}  // namespace simkit

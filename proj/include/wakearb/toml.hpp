#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace wakearb::toml {

// Minimal TOML subset: enough for scenario files and calibration artifacts.
// Supported: comments, bare/quoted keys, basic strings, integers, floats
// (incl. inf/nan), booleans, (nested) arrays, [tables] and [[table arrays]].
// Not supported: dotted keys, inline tables, dates. The writer emits sorted
// keys so output is byte-stable.

class Value;
using Array = std::vector<Value>;

class Value {
 public:
  Value() : v_(int64_t{0}) {}
  explicit Value(std::string s) : v_(std::move(s)) {}
  explicit Value(const char* s) : v_(std::string(s)) {}
  explicit Value(double d) : v_(d) {}
  explicit Value(int64_t i) : v_(i) {}
  explicit Value(int i) : v_(static_cast<int64_t>(i)) {}
  explicit Value(bool b) : v_(b) {}
  explicit Value(Array a) : v_(std::move(a)) {}

  bool is_string() const { return std::holds_alternative<std::string>(v_); }
  bool is_float() const { return std::holds_alternative<double>(v_); }
  bool is_int() const { return std::holds_alternative<int64_t>(v_); }
  bool is_bool() const { return std::holds_alternative<bool>(v_); }
  bool is_array() const { return std::holds_alternative<Array>(v_); }
  bool is_number() const { return is_float() || is_int(); }

  const std::string& as_string() const;
  double as_float() const;  // ints promote
  int64_t as_int() const;
  bool as_bool() const;
  const Array& as_array() const;

 private:
  std::variant<std::string, double, int64_t, bool, Array> v_;
};

struct Table {
  std::map<std::string, Value> entries;

  bool has(const std::string& key) const { return entries.count(key) != 0; }
  const Value& at(const std::string& key) const;

  // typed lookups with defaults; throw ConfigError on type mismatch
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_float(const std::string& key, double fallback) const;
  int64_t get_int(const std::string& key, int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  std::string require_string(const std::string& key) const;
  double require_float(const std::string& key) const;
  int64_t require_int(const std::string& key) const;

  void set(const std::string& key, Value v) { entries[key] = std::move(v); }
};

struct Document {
  Table root;
  std::map<std::string, Table> tables;
  std::map<std::string, std::vector<Table>> table_arrays;

  bool has_table(const std::string& name) const { return tables.count(name) != 0; }
  const Table& table(const std::string& name) const;
  // missing table -> empty table (defaults apply)
  const Table& table_or_empty(const std::string& name) const;
};

Document parse(const std::string& text);
Document parse_file(const std::string& path);

std::string serialize(const Document& doc);
void write_file(const std::string& path, const Document& doc);

// %.17g with a guaranteed float marker so the value reparses as a float
std::string format_float(double v);

}  // namespace wakearb::toml

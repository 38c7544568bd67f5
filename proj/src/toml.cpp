#include "wakearb/toml.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "wakearb/errors.hpp"

namespace wakearb::toml {

namespace {

[[noreturn]] void fail(int line, const std::string& what) {
  throw ConfigError("toml: line " + std::to_string(line) + ": " + what);
}

[[noreturn]] void type_fail(const std::string& key, const char* want) {
  throw ConfigError("toml: key '" + key + "' is not a " + want);
}

}  // namespace

const std::string& Value::as_string() const {
  if (!is_string()) throw ConfigError("toml: value is not a string");
  return std::get<std::string>(v_);
}

double Value::as_float() const {
  if (is_int()) return static_cast<double>(std::get<int64_t>(v_));
  if (!is_float()) throw ConfigError("toml: value is not a number");
  return std::get<double>(v_);
}

int64_t Value::as_int() const {
  if (!is_int()) throw ConfigError("toml: value is not an integer");
  return std::get<int64_t>(v_);
}

bool Value::as_bool() const {
  if (!is_bool()) throw ConfigError("toml: value is not a boolean");
  return std::get<bool>(v_);
}

const Array& Value::as_array() const {
  if (!is_array()) throw ConfigError("toml: value is not an array");
  return std::get<Array>(v_);
}

const Value& Table::at(const std::string& key) const {
  auto it = entries.find(key);
  if (it == entries.end()) throw ConfigError("toml: missing key '" + key + "'");
  return it->second;
}

std::string Table::get_string(const std::string& key, const std::string& fallback) const {
  auto it = entries.find(key);
  if (it == entries.end()) return fallback;
  if (!it->second.is_string()) type_fail(key, "string");
  return it->second.as_string();
}

double Table::get_float(const std::string& key, double fallback) const {
  auto it = entries.find(key);
  if (it == entries.end()) return fallback;
  if (!it->second.is_number()) type_fail(key, "number");
  return it->second.as_float();
}

int64_t Table::get_int(const std::string& key, int64_t fallback) const {
  auto it = entries.find(key);
  if (it == entries.end()) return fallback;
  if (!it->second.is_int()) type_fail(key, "integer");
  return it->second.as_int();
}

bool Table::get_bool(const std::string& key, bool fallback) const {
  auto it = entries.find(key);
  if (it == entries.end()) return fallback;
  if (!it->second.is_bool()) type_fail(key, "boolean");
  return it->second.as_bool();
}

std::string Table::require_string(const std::string& key) const {
  if (!at(key).is_string()) type_fail(key, "string");
  return at(key).as_string();
}

double Table::require_float(const std::string& key) const {
  if (!at(key).is_number()) type_fail(key, "number");
  return at(key).as_float();
}

int64_t Table::require_int(const std::string& key) const {
  if (!at(key).is_int()) type_fail(key, "integer");
  return at(key).as_int();
}

const Table& Document::table(const std::string& name) const {
  auto it = tables.find(name);
  if (it == tables.end()) throw ConfigError("toml: missing table [" + name + "]");
  return it->second;
}

const Table& Document::table_or_empty(const std::string& name) const {
  static const Table kEmpty;
  auto it = tables.find(name);
  return it == tables.end() ? kEmpty : it->second;
}

// ---- parser ----------------------------------------------------------------

namespace {

struct Cursor {
  const std::string& s;
  size_t pos = 0;
  int line = 1;

  bool done() const { return pos >= s.size(); }
  char peek() const { return pos < s.size() ? s[pos] : '\0'; }
  char take() {
    char c = s[pos++];
    if (c == '\n') ++line;
    return c;
  }

  void skip_ws_inline() {
    while (!done() && (peek() == ' ' || peek() == '\t')) ++pos;
  }

  // whitespace, newlines and comments — used inside arrays where TOML allows
  // values to span lines
  void skip_ws_any() {
    for (;;) {
      skip_ws_inline();
      if (peek() == '#') {
        while (!done() && peek() != '\n') ++pos;
      } else if (peek() == '\n' || peek() == '\r') {
        take();
      } else {
        return;
      }
    }
  }
};

std::string parse_basic_string(Cursor& c) {
  int line = c.line;
  c.take();  // opening quote
  std::string out;
  for (;;) {
    if (c.done()) fail(line, "unterminated string");
    char ch = c.take();
    if (ch == '"') return out;
    if (ch == '\n') fail(line, "newline in basic string");
    if (ch != '\\') {
      out.push_back(ch);
      continue;
    }
    if (c.done()) fail(line, "dangling escape");
    char e = c.take();
    switch (e) {
      case '"': out.push_back('"'); break;
      case '\\': out.push_back('\\'); break;
      case 'n': out.push_back('\n'); break;
      case 't': out.push_back('\t'); break;
      case 'r': out.push_back('\r'); break;
      default: fail(line, std::string("unsupported escape \\") + e);
    }
  }
}

bool is_bare_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

std::string parse_key(Cursor& c) {
  c.skip_ws_inline();
  if (c.peek() == '"') return parse_basic_string(c);
  std::string key;
  while (!c.done() && is_bare_key_char(c.peek())) key.push_back(c.take());
  if (key.empty()) fail(c.line, "expected a key");
  if (c.peek() == '.') fail(c.line, "dotted keys are not supported");
  return key;
}

Value parse_value(Cursor& c);

Value parse_array(Cursor& c) {
  c.take();  // '['
  Array items;
  for (;;) {
    c.skip_ws_any();
    if (c.done()) fail(c.line, "unterminated array");
    if (c.peek() == ']') {
      c.take();
      return Value(std::move(items));
    }
    items.push_back(parse_value(c));
    c.skip_ws_any();
    if (c.peek() == ',') {
      c.take();
    } else if (c.peek() != ']') {
      fail(c.line, "expected ',' or ']' in array");
    }
  }
}

Value parse_scalar_token(Cursor& c) {
  int line = c.line;
  std::string tok;
  while (!c.done()) {
    char ch = c.peek();
    if (ch == ',' || ch == ']' || ch == '\n' || ch == '\r' || ch == '#' || ch == ' ' ||
        ch == '\t')
      break;
    tok.push_back(c.take());
  }
  if (tok.empty()) fail(line, "expected a value");

  if (tok == "true") return Value(true);
  if (tok == "false") return Value(false);
  if (tok == "inf" || tok == "+inf") return Value(HUGE_VAL);
  if (tok == "-inf") return Value(-HUGE_VAL);
  if (tok == "nan" || tok == "+nan" || tok == "-nan") return Value(std::nan(""));

  bool floaty = tok.find_first_of(".eE") != std::string::npos;
  // "1e5" style counts as float; a lone '-' or '+' does not make a number
  const char* begin = tok.c_str();
  char* end = nullptr;
  if (!floaty) {
    errno = 0;
    long long v = std::strtoll(begin, &end, 10);
    if (end == begin + tok.size() && errno == 0) return Value(static_cast<int64_t>(v));
  }
  errno = 0;
  double d = std::strtod(begin, &end);
  // ERANGE also fires on subnormal underflow, where strtod still returns the
  // nearest representable value; only overflow is a real error
  if (end != begin + tok.size() || (errno == ERANGE && std::fabs(d) == HUGE_VAL))
    fail(line, "cannot parse value '" + tok + "'");
  return Value(d);
}

Value parse_value(Cursor& c) {
  c.skip_ws_inline();
  char ch = c.peek();
  if (ch == '"') return Value(parse_basic_string(c));
  if (ch == '[') return parse_array(c);
  return parse_scalar_token(c);
}

void expect_line_end(Cursor& c) {
  c.skip_ws_inline();
  if (c.peek() == '#') {
    while (!c.done() && c.peek() != '\n') c.take();
  }
  if (c.done()) return;
  if (c.peek() == '\r') c.take();
  if (c.done()) return;
  if (c.peek() != '\n') fail(c.line, "unexpected trailing characters");
  c.take();
}

}  // namespace

Document parse(const std::string& text) {
  Document doc;
  Cursor c{text};
  Table* current = &doc.root;

  while (!c.done()) {
    c.skip_ws_inline();
    char ch = c.peek();
    if (ch == '\0') break;
    if (ch == '\n' || ch == '\r' || ch == '#') {
      expect_line_end(c);
      continue;
    }
    if (ch == '[') {
      c.take();
      bool is_array = c.peek() == '[';
      if (is_array) c.take();
      std::string name = parse_key(c);
      if (c.peek() != ']') fail(c.line, "expected ']' after table name");
      c.take();
      if (is_array) {
        if (c.peek() != ']') fail(c.line, "expected ']]' after table array name");
        c.take();
        doc.table_arrays[name].emplace_back();
        current = &doc.table_arrays[name].back();
      } else {
        if (doc.tables.count(name)) fail(c.line, "duplicate table [" + name + "]");
        current = &doc.tables[name];
      }
      expect_line_end(c);
      continue;
    }

    std::string key = parse_key(c);
    c.skip_ws_inline();
    if (c.peek() != '=') fail(c.line, "expected '=' after key '" + key + "'");
    c.take();
    if (current->entries.count(key)) fail(c.line, "duplicate key '" + key + "'");
    current->entries[key] = parse_value(c);
    expect_line_end(c);
  }
  return doc;
}

Document parse_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return parse(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// ---- writer ----------------------------------------------------------------

std::string format_float(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

namespace {

void write_string_escaped(std::string& out, const std::string& s) {
  out.push_back('"');
  for (char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(ch);
    }
  }
  out.push_back('"');
}

void write_value(std::string& out, const Value& v) {
  if (v.is_string()) {
    write_string_escaped(out, v.as_string());
  } else if (v.is_bool()) {
    out += v.as_bool() ? "true" : "false";
  } else if (v.is_int()) {
    out += std::to_string(v.as_int());
  } else if (v.is_float()) {
    out += format_float(v.as_float());
  } else {
    out.push_back('[');
    const auto& items = v.as_array();
    for (size_t i = 0; i < items.size(); ++i) {
      if (i) out += ", ";
      write_value(out, items[i]);
    }
    out.push_back(']');
  }
}

void write_table_body(std::string& out, const Table& t) {
  for (const auto& [key, value] : t.entries) {
    out += key;
    out += " = ";
    write_value(out, value);
    out.push_back('\n');
  }
}

}  // namespace

std::string serialize(const Document& doc) {
  std::string out;
  write_table_body(out, doc.root);
  for (const auto& [name, table] : doc.tables) {
    if (!out.empty()) out.push_back('\n');
    out += "[" + name + "]\n";
    write_table_body(out, table);
  }
  for (const auto& [name, list] : doc.table_arrays) {
    for (const auto& table : list) {
      if (!out.empty()) out.push_back('\n');
      out += "[[" + name + "]]\n";
      write_table_body(out, table);
    }
  }
  return out;
}

void write_file(const std::string& path, const Document& doc) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("cannot open " + path + " for writing");
  std::string body = serialize(doc);
  f.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!f) throw ConfigError("short write to " + path);
}

}  // namespace wakearb::toml

#include "dmpp/toml_lite.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "dmpp/errors.hpp"

namespace dmpp::toml {

namespace {

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ParseError("toml line " + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Strips a # comment, ignoring # inside quoted strings.
std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

std::vector<std::string> split_path(const std::string& s, int line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == '.') {
      if (cur.empty()) fail(line, "empty path segment");
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (trim(cur).empty()) fail(line, "empty path segment");
  out.push_back(trim(cur));
  return out;
}

std::string parse_basic_string(const std::string& s, size_t& i, int line) {
  std::string out;
  ++i;  // opening quote
  while (i < s.size() && s[i] != '"') {
    if (s[i] == '\\') {
      ++i;
      if (i >= s.size()) fail(line, "dangling escape");
      switch (s[i]) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: fail(line, "unsupported escape sequence");
      }
    } else {
      out += s[i];
    }
    ++i;
  }
  if (i >= s.size()) fail(line, "unterminated string");
  ++i;  // closing quote
  return out;
}

Value parse_value(const std::string& s, size_t& i, int line);

Value parse_array(const std::string& s, size_t& i, int line) {
  Array arr;
  ++i;  // '['
  while (true) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    if (i >= s.size()) fail(line, "unterminated array (arrays must be single-line)");
    if (s[i] == ']') {
      ++i;
      break;
    }
    arr.push_back(parse_value(s, i, line));
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    if (i < s.size() && s[i] == ',') {
      ++i;
      continue;
    }
    if (i < s.size() && s[i] == ']') {
      ++i;
      break;
    }
    fail(line, "expected ',' or ']' in array");
  }
  return Value(std::move(arr));
}

Value parse_value(const std::string& s, size_t& i, int line) {
  if (i >= s.size()) fail(line, "missing value");
  const char c = s[i];
  if (c == '"') return Value(parse_basic_string(s, i, line));
  if (c == '[') return parse_array(s, i, line);
  if (c == '{') fail(line, "inline tables are not supported");

  size_t j = i;
  while (j < s.size() && s[j] != ',' && s[j] != ']' && s[j] != ' ' && s[j] != '\t') ++j;
  std::string tok = s.substr(i, j - i);
  i = j;
  if (tok == "true") return Value(true);
  if (tok == "false") return Value(false);
  if (tok.empty()) fail(line, "missing value");

  // Numbers, including TOML underscores and inf/nan rejection.
  std::string num;
  for (char ch : tok) {
    if (ch == '_') continue;
    num += ch;
  }
  char* end = nullptr;
  const double d = std::strtod(num.c_str(), &end);
  if (end == num.c_str() || *end != '\0' || num.find("inf") != std::string::npos ||
      num.find("nan") != std::string::npos)
    fail(line, "cannot parse value '" + tok + "'");
  return Value(d);
}

}  // namespace

const std::string& Value::as_string() const {
  if (!is_string()) throw ParseError("toml value is not a string");
  return std::get<std::string>(v_);
}

double Value::as_double() const {
  if (!is_number()) throw ParseError("toml value is not a number");
  return std::get<double>(v_);
}

long long Value::as_int() const {
  const double d = as_double();
  const long long i = static_cast<long long>(d);
  if (static_cast<double>(i) != d) throw ParseError("toml value is not an integer");
  return i;
}

bool Value::as_bool() const {
  if (!is_bool()) throw ParseError("toml value is not a boolean");
  return std::get<bool>(v_);
}

const Array& Value::as_array() const {
  if (!is_array()) throw ParseError("toml value is not an array");
  return std::get<Array>(v_);
}

std::vector<double> Value::as_double_array() const {
  const Array& a = as_array();
  std::vector<double> out;
  out.reserve(a.size());
  for (const Value& v : a) out.push_back(v.as_double());
  return out;
}

const Value* Table::find(const std::string& key) const {
  auto it = values.find(key);
  return it == values.end() ? nullptr : &it->second;
}

const Table* Table::find_table(const std::string& key) const {
  auto it = tables.find(key);
  return it == tables.end() ? nullptr : &it->second;
}

const std::vector<Table>* Table::find_array(const std::string& key) const {
  auto it = table_arrays.find(key);
  return it == table_arrays.end() ? nullptr : &it->second;
}

Table parse(const std::string& text) {
  Table root;
  Table* current = &root;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(strip_comment(raw));
    if (s.empty()) continue;

    if (s.front() == '[') {
      const bool is_array = s.size() > 1 && s[1] == '[';
      const std::string closer = is_array ? "]]" : "]";
      if (s.size() < closer.size() + 1 ||
          s.compare(s.size() - closer.size(), closer.size(), closer) != 0)
        fail(line, "malformed table header");
      const size_t open = is_array ? 2 : 1;
      std::string inner = trim(s.substr(open, s.size() - open - closer.size()));
      if (inner.empty()) fail(line, "empty table name");
      std::vector<std::string> path = split_path(inner, line);

      Table* t = &root;
      for (size_t k = 0; k + 1 < path.size(); ++k) t = &t->tables[path[k]];
      if (is_array) {
        t->table_arrays[path.back()].emplace_back();
        current = &t->table_arrays[path.back()].back();
      } else {
        current = &t->tables[path.back()];
      }
      continue;
    }

    const size_t eq = s.find('=');
    if (eq == std::string::npos) fail(line, "expected 'key = value'");
    std::string key = trim(s.substr(0, eq));
    if (key.empty()) fail(line, "empty key");
    if (key.front() == '"') {
      size_t i = 0;
      key = parse_basic_string(key, i, line);
    } else if (key.find('.') != std::string::npos) {
      fail(line, "dotted keys are not supported; use a table header");
    }
    std::string rest = trim(s.substr(eq + 1));
    size_t i = 0;
    Value v = parse_value(rest, i, line);
    while (i < rest.size() && (rest[i] == ' ' || rest[i] == '\t')) ++i;
    if (i != rest.size()) fail(line, "trailing characters after value");
    if (current->values.count(key)) fail(line, "duplicate key '" + key + "'");
    current->values[key] = std::move(v);
  }
  return root;
}

Table parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

}  // namespace dmpp::toml

#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

namespace dmpp::toml {

// Minimal TOML reader covering what scenario files use: [table] and
// [[array-of-tables]] headers with dotted paths, key = value lines with
// strings, numbers, booleans and single-line arrays, and # comments.
// Inline tables, multi-line arrays and datetimes are rejected.

class Value;
using Array = std::vector<Value>;

class Value {
 public:
  Value() : v_(0.0) {}
  explicit Value(std::string s) : v_(std::move(s)) {}
  explicit Value(double d) : v_(d) {}
  explicit Value(bool b) : v_(b) {}
  explicit Value(Array a) : v_(std::move(a)) {}

  bool is_string() const { return std::holds_alternative<std::string>(v_); }
  bool is_number() const { return std::holds_alternative<double>(v_); }
  bool is_bool() const { return std::holds_alternative<bool>(v_); }
  bool is_array() const { return std::holds_alternative<Array>(v_); }

  const std::string& as_string() const;
  double as_double() const;
  long long as_int() const;  // requires an integral number
  bool as_bool() const;
  const Array& as_array() const;
  std::vector<double> as_double_array() const;

 private:
  std::variant<std::string, double, bool, Array> v_;
};

struct Table {
  std::map<std::string, Value> values;
  std::map<std::string, Table> tables;
  std::map<std::string, std::vector<Table>> table_arrays;

  const Value* find(const std::string& key) const;
  const Table* find_table(const std::string& key) const;
  const std::vector<Table>* find_array(const std::string& key) const;
};

Table parse(const std::string& text);
Table parse_file(const std::string& path);

}  // namespace dmpp::toml

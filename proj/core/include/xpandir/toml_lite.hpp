#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace xpandir::toml {

/// Parsed TOML value. The supported grammar is the subset experiment configs
/// need: comments, bare and quoted keys, basic strings, integers, floats,
/// booleans, single-line arrays, [table] and [[array-of-tables]] headers.
struct Value {
    enum class Kind { String, Integer, Float, Boolean, Array, Table };

    Kind kind = Kind::Table;
    std::string str;
    std::int64_t integer = 0;
    double real = 0.0;
    bool boolean = false;
    std::vector<Value> array;
    std::map<std::string, Value> table;

    bool is_table() const { return kind == Kind::Table; }
    bool is_array() const { return kind == Kind::Array; }

    // Typed accessors; throw ConfigError naming `what` on a kind mismatch.
    const std::string& as_string(const std::string& what) const;
    std::int64_t as_int(const std::string& what) const;
    double as_float(const std::string& what) const;  // accepts integers
    bool as_bool(const std::string& what) const;
    const std::vector<Value>& as_array(const std::string& what) const;

    /// nullptr when the key is absent (tables only).
    const Value* find(const std::string& key) const;
    /// Throws ConfigError when absent.
    const Value& at(const std::string& key) const;
    std::vector<std::string> string_array(const std::string& key) const;
};

Value parse(std::string_view text, const std::string& source_name);
Value parse_file(const std::string& path);

}  // namespace xpandir::toml

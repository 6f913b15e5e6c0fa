#include "xpandir/toml_lite.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "xpandir/error.hpp"

namespace xpandir::toml {

namespace {

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& msg) {
    throw ConfigError(source + ":" + std::to_string(line) + ": " + msg);
}

const char* kind_name(Value::Kind k) {
    switch (k) {
        case Value::Kind::String: return "string";
        case Value::Kind::Integer: return "integer";
        case Value::Kind::Float: return "float";
        case Value::Kind::Boolean: return "boolean";
        case Value::Kind::Array: return "array";
        case Value::Kind::Table: return "table";
    }
    return "?";
}

struct Parser {
    std::string_view text;
    std::string source;
    std::size_t pos = 0;
    std::size_t line = 1;

    bool eof() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }
    char take() {
        char c = text[pos++];
        if (c == '\n') ++line;
        return c;
    }

    void skip_spaces() {
        while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos;
    }

    void skip_to_eol() {
        while (!eof() && peek() != '\n') ++pos;
        if (!eof()) take();
    }

    // Spaces, then optionally a comment, then the line must end.
    void end_of_line() {
        skip_spaces();
        if (eof()) return;
        if (peek() == '#') {
            skip_to_eol();
            return;
        }
        if (peek() == '\n') {
            take();
            return;
        }
        if (peek() == '\r') {
            ++pos;
            if (!eof() && peek() == '\n') take();
            return;
        }
        fail(source, line, std::string("unexpected character '") + peek() + "'");
    }

    std::string parse_key() {
        skip_spaces();
        if (!eof() && peek() == '"') return parse_basic_string();
        std::string key;
        while (!eof()) {
            char c = peek();
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') {
                key += c;
                ++pos;
            } else {
                break;
            }
        }
        if (key.empty()) fail(source, line, "expected a key");
        return key;
    }

    std::string parse_basic_string() {
        if (eof() || take() != '"') fail(source, line, "expected '\"'");
        std::string out;
        while (true) {
            if (eof()) fail(source, line, "unterminated string");
            char c = take();
            if (c == '"') return out;
            if (c == '\n') fail(source, line - 1, "newline inside string");
            if (c != '\\') {
                out += c;
                continue;
            }
            if (eof()) fail(source, line, "dangling escape");
            char e = take();
            switch (e) {
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case 'r': out += '\r'; break;
                case 'u': {
                    if (pos + 4 > text.size()) fail(source, line, "short \\u escape");
                    unsigned code = 0;
                    for (int i = 0; i < 4; ++i) {
                        char h = take();
                        code <<= 4;
                        if (h >= '0' && h <= '9') code |= static_cast<unsigned>(h - '0');
                        else if (h >= 'a' && h <= 'f') code |= static_cast<unsigned>(h - 'a' + 10);
                        else if (h >= 'A' && h <= 'F') code |= static_cast<unsigned>(h - 'A' + 10);
                        else fail(source, line, "bad \\u escape");
                    }
                    // Encode the BMP code point as UTF-8.
                    if (code < 0x80) {
                        out += static_cast<char>(code);
                    } else if (code < 0x800) {
                        out += static_cast<char>(0xC0 | (code >> 6));
                        out += static_cast<char>(0x80 | (code & 0x3F));
                    } else {
                        out += static_cast<char>(0xE0 | (code >> 12));
                        out += static_cast<char>(0x80 | ((code >> 6) & 0x3F));
                        out += static_cast<char>(0x80 | (code & 0x3F));
                    }
                    break;
                }
                default: fail(source, line, std::string("unsupported escape \\") + e);
            }
        }
    }

    Value parse_value() {
        skip_spaces();
        if (eof()) fail(source, line, "expected a value");
        char c = peek();
        Value v;
        if (c == '"') {
            v.kind = Value::Kind::String;
            v.str = parse_basic_string();
            return v;
        }
        if (c == '[') {
            take();
            v.kind = Value::Kind::Array;
            skip_spaces();
            if (!eof() && peek() == ']') {
                take();
                return v;
            }
            while (true) {
                v.array.push_back(parse_value());
                skip_spaces();
                if (eof()) fail(source, line, "unterminated array");
                char d = take();
                if (d == ']') return v;
                if (d != ',') fail(source, line, "expected ',' or ']' in array");
                skip_spaces();
                if (!eof() && peek() == ']') {  // trailing comma
                    take();
                    return v;
                }
            }
        }
        // Bare token: bool or number.
        std::string tok;
        while (!eof()) {
            char t = peek();
            if (t == ' ' || t == '\t' || t == '\n' || t == '\r' || t == ',' || t == ']' ||
                t == '#')
                break;
            tok += take();
        }
        if (tok == "true" || tok == "false") {
            v.kind = Value::Kind::Boolean;
            v.boolean = tok == "true";
            return v;
        }
        bool is_float = tok.find('.') != std::string::npos ||
                        tok.find('e') != std::string::npos ||
                        tok.find('E') != std::string::npos;
        try {
            std::size_t consumed = 0;
            if (is_float) {
                v.kind = Value::Kind::Float;
                v.real = std::stod(tok, &consumed);
            } else {
                v.kind = Value::Kind::Integer;
                v.integer = std::stoll(tok, &consumed);
                v.real = static_cast<double>(v.integer);
            }
            if (consumed != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            fail(source, line, "cannot parse value \"" + tok + "\"");
        }
        return v;
    }

    // key path of a [header]; dotted segments allowed.
    std::vector<std::string> parse_header_path(bool double_bracket) {
        std::vector<std::string> path;
        while (true) {
            path.push_back(parse_key());
            skip_spaces();
            if (eof()) fail(source, line, "unterminated table header");
            char c = take();
            if (c == '.') continue;
            if (c == ']') break;
            fail(source, line, "expected '.' or ']' in table header");
        }
        if (double_bracket) {
            if (eof() || take() != ']') fail(source, line, "expected ']]'");
        }
        return path;
    }

    Value run() {
        Value root;
        Value* current = &root;
        while (!eof()) {
            skip_spaces();
            if (eof()) break;
            char c = peek();
            if (c == '\n' || c == '\r') {
                end_of_line();
                continue;
            }
            if (c == '#') {
                skip_to_eol();
                continue;
            }
            if (c == '[') {
                take();
                bool double_bracket = !eof() && peek() == '[';
                if (double_bracket) take();
                std::vector<std::string> path = parse_header_path(double_bracket);
                end_of_line();
                current = navigate(root, path, double_bracket);
                continue;
            }
            std::string key = parse_key();
            skip_spaces();
            if (eof() || take() != '=') fail(source, line, "expected '=' after key");
            Value v = parse_value();
            std::size_t key_line = line;  // end_of_line eats the newline
            end_of_line();
            if (!current->table.emplace(key, std::move(v)).second)
                fail(source, key_line, "key \"" + key + "\" defined twice");
        }
        return root;
    }

    Value* navigate(Value& root, const std::vector<std::string>& path, bool array_table) {
        Value* node = &root;
        for (std::size_t i = 0; i < path.size(); ++i) {
            bool last = i + 1 == path.size();
            const std::string& seg = path[i];
            auto it = node->table.find(seg);
            if (last && array_table) {
                if (it == node->table.end()) {
                    Value arr;
                    arr.kind = Value::Kind::Array;
                    it = node->table.emplace(seg, std::move(arr)).first;
                }
                if (!it->second.is_array())
                    fail(source, line, "\"" + seg + "\" is not an array of tables");
                Value elem;
                elem.kind = Value::Kind::Table;
                it->second.array.push_back(std::move(elem));
                return &it->second.array.back();
            }
            if (it == node->table.end()) {
                Value tbl;
                tbl.kind = Value::Kind::Table;
                it = node->table.emplace(seg, std::move(tbl)).first;
            }
            Value& next = it->second;
            if (next.is_array()) {
                // Descending through an array of tables targets its last entry.
                if (next.array.empty() || !next.array.back().is_table())
                    fail(source, line, "\"" + seg + "\" is not a table");
                node = &next.array.back();
            } else if (next.is_table()) {
                node = &next;
            } else {
                fail(source, line, "\"" + seg + "\" is not a table");
            }
        }
        return node;
    }
};

}  // namespace

const std::string& Value::as_string(const std::string& what) const {
    if (kind != Kind::String)
        throw ConfigError(what + " must be a string, got " + kind_name(kind));
    return str;
}

std::int64_t Value::as_int(const std::string& what) const {
    if (kind != Kind::Integer)
        throw ConfigError(what + " must be an integer, got " + kind_name(kind));
    return integer;
}

double Value::as_float(const std::string& what) const {
    if (kind == Kind::Float) return real;
    if (kind == Kind::Integer) return static_cast<double>(integer);
    throw ConfigError(what + " must be a number, got " + kind_name(kind));
}

bool Value::as_bool(const std::string& what) const {
    if (kind != Kind::Boolean)
        throw ConfigError(what + " must be a boolean, got " + kind_name(kind));
    return boolean;
}

const std::vector<Value>& Value::as_array(const std::string& what) const {
    if (kind != Kind::Array)
        throw ConfigError(what + " must be an array, got " + kind_name(kind));
    return array;
}

const Value* Value::find(const std::string& key) const {
    if (kind != Kind::Table) return nullptr;
    auto it = table.find(key);
    return it == table.end() ? nullptr : &it->second;
}

const Value& Value::at(const std::string& key) const {
    const Value* v = find(key);
    if (!v) throw ConfigError("missing config key \"" + key + "\"");
    return *v;
}

std::vector<std::string> Value::string_array(const std::string& key) const {
    std::vector<std::string> out;
    for (const Value& v : at(key).as_array(key)) out.push_back(v.as_string(key + " entry"));
    return out;
}

Value parse(std::string_view text, const std::string& source_name) {
    Parser p{text, source_name};
    return p.run();
}

Value parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    return parse(text, path);
}

}  // namespace xpandir::toml

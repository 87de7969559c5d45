#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "advbench/tensor.hpp"

namespace advbench {

// Experiment config files: human-readable key-value text with nested tables.
//
//   # comment
//   [data]
//   task = "classification"
//   n_samples = 240
//   [attacks.fgsm]
//   ssim_band = [0.97, 0.99]
//
// Values: booleans, integers, floats, "strings", and flat arrays of those.
// Parsing produces a JSON tree; validation against a schema rejects unknown
// keys and type mismatches.

namespace detail {

inline std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

inline nlohmann::ordered_json parse_scalar(const std::string& tok, int line_no) {
    if (tok == "true") return true;
    if (tok == "false") return false;
    if (tok.size() >= 2 && tok.front() == '"' && tok.back() == '"')
        return tok.substr(1, tok.size() - 2);
    // integer?
    {
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec == std::errc() && p == tok.data() + tok.size()) return v;
    }
    {
        double v = 0.0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec == std::errc() && p == tok.data() + tok.size()) return v;
    }
    throw Error("config line " + std::to_string(line_no) + ": cannot parse value '" + tok + "'");
}

inline nlohmann::ordered_json parse_value(const std::string& raw, int line_no) {
    std::string tok = strip(raw);
    require(!tok.empty(), "config line " + std::to_string(line_no) + ": empty value");
    if (tok.front() == '[') {
        require(tok.back() == ']', "config line " + std::to_string(line_no) + ": unterminated array");
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        std::string inner = tok.substr(1, tok.size() - 2);
        std::string cur;
        bool in_string = false;
        for (char c : inner) {
            if (c == '"') in_string = !in_string;
            if (c == ',' && !in_string) {
                if (!strip(cur).empty()) arr.push_back(parse_scalar(strip(cur), line_no));
                cur.clear();
            } else {
                cur += c;
            }
        }
        if (!strip(cur).empty()) arr.push_back(parse_scalar(strip(cur), line_no));
        return arr;
    }
    return parse_scalar(tok, line_no);
}

}  // namespace detail

inline nlohmann::ordered_json parse_config_text(const std::string& text) {
    nlohmann::ordered_json root = nlohmann::ordered_json::object();
    nlohmann::ordered_json* table = &root;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        line = detail::strip(detail::strip_comment(line));
        if (line.empty()) continue;

        if (line.front() == '[') {
            require(line.back() == ']', "config line " + std::to_string(line_no) + ": bad table header");
            std::string path = detail::strip(line.substr(1, line.size() - 2));
            require(!path.empty(), "config line " + std::to_string(line_no) + ": empty table name");
            table = &root;
            std::size_t start = 0;
            while (true) {
                std::size_t dot = path.find('.', start);
                std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
                require(!part.empty(), "config line " + std::to_string(line_no) + ": empty table segment");
                if (!table->contains(part)) (*table)[part] = nlohmann::ordered_json::object();
                table = &(*table)[part];
                if (dot == std::string::npos) break;
                start = dot + 1;
            }
            continue;
        }

        std::size_t eq = line.find('=');
        require(eq != std::string::npos,
                "config line " + std::to_string(line_no) + ": expected 'key = value'");
        std::string key = detail::strip(line.substr(0, eq));
        require(!key.empty(), "config line " + std::to_string(line_no) + ": empty key");
        require(!table->contains(key),
                "config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        (*table)[key] = detail::parse_value(line.substr(eq + 1), line_no);
    }
    return root;
}

// Schema: a JSON tree whose leaves are type names ("bool", "int", "float",
// "string", "int[]", "float[]", "string[]"). "float" accepts integers too.
inline void validate_config(const nlohmann::ordered_json& cfg, const nlohmann::ordered_json& schema,
                            const std::string& prefix = "") {
    for (const auto& [key, value] : cfg.items()) {
        std::string path = prefix.empty() ? key : prefix + "." + key;
        require(schema.contains(key), "config: unknown key '" + path + "'");
        const auto& rule = schema.at(key);
        if (rule.is_object()) {
            require(value.is_object(), "config: '" + path + "' must be a table");
            validate_config(value, rule, path);
            continue;
        }
        std::string type = rule.get<std::string>();
        auto fail = [&]() { throw Error("config: '" + path + "' must be a " + type); };
        if (type == "bool") {
            if (!value.is_boolean()) fail();
        } else if (type == "int") {
            if (!value.is_number_integer()) fail();
        } else if (type == "float") {
            if (!value.is_number()) fail();
        } else if (type == "string") {
            if (!value.is_string()) fail();
        } else if (type == "int[]" || type == "float[]" || type == "string[]") {
            if (!value.is_array()) fail();
            for (const auto& el : value) {
                if (type == "int[]" && !el.is_number_integer()) fail();
                if (type == "float[]" && !el.is_number()) fail();
                if (type == "string[]" && !el.is_string()) fail();
            }
        } else {
            throw Error("config schema: unknown type '" + type + "' at '" + path + "'");
        }
    }
}

/// FNV-1a over the canonical dump; stable across runs.
inline std::uint64_t config_hash(const nlohmann::ordered_json& cfg) {
    std::string s = cfg.dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace advbench

#pragma once

// Flat text records for seeds:
//
//   # comment
//   n = 2
//   m1 = 41.0495
//   ...
//   theta0_p = 7
//   theta0_q = 6
//   t0 = 18.5318
//
// A JSON object with the same keys is accepted as well. Doubles are written
// with the shortest representation that reads back to the same binary64.

#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "ringorbit/errors.hpp"
#include "ringorbit/model.hpp"

namespace ringorbit {

/// Shortest round-trip decimal for a double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

/// Fixed 17 significant digits, for CSV columns and reports.
inline std::string format_17(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return {buf, res.ptr};
}

inline double parse_double(std::string_view text, std::string_view key) {
    double v = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    if (!text.empty() && *first == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last) {
        throw InvalidConfiguration("key '" + std::string(key) + "': cannot parse '" + std::string(text) + "' as a number");
    }
    return v;
}

inline std::int64_t parse_int(std::string_view text, std::string_view key) {
    std::int64_t v = 0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    if (!text.empty() && *first == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last) {
        throw InvalidConfiguration("key '" + std::string(key) + "': cannot parse '" + std::string(text) + "' as an integer");
    }
    return v;
}

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

using KeyValues = std::map<std::string, std::string>;

/// Parses "key = value" lines. '#' starts a comment; blank lines are skipped.
inline KeyValues parse_key_values(std::string_view text) {
    KeyValues out;
    std::size_t pos = 0;
    int line_no = 0;
    while (pos <= text.size()) {
        auto eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        ++line_no;
        auto raw = text.substr(pos, eol - pos);
        if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        std::string line = trim(raw);
        pos = eol + 1;
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw InvalidConfiguration("line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        auto key = trim(std::string_view(line).substr(0, eq));
        auto value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) throw InvalidConfiguration("line " + std::to_string(line_no) + ": empty key");
        if (!out.emplace(key, value).second) {
            throw InvalidConfiguration("duplicate key '" + key + "'");
        }
    }
    return out;
}

namespace detail {

inline const std::string& require(const KeyValues& kv, const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw InvalidConfiguration("missing key '" + key + "'");
    return it->second;
}

} // namespace detail

/// Builds a seed from parsed keys. Unknown keys are ignored so that catalog
/// and fixture records can carry extra fields.
inline SeedConfig seed_from_key_values(const KeyValues& kv) {
    using detail::require;
    SeedConfig q;
    const auto n = parse_int(require(kv, "n"), "n");
    if (n < 2 || n > 1'000'000) throw InvalidConfiguration("n must be at least 2");
    q.n = static_cast<int>(n);
    q.m1 = parse_double(require(kv, "m1"), "m1");
    q.m2 = parse_double(require(kv, "m2"), "m2");
    q.y10 = parse_double(require(kv, "y10"), "y10");
    q.dy20 = parse_double(require(kv, "dy20"), "dy20");
    q.df0 = parse_double(require(kv, "df0"), "df0");
    const bool has_p = kv.contains("theta0_p");
    const bool has_q = kv.contains("theta0_q");
    if (has_p != has_q) throw InvalidConfiguration("theta0_p and theta0_q must be given together");
    if (has_p) {
        q.theta0 = PiFraction(parse_int(kv.at("theta0_p"), "theta0_p"), parse_int(kv.at("theta0_q"), "theta0_q"));
    }
    if (const auto it = kv.find("t0"); it != kv.end() && !it->second.empty()) {
        q.t0 = parse_double(it->second, "t0");
    }
    q.validate();
    return q;
}

inline KeyValues key_values_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InvalidConfiguration("seed JSON must be an object");
    KeyValues kv;
    for (const auto& [key, value] : j.items()) {
        if (value.is_string()) {
            kv[key] = value.get<std::string>();
        } else if (value.is_number_integer()) {
            kv[key] = std::to_string(value.get<std::int64_t>());
        } else if (value.is_number()) {
            kv[key] = format_double(value.get<double>());
        } else if (value.is_boolean()) {
            kv[key] = value.get<bool>() ? "1" : "0";
        } else if (!value.is_null()) {
            throw InvalidConfiguration("key '" + key + "' must be a scalar");
        }
    }
    return kv;
}

/// Accepts either a JSON object or key = value lines.
inline SeedConfig parse_seed(std::string_view text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string_view::npos && text[first] == '{') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw InvalidConfiguration(std::string("invalid seed JSON: ") + e.what());
        }
        return seed_from_key_values(key_values_from_json(j));
    }
    return seed_from_key_values(parse_key_values(text));
}

inline std::string format_seed(const SeedConfig& q) {
    std::ostringstream os;
    os << "n = " << q.n << '\n'
       << "m1 = " << format_double(q.m1) << '\n'
       << "m2 = " << format_double(q.m2) << '\n'
       << "y10 = " << format_double(q.y10) << '\n'
       << "dy20 = " << format_double(q.dy20) << '\n'
       << "df0 = " << format_double(q.df0) << '\n'
       << "theta0_p = " << q.theta0.num() << '\n'
       << "theta0_q = " << q.theta0.den() << '\n';
    if (q.t0) os << "t0 = " << format_double(*q.t0) << '\n';
    return os.str();
}

inline nlohmann::ordered_json seed_to_json(const SeedConfig& q) {
    nlohmann::ordered_json j;
    j["n"] = q.n;
    j["m1"] = q.m1;
    j["m2"] = q.m2;
    j["y10"] = q.y10;
    j["dy20"] = q.dy20;
    j["df0"] = q.df0;
    j["theta0_p"] = q.theta0.num();
    j["theta0_q"] = q.theta0.den();
    if (q.t0) j["t0"] = *q.t0;
    return j;
}

/// Splits text into blank-line separated blocks, dropping comment-only blocks.
inline std::vector<std::string> split_blocks(std::string_view text) {
    std::vector<std::string> blocks;
    std::string current;
    bool has_content = false;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        const auto raw = text.substr(pos, eol - pos);
        const auto line = trim(raw);
        pos = eol + 1;
        if (line.empty()) {
            if (has_content) blocks.push_back(current);
            current.clear();
            has_content = false;
            continue;
        }
        current.append(raw).push_back('\n');
        if (line.front() != '#') has_content = true;
    }
    if (has_content) blocks.push_back(current);
    return blocks;
}

} // namespace ringorbit

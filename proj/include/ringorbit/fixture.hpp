#pragma once

// Reader for fixture files: blank-line separated seed records with a label,
// '#' citation comments and optional printed_* keys for values that differ
// from what was originally printed.

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ringorbit/errors.hpp"
#include "ringorbit/model.hpp"
#include "ringorbit/seed_io.hpp"

namespace ringorbit {

struct FixtureRow {
    std::string label;
    std::string citation;  ///< first comment line of the block
    SeedConfig seed;       ///< effective values
    SeedConfig printed;    ///< values as printed
    std::vector<std::string> corrected;  ///< fields where the two differ

    [[nodiscard]] bool has_correction() const { return !corrected.empty(); }
};

inline std::vector<FixtureRow> parse_fixture(std::string_view text) {
    std::vector<FixtureRow> rows;
    for (const auto& block : split_blocks(text)) {
        FixtureRow row;
        std::istringstream is(block);
        std::string line;
        while (std::getline(is, line)) {
            const auto t = trim(line);
            if (!t.empty() && t.front() == '#' && row.citation.empty()) row.citation = trim(t.substr(1));
        }
        const auto kv = parse_key_values(block);
        row.seed = seed_from_key_values(kv);
        row.label = kv.contains("label") ? kv.at("label") : "row-" + std::to_string(rows.size() + 1);

        KeyValues printed = kv;
        for (const auto& [key, value] : kv) {
            if (key.rfind("printed_", 0) != 0) continue;
            const auto field = key.substr(8);
            if (!kv.contains(field)) throw InvalidConfiguration(row.label + ": '" + key + "' has no effective value");
            printed[field] = value;
            if (field == "theta0_p" || field == "theta0_q") {
                if (std::find(row.corrected.begin(), row.corrected.end(), "theta0") == row.corrected.end()) {
                    row.corrected.push_back("theta0");
                }
            } else {
                row.corrected.push_back(field);
            }
        }
        row.printed = seed_from_key_values(printed);
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::vector<FixtureRow> load_fixture(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfiguration("cannot read fixture file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_fixture(ss.str());
}

} // namespace ringorbit

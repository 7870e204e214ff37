#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "josh/canonical.hpp"
#include "josh/registry.hpp"

namespace josh {

using Row = ArgMap;

/// One domain's table. Row order is significant: serving falls back to the
/// first matching row.
struct DomainDatabase {
    std::string domain;
    std::vector<Row> rows;

    /// Rows satisfying every constraint in `args`, in table order. Constraints
    /// are equalities except leaveAt (departs at or after) and arriveBy
    /// (arrives at or before); "dontcare" values constrain nothing.
    [[nodiscard]] std::vector<Row> query(const ArgMap& args) const {
        std::vector<Row> out;
        for (const auto& r : rows)
            if (satisfies(r, args)) out.push_back(r);
        return out;
    }

    static bool satisfies(const Row& r, const ArgMap& args) {
        for (const auto& [k, v] : args) {
            if (v == "dontcare" || v == "don't care" || v == "any") continue;
            auto it = r.find(k);
            if (it == r.end()) return false;
            if (k == "leaveAt") {
                if (!(it->second >= v)) return false;
            } else if (k == "arriveBy") {
                if (!(it->second <= v)) return false;
            } else if (it->second != v) {
                return false;
            }
        }
        return true;
    }

    [[nodiscard]] const Row* find_unique(const std::string& id) const {
        const auto field = unique_id_field(domain);
        for (const auto& r : rows) {
            auto it = r.find(field);
            if (it != r.end() && it->second == id) return &r;
        }
        return nullptr;
    }

    friend bool operator==(const DomainDatabase&, const DomainDatabase&) = default;
};

using DatabaseSet = std::map<std::string, DomainDatabase>;

class DatabaseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Builds a table from a JSON array of flat records. Non-scalar fields (e.g.
/// coordinates, nested price tables) are dropped; scalars are canonicalized.
inline DomainDatabase database_from_json(const std::string& domain, const json& rows) {
    if (!rows.is_array()) throw DatabaseError("database for " + domain + " must be an array");
    DomainDatabase db{domain, {}};
    db.rows.reserve(rows.size());
    for (const auto& rec : rows) {
        if (!rec.is_object()) throw DatabaseError("database row for " + domain + " is not an object");
        Row row;
        for (auto it = rec.begin(); it != rec.end(); ++it) {
            std::string v;
            if (scalar_to_canonical(it.value(), v)) row.emplace(it.key(), std::move(v));
        }
        db.rows.push_back(std::move(row));
    }
    return db;
}

inline json to_json(const DomainDatabase& db) {
    json rows = json::array();
    for (const auto& r : db.rows) rows.push_back(to_json(r));
    return rows;
}

/// Loads `<dir>/<domain>_db.json` for every database domain present.
inline DatabaseSet load_databases(const std::filesystem::path& dir) {
    DatabaseSet set;
    for (const auto& domain : database_domains()) {
        auto path = dir / (domain + "_db.json");
        if (!std::filesystem::exists(path)) continue;
        std::ifstream in(path);
        if (!in) throw DatabaseError("cannot open " + path.string());
        set.emplace(domain, database_from_json(domain, json::parse(in)));
    }
    if (set.empty()) throw DatabaseError("no <domain>_db.json files under " + dir.string());
    return set;
}

}  // namespace josh

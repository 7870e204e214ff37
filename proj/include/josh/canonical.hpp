#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <string>
#include <string_view>

#include <json.hpp>

namespace josh {

using json = nlohmann::json;

/// Argument name -> canonical string value. Ordered so that serialization and
/// subset checks are deterministic.
using ArgMap = std::map<std::string, std::string>;

inline std::string trim(std::string_view s) {
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    auto first = std::find_if_not(s.begin(), s.end(), is_space);
    auto last = std::find_if_not(s.rbegin(), s.rend(), is_space).base();
    return first < last ? std::string(first, last) : std::string{};
}

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

/// Lowercase + trim. Every slot value crossing the environment boundary goes
/// through here so that subset checks use one equality convention.
inline std::string canonical_value(std::string_view s) { return to_lower(trim(s)); }

inline ArgMap canonicalize(const ArgMap& args) {
    ArgMap out;
    for (const auto& [k, v] : args) out.emplace(trim(k), canonical_value(v));
    return out;
}

/// Key-value subset: every (k, v) of `small` is present in `big` with an equal value.
inline bool is_subset(const ArgMap& small, const ArgMap& big) {
    return std::all_of(small.begin(), small.end(), [&](const auto& kv) {
        auto it = big.find(kv.first);
        return it != big.end() && it->second == kv.second;
    });
}

/// Converts a JSON scalar to its canonical string form. Returns false for
/// objects and arrays.
inline bool scalar_to_canonical(const json& v, std::string& out) {
    if (v.is_string()) {
        out = canonical_value(v.get<std::string>());
    } else if (v.is_number_integer() || v.is_number_unsigned()) {
        out = v.dump();
    } else if (v.is_number_float()) {
        double d = v.get<double>();
        if (d == static_cast<double>(static_cast<long long>(d)))
            out = std::to_string(static_cast<long long>(d));
        else
            out = v.dump();
    } else if (v.is_boolean()) {
        out = v.get<bool>() ? "true" : "false";
    } else {
        return false;
    }
    return true;
}

inline json to_json(const ArgMap& args) {
    json j = json::object();
    for (const auto& [k, v] : args) j[k] = v;
    return j;
}

}  // namespace josh

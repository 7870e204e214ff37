#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "josh/io.hpp"
#include "josh/scenario.hpp"

// Conversion of a MultiWOZ-style corpus into scenario records.
//
// Source layout:
//   data.json          {dialogue_id: {"goal": {...}, "log": [...]}}
//   valListFile.txt    one dialogue id per line
//   testListFile.txt   one dialogue id per line
//   <domain>_db.json   restaurant, hotel, train, attraction tables
namespace josh {

class ConversionError : public std::runtime_error {
public:
    ConversionError(const std::string& what, std::vector<std::string> unmapped = {})
        : std::runtime_error(what), unmapped_(std::move(unmapped)) {}
    [[nodiscard]] const std::vector<std::string>& unmapped() const { return unmapped_; }

private:
    std::vector<std::string> unmapped_;
};

namespace detail {

inline const std::set<std::string>& ignored_goal_keys() {
    static const std::set<std::string> keys{"reqt", "invalid", "pre_invalid", "message", "topic", "fail_book"};
    return keys;
}

inline std::optional<std::string> map_slot(const ApiSpec& spec, const std::string& slot) {
    static const std::map<std::string, std::string> aliases{
        {"leaveat", "leaveAt"}, {"arriveby", "arriveBy"}, {"trainid", "trainID"},
        {"price", "pricerange"}, {"price range", "pricerange"}, {"leave", "leaveAt"}, {"arrive", "arriveBy"}};
    const std::string lower = to_lower(trim(slot));
    for (const auto& p : spec.parameters)
        if (to_lower(p.name) == lower) return p.name;
    if (auto it = aliases.find(lower); it != aliases.end() && spec.has_parameter(it->second)) return it->second;
    return std::nullopt;
}

inline ArgMap map_slots(const json& slots, const ApiSpec& spec, const std::string& where,
                        std::vector<std::string>& unmapped) {
    ArgMap out;
    if (!slots.is_object()) {
        unmapped.push_back(where);
        return out;
    }
    for (auto it = slots.begin(); it != slots.end(); ++it) {
        if (ignored_goal_keys().count(it.key())) continue;
        std::string v;
        if (!scalar_to_canonical(it.value(), v)) continue;
        if (auto name = map_slot(spec, it.key())) out[*name] = v;
        else unmapped.push_back(where + "." + it.key());
    }
    return out;
}

}  // namespace detail

/// Entity booked for a domain in the source dialogue (as recorded in turn
/// metadata): carries the unique id and the booking's return values.
using BookedEntities = std::map<std::string, json>;

/// Maps a source goal dictionary {domain: {info|find|search, book, fail_info}}
/// to per-domain goals. Unknown domains, intents or slots are reported
/// together.
inline GoalDictionary convert_goals(const json& goal_dict, const BookedEntities& booked = {},
                                    const ApiRegistry& registry = ApiRegistry::standard()) {
    if (!goal_dict.is_object()) throw ConversionError("goal: expected an object");
    GoalDictionary out;
    std::vector<std::string> unmapped;
    for (auto dit = goal_dict.begin(); dit != goal_dict.end(); ++dit) {
        const std::string& domain = dit.key();
        const json& intents = dit.value();
        if (detail::ignored_goal_keys().count(domain)) continue;
        if (!intents.is_object() || intents.empty()) continue;
        const ApiSpec* search = registry.find(domain, Intent::Search);
        if (!search) {
            unmapped.push_back(domain);
            continue;
        }
        const ApiSpec* book = registry.find(domain, Intent::Book);
        DomainGoals d;
        d.domain = domain;
        for (auto iit = intents.begin(); iit != intents.end(); ++iit) {
            const std::string& intent = iit.key();
            const std::string where = domain + "." + intent;
            if (detail::ignored_goal_keys().count(intent)) continue;
            if (intent == "info" || intent == "find" || intent == "search") {
                auto slots = detail::map_slots(iit.value(), *search, where, unmapped);
                if (!slots.empty()) d.search = std::move(slots);
            } else if (intent == "fail_info") {
                auto slots = detail::map_slots(iit.value(), *search, where, unmapped);
                if (!slots.empty()) d.fail_searches.push_back(std::move(slots));
            } else if (intent == "book") {
                if (!book) throw ConversionError(where + ": domain " + domain + " has no booking intent");
                auto params = detail::map_slots(iit.value(), *book, where, unmapped);
                const std::string id_field = unique_id_field(domain);
                BookGoal bg;
                json ret = json::object();
                if (auto b = booked.find(domain); b != booked.end() && b->second.is_object()) {
                    for (auto f = b->second.begin(); f != b->second.end(); ++f) {
                        if (to_lower(f.key()) == to_lower(id_field)) {
                            std::string v;
                            if (scalar_to_canonical(f.value(), v)) bg.unique_id = v;
                        } else {
                            ret[f.key()] = f.value();
                        }
                    }
                }
                if (bg.unique_id.empty() && d.search && d.search->count(id_field))
                    bg.unique_id = d.search->at(id_field);
                if (bg.unique_id.empty())
                    throw ConversionError(where + ": no booked entity recorded for the book goal");
                params.erase(id_field);
                bg.parameters = std::move(params);
                bg.return_values = std::move(ret);
                d.book = std::move(bg);
            } else {
                unmapped.push_back(where);
            }
        }
        if (d.search || d.book) out.domains.push_back(std::move(d));
    }
    if (!unmapped.empty()) {
        std::string msg = "unmapped goal keys:";
        for (const auto& u : unmapped) msg += " " + u;
        throw ConversionError(msg, unmapped);
    }
    return out;
}

/// Last non-empty booked entry per domain from the dialogue log metadata.
inline BookedEntities booked_entities(const json& log) {
    BookedEntities out;
    if (!log.is_array()) return out;
    for (const auto& turn : log) {
        if (!turn.contains("metadata") || !turn.at("metadata").is_object()) continue;
        for (auto it = turn.at("metadata").begin(); it != turn.at("metadata").end(); ++it) {
            const json& dom = it.value();
            if (!dom.is_object() || !dom.contains("book")) continue;
            const json& b = dom.at("book");
            if (!b.is_object() || !b.contains("booked") || !b.at("booked").is_array()) continue;
            if (!b.at("booked").empty()) out[it.key()] = b.at("booked").back();
        }
    }
    return out;
}

inline std::string strip_markup(const std::string& s) {
    static const std::regex tags("<[^>]*>");
    return trim(std::regex_replace(s, tags, ""));
}

/// Full scenario record for one source dialogue.
inline json convert_dialogue(const std::string& id, const json& dialogue,
                             const ApiRegistry& registry = ApiRegistry::standard()) {
    const json& goal = dialogue.at("goal");
    const json log = dialogue.value("log", json::array());
    GoalDictionary goals = convert_goals(goal, booked_entities(log), registry);
    std::vector<std::string> user_goals;
    if (goal.contains("message")) {
        const json& m = goal.at("message");
        if (m.is_array())
            for (const auto& s : m)
                if (s.is_string()) user_goals.push_back(strip_markup(s.get<std::string>()));
        if (m.is_string()) user_goals.push_back(strip_markup(m.get<std::string>()));
    }
    std::vector<std::string> transcript;
    for (std::size_t i = 0; i < log.size(); ++i)
        transcript.push_back(std::string(i % 2 == 0 ? "CUSTOMER: " : "AGENT: ") + log[i].value("text", ""));
    std::string scenario_id = id;
    if (scenario_id.size() > 5 && scenario_id.ends_with(".json")) scenario_id.resize(scenario_id.size() - 5);
    return json{{"scenario_id", scenario_id},
                {"goals", goals_to_json(goals)},
                {"user_goals", user_goals},
                {"transcript", transcript}};
}

enum class Split { Train, Val, Test, OfficialTest };

inline std::string_view to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
        case Split::OfficialTest: return "official_test";
    }
    return "train";
}

inline Split split_from_string(std::string_view s) {
    if (s == "train") return Split::Train;
    if (s == "val") return Split::Val;
    if (s == "test") return Split::Test;
    if (s == "official_test") return Split::OfficialTest;
    throw std::invalid_argument("unknown split: " + std::string(s));
}

struct SplitManifest {
    Split split = Split::Train;
    std::vector<std::string> scenario_ids;
};

struct ExpectedCounts {
    std::size_t train = 6251;
    std::size_t val = 793;
    std::size_t test = 805;
    std::size_t official_test = 450;
};

struct SplitResult {
    std::vector<SplitManifest> manifests;  // train, val, test, official_test
    std::vector<std::string> warnings;

    [[nodiscard]] const SplitManifest& get(Split s) const { return manifests.at(static_cast<std::size_t>(s)); }
};

inline constexpr std::size_t kOfficialTestSize = 450;

/// Val and test follow their list files (ids without a converted scenario are
/// skipped); train is every other converted scenario in corpus order.
/// Official test is the first 450 test scenarios.
inline SplitResult build_splits(const std::vector<std::string>& converted_ids, const std::vector<std::string>& val_list,
                                const std::vector<std::string>& test_list,
                                std::optional<ExpectedCounts> expected = std::nullopt) {
    const std::set<std::string> have(converted_ids.begin(), converted_ids.end());
    std::set<std::string> taken;
    auto from_list = [&](const std::vector<std::string>& list) {
        std::vector<std::string> out;
        for (const auto& id : list)
            if (have.count(id) && taken.insert(id).second) out.push_back(id);
        return out;
    };
    SplitResult r;
    r.manifests.resize(4);
    r.manifests[1] = {Split::Val, from_list(val_list)};
    r.manifests[2] = {Split::Test, from_list(test_list)};
    r.manifests[0].split = Split::Train;
    for (const auto& id : converted_ids)
        if (!taken.count(id)) r.manifests[0].scenario_ids.push_back(id);
    const auto& test = r.manifests[2].scenario_ids;
    r.manifests[3] = {Split::OfficialTest,
                      {test.begin(), test.begin() + static_cast<std::ptrdiff_t>(std::min(kOfficialTestSize, test.size()))}};
    if (expected) {
        const std::size_t want[] = {expected->train, expected->val, expected->test, expected->official_test};
        for (std::size_t i = 0; i < 4; ++i) {
            const auto got = r.manifests[i].scenario_ids.size();
            if (got != want[i])
                r.warnings.push_back(std::string(to_string(r.manifests[i].split)) + ": expected " +
                                     std::to_string(want[i]) + ", got " + std::to_string(got) + " (" +
                                     (got > want[i] ? "+" : "-") +
                                     std::to_string(got > want[i] ? got - want[i] : want[i] - got) + ")");
        }
    }
    return r;
}

inline std::vector<std::string> read_id_list(const std::filesystem::path& path) {
    std::vector<std::string> out;
    if (!std::filesystem::exists(path)) return out;
    std::istringstream in(read_file(path));
    std::string line;
    while (std::getline(in, line)) {
        auto id = trim(line);
        if (id.empty()) continue;
        if (id.size() > 5 && id.ends_with(".json")) id.resize(id.size() - 5);
        out.push_back(id);
    }
    return out;
}

struct IngestReport {
    std::size_t source_dialogues = 0;
    std::vector<std::pair<std::string, std::string>> skipped;  // (id, reason)
    std::vector<json> scenarios;
    SplitResult splits;
};

/// Converts a whole corpus. Dialogues that cannot be converted or loaded
/// (unsupported domains, contradictory fail queries) are skipped with a reason.
inline IngestReport ingest_corpus(const std::filesystem::path& source_dir,
                                  std::optional<ExpectedCounts> expected = std::nullopt,
                                  const ApiRegistry& registry = ApiRegistry::standard()) {
    if (!std::filesystem::is_directory(source_dir))
        throw IoError("source directory not found: " + source_dir.string());
    const auto data_path = source_dir / "data.json";
    json data;
    try {
        data = json::parse(read_file(data_path));
    } catch (const json::parse_error& e) {
        throw LoadError(data_path.string() + ": " + e.what());
    }
    if (!data.is_object()) throw LoadError(data_path.string() + ": expected an object of dialogues");
    const DatabaseSet dbs = load_databases(source_dir);

    IngestReport rep;
    std::vector<std::string> ids;
    // Corpus order: nlohmann objects iterate by key, which is also how the
    // source list files are usually sorted.
    for (auto it = data.begin(); it != data.end(); ++it) {
        ++rep.source_dialogues;
        try {
            json rec = convert_dialogue(it.key(), it.value(), registry);
            load_scenario(rec, registry, dbs);
            ids.push_back(rec.at("scenario_id").get<std::string>());
            rep.scenarios.push_back(std::move(rec));
        } catch (const std::exception& e) {
            rep.skipped.emplace_back(it.key(), e.what());
        }
    }
    rep.splits = build_splits(ids, read_id_list(source_dir / "valListFile.txt"),
                              read_id_list(source_dir / "testListFile.txt"), expected);
    return rep;
}

/// Writes scenarios.jsonl, one manifest per split and the canonical databases.
inline void write_ingest(const std::filesystem::path& out_dir, const IngestReport& rep,
                         const std::filesystem::path& source_dir) {
    std::string lines;
    for (const auto& s : rep.scenarios) lines += s.dump() + "\n";
    write_file_atomic(out_dir / "scenarios.jsonl", lines);
    for (const auto& m : rep.splits.manifests) {
        std::string text;
        for (const auto& id : m.scenario_ids) text += id + "\n";
        write_file_atomic(out_dir / "splits" / (std::string(to_string(m.split)) + ".txt"), text);
    }
    for (const auto& [domain, db] : load_databases(source_dir))
        write_file_atomic(out_dir / (domain + "_db.json"), to_json(db).dump(1) + "\n");
}

}  // namespace josh

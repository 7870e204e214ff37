#include <chrono>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace josh;
using josh::test::fixture_databases;

namespace {

const DomainDatabase& train_db() { return fixture_databases().at("train"); }

Row train_row(const std::string& id) { return *train_db().find_unique(id); }

GoalDictionary train_goals(ArgMap search, std::optional<std::string> book_id) {
    DomainGoals d;
    d.domain = "train";
    d.search = std::move(search);
    if (book_id) d.book = BookGoal{{{"people", "1"}}, *book_id, json{{"reference", "TRN0001"}}};
    return GoalDictionary{{d}};
}

ScenarioEnv fixture_env(GoalDictionary goals = {}) {
    ScenarioEnv env;
    env.scenario_id = "synthetic";
    env.goals = std::move(goals);
    env.goal_set = goal_calls(env.goals);
    for (const auto& [domain, db] : fixture_databases())
        env.databases[domain] = std::make_shared<const DomainDatabase>(db);
    return env;
}

}  // namespace

// ---------------------------------------------------------------------------
// Canonical values and registry

TEST(Canonical, LowercasesAndTrims) {
    EXPECT_EQ(canonical_value("  Curry Garden \t"), "curry garden");
    EXPECT_EQ(canonicalize({{" area ", " North"}}), (ArgMap{{"area", "north"}}));
    std::string v;
    ASSERT_TRUE(scalar_to_canonical(json(4), v));
    EXPECT_EQ(v, "4");
    ASSERT_TRUE(scalar_to_canonical(json(2.0), v));
    EXPECT_EQ(v, "2");
    EXPECT_FALSE(scalar_to_canonical(json::array(), v));
}

TEST(Canonical, SubsetIsKeyValueContainment) {
    EXPECT_TRUE(is_subset({}, {{"a", "1"}}));
    EXPECT_TRUE(is_subset({{"a", "1"}}, {{"a", "1"}, {"b", "2"}}));
    EXPECT_FALSE(is_subset({{"a", "1"}}, {{"a", "2"}}));
    EXPECT_FALSE(is_subset({{"c", "1"}}, {{"a", "1"}}));
}

TEST(Registry, StandardHasSevenApis) {
    const auto& reg = ApiRegistry::standard();
    std::set<std::string> names;
    for (const auto& s : reg.specs()) names.insert(s.name);
    EXPECT_EQ(names, (std::set<std::string>{"search_restaurant", "book_restaurant", "search_hotel", "book_hotel",
                                            "search_train", "book_train", "search_attraction"}));
    EXPECT_EQ(reg.find("attraction", Intent::Book), nullptr);
    EXPECT_TRUE(reg.find("search_train")->has_parameter("leaveAt"));
    EXPECT_TRUE(reg.find("book_train")->has_parameter("trainID"));
}

TEST(Registry, DataFileMatchesEmbeddedSchemas) {
    auto from_file = ApiRegistry::from_file(JOSH_DATA_DIR "/toolwoz_apis.json");
    EXPECT_EQ(from_file.tools_json(), ApiRegistry::standard().tools_json());
}

TEST(Registry, RejectsBadNames) {
    json tools = json::array({json{{"type", "function"},
                                   {"function", {{"name", "reserve_table"}, {"parameters", {{"properties", json::object()}}}}}}});
    EXPECT_THROW(ApiRegistry::from_json(tools), RegistryError);
}

// ---------------------------------------------------------------------------
// Database

TEST(Database, QueryUsesTimeWindowsAndIgnoresDontcare) {
    const auto& db = train_db();
    EXPECT_EQ(db.query({}).size(), 4u);
    EXPECT_EQ(db.query({{"day", "monday"}}), (std::vector<Row>{train_row("tr1000"), train_row("tr3000")}));
    EXPECT_EQ(db.query({{"leaveAt", "08:00"}}), (std::vector<Row>{train_row("tr2000"), train_row("tr4000")}));
    EXPECT_EQ(db.query({{"arriveBy", "07:51"}}), (std::vector<Row>{train_row("tr1000"), train_row("tr3000")}));
    EXPECT_EQ(db.query({{"day", "dontcare"}, {"departure", "ely"}}), (std::vector<Row>{train_row("tr4000")}));
    EXPECT_TRUE(db.query({{"people", "2"}}).empty());
}

TEST(Database, ValuesAreCanonical) {
    for (const auto& [domain, db] : fixture_databases())
        for (const auto& row : db.rows)
            for (const auto& [k, v] : row) EXPECT_EQ(v, canonical_value(v)) << domain << "." << k;
    EXPECT_NE(train_db().find_unique("tr2000"), nullptr);
}

// ---------------------------------------------------------------------------
// Search and booking decision table. Rows of the 4-row train fixture:
//   T1 cambridge -> london kings cross, monday 05:00-05:51
//   T2 cambridge -> ely, tuesday 09:00-09:17
//   T3 london kings cross -> cambridge, monday 07:00-07:51
//   T4 ely -> cambridge, wednesday 11:00-11:17

namespace {

struct SearchCase {
    const char* label;
    ArgMap goal;
    std::optional<std::string> book;
    ArgMap args;
    std::vector<std::string> expected;  // trainIDs
    bool domain_in_goals = true;
};

std::vector<std::string> ids(const std::vector<Row>& rows) {
    std::vector<std::string> out;
    for (const auto& r : rows) out.push_back(r.at("trainID"));
    return out;
}

}  // namespace

TEST(ServingTruthTable, SearchBranches) {
    const std::vector<SearchCase> cases = {
        // goal covered by the query, booking target present: correct answer
        {"covered/correct", {{"departure", "cambridge"}}, "tr2000", {{"departure", "cambridge"}}, {"tr2000"}},
        // covered, target absent, some row disagrees with the goal: last such row
        {"covered/wrong", {{"leaveAt", "08:00"}}, "tr3000", {{"leaveAt", "08:00"}}, {"tr4000"}},
        // covered, target absent, every row agrees with the goal: empty
        {"covered/empty", {{"day", "tuesday"}}, "tr3000", {{"day", "tuesday"}}, {}},
        // query under-specified: a wrong answer wins over the correct one
        {"under/wrong", {{"departure", "cambridge"}, {"day", "tuesday"}}, "tr2000", {{"departure", "cambridge"}}, {"tr1000"}},
        // under-specified but nothing wrong in the result: correct answer
        {"under/correct", {{"departure", "cambridge"}, {"destination", "ely"}}, "tr2000", {{"destination", "ely"}}, {"tr2000"}},
        // under-specified, no booking id: falls through to the first result
        {"under/fallthrough", {{"departure", "cambridge"}, {"day", "tuesday"}}, std::nullopt, {{"day", "tuesday"}}, {"tr2000"}},
        // under-specified, booking target not in the results: first result
        {"under/no-target", {{"departure", "cambridge"}, {"day", "tuesday"}}, "tr9999", {{"day", "tuesday"}}, {"tr2000"}},
        // covered without a booking id: literal fall-through to db_results[0]
        {"covered/no-book", {{"departure", "cambridge"}}, std::nullopt, {{"departure", "cambridge"}}, {"tr1000"}},
        // unrelated query: first result
        {"unrelated", {{"destination", "cambridge"}}, "tr3000", {{"day", "monday"}}, {"tr1000"}},
        // unrelated query without results: empty
        {"unrelated/empty", {{"destination", "cambridge"}}, "tr3000", {{"day", "friday"}}, {}},
        // no search goal: vacuously covered, correct answer
        {"empty-goal", {}, "tr4000", {{"destination", "cambridge"}}, {"tr4000"}},
        // domain absent from the goals: first result
        {"no-domain", {}, std::nullopt, {{"day", "monday"}}, {"tr1000"}, false},
    };
    const auto start = std::chrono::steady_clock::now();
    for (const auto& c : cases) {
        GoalDictionary goals = c.domain_in_goals ? train_goals(c.goal, c.book) : GoalDictionary{};
        EXPECT_EQ(ids(serve_search(c.args, "train", goals, train_db())), c.expected) << c.label;
    }
    EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 1.0);
}

TEST(ServingTruthTable, BookingBranches) {
    const auto goals = train_goals({{"departure", "cambridge"}}, "tr2000");
    auto ok = serve_booking({{"trainID", "tr2000"}, {"people", "1"}}, "train", goals);
    EXPECT_TRUE(ok.success);
    ASSERT_TRUE(ok.return_values);
    EXPECT_EQ(*ok.return_values, (json{{"reference", "TRN0001"}}));

    auto wrong = serve_booking({{"trainID", "tr1000"}}, "train", goals);
    EXPECT_FALSE(wrong.success);
    EXPECT_FALSE(wrong.return_values);

    EXPECT_FALSE(serve_booking({{"people", "1"}}, "train", goals).success);
    EXPECT_FALSE(serve_booking({{"trainID", "tr2000"}}, "train", train_goals({}, std::nullopt)).success);
    EXPECT_FALSE(serve_booking({{"trainID", "tr2000"}}, "train", GoalDictionary{}).success);
}

TEST(ServingInvariants, GoalConsistentQueriesReturnTheBookedRow) {
    // Every query made of goal slots plus fields of the booked row itself.
    const Row booked = train_row("tr2000");
    const ArgMap goal{{"departure", "cambridge"}};
    const auto goals = train_goals(goal, "tr2000");
    std::vector<std::string> extra;
    for (const auto& [k, v] : booked)
        if (!goal.count(k) && k != "price") extra.push_back(k);
    for (unsigned mask = 0; mask < (1u << extra.size()); ++mask) {
        ArgMap args = goal;
        for (std::size_t i = 0; i < extra.size(); ++i)
            if (mask & (1u << i)) args[extra[i]] = booked.at(extra[i]);
        auto rows = serve_search(args, "train", goals, train_db());
        if (!rows.empty()) {
            ASSERT_EQ(rows.size(), 1u);
            EXPECT_EQ(rows[0].at("trainID"), "tr2000");
        }
    }
}

TEST(ServingInvariants, BookingGateExhaustive) {
    const auto& db = fixture_databases().at("restaurant");
    for (const auto& goal_row : db.rows) {
        GoalDictionary goals{{DomainGoals{"restaurant", std::nullopt,
                                          BookGoal{{{"people", "2"}}, goal_row.at("name"), json::object()}, {}}}};
        for (const auto& call_row : db.rows)
            for (const char* people : {"1", "2"}) {
                auto r = serve_booking({{"name", call_row.at("name")}, {"people", people}}, "restaurant", goals);
                EXPECT_EQ(r.success, call_row.at("name") == goal_row.at("name"));
            }
    }
}

TEST(ServingInvariants, CleaningRemovesFailQueriesAndIsIdempotent) {
    for (const auto& env : josh::test::fixture_scenarios())
        for (const auto& d : env.goals.domains) {
            const auto& cleaned = env.database(d.domain);
            for (const auto& fail : d.fail_searches) EXPECT_TRUE(cleaned.query(fail).empty()) << env.scenario_id;
            EXPECT_EQ(clean_database(cleaned, env.goals), cleaned);
        }
    auto env = josh::test::fixture_scenario("fx-fail");
    EXPECT_EQ(env.database("restaurant").rows.size(), 3u);
    EXPECT_EQ(fixture_databases().at("restaurant").rows.size(), 4u);
}

TEST(ServingInvariants, CleaningThatDropsTheTargetIsRejected) {
    GoalDictionary goals{{DomainGoals{"restaurant", ArgMap{{"food", "indian"}},
                                      BookGoal{{}, "curry garden", json::object()}, {ArgMap{{"area", "centre"}}}}}};
    EXPECT_THROW(clean_database(fixture_databases().at("restaurant"), goals), ScenarioInconsistency);
}

// ---------------------------------------------------------------------------
// Goal matching

namespace {

// Independent restatement of the completion rule: argument containment, or
// both argument sets picking out the same single row of the domain table.
std::vector<std::size_t> oracle_rows(const DomainDatabase& db, const ArgMap& args) {
    std::vector<std::size_t> hits;
    for (std::size_t i = 0; i < db.rows.size(); ++i) {
        bool keep = true;
        for (const auto& [k, v] : args) {
            if (v == "dontcare" || v == "don't care" || v == "any") continue;
            const auto cell = db.rows[i].find(k);
            if (cell == db.rows[i].end()) {
                keep = false;
            } else if (k == "leaveAt") {
                keep = cell->second.compare(v) >= 0;
            } else if (k == "arriveBy") {
                keep = cell->second.compare(v) <= 0;
            } else {
                keep = cell->second == v;
            }
            if (!keep) break;
        }
        if (keep) hits.push_back(i);
    }
    return hits;
}

bool oracle_match(const GoalApiCall& g, const ApiInvocation& f, const DatabaseSet& dbs) {
    if (g.api_name != f.api_name) return false;
    std::size_t contained = 0;
    for (const auto& [k, v] : g.arguments) {
        auto it = f.arguments.find(k);
        if (it != f.arguments.end() && it->second == v) ++contained;
    }
    if (contained == g.arguments.size()) return true;
    const auto& db = dbs.at(g.api_name.substr(g.api_name.find('_') + 1));
    auto a = oracle_rows(db, g.arguments);
    auto b = oracle_rows(db, f.arguments);
    return a.size() == 1 && b.size() == 1 && a[0] == b[0];
}

ArgMap random_args(const ApiSpec& spec, const DomainDatabase& db, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Row& anchor = db.rows[rng() % db.rows.size()];
    ArgMap out;
    for (const auto& p : spec.parameters) {
        if (unit(rng) < 0.5) continue;
        const double r = unit(rng);
        if (r < 0.6 && anchor.count(p.name)) {
            out[p.name] = anchor.at(p.name);
        } else if (r < 0.8) {
            const Row& other = db.rows[rng() % db.rows.size()];
            out[p.name] = other.count(p.name) ? other.at(p.name) : "2";
        } else if (r < 0.9) {
            out[p.name] = "dontcare";
        } else {
            static const char* kNoise[] = {"08:00", "zzz", "3", "monday"};
            out[p.name] = kNoise[rng() % 4];
        }
    }
    return out;
}

}  // namespace

TEST(GoalMatchingOracle, RandomPairsAgreeWithBruteForce) {
    const auto env = fixture_env();
    const auto& specs = ApiRegistry::standard().specs();
    std::mt19937_64 rng(20240611);
    std::size_t disagreements = 0, positives = 0, row_matches = 0;
    for (int i = 0; i < 1000; ++i) {
        const ApiSpec& gs = specs[rng() % specs.size()];
        const ApiSpec& fs = (rng() % 5 == 0) ? specs[rng() % specs.size()] : gs;
        const auto& gdb = fixture_databases().at(gs.domain);
        const auto& fdb = fixture_databases().at(fs.domain);
        GoalApiCall g{gs.name, random_args(gs, gdb, rng), std::nullopt, json::object()};
        ApiInvocation f{fs.name, random_args(fs, fdb, rng)};
        const bool got = match_goal(g, f, env);
        const bool want = oracle_match(g, f, fixture_databases());
        if (got != want) ++disagreements;
        positives += want;
        row_matches += want && !is_subset(g.arguments, f.arguments);
    }
    EXPECT_EQ(disagreements, 0u);
    // The generator must exercise both clauses.
    EXPECT_GT(positives, 100u);
    EXPECT_GT(row_matches, 20u);
}

TEST(GoalMatchingOracle, SubsetSoundness) {
    const auto env = fixture_env();
    std::mt19937_64 rng(7);
    for (int i = 0; i < 300; ++i) {
        const ApiSpec& s = ApiRegistry::standard().specs()[rng() % 7];
        ArgMap g = random_args(s, fixture_databases().at(s.domain), rng);
        ArgMap f = g;
        f["extra"] = "x";
        EXPECT_TRUE(match_goal({s.name, g, std::nullopt, json::object()}, {s.name, f}, env));
    }
}

TEST(GoalMatchingOracle, SingleRowClause) {
    const auto env = fixture_env();
    GoalApiCall g{"search_restaurant", {{"food", "indian"}, {"pricerange", "expensive"}}, std::nullopt, json::object()};
    EXPECT_TRUE(match_goal(g, {"search_restaurant", {{"name", "curry garden"}}}, env));
    EXPECT_FALSE(match_goal(g, {"search_restaurant", {{"food", "indian"}}}, env));
    EXPECT_FALSE(match_goal(g, {"search_hotel", {{"name", "curry garden"}}}, env));
}

// ---------------------------------------------------------------------------
// Scenario loading

TEST(ScenarioLoad, FixtureScenarios) {
    auto envs = josh::test::fixture_scenarios();
    ASSERT_EQ(envs.size(), 5u);
    EXPECT_EQ(envs[0].scenario_id, "fx-restaurant");
    ASSERT_EQ(envs[0].goal_set.size(), 2u);
    EXPECT_EQ(envs[0].goal_set[0].api_name, "search_restaurant");
    EXPECT_EQ(envs[0].goal_set[1].api_name, "book_restaurant");
    EXPECT_EQ(envs[0].goal_set[1].arguments.at("name"), "curry garden");
    EXPECT_EQ(envs[1].goal_set.size(), 4u);
    EXPECT_EQ(envs[1].goal_set[3].arguments.at("trainID"), "tr2000");
    EXPECT_EQ(envs[2].goal_set.size(), 1u);
    ASSERT_TRUE(envs[0].source_transcript);
}

TEST(ScenarioLoad, ErrorsNameTheField) {
    const auto& reg = ApiRegistry::standard();
    auto expect_error = [&](const json& rec, const std::string& field) {
        try {
            load_scenario(rec, reg, fixture_databases());
            ADD_FAILURE() << "expected a load error for " << field;
        } catch (const LoadError& e) {
            EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
        }
    };
    expect_error(json{{"goals", json::array()}}, "scenario_id");
    expect_error(json{{"scenario_id", "x"}}, "goals");
    expect_error(json{{"scenario_id", "x"},
                      {"goals", {{{"domain", "attraction"}, {"book", {{"unique_id", "kettle's yard"}}}}}}},
                 "goals[0].book");
    expect_error(json{{"scenario_id", "x"}, {"goals", {{{"domain", "taxi"}, {"search", {{"area", "north"}}}}}}},
                 "goals[0].domain");
    expect_error(json{{"scenario_id", "x"}, {"goals", {{{"domain", "hotel"}, {"search", {{"colour", "red"}}}}}}},
                 "goals[0].search");
    expect_error(json{{"scenario_id", "x"}, {"goals", json::array({json{{"domain", "hotel"}}})}}, "goals");
    expect_error(json{{"scenario_id", "x"},
                      {"goals", {{{"domain", "hotel"}, {"search", {{"area", "north"}}}}}},
                      {"user_goals", "not a list"}},
                 "user_goals");
}

TEST(ScenarioLoad, InlineDatabasesAndRoundTrip) {
    json rec{{"scenario_id", "inline"},
             {"goals", {{{"domain", "attraction"}, {"search", {{"area", "West "}}}}}},
             {"user_goals", {"see something"}},
             {"databases", {{"attraction", {{{"name", "Kettle's Yard"}, {"area", "WEST"}, {"location", {1, 2}}}}}}}};
    auto env = load_scenario(rec, ApiRegistry::standard());
    EXPECT_EQ(env.goal_set[0].arguments.at("area"), "west");
    EXPECT_EQ(env.database("attraction").rows[0].at("name"), "kettle's yard");
    EXPECT_FALSE(env.database("attraction").rows[0].count("location"));
    auto again = load_scenario(scenario_to_json(env, true), ApiRegistry::standard());
    EXPECT_EQ(again.goals, env.goals);
    EXPECT_EQ(*again.databases.at("attraction"), *env.databases.at("attraction"));
}

// ---------------------------------------------------------------------------
// Invocation validation

TEST(Validation, Trichotomy) {
    const auto& reg = ApiRegistry::standard();
    struct Case {
        RawToolCall raw;
        int kind;  // 0 valid, 1 BadApiUse, 2 IncorrectApiFormat
    };
    const std::vector<Case> cases = {
        {{"search_hotel", R"({"area": "North"})"}, 0},
        {{"book_train", R"({"trainID": "TR2000", "people": 2})"}, 0},
        {{"search_hotel", ""}, 0},
        {{"search_flight", R"({"area": "north"})"}, 1},
        {{"search_hotel", R"({"colour": "red"})"}, 1},
        {{"search_hotel", R"({"area": "north")"}, 2},
        {{"search_hotel", R"(["area"])"}, 2},
        {{"search_hotel", R"({"area": ["north"]})"}, 2},
        {{"", R"({"area": "north"})"}, 2},
        {{"search_flight", R"({"area": )"}, 2},
    };
    for (const auto& c : cases) {
        auto v = validate_invocation(c.raw, reg);
        int kind = std::holds_alternative<ApiInvocation>(v) ? 0
                   : std::get<EnvError>(v).category == EnvErrorCategory::BadApiUse ? 1
                                                                                   : 2;
        EXPECT_EQ(kind, c.kind) << c.raw.name << " " << c.raw.arguments;
    }
    auto v = validate_invocation({"book_train", R"({"trainID": " TR2000 ", "people": 2})"}, reg);
    EXPECT_EQ(std::get<ApiInvocation>(v), (ApiInvocation{"book_train", {{"people", "2"}, {"trainID", "tr2000"}}}));
}

TEST(Validation, ReactParsing) {
    auto a = parse_react("THOUGHT: look it up\nACTION: search_hotel\nACTION-INPUT: {\"area\": \"north\"} trailing");
    ASSERT_TRUE(std::holds_alternative<ReactAction>(a));
    EXPECT_EQ(std::get<ReactAction>(a).call.name, "search_hotel");
    EXPECT_EQ(std::get<ReactAction>(a).call.arguments, "{\"area\": \"north\"}");
    EXPECT_EQ(std::get<ReactAction>(a).thought, "look it up");

    auto r = parse_react("thought: fine\nresponse: Booked.\nSee you.");
    ASSERT_TRUE(std::holds_alternative<ReactResponse>(r));
    EXPECT_EQ(std::get<ReactResponse>(r).text, "Booked.\nSee you.");

    auto plain = parse_react("Hello there");
    EXPECT_EQ(std::get<ReactResponse>(plain).text, "Hello there");

    auto unclosed = parse_react("ACTION: search_hotel\nACTION-INPUT: {\"area\": \"north\"");
    ASSERT_TRUE(std::holds_alternative<EnvError>(unclosed));
    EXPECT_EQ(std::get<EnvError>(unclosed).category, EnvErrorCategory::IncorrectApiFormat);
    EXPECT_TRUE(std::holds_alternative<EnvError>(parse_react("ACTION: search_hotel")));
    EXPECT_TRUE(std::holds_alternative<EnvError>(parse_react("ACTION-INPUT: {}")));

    auto nested = parse_react("ACTION_INPUT: {\"name\": \"a}b\"}\nACTION: search_hotel");
    ASSERT_TRUE(std::holds_alternative<ReactAction>(nested));
    EXPECT_EQ(std::get<ReactAction>(nested).call.arguments, "{\"name\": \"a}b\"}");
}

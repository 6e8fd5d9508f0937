#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "planql/agent.hpp"
#include "planql/csv.hpp"
#include "planql/eval.hpp"

using namespace planql;
using nlohmann::json;

static std::string fixture(const std::string& rel) {
    return std::string(PLANQL_FIXTURES) + "/" + rel;
}

static std::map<std::string, TablePtr> car_tables() {
    std::map<std::string, TablePtr> t;
    for (const char* name : {"continents", "countries", "car_makers"})
        t[name] = load_csv(fixture(std::string("cars/") + name + ".csv"));
    return t;
}

static AgentConfig test_config(int budget = 15) {
    AgentConfig cfg;
    cfg.budget = budget;
    cfg.prompts_dir = std::string(PLANQL_REPO_ROOT) + "/prompts";
    return cfg;
}

TEST_CASE("parse_action: tool call, final answer, first-of-two, failures") {
    auto a = parse_action(R"(Let me join. {"tool":"join","args":{"kind":"inner"},"children":[1,2]} done)");
    REQUIRE(std::holds_alternative<ToolCall>(a));
    auto call = std::get<ToolCall>(a);
    CHECK(call.tool == "join");
    CHECK(call.children == std::vector<int>{1, 2});
    CHECK(call.args.at("kind") == "inner");

    auto f = parse_action(R"({"final_answer": {"node": 7}})");
    REQUIRE(std::holds_alternative<FinalAnswer>(f));
    CHECK(std::get<FinalAnswer>(f).node_id == 7);

    auto lit = parse_action(R"({"final_answer": {"text": "forty-two"}})");
    CHECK(std::get<FinalAnswer>(lit).text == "forty-two");

    // two action blocks: the first wins; the second is ignored
    auto two = parse_action(
        R"({"tool":"distinct","args":{},"children":[0]} and also {"final_answer":{"node":3}})");
    CHECK(std::holds_alternative<ToolCall>(two));
    CHECK(std::get<ToolCall>(two).tool == "distinct");

    // leading non-action JSON is skipped in favor of a later real action
    auto skip = parse_action(R"(data: {"rows": 5}. {"final_answer": {"node": 1}})");
    CHECK(std::holds_alternative<FinalAnswer>(skip));

    try {
        parse_action("no json here at all");
        FAIL("expected no-action-found");
    } catch (const Error& e) {
        CHECK(e.kind() == "no-action-found");
    }
    try {
        parse_action(R"({"tool": "join", "children": "oops"})");
        FAIL("expected malformed-args");
    } catch (const Error& e) {
        CHECK(e.kind() == "malformed-args");
        CHECK(std::string(e.what()).find("oops") != std::string::npos);
    }
}

TEST_CASE("tool catalog covers every registered operator exactly once") {
    const auto& catalog = default_catalog();
    const auto& tools = tool_catalog();
    CHECK(tools.size() == catalog.size());
    std::set<std::string> names;
    for (const auto& t : tools) {
        CHECK(names.insert(t.name).second);
        REQUIRE(catalog.count(t.name) == 1);
        CHECK(catalog.at(t.name).arity == t.arity);
    }
}

TEST_CASE("render_observation: single leaf registry has no plan section") {
    PlanRegistry reg;
    int leaf = reg.add_leaf(car_tables().at("countries"));
    ObservationCaps caps;
    auto text = render_observation(leaf, reg, caps);
    CHECK(text.find("countries") != std::string::npos);
    CHECK(text.find("plan so far") == std::string::npos);
}

TEST_CASE("render_observation: 50-node registry truncates at the cap, newest kept") {
    PlanRegistry reg;
    int leaf = reg.add_leaf(load_csv_text("x\n1\n2", "seed"));
    int last = leaf;
    for (int i = 0; i < 49; ++i)
        last = reg.apply_op("distinct", json::object(), {last}).node_id;

    ObservationCaps caps;
    caps.observation_bytes = 1200;
    auto text = render_observation(last, reg, caps);
    CHECK(text.size() <= caps.observation_bytes + 64);
    CHECK(text.find("older nodes omitted") != std::string::npos);
    CHECK(text.find("node 48") != std::string::npos); // newest survives
}

TEST_CASE("run_agent: figure-1 scripted trace answers with the golden table") {
    std::ifstream in(fixture("traces/figure1.json"));
    REQUIRE(in);
    ScriptedChat llm(json::parse(in).get<std::vector<std::string>>());

    auto result = run_agent("Which countries in Europe have at least 3 car manufacturers?",
                            car_tables(), test_config(), {llm});
    REQUIRE(result.status == RunStatus::Answered);
    REQUIRE(result.answer_table);

    CsvOptions truth_opt;
    truth_opt.backslash_n_null = true;
    auto truth = load_csv(fixture("truth/figure1.csv"), truth_opt, "truth");
    CHECK(exact_match(*result.answer_table, *truth, false));

    // transcript bookkeeping
    CHECK(result.state.iteration == 6);
    CHECK(result.state.transcript.size() == 6);
    CHECK(result.state.registry.root_id() == 7);
}

TEST_CASE("run_agent: transcript is byte-identical across runs and matches the golden file") {
    auto run_once = [&] {
        std::ifstream in(fixture("traces/figure1.json"));
        ScriptedChat llm(json::parse(in).get<std::vector<std::string>>());
        auto r = run_agent("Which countries in Europe have at least 3 car manufacturers?",
                           car_tables(), test_config(), {llm});
        return transcript_to_jsonl(r.state);
    };
    auto a = run_once();
    CHECK(a == run_once());

    std::ifstream golden(fixture("golden/figure1_transcript.jsonl"), std::ios::binary);
    REQUIRE(golden);
    std::string want((std::istreambuf_iterator<char>(golden)),
                     std::istreambuf_iterator<char>());
    CHECK(a == want);

    // step-2 observation mentions the joined table's key columns
    std::istringstream lines(a);
    std::string line;
    std::getline(lines, line);
    std::getline(lines, line);
    auto rec = json::parse(line);
    CHECK(rec.at("step") == 2);
    std::string obs = rec.at("observation").get<std::string>();
    CHECK(obs.find("Continent") != std::string::npos);
    CHECK(obs.find("ContId") != std::string::npos);
}

TEST_CASE("run_agent: no-op trace exhausts the budget as unanswered") {
    std::ifstream in(fixture("traces/noop15.json"));
    ScriptedChat llm(json::parse(in).get<std::vector<std::string>>());
    auto result = run_agent("anything", car_tables(), test_config(3), {llm});
    CHECK(result.status == RunStatus::Unanswered);
    CHECK(result.state.iteration == 3);
    CHECK(result.state.transcript.size() == 3);
    for (const auto& rec : result.state.transcript) CHECK(rec.error == "no-action-found");
}

TEST_CASE("run_agent: trace exhaustion before an answer is unanswered, not an error") {
    ScriptedChat llm({"Thinking only, no action."});
    auto result = run_agent("anything", car_tables(), test_config(10), {llm});
    CHECK(result.status == RunStatus::Unanswered);
    CHECK(result.state.iteration == 1);
}

TEST_CASE("run_agent: action on a nonexistent node consumes the step, registry unchanged") {
    std::ifstream in(fixture("traces/bad_node.json"));
    ScriptedChat llm(json::parse(in).get<std::vector<std::string>>());
    auto result = run_agent("anything", car_tables(), test_config(), {llm});
    REQUIRE(result.status == RunStatus::Answered);

    const auto& t3 = result.state.transcript[2];
    CHECK(t3.error == "unknown-node");
    CHECK(t3.observation.find("error[unknown-node]") != std::string::npos);
    // nodes: 3 leaves + distinct + distinct + (failed) + join = 6; answer node 6... wait
    // ids: leaves 0-2, step1 distinct=3, step2 distinct=4, step3 fails, step4 join=5
    CHECK(result.state.registry.node(5).op_name == "join");
    CHECK_THROWS_AS(result.state.registry.node(6), Error);
}

TEST_CASE("run_agent: literal text final answers are carried through") {
    ScriptedChat llm({R"({"final_answer": {"text": "2015"}})"});
    auto result = run_agent("Which year?", car_tables(), test_config(), {llm});
    CHECK(result.status == RunStatus::Answered);
    CHECK_FALSE(result.answer_table);
    CHECK(result.answer_text == "2015");
    CHECK(result.state.transcript.size() == 1);
}

#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "planql/index.hpp"
#include "planql/plan.hpp"
#include "planql/prompts.hpp"
#include "planql/providers.hpp"

namespace planql {

// ---------------------------------------------------------------------------
// Tool catalog: one spec per registered operator, rendered into the
// system prompt.
// ---------------------------------------------------------------------------

struct ToolSpec {
    std::string name;
    std::string description;
    nlohmann::json arg_schema; // {"arg": {"type": ..., "required": ..., "doc": ...}}
    size_t arity = 1;
};

inline const std::vector<ToolSpec>& tool_catalog() {
    static const std::vector<ToolSpec> catalog = [] {
        using nlohmann::json;
        auto arg = [](std::string type, bool required, std::string doc) {
            return json{{"type", type}, {"required", required}, {"doc", doc}};
        };
        std::vector<ToolSpec> tools;

        tools.push_back(
            {"select_filter",
             "Select specific columns and/or filter rows by a predicate. Row order is kept.",
             json{{"columns", arg("array of column names", false, "projection, in order")},
                  {"predicate",
                   arg("predicate object", false,
                       "e.g. {\"type\":\"cmp\",\"op\":\">=\",\"lhs\":{\"col\":\"x\"},"
                       "\"rhs\":{\"lit\":3},\"mode\":\"numeric\"}; also like/in/is_null/and/or/not")}},
             1});
        tools.push_back(
            {"aggregate",
             "Collapse the whole table to one row of aggregates (sum, mean, count, "
             "count_distinct, min, max). Nulls are excluded; count(*) counts rows.",
             json{{"aggregates",
                   arg("array", true, "[{\"fn\":\"mean\",\"column\":\"price\"}, ...]")}},
             1});
        tools.push_back(
            {"group_by",
             "Group rows by key columns and aggregate per group. Output is keys then "
             "aggregate columns, in first-appearance order unless 'order' is given.",
             json{{"keys", arg("array of column names", true, "grouping keys")},
                  {"aggregates", arg("array", false, "as in aggregate")},
                  {"order", arg("array", false,
                                "[{\"column\":..., \"direction\":\"asc|desc\"}]")}},
             1});
        tools.push_back(
            {"join",
             "Join two child tables on equal keys. Null keys never match; right-side "
             "name collisions get a _right suffix.",
             json{{"kind", arg("string", false, "inner (default), left, right, full")},
                  {"left_on", arg("array of column names", true, "keys in first child")},
                  {"right_on", arg("array of column names", true, "keys in second child")}},
             2});
        tools.push_back(
            {"sort",
             "Stable sort by one or more keys; nulls always sort last.",
             json{{"keys", arg("array", true, "[{\"column\":..., \"direction\":\"asc|desc\"}]")}},
             1});
        tools.push_back(
            {"set_op",
             "union / union_all / intersect / except over two tables of equal arity. "
             "All but union_all deduplicate, SQL-style.",
             json{{"kind", arg("string", true, "union, union_all, intersect, except")}}, 2});
        tools.push_back(
            {"distinct",
             "Drop duplicate rows (of the given projection, if any), keeping first occurrences.",
             json{{"columns", arg("array of column names", false, "project before dedup")}}, 1});
        tools.push_back(
            {"limit_with_ties",
             "Top-n by sort keys, tie-inclusive: every row tied with the n-th row's key "
             "is kept. Prefer this over any plain LIMIT emulation so ties are never "
             "silently dropped.",
             json{{"n", arg("integer >= 1", true, "row budget before ties")},
                  {"by", arg("array", true, "sort keys as in sort")}},
             1});
        tools.push_back(
            {"pca",
             "Principal component analysis over numeric columns (rows with nulls in "
             "those columns are dropped). Result holds PC1..PCk plus the remaining "
             "columns; loadings and explained variance arrive in the observation.",
             json{{"columns", arg("array of column names", true, "numeric columns")},
                  {"k", arg("integer", true, "number of components, <= |columns|")}},
             1});
        tools.push_back(
            {"detect_anomalies",
             "Append a boolean is_anomaly column flagging rows whose z-score exceeds "
             "the threshold in any analyzed column.",
             json{{"columns", arg("array of column names", true, "numeric columns")},
                  {"method", arg("string", false, "only \"zscore\"")},
                  {"threshold", arg("number > 0", true, "z-score cutoff")}},
             1});
        tools.push_back(
            {"predict_value",
             "Ordinary least squares with intercept: fit target from features on a "
             "train split, predict the holdout. Metrics come back in the observation.",
             json{{"features", arg("array of column names", true, "numeric features")},
                  {"target", arg("string", true, "numeric target column")},
                  {"holdout_fraction", arg("number in [0,1)", false, "default 0.2")},
                  {"seed", arg("integer", false, "split seed, default 42")}},
             1});
        tools.push_back(
            {"compute_column",
             "Append a column computed by an arithmetic expression over existing "
             "columns (+ - * / and parentheses only).",
             json{{"name", arg("string", true, "new column name")},
                  {"expression", arg("string", true, "e.g. (yield_t_ha * 1000) / area")}},
             1});
        return tools;
    }();
    return catalog;
}

inline std::string render_tool_catalog() {
    std::ostringstream os;
    for (const auto& t : tool_catalog()) {
        os << "- " << t.name << " (" << t.arity << (t.arity == 1 ? " child" : " children")
           << "): " << t.description << "\n";
        for (const auto& [name, spec] : t.arg_schema.items()) {
            os << "    " << name << " (" << spec.at("type").get<std::string>()
               << (spec.at("required").get<bool>() ? ", required" : "") << "): "
               << spec.at("doc").get<std::string>() << "\n";
        }
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Actions. One JSON object per model turn:
//   {"tool": "join", "args": {...}, "children": [1, 2]}
//   {"final_answer": {"node": 7}}   or   {"final_answer": {"text": "..."}}
// ---------------------------------------------------------------------------

struct ToolCall {
    std::string tool;
    nlohmann::json args = nlohmann::json::object();
    std::vector<int> children;
};

struct FinalAnswer {
    std::optional<int> node_id;
    std::string text;
};

using ActionRequest = std::variant<ToolCall, FinalAnswer>;

namespace detail {

// First balanced top-level JSON object in the turn, respecting strings.
inline std::optional<std::pair<size_t, size_t>> find_json_object(const std::string& text,
                                                                 size_t from) {
    size_t start = text.find('{', from);
    while (start != std::string::npos) {
        int depth = 0;
        bool in_string = false, escaped = false;
        for (size_t i = start; i < text.size(); ++i) {
            char c = text[i];
            if (in_string) {
                if (escaped) escaped = false;
                else if (c == '\\') escaped = true;
                else if (c == '"') in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == '{') ++depth;
            else if (c == '}') {
                if (--depth == 0) return std::make_pair(start, i + 1);
            }
        }
        start = text.find('{', start + 1);
    }
    return std::nullopt;
}

inline std::string excerpt(const std::string& s, size_t limit = 160) {
    if (s.size() <= limit) return s;
    return s.substr(0, limit) + "...";
}

} // namespace detail

struct ParsedAction {
    ActionRequest action;
    size_t block_start = 0; // offset of the action block within the turn
    nlohmann::json raw;
};

inline ParsedAction parse_action_block(const std::string& turn) {
    size_t from = 0;
    while (true) {
        auto span = detail::find_json_object(turn, from);
        if (!span)
            fail("no-action-found",
                 "no action object found in turn: " + detail::excerpt(turn));
        std::string candidate = turn.substr(span->first, span->second - span->first);
        nlohmann::json j = nlohmann::json::parse(candidate, nullptr, false);
        if (j.is_discarded() || !j.is_object() ||
            (!j.contains("tool") && !j.contains("final_answer"))) {
            from = span->first + 1;
            continue;
        }

        if (j.contains("final_answer")) {
            const auto& fa = j.at("final_answer");
            FinalAnswer ans;
            if (fa.is_object() && fa.contains("node") && fa.at("node").is_number_integer())
                ans.node_id = fa.at("node").get<int>();
            else if (fa.is_object() && fa.contains("text") && fa.at("text").is_string())
                ans.text = fa.at("text").get<std::string>();
            else if (fa.is_number_integer())
                ans.node_id = fa.get<int>();
            else if (fa.is_string())
                ans.text = fa.get<std::string>();
            else if (fa.is_number())
                ans.text = format_number(fa.get<double>());
            else
                fail("malformed-args",
                     "final_answer must carry {\"node\": id} or {\"text\": ...}: " +
                         detail::excerpt(candidate));
            return {ans, span->first, j};
        }

        ToolCall call;
        if (!j.at("tool").is_string())
            fail("malformed-args", "\"tool\" must be a string: " + detail::excerpt(candidate));
        call.tool = j.at("tool").get<std::string>();
        if (j.contains("args")) {
            if (!j.at("args").is_object())
                fail("malformed-args",
                     "\"args\" must be an object: " + detail::excerpt(candidate));
            call.args = j.at("args");
        }
        if (j.contains("children")) {
            if (!j.at("children").is_array())
                fail("malformed-args",
                     "\"children\" must be an array of node ids: " + detail::excerpt(candidate));
            for (const auto& c : j.at("children")) {
                if (!c.is_number_integer())
                    fail("malformed-args",
                         "child ids must be integers: " + detail::excerpt(candidate));
                call.children.push_back(c.get<int>());
            }
        }
        return {call, span->first, j};
    }
}

inline ActionRequest parse_action(const std::string& turn) {
    return parse_action_block(turn).action;
}

// ---------------------------------------------------------------------------
// Observations.
// ---------------------------------------------------------------------------

struct ObservationCaps {
    size_t observation_bytes = 16384;
    size_t describe_bytes = 8192;
    size_t sample_rows = 5;
};

// Per-table projection applied when wide-table retrieval is active.
using AllowedColumns = std::map<std::string, std::set<std::string>>;

namespace detail {

inline TablePtr project_to_allowed(const TablePtr& t, const AllowedColumns* allowed) {
    if (!allowed) return t;
    auto it = allowed->find(t->id());
    if (it == allowed->end()) return t;
    std::vector<std::string> keep;
    for (const auto& c : t->schema())
        if (it->second.count(c.name)) keep.push_back(c.name);
    if (keep.empty() || keep.size() == t->column_count()) return t;
    return rebrand(*select_filter(*t, keep, nullptr), t->id(), t->provenance());
}

inline std::string one_line_summary(const PlanRegistry& reg, const PlanNode& n) {
    TablePtr t = reg.table_of(n.node_id);
    std::ostringstream os;
    os << "node " << n.node_id << ": ";
    if (n.kind == PlanNode::Kind::Leaf) {
        os << "leaf '" << n.result_table_id << "'";
    } else {
        os << n.op_name << " <- children [";
        for (size_t i = 0; i < n.child_ids.size(); ++i)
            os << (i ? ", " : "") << n.child_ids[i];
        os << "]";
    }
    os << " (" << t->row_count() << " rows, " << t->column_count() << " cols)";
    return os.str();
}

} // namespace detail

inline std::string render_observation(int node_id, const PlanRegistry& reg,
                                      const ObservationCaps& caps,
                                      const AllowedColumns* allowed = nullptr) {
    const PlanNode& n = reg.node(node_id);
    TablePtr t = detail::project_to_allowed(reg.table_of(node_id), allowed);

    std::string out = describe_table(*t, caps.sample_rows,
                                     std::min(caps.describe_bytes, caps.observation_bytes / 2));
    if (!n.note.empty()) out += n.note + "\n";

    // One line for every other node; when over budget the newest survive.
    std::vector<std::string> lines;
    for (const auto& [id, other] : reg.nodes()) {
        if (id == node_id) continue;
        lines.push_back(detail::one_line_summary(reg, other));
    }
    std::string tail;
    size_t budget = caps.observation_bytes > out.size() + 64
                        ? caps.observation_bytes - out.size() - 64
                        : 0;
    size_t omitted = 0;
    std::vector<std::string> kept;
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
        if (tail.size() + it->size() + 1 > budget) {
            omitted = lines.size() - kept.size();
            break;
        }
        tail += *it + "\n";
        kept.push_back(*it);
    }
    std::string plan_section;
    if (!lines.empty()) {
        plan_section = "plan so far:\n";
        if (omitted > 0)
            plan_section += "... (" + std::to_string(omitted) + " older nodes omitted)\n";
        for (auto it = kept.rbegin(); it != kept.rend(); ++it) plan_section += *it + "\n";
    }
    return out + plan_section;
}

// ---------------------------------------------------------------------------
// The supervisor loop.
// ---------------------------------------------------------------------------

struct TranscriptRecord {
    int step = 0;
    std::string thought;
    nlohmann::json action; // null when no action parsed
    std::string observation;
    std::string error; // empty when the step succeeded
};

struct AgentState {
    PlanRegistry registry;
    std::vector<TranscriptRecord> transcript;
    int iteration = 0;
    int budget = 0;
};

enum class RunStatus { Answered, Unanswered, Error };

struct RunResult {
    RunStatus status = RunStatus::Unanswered;
    TablePtr answer_table; // set when the final answer is a node
    std::string answer_text;
    AgentState state;
};

struct AgentConfig {
    int budget = 15;
    size_t wide_table_threshold = 120; // total columns; above this, retrieval kicks in
    ObservationCaps caps;
    std::string prompts_dir = "prompts";
    Thresholds thresholds;
    double cluster_sim = 0.80;
};

struct AgentDeps {
    ChatProvider& llm;
    EmbedProvider* embedder = nullptr;
    Describer* describer = nullptr;
    Validator* validator = nullptr;
    const VectorStore* store = nullptr; // prebuilt index, optional
};

inline std::string transcript_to_jsonl(const AgentState& state) {
    std::string out;
    for (const auto& r : state.transcript) {
        nlohmann::json j{{"step", r.step},
                         {"thought", r.thought},
                         {"action", r.action},
                         {"observation", r.observation}};
        if (!r.error.empty()) j["error"] = r.error;
        out += j.dump() + "\n";
    }
    return out;
}

inline RunResult run_agent(const std::string& question,
                           const std::map<std::string, TablePtr>& tables,
                           const AgentConfig& config, AgentDeps deps) {
    if (tables.empty()) fail("invalid-spec", "run_agent needs at least one table");
    if (config.budget < 1) fail("invalid-spec", "budget must be >= 1");

    RunResult result;
    result.state.budget = config.budget;
    PlanRegistry& reg = result.state.registry;

    size_t total_columns = 0;
    for (const auto& [name, t] : tables) total_columns += t->column_count();

    // Leaves in name order (std::map iteration), so node ids are stable.
    std::map<std::string, int> leaf_ids;
    for (const auto& [name, t] : tables) leaf_ids[name] = reg.add_leaf(t);

    // Wide-table mode: retrieve the relevant columns first and restrict
    // what the prompt and observations show.
    AllowedColumns allowed;
    bool wide = total_columns > config.wide_table_threshold;
    if (wide) {
        if (!deps.embedder)
            fail("invalid-config",
                 "wide-table retrieval needs an embedding provider (total columns " +
                     std::to_string(total_columns) + " > " +
                     std::to_string(config.wide_table_threshold) + ")");
        VectorStore built;
        const VectorStore* store = deps.store;
        if (!store) {
            if (!deps.describer)
                fail("invalid-config", "wide-table retrieval needs a describer or a prebuilt index");
            std::vector<TablePtr> list;
            for (const auto& [name, t] : tables) list.push_back(t);
            built = build_index(list, *deps.describer, *deps.embedder, config.cluster_sim);
            store = &built;
        }
        AffirmAllValidator affirm;
        Validator& validator = deps.validator ? *deps.validator : affirm;
        auto relevant = query_relevant_columns(question, *store, config.thresholds, validator,
                                               *deps.embedder);
        for (const auto& col_id : relevant) {
            std::string table = table_of_entry_id(col_id);
            allowed[table].insert(col_id.substr(table.size() + 1));
        }
    }

    PromptLibrary prompts(config.prompts_dir);
    std::vector<Message> messages;
    messages.push_back({"system", prompts.get("agent_system_v1") + "\nTOOLS:\n" +
                                      render_tool_catalog()});

    std::ostringstream intro;
    intro << "Question: " << question << "\n\nLeaf tables:\n";
    for (const auto& [name, id] : leaf_ids) {
        TablePtr t = tables.at(name);
        intro << "node " << id << ": '" << name << "' (" << t->row_count() << " rows, "
              << t->column_count() << " cols)\n";
        const auto allowed_it = allowed.find(name);
        for (const auto& c : t->schema()) {
            if (wide && allowed_it != allowed.end() && !allowed_it->second.count(c.name))
                continue;
            if (wide && allowed_it == allowed.end()) continue;
            intro << "  - " << c.name << " (" << to_string(c.type) << ")\n";
        }
        if (wide) {
            size_t shown = allowed_it == allowed.end() ? 0 : allowed_it->second.size();
            intro << "  (showing " << shown << " of " << t->column_count()
                  << " columns retrieved as relevant)\n";
        }
    }
    messages.push_back({"user", intro.str()});

    auto record_step = [&](std::string thought, nlohmann::json action, std::string observation,
                           std::string error) {
        TranscriptRecord rec;
        rec.step = result.state.iteration;
        rec.thought = std::move(thought);
        rec.action = std::move(action);
        rec.observation = std::move(observation);
        rec.error = std::move(error);
        result.state.transcript.push_back(std::move(rec));
    };

    while (result.state.iteration < config.budget) {
        std::string turn;
        try {
            turn = deps.llm.complete(messages);
        } catch (const Error& e) {
            if (e.kind() == "trace-exhausted") {
                result.status = RunStatus::Unanswered;
                return result;
            }
            result.status = RunStatus::Error;
            result.answer_text = std::string(e.kind()) + ": " + e.what();
            return result;
        }
        ++result.state.iteration;

        std::string thought = turn, observation, error;
        nlohmann::json action_json;
        bool answered = false;

        try {
            ParsedAction parsed = parse_action_block(turn);
            thought = turn.substr(0, parsed.block_start);
            while (!thought.empty() &&
                   std::isspace(static_cast<unsigned char>(thought.back())))
                thought.pop_back();
            action_json = parsed.raw;

            if (std::holds_alternative<FinalAnswer>(parsed.action)) {
                const auto& fa = std::get<FinalAnswer>(parsed.action);
                if (fa.node_id) {
                    TablePtr answer = reg.table_of(*fa.node_id); // throws on bad node
                    reg.set_root(*fa.node_id);
                    result.answer_table = answer;
                    observation = "final answer taken from node " + std::to_string(*fa.node_id);
                } else {
                    result.answer_text = fa.text;
                    observation = "final answer recorded as literal text";
                }
                answered = true;
            } else {
                const auto& call = std::get<ToolCall>(parsed.action);
                auto applied = reg.apply_op(call.tool, call.args, call.children);
                observation = "created node " + std::to_string(applied.node_id) + "\n" +
                              render_observation(applied.node_id, reg, config.caps,
                                                 wide ? &allowed : nullptr);
            }
        } catch (const Error& e) {
            error = e.kind();
            observation = "error[" + e.kind() + "]: " + e.what();
        }

        record_step(thought, action_json, observation, error);
        messages.push_back({"assistant", turn});
        messages.push_back({"user", "Observation (iteration " +
                                        std::to_string(result.state.iteration) + " of " +
                                        std::to_string(config.budget) + "):\n" + observation});

        if (answered) {
            result.status = RunStatus::Answered;
            return result;
        }
    }
    result.status = RunStatus::Unanswered;
    return result;
}

} // namespace planql

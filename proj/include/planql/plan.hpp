#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "planql/analytics.hpp"
#include "planql/expression.hpp"
#include "planql/operators.hpp"
#include "planql/table.hpp"

namespace planql {

// ---------------------------------------------------------------------------
// Plan nodes. Leaves are loaded tables, internal nodes are operator
// applications; nodes are append-only and never mutated, so backtracking
// is just choosing an older node as the child of a new one.
// ---------------------------------------------------------------------------

struct PlanNode {
    enum class Kind { Leaf, OpApply };
    int node_id = 0;
    Kind kind = Kind::Leaf;
    std::string op_name;         // OpApply
    nlohmann::json args;         // OpApply
    std::vector<int> child_ids;  // OpApply
    std::string result_table_id;
    int created_at_step = 0;
    std::string note; // extra operator output (metrics, variance, ...)
};

struct OpOutcome {
    TablePtr table;
    std::string note;
};

// An executable operator: JSON args + child tables in, one table out.
using OpFn =
    std::function<OpOutcome(const nlohmann::json& args, const std::vector<TablePtr>& children)>;

struct CatalogEntry {
    size_t arity = 1;
    OpFn fn;
};

using OperatorCatalog = std::map<std::string, CatalogEntry>;

// ---------------------------------------------------------------------------
// JSON argument decoding shared by plan replay and agent tool calls.
// ---------------------------------------------------------------------------

namespace args {

inline void expect_object(const nlohmann::json& j, const std::string& op) {
    if (!j.is_object()) fail("malformed-args", op + ": args must be a JSON object, got " + j.dump());
}

inline std::vector<std::string> string_list(const nlohmann::json& j, const std::string& what) {
    if (!j.is_array()) fail("malformed-args", what + " must be an array of column names");
    std::vector<std::string> out;
    for (const auto& v : j) {
        if (!v.is_string()) fail("malformed-args", what + " must contain only strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

inline AggFn agg_fn_from_string(const std::string& s) {
    if (s == "sum") return AggFn::Sum;
    if (s == "mean" || s == "avg") return AggFn::Mean;
    if (s == "count") return AggFn::Count;
    if (s == "count_distinct") return AggFn::CountDistinct;
    if (s == "min") return AggFn::Min;
    if (s == "max") return AggFn::Max;
    fail("malformed-args", "unknown aggregate function '" + s + "'");
}

inline std::vector<AggregateSpec> agg_specs(const nlohmann::json& j) {
    if (!j.is_array()) fail("malformed-args", "aggregates must be an array");
    std::vector<AggregateSpec> out;
    for (const auto& v : j) {
        if (!v.is_object() || !v.contains("fn") || !v.contains("column"))
            fail("malformed-args", "aggregate spec needs {fn, column}: " + v.dump());
        out.push_back({agg_fn_from_string(v.at("fn").get<std::string>()),
                       v.at("column").get<std::string>()});
    }
    return out;
}

inline std::vector<SortKey> sort_keys(const nlohmann::json& j) {
    if (!j.is_array()) fail("malformed-args", "sort keys must be an array");
    std::vector<SortKey> out;
    for (const auto& v : j) {
        if (!v.is_object() || !v.contains("column"))
            fail("malformed-args", "sort key needs {column, direction?}: " + v.dump());
        SortDir dir = SortDir::Asc;
        if (v.contains("direction")) {
            std::string d = v.at("direction").get<std::string>();
            if (d == "desc") dir = SortDir::Desc;
            else if (d != "asc")
                fail("malformed-args", "direction must be asc or desc, got '" + d + "'");
        }
        out.push_back({v.at("column").get<std::string>(), dir});
    }
    return out;
}

inline JoinKind join_kind_from_string(const std::string& s) {
    if (s == "inner") return JoinKind::Inner;
    if (s == "left") return JoinKind::Left;
    if (s == "right") return JoinKind::Right;
    if (s == "full") return JoinKind::Full;
    fail("malformed-args", "unknown join kind '" + s + "'");
}

inline SetOpKind set_op_kind_from_string(const std::string& s) {
    if (s == "union") return SetOpKind::Union;
    if (s == "union_all") return SetOpKind::UnionAll;
    if (s == "intersect") return SetOpKind::Intersect;
    if (s == "except") return SetOpKind::Except;
    fail("malformed-args", "unknown set operation '" + s + "'");
}

} // namespace args

// The executable toolset. Wire names here are the names used in plan
// files and agent tool calls.
inline const OperatorCatalog& default_catalog() {
    static const OperatorCatalog catalog = [] {
        OperatorCatalog c;
        using nlohmann::json;

        c["select_filter"] = {1, [](const json& a, const std::vector<TablePtr>& ch) {
            args::expect_object(a, "select_filter");
            std::optional<std::vector<std::string>> columns;
            if (a.contains("columns") && !a.at("columns").is_null())
                columns = args::string_list(a.at("columns"), "columns");
            PredicatePtr pred;
            if (a.contains("predicate") && !a.at("predicate").is_null())
                pred = predicate_from_json(a.at("predicate"));
            return OpOutcome{select_filter(*ch[0], columns, pred), ""};
        }};

        c["aggregate"] = {1, [](const json& a, const std::vector<TablePtr>& ch) {
            args::expect_object(a, "aggregate");
            if (!a.contains("aggregates"))
                fail("malformed-args", "aggregate: missing 'aggregates'");
            return OpOutcome{aggregate(*ch[0], args::agg_specs(a.at("aggregates"))), ""};
        }};

        c["group_by"] = {1, [](const json& a, const std::vector<TablePtr>& ch) {
            args::expect_object(a, "group_by");
            if (!a.contains("keys")) fail("malformed-args", "group_by: missing 'keys'");
            std::vector<AggregateSpec> specs;
            if (a.contains("aggregates")) specs = args::agg_specs(a.at("aggregates"));
            std::vector<SortKey> order;
            if (a.contains("order")) order = args::sort_keys(a.at("order"));
            return OpOutcome{
                group_by(*ch[0], args::string_list(a.at("keys"), "keys"), specs, order), ""};
        }};

        c["join"] = {2, [](const json& a, const std::vector<TablePtr>& ch) {
            args::expect_object(a, "join");
            JoinSpec spec;
            if (a.contains("kind"))
                spec.kind = args::join_kind_from_string(a.at("kind").get<std::string>());
            if (!a.contains("left_on") || !a.contains("right_on"))
                fail("malformed-args", "join: needs 'left_on' and 'right_on'");
            spec.left_on = args::string_list(a.at("left_on"), "left_on");
            spec.right_on = args::string_list(a.at("right_on"), "right_on");
            return OpOutcome{join(*ch[0], *ch[1], spec), ""};
        }};

        c["sort"] = {1, [](const json& a, const std::vector<TablePtr>& ch) {
            args::expect_object(a, "sort");
            if (!a.contains("keys")) fail("malformed-args", "sort: missing 'keys'");
            return OpOutcome{sort_rows(*ch[0], args::sort_keys(a.at("keys"))), ""};
        }};

        c["set_op"] = {2, [](const json& a, const std::vector<TablePtr>& ch) {
            args::expect_object(a, "set_op");
            if (!a.contains("kind")) fail("malformed-args", "set_op: missing 'kind'");
            return OpOutcome{
                set_op(*ch[0], *ch[1],
                       args::set_op_kind_from_string(a.at("kind").get<std::string>())),
                ""};
        }};

        c["distinct"] = {1, [](const json& a, const std::vector<TablePtr>& ch) {
            args::expect_object(a, "distinct");
            std::optional<std::vector<std::string>> columns;
            if (a.contains("columns") && !a.at("columns").is_null())
                columns = args::string_list(a.at("columns"), "columns");
            return OpOutcome{distinct(*ch[0], columns), ""};
        }};

        c["limit_with_ties"] = {1, [](const json& a, const std::vector<TablePtr>& ch) {
            args::expect_object(a, "limit_with_ties");
            if (!a.contains("n") || !a.at("n").is_number())
                fail("malformed-args", "limit_with_ties: missing numeric 'n'");
            if (!a.contains("by")) fail("malformed-args", "limit_with_ties: missing 'by'");
            double n = a.at("n").get<double>();
            if (n < 1) fail("malformed-args", "limit_with_ties: n must be >= 1");
            return OpOutcome{limit_with_ties(*ch[0], static_cast<size_t>(n),
                                             args::sort_keys(a.at("by"))),
                             ""};
        }};

        c["pca"] = {1, [](const json& a, const std::vector<TablePtr>& ch) {
            args::expect_object(a, "pca");
            if (!a.contains("columns") || !a.contains("k"))
                fail("malformed-args", "pca: needs 'columns' and 'k'");
            auto res = pca(*ch[0], args::string_list(a.at("columns"), "columns"),
                           a.at("k").get<size_t>());
            std::string note = "explained_variance:";
            for (double v : res.explained_variance) note += " " + format_number(v);
            note += "\ncomponents:\n" + describe_table(*res.components, res.components->row_count());
            return OpOutcome{res.projected, note};
        }};

        c["detect_anomalies"] = {1, [](const json& a, const std::vector<TablePtr>& ch) {
            args::expect_object(a, "detect_anomalies");
            if (!a.contains("columns") || !a.contains("threshold"))
                fail("malformed-args", "detect_anomalies: needs 'columns' and 'threshold'");
            std::string method = a.value("method", "zscore");
            return OpOutcome{detect_anomalies(*ch[0],
                                              args::string_list(a.at("columns"), "columns"),
                                              method, a.at("threshold").get<double>()),
                             ""};
        }};

        c["predict_value"] = {1, [](const json& a, const std::vector<TablePtr>& ch) {
            args::expect_object(a, "predict_value");
            if (!a.contains("features") || !a.contains("target"))
                fail("malformed-args", "predict_value: needs 'features' and 'target'");
            auto res = predict_value(*ch[0], args::string_list(a.at("features"), "features"),
                                     a.at("target").get<std::string>(),
                                     a.value("holdout_fraction", 0.2),
                                     a.value("seed", uint64_t{42}));
            std::string note = "r2: " + format_number(res.r2) +
                               ", mean_pct_error: " + format_number(res.mean_pct_error) +
                               "\ncoefficients (intercept first):";
            for (double b : res.coefficients) note += " " + format_number(b);
            return OpOutcome{res.prediction_table, note};
        }};

        c["compute_column"] = {1, [](const json& a, const std::vector<TablePtr>& ch) {
            args::expect_object(a, "compute_column");
            if (!a.contains("name") || !a.contains("expression"))
                fail("malformed-args", "compute_column: needs 'name' and 'expression'");
            return OpOutcome{compute_column(*ch[0], a.at("name").get<std::string>(),
                                            a.at("expression").get<std::string>()),
                             ""};
        }};

        return c;
    }();
    return catalog;
}

// ---------------------------------------------------------------------------
// PlanRegistry: append-only node store plus the session's table store.
// ---------------------------------------------------------------------------

struct ApplyResult {
    int node_id;
    TablePtr result;
};

class PlanRegistry {
public:
    explicit PlanRegistry(const OperatorCatalog* catalog = nullptr)
        : catalog_(catalog ? catalog : &default_catalog()) {}

    const std::map<int, PlanNode>& nodes() const { return nodes_; }
    std::optional<int> root_id() const { return root_; }
    size_t size() const { return nodes_.size(); }

    const PlanNode& node(int id) const {
        auto it = nodes_.find(id);
        if (it == nodes_.end()) fail("unknown-node", "no node with id " + std::to_string(id));
        return it->second;
    }

    TablePtr table_of(int id) const {
        const auto& n = node(id);
        auto it = tables_.find(n.result_table_id);
        if (it == tables_.end())
            fail("unknown-node", "node " + std::to_string(id) + " has no materialized table");
        return it->second;
    }

    int add_leaf(const TablePtr& t) {
        int id = next_id_;
        PlanNode n;
        n.node_id = id;
        n.kind = PlanNode::Kind::Leaf;
        n.result_table_id = t->id();
        n.created_at_step = id;
        tables_[t->id()] = t;
        nodes_.emplace(id, std::move(n));
        ++next_id_;
        return id;
    }

    // Executes eagerly. On any operator error no node is appended and the
    // registry is left exactly as it was.
    ApplyResult apply_op(const std::string& op_name, const nlohmann::json& op_args,
                         const std::vector<int>& child_ids) {
        auto it = catalog_->find(op_name);
        if (it == catalog_->end()) fail("unknown-operator", "no operator named '" + op_name + "'");
        if (child_ids.size() != it->second.arity)
            fail("malformed-args", op_name + " takes " + std::to_string(it->second.arity) +
                                       " input(s), got " + std::to_string(child_ids.size()));
        std::vector<TablePtr> children;
        children.reserve(child_ids.size());
        for (int c : child_ids) children.push_back(table_of(c));

        OpOutcome out = it->second.fn(op_args, children); // may throw; registry untouched

        int id = next_id_;
        std::string table_id = "node" + std::to_string(id);
        TablePtr result = rebrand(*out.table, table_id, Provenance::plan_node(id));

        PlanNode n;
        n.node_id = id;
        n.kind = PlanNode::Kind::OpApply;
        n.op_name = op_name;
        n.args = op_args;
        n.child_ids = child_ids;
        n.result_table_id = table_id;
        n.created_at_step = id;
        n.note = std::move(out.note);
        tables_[table_id] = result;
        nodes_.emplace(id, std::move(n));
        ++next_id_;
        return {id, result};
    }

    void set_root(int id) {
        node(id); // validates
        root_ = id;
    }

    // Topological order of the sub-DAG reachable from target. Children are
    // always created before parents, so creation order is a valid and
    // deterministic topological order.
    std::vector<const PlanNode*> linearize(int target) const {
        node(target);
        std::set<int> reach;
        std::vector<int> stack{target};
        while (!stack.empty()) {
            int id = stack.back();
            stack.pop_back();
            if (!reach.insert(id).second) continue;
            for (int c : node(id).child_ids) stack.push_back(c);
        }
        std::vector<const PlanNode*> out;
        out.reserve(reach.size());
        for (int id : reach) out.push_back(&node(id)); // std::set iterates ascending
        return out;
    }

private:
    const OperatorCatalog* catalog_;
    std::map<int, PlanNode> nodes_;
    std::map<std::string, TablePtr> tables_;
    std::optional<int> root_;
    int next_id_ = 0;
};

// ---------------------------------------------------------------------------
// Plan files:
//   {"version":1,
//    "leaves":[{"name":"countries","schema":["CountryId","CountryName",...]}],
//    "steps":[{"id":3,"op":"join","args":{...},"children":[1,2]}],
//    "root":7}
// Leaf ids are implicit: 0..len(leaves)-1 in listed order.
// ---------------------------------------------------------------------------

inline nlohmann::json plan_to_json(const PlanRegistry& reg, int root) {
    auto order = reg.linearize(root);
    // The session registry can hold dead branches; the serialized plan keeps
    // only the answer sub-DAG, renumbered to consecutive creation-order ids.
    std::map<int, int> renumber;
    for (const auto* n : order) renumber[n->node_id] = static_cast<int>(renumber.size());

    nlohmann::json leaves = nlohmann::json::array();
    nlohmann::json steps = nlohmann::json::array();
    for (const auto* n : order) {
        if (n->kind == PlanNode::Kind::Leaf) {
            if (!steps.empty())
                fail("invalid-spec", "plan has a leaf created after an operator node; "
                                     "cannot serialize with implicit leaf ids");
            TablePtr t = reg.table_of(n->node_id);
            nlohmann::json schema = nlohmann::json::array();
            for (const auto& c : t->schema()) schema.push_back(c.name);
            leaves.push_back({{"name", t->id()}, {"schema", schema}});
        } else {
            nlohmann::json children = nlohmann::json::array();
            for (int c : n->child_ids) children.push_back(renumber.at(c));
            steps.push_back({{"id", renumber.at(n->node_id)},
                             {"op", n->op_name},
                             {"args", n->args},
                             {"children", children}});
        }
    }
    return nlohmann::json{
        {"version", 1}, {"leaves", leaves}, {"steps", steps}, {"root", renumber.at(root)}};
}

// Replays a serialized plan over a set of named leaf tables. Fully
// deterministic: same plan + same tables = byte-identical output.
inline TablePtr replay(const nlohmann::json& plan,
                       const std::map<std::string, TablePtr>& tables,
                       const OperatorCatalog* catalog = nullptr) {
    if (!plan.is_object() || !plan.contains("leaves") || !plan.contains("steps") ||
        !plan.contains("root"))
        fail("malformed-plan", "plan file needs leaves, steps, and root");

    PlanRegistry reg(catalog);
    int expected_id = 0;
    for (const auto& leaf : plan.at("leaves")) {
        std::string name = leaf.at("name").get<std::string>();
        auto it = tables.find(name);
        if (it == tables.end()) fail("unresolved-leaf", "no table named '" + name + "'");
        if (leaf.contains("schema")) {
            const auto& want = leaf.at("schema");
            const auto& have = it->second->schema();
            bool ok = want.size() == have.size();
            for (size_t i = 0; ok && i < have.size(); ++i)
                ok = want[i].get<std::string>() == have[i].name;
            if (!ok)
                fail("schema-mismatch", "table '" + name +
                                            "' does not match the plan's recorded schema");
        }
        int id = reg.add_leaf(it->second);
        if (id != expected_id++)
            fail("malformed-plan", "internal leaf id mismatch");
    }
    int root = plan.at("root").get<int>();
    TablePtr last;
    for (const auto& step : plan.at("steps")) {
        int id = step.at("id").get<int>();
        if (id != expected_id)
            fail("malformed-plan", "step ids must be consecutive from the leaf count; saw " +
                                       std::to_string(id) + ", expected " +
                                       std::to_string(expected_id));
        std::vector<int> children;
        for (const auto& c : step.at("children")) children.push_back(c.get<int>());
        auto res = reg.apply_op(step.at("op").get<std::string>(),
                                step.value("args", nlohmann::json::object()), children);
        last = res.result;
        ++expected_id;
    }
    return reg.table_of(root);
}

} // namespace planql

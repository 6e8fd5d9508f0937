#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "planql/table.hpp"

namespace planql {

using json = nlohmann::json;

enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };
enum class CoercionMode { Strict, Numeric };

struct Operand {
    enum class Kind { Column, Literal };
    Kind kind = Kind::Literal;
    std::string column;
    Value literal;

    static Operand col(std::string name) {
        Operand o;
        o.kind = Kind::Column;
        o.column = std::move(name);
        return o;
    }
    static Operand lit(Value v) {
        Operand o;
        o.kind = Kind::Literal;
        o.literal = std::move(v);
        return o;
    }
};

struct Predicate;
using PredicatePtr = std::shared_ptr<const Predicate>;

// Filter condition tree. Comparisons on a null operand are false (IS NULL
// is the explicit test); numeric mode parses text cells and treats
// non-parsable ones as a failed match, never as an error.
struct Predicate {
    enum class Kind { Cmp, Like, In, IsNull, IsNotNull, And, Or, Not };

    Kind kind = Kind::Cmp;
    CmpOp op = CmpOp::Eq;
    CoercionMode mode = CoercionMode::Strict;
    Operand lhs, rhs;          // Cmp
    Operand operand;           // Like / In / IsNull / IsNotNull
    std::string pattern;       // Like
    std::vector<Value> values; // In
    std::vector<PredicatePtr> children;

    static PredicatePtr cmp(CmpOp op, Operand lhs, Operand rhs,
                            CoercionMode mode = CoercionMode::Strict) {
        auto p = std::make_shared<Predicate>();
        p->kind = Kind::Cmp;
        p->op = op;
        p->mode = mode;
        p->lhs = std::move(lhs);
        p->rhs = std::move(rhs);
        return p;
    }
    static PredicatePtr like(Operand operand, std::string pattern) {
        auto p = std::make_shared<Predicate>();
        p->kind = Kind::Like;
        p->operand = std::move(operand);
        p->pattern = std::move(pattern);
        return p;
    }
    static PredicatePtr in_list(Operand operand, std::vector<Value> values) {
        auto p = std::make_shared<Predicate>();
        p->kind = Kind::In;
        p->operand = std::move(operand);
        p->values = std::move(values);
        return p;
    }
    static PredicatePtr is_null(Operand operand, bool negated = false) {
        auto p = std::make_shared<Predicate>();
        p->kind = negated ? Kind::IsNotNull : Kind::IsNull;
        p->operand = std::move(operand);
        return p;
    }
    static PredicatePtr conjunction(std::vector<PredicatePtr> children) {
        auto p = std::make_shared<Predicate>();
        p->kind = Kind::And;
        p->children = std::move(children);
        return p;
    }
    static PredicatePtr disjunction(std::vector<PredicatePtr> children) {
        auto p = std::make_shared<Predicate>();
        p->kind = Kind::Or;
        p->children = std::move(children);
        return p;
    }
    static PredicatePtr negation(PredicatePtr child) {
        auto p = std::make_shared<Predicate>();
        p->kind = Kind::Not;
        p->children = {std::move(child)};
        return p;
    }
};

// SQL LIKE with % (any run) and _ (single char), matched over bytes.
inline bool like_match(const std::string& text, const std::string& pattern) {
    size_t ti = 0, pi = 0;
    size_t star_pi = std::string::npos, star_ti = 0;
    while (ti < text.size()) {
        if (pi < pattern.size() && (pattern[pi] == '_' || pattern[pi] == text[ti])) {
            ++ti;
            ++pi;
        } else if (pi < pattern.size() && pattern[pi] == '%') {
            star_pi = pi++;
            star_ti = ti;
        } else if (star_pi != std::string::npos) {
            pi = star_pi + 1;
            ti = ++star_ti;
        } else {
            return false;
        }
    }
    while (pi < pattern.size() && pattern[pi] == '%') ++pi;
    return pi == pattern.size();
}

namespace detail {

inline void collect_columns(const Predicate& p, std::vector<std::string>& out) {
    auto add = [&out](const Operand& o) {
        if (o.kind == Operand::Kind::Column) out.push_back(o.column);
    };
    switch (p.kind) {
        case Predicate::Kind::Cmp:
            add(p.lhs);
            add(p.rhs);
            break;
        case Predicate::Kind::Like:
        case Predicate::Kind::In:
        case Predicate::Kind::IsNull:
        case Predicate::Kind::IsNotNull:
            add(p.operand);
            break;
        case Predicate::Kind::And:
        case Predicate::Kind::Or:
        case Predicate::Kind::Not:
            for (const auto& c : p.children) collect_columns(*c, out);
            break;
    }
}

} // namespace detail

inline void validate_predicate(const Predicate& p, const Table& t) {
    std::vector<std::string> cols;
    detail::collect_columns(p, cols);
    for (const auto& c : cols) t.require_column(c);
}

class PredicateEvaluator {
public:
    PredicateEvaluator(const Predicate& p, const Table& t) : pred_(p), table_(t) {
        validate_predicate(p, t);
    }

    bool matches(const Row& row) const { return eval(pred_, row); }

private:
    const Value& operand_value(const Operand& o, const Row& row) const {
        if (o.kind == Operand::Kind::Column) return row[*table_.column_index(o.column)];
        return o.literal;
    }

    static bool apply_op(CmpOp op, int cmp) {
        switch (op) {
            case CmpOp::Eq: return cmp == 0;
            case CmpOp::Ne: return cmp != 0;
            case CmpOp::Lt: return cmp < 0;
            case CmpOp::Le: return cmp <= 0;
            case CmpOp::Gt: return cmp > 0;
            case CmpOp::Ge: return cmp >= 0;
        }
        return false;
    }

    bool eval(const Predicate& p, const Row& row) const {
        switch (p.kind) {
            case Predicate::Kind::Cmp: {
                const Value& a = operand_value(p.lhs, row);
                const Value& b = operand_value(p.rhs, row);
                if (a.is_null() || b.is_null()) return false;
                if (p.mode == CoercionMode::Numeric) {
                    auto x = coerce_numeric(a);
                    auto y = coerce_numeric(b);
                    if (!x || !y) return false;
                    int c = *x == *y ? 0 : (*x < *y ? -1 : 1);
                    return apply_op(p.op, c);
                }
                // Strict: equality needs matching tags; ordering falls back to
                // the cross-type total order.
                if (p.op == CmpOp::Eq && a.type() != b.type()) return false;
                if (p.op == CmpOp::Ne && a.type() != b.type()) return true;
                return apply_op(p.op, compare(a, b));
            }
            case Predicate::Kind::Like: {
                const Value& v = operand_value(p.operand, row);
                if (v.is_null()) return false;
                return like_match(render(v), p.pattern);
            }
            case Predicate::Kind::In: {
                const Value& v = operand_value(p.operand, row);
                if (v.is_null()) return false;
                for (const auto& candidate : p.values)
                    if (!candidate.is_null() && identity_equal(v, candidate)) return true;
                return false;
            }
            case Predicate::Kind::IsNull:
                return operand_value(p.operand, row).is_null();
            case Predicate::Kind::IsNotNull:
                return !operand_value(p.operand, row).is_null();
            case Predicate::Kind::And:
                for (const auto& c : p.children)
                    if (!eval(*c, row)) return false;
                return true;
            case Predicate::Kind::Or:
                for (const auto& c : p.children)
                    if (eval(*c, row)) return true;
                return false;
            case Predicate::Kind::Not:
                return !eval(*p.children[0], row);
        }
        return false;
    }

    const Predicate& pred_;
    const Table& table_;
};

// ---------------------------------------------------------------------------
// JSON wire format (used in plan files and agent tool calls):
//   {"type":"cmp","op":">=","lhs":{"col":"x"},"rhs":{"lit":3},"mode":"numeric"}
//   {"type":"like","operand":{"col":"date"},"pattern":"8/%"}
//   {"type":"in","operand":{"col":"x"},"values":[1,"a",null]}
//   {"type":"is_null","operand":{"col":"x"}}   (also "is_not_null")
//   {"type":"and","children":[...]} / "or" / {"type":"not","child":{...}}
// ---------------------------------------------------------------------------

inline Value value_from_json(const json& j) {
    if (j.is_null()) return Value::null();
    if (j.is_boolean()) return Value::boolean(j.get<bool>());
    if (j.is_number()) return Value::number(j.get<double>());
    if (j.is_string()) return Value::text(j.get<std::string>());
    fail("malformed-args", "cannot convert JSON value to a cell: " + j.dump());
}

inline json value_to_json(const Value& v) {
    switch (v.type()) {
        case ValueType::Null: return nullptr;
        case ValueType::Boolean: return v.as_bool();
        case ValueType::Number: return v.as_number();
        case ValueType::Text: return v.as_text();
    }
    return nullptr;
}

inline Operand operand_from_json(const json& j) {
    if (j.is_object() && j.contains("col")) return Operand::col(j.at("col").get<std::string>());
    if (j.is_object() && j.contains("lit")) return Operand::lit(value_from_json(j.at("lit")));
    fail("malformed-args", "operand must be {\"col\":name} or {\"lit\":value}, got " + j.dump());
}

inline json operand_to_json(const Operand& o) {
    if (o.kind == Operand::Kind::Column) return json{{"col", o.column}};
    return json{{"lit", value_to_json(o.literal)}};
}

inline CmpOp cmp_op_from_string(const std::string& s) {
    if (s == "=" || s == "==" || s == "eq") return CmpOp::Eq;
    if (s == "!=" || s == "<>" || s == "ne") return CmpOp::Ne;
    if (s == "<" || s == "lt") return CmpOp::Lt;
    if (s == "<=" || s == "le") return CmpOp::Le;
    if (s == ">" || s == "gt") return CmpOp::Gt;
    if (s == ">=" || s == "ge") return CmpOp::Ge;
    fail("malformed-args", "unknown comparison operator '" + s + "'");
}

inline std::string cmp_op_to_string(CmpOp op) {
    switch (op) {
        case CmpOp::Eq: return "=";
        case CmpOp::Ne: return "!=";
        case CmpOp::Lt: return "<";
        case CmpOp::Le: return "<=";
        case CmpOp::Gt: return ">";
        case CmpOp::Ge: return ">=";
    }
    return "=";
}

inline PredicatePtr predicate_from_json(const json& j) {
    if (!j.is_object() || !j.contains("type"))
        fail("malformed-args", "predicate must be an object with a \"type\": " + j.dump());
    std::string type = j.at("type").get<std::string>();
    if (type == "cmp") {
        CoercionMode mode = CoercionMode::Strict;
        if (j.contains("mode")) {
            std::string m = j.at("mode").get<std::string>();
            if (m == "numeric") mode = CoercionMode::Numeric;
            else if (m != "strict")
                fail("malformed-args", "comparison mode must be strict or numeric, got '" + m + "'");
        }
        return Predicate::cmp(cmp_op_from_string(j.at("op").get<std::string>()),
                              operand_from_json(j.at("lhs")), operand_from_json(j.at("rhs")),
                              mode);
    }
    if (type == "like")
        return Predicate::like(operand_from_json(j.at("operand")),
                               j.at("pattern").get<std::string>());
    if (type == "in") {
        std::vector<Value> values;
        for (const auto& v : j.at("values")) values.push_back(value_from_json(v));
        return Predicate::in_list(operand_from_json(j.at("operand")), std::move(values));
    }
    if (type == "is_null") return Predicate::is_null(operand_from_json(j.at("operand")));
    if (type == "is_not_null")
        return Predicate::is_null(operand_from_json(j.at("operand")), true);
    if (type == "and" || type == "or") {
        std::vector<PredicatePtr> children;
        for (const auto& c : j.at("children")) children.push_back(predicate_from_json(c));
        if (children.empty()) fail("malformed-args", "'" + type + "' needs children");
        return type == "and" ? Predicate::conjunction(std::move(children))
                             : Predicate::disjunction(std::move(children));
    }
    if (type == "not") return Predicate::negation(predicate_from_json(j.at("child")));
    fail("malformed-args", "unknown predicate type '" + type + "'");
}

inline json predicate_to_json(const Predicate& p) {
    switch (p.kind) {
        case Predicate::Kind::Cmp: {
            json j{{"type", "cmp"},
                   {"op", cmp_op_to_string(p.op)},
                   {"lhs", operand_to_json(p.lhs)},
                   {"rhs", operand_to_json(p.rhs)}};
            if (p.mode == CoercionMode::Numeric) j["mode"] = "numeric";
            return j;
        }
        case Predicate::Kind::Like:
            return json{{"type", "like"},
                        {"operand", operand_to_json(p.operand)},
                        {"pattern", p.pattern}};
        case Predicate::Kind::In: {
            json values = json::array();
            for (const auto& v : p.values) values.push_back(value_to_json(v));
            return json{{"type", "in"}, {"operand", operand_to_json(p.operand)}, {"values", values}};
        }
        case Predicate::Kind::IsNull:
            return json{{"type", "is_null"}, {"operand", operand_to_json(p.operand)}};
        case Predicate::Kind::IsNotNull:
            return json{{"type", "is_not_null"}, {"operand", operand_to_json(p.operand)}};
        case Predicate::Kind::And:
        case Predicate::Kind::Or: {
            json children = json::array();
            for (const auto& c : p.children) children.push_back(predicate_to_json(*c));
            return json{{"type", p.kind == Predicate::Kind::And ? "and" : "or"},
                        {"children", children}};
        }
        case Predicate::Kind::Not:
            return json{{"type", "not"}, {"child", predicate_to_json(*p.children[0])}};
    }
    return json::object();
}

} // namespace planql

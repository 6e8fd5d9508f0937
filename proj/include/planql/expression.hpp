#pragma once

#include <cctype>
#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

#include "planql/table.hpp"

namespace planql {

// Sandboxed arithmetic over a single table's columns: +, -, *, /, unary
// minus, parentheses, numeric literals, and column references (bare
// identifiers or `backquoted names`). This is the entire surface of the
// agent's code tool; nothing else evaluates.
//
// Null or non-coercible operands make the cell null, as does division by
// zero; expression evaluation never aborts a scan.

namespace expr {

struct Node {
    enum class Kind { Number, Column, Neg, Add, Sub, Mul, Div };
    Kind kind;
    double number = 0;
    std::string column;
    size_t column_idx = 0;
    std::unique_ptr<Node> a, b;
};

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    std::unique_ptr<Node> parse() {
        auto node = parse_expr();
        skip_ws();
        if (pos_ != text_.size())
            fail("malformed-expression",
                 "unexpected trailing input at offset " + std::to_string(pos_) + ": '" +
                     std::string(text_.substr(pos_)) + "'");
        return node;
    }

private:
    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    std::unique_ptr<Node> parse_expr() {
        auto lhs = parse_term();
        while (true) {
            if (eat('+')) lhs = binary(Node::Kind::Add, std::move(lhs), parse_term());
            else if (eat('-')) lhs = binary(Node::Kind::Sub, std::move(lhs), parse_term());
            else return lhs;
        }
    }

    std::unique_ptr<Node> parse_term() {
        auto lhs = parse_factor();
        while (true) {
            if (eat('*')) lhs = binary(Node::Kind::Mul, std::move(lhs), parse_factor());
            else if (eat('/')) lhs = binary(Node::Kind::Div, std::move(lhs), parse_factor());
            else return lhs;
        }
    }

    std::unique_ptr<Node> parse_factor() {
        skip_ws();
        if (pos_ >= text_.size())
            fail("malformed-expression", "unexpected end of expression");
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            auto inner = parse_expr();
            if (!eat(')'))
                fail("malformed-expression", "missing ')' at offset " + std::to_string(pos_));
            return inner;
        }
        if (c == '-') {
            ++pos_;
            auto node = std::make_unique<Node>();
            node->kind = Node::Kind::Neg;
            node->a = parse_factor();
            return node;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
                    text_[pos_] == '.' || text_[pos_] == 'e' || text_[pos_] == 'E' ||
                    ((text_[pos_] == '+' || text_[pos_] == '-') && pos_ > start &&
                     (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E'))))
                ++pos_;
            auto num = parse_number(text_.substr(start, pos_ - start));
            if (!num)
                fail("malformed-expression", "bad numeric literal at offset " +
                                                 std::to_string(start));
            auto node = std::make_unique<Node>();
            node->kind = Node::Kind::Number;
            node->number = *num;
            return node;
        }
        if (c == '`') {
            size_t end = text_.find('`', pos_ + 1);
            if (end == std::string_view::npos)
                fail("malformed-expression", "unterminated backquoted column name");
            auto node = std::make_unique<Node>();
            node->kind = Node::Kind::Column;
            node->column = std::string(text_.substr(pos_ + 1, end - pos_ - 1));
            pos_ = end + 1;
            return node;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                    text_[pos_] == '_' || text_[pos_] == '.'))
                ++pos_;
            auto node = std::make_unique<Node>();
            node->kind = Node::Kind::Column;
            node->column = std::string(text_.substr(start, pos_ - start));
            return node;
        }
        fail("malformed-expression",
             std::string("unexpected character '") + c + "' at offset " + std::to_string(pos_));
    }

    static std::unique_ptr<Node> binary(Node::Kind kind, std::unique_ptr<Node> a,
                                        std::unique_ptr<Node> b) {
        auto node = std::make_unique<Node>();
        node->kind = kind;
        node->a = std::move(a);
        node->b = std::move(b);
        return node;
    }

    std::string_view text_;
    size_t pos_ = 0;
};

inline void bind_columns(Node& node, const Table& t) {
    switch (node.kind) {
        case Node::Kind::Column:
            node.column_idx = t.require_column(node.column);
            break;
        case Node::Kind::Number:
            break;
        case Node::Kind::Neg:
            bind_columns(*node.a, t);
            break;
        default:
            bind_columns(*node.a, t);
            bind_columns(*node.b, t);
            break;
    }
}

inline std::optional<double> evaluate(const Node& node, const Row& row) {
    switch (node.kind) {
        case Node::Kind::Number:
            return node.number;
        case Node::Kind::Column:
            return coerce_numeric(row[node.column_idx]);
        case Node::Kind::Neg: {
            auto a = evaluate(*node.a, row);
            if (!a) return std::nullopt;
            return -*a;
        }
        default: {
            auto a = evaluate(*node.a, row);
            auto b = evaluate(*node.b, row);
            if (!a || !b) return std::nullopt;
            switch (node.kind) {
                case Node::Kind::Add: return *a + *b;
                case Node::Kind::Sub: return *a - *b;
                case Node::Kind::Mul: return *a * *b;
                case Node::Kind::Div: return *b == 0.0 ? std::nullopt : std::optional<double>(*a / *b);
                default: return std::nullopt;
            }
        }
    }
}

} // namespace expr

inline TablePtr compute_column(const Table& t, const std::string& name,
                               const std::string& expression) {
    if (name.empty()) fail("invalid-spec", "computed column needs a name");
    auto ast = expr::Parser(expression).parse();
    expr::bind_columns(*ast, t);

    std::vector<ColumnSpec> schema = t.schema();
    std::unordered_set<std::string> used;
    for (const auto& s : schema) used.insert(s.name);
    if (used.count(name)) fail("invalid-spec", "column '" + name + "' already exists");
    schema.push_back({name, ColumnType::Number, ""});

    std::vector<Row> rows;
    rows.reserve(t.row_count());
    for (const auto& row : t.rows()) {
        Row out = row;
        auto v = expr::evaluate(*ast, row);
        out.push_back(v ? Value::number(*v) : Value::null());
        rows.push_back(std::move(out));
    }
    return make_table("compute_column", std::move(schema), std::move(rows));
}

} // namespace planql

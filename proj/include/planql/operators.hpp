#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "planql/predicate.hpp"
#include "planql/table.hpp"

namespace planql {

// ---------------------------------------------------------------------------
// Specs
// ---------------------------------------------------------------------------

enum class JoinKind { Inner, Left, Right, Full };

struct JoinSpec {
    JoinKind kind = JoinKind::Inner;
    std::vector<std::string> left_on;
    std::vector<std::string> right_on;
};

enum class AggFn { Sum, Mean, Count, CountDistinct, Min, Max };

inline const char* to_string(AggFn fn) {
    switch (fn) {
        case AggFn::Sum: return "sum";
        case AggFn::Mean: return "mean";
        case AggFn::Count: return "count";
        case AggFn::CountDistinct: return "count_distinct";
        case AggFn::Min: return "min";
        case AggFn::Max: return "max";
    }
    return "?";
}

struct AggregateSpec {
    AggFn fn = AggFn::Count;
    std::string column; // "*" counts whole rows (count only)

    std::string output_name() const { return std::string(to_string(fn)) + "(" + column + ")"; }
};

enum class SortDir { Asc, Desc };

struct SortKey {
    std::string column;
    SortDir dir = SortDir::Asc;
};

enum class SetOpKind { Union, UnionAll, Intersect, Except };

// ---------------------------------------------------------------------------
// Row identity (dedup / grouping): full tuple equality with null == null.
// ---------------------------------------------------------------------------

struct RowHasher {
    size_t operator()(const Row& r) const {
        uint64_t h = 0xcbf29ce484222325ull;
        for (const auto& v : r) {
            h ^= hash_value(v);
            h *= 1099511628211ull;
        }
        return static_cast<size_t>(h);
    }
};

struct RowIdentityEq {
    bool operator()(const Row& a, const Row& b) const {
        if (a.size() != b.size()) return false;
        for (size_t i = 0; i < a.size(); ++i)
            if (!identity_equal(a[i], b[i])) return false;
        return true;
    }
};

namespace detail {

inline std::vector<size_t> resolve_columns(const Table& t,
                                           const std::vector<std::string>& names) {
    std::vector<size_t> idx;
    idx.reserve(names.size());
    for (const auto& n : names) idx.push_back(t.require_column(n));
    return idx;
}

inline Row project_row(const Row& r, const std::vector<size_t>& idx) {
    Row out;
    out.reserve(idx.size());
    for (size_t i : idx) out.push_back(r[i]);
    return out;
}

inline std::string make_unique_name(const std::string& base,
                                    const std::unordered_set<std::string>& used) {
    if (!used.count(base)) return base;
    int k = 2;
    std::string candidate;
    do {
        candidate = base + "_" + std::to_string(k++);
    } while (used.count(candidate));
    return candidate;
}

} // namespace detail

// ---------------------------------------------------------------------------
// select_filter: optional row filter, optional projection; order preserved.
// ---------------------------------------------------------------------------

inline TablePtr select_filter(const Table& t,
                              const std::optional<std::vector<std::string>>& columns,
                              const PredicatePtr& pred) {
    std::vector<size_t> proj;
    if (columns) {
        proj = detail::resolve_columns(t, *columns);
    } else {
        proj.resize(t.column_count());
        for (size_t i = 0; i < proj.size(); ++i) proj[i] = i;
    }

    std::optional<PredicateEvaluator> eval;
    if (pred) eval.emplace(*pred, t);

    std::vector<Row> rows;
    for (const auto& r : t.rows()) {
        if (eval && !eval->matches(r)) continue;
        rows.push_back(detail::project_row(r, proj));
    }
    std::vector<ColumnSpec> schema;
    for (size_t i : proj) schema.push_back(t.schema()[i]);
    return make_table("select_filter", std::move(schema), std::move(rows));
}

// ---------------------------------------------------------------------------
// aggregate: single summary row, one column per spec, nulls excluded.
// ---------------------------------------------------------------------------

namespace detail {

inline Value compute_aggregate(const Table& t, const AggregateSpec& spec,
                               const std::vector<size_t>& row_indices) {
    if (spec.column == "*") {
        if (spec.fn != AggFn::Count)
            fail("invalid-spec", std::string(to_string(spec.fn)) + "(*) is not defined; only count(*)");
        return Value::number(static_cast<double>(row_indices.size()));
    }
    size_t col = t.require_column(spec.column);

    switch (spec.fn) {
        case AggFn::Count: {
            size_t n = 0;
            for (size_t r : row_indices)
                if (!t.rows()[r][col].is_null()) ++n;
            return Value::number(static_cast<double>(n));
        }
        case AggFn::CountDistinct: {
            std::unordered_set<Row, RowHasher, RowIdentityEq> seen;
            for (size_t r : row_indices) {
                const Value& v = t.rows()[r][col];
                if (!v.is_null()) seen.insert(Row{v});
            }
            return Value::number(static_cast<double>(seen.size()));
        }
        case AggFn::Sum:
        case AggFn::Mean: {
            double sum = 0;
            size_t n = 0;
            for (size_t r : row_indices) {
                const Value& v = t.rows()[r][col];
                if (v.is_null()) continue;
                auto x = coerce_numeric(v);
                if (!x)
                    fail("type-error", std::string(to_string(spec.fn)) + " over column '" +
                                           spec.column + "' hit non-numeric cell '" +
                                           render(v) + "'");
                sum += *x;
                ++n;
            }
            if (spec.fn == AggFn::Sum) return n == 0 ? Value::null() : Value::number(sum);
            return n == 0 ? Value::null() : Value::number(sum / static_cast<double>(n));
        }
        case AggFn::Min:
        case AggFn::Max: {
            const Value* best = nullptr;
            for (size_t r : row_indices) {
                const Value& v = t.rows()[r][col];
                if (v.is_null()) continue;
                if (!best) {
                    best = &v;
                    continue;
                }
                int c = compare(v, *best);
                if ((spec.fn == AggFn::Min && c < 0) || (spec.fn == AggFn::Max && c > 0))
                    best = &v;
            }
            return best ? *best : Value::null();
        }
    }
    return Value::null();
}

inline ColumnType aggregate_output_type(const Table& t, const AggregateSpec& spec) {
    switch (spec.fn) {
        case AggFn::Count:
        case AggFn::CountDistinct:
        case AggFn::Sum:
        case AggFn::Mean:
            return ColumnType::Number;
        case AggFn::Min:
        case AggFn::Max: {
            if (spec.column == "*") return ColumnType::Number;
            return t.schema()[t.require_column(spec.column)].type;
        }
    }
    return ColumnType::Number;
}

} // namespace detail

inline TablePtr aggregate(const Table& t, const std::vector<AggregateSpec>& specs) {
    if (specs.empty()) fail("invalid-spec", "aggregate needs at least one spec");
    std::vector<size_t> all(t.row_count());
    for (size_t i = 0; i < all.size(); ++i) all[i] = i;

    Row out;
    std::vector<ColumnSpec> schema;
    for (const auto& spec : specs) {
        out.push_back(detail::compute_aggregate(t, spec, all));
        schema.push_back({spec.output_name(), detail::aggregate_output_type(t, spec), ""});
    }
    return make_table("aggregate", std::move(schema), {std::move(out)});
}

// ---------------------------------------------------------------------------
// sort: stable, nulls last regardless of direction.
// ---------------------------------------------------------------------------

inline TablePtr sort_rows(const Table& t, const std::vector<SortKey>& keys) {
    if (keys.empty()) fail("invalid-spec", "sort needs at least one key");
    std::vector<size_t> cols;
    std::vector<SortDir> dirs;
    for (const auto& k : keys) {
        cols.push_back(t.require_column(k.column));
        dirs.push_back(k.dir);
    }

    std::vector<size_t> order(t.row_count());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        for (size_t k = 0; k < cols.size(); ++k) {
            const Value& va = t.rows()[a][cols[k]];
            const Value& vb = t.rows()[b][cols[k]];
            bool na = va.is_null(), nb = vb.is_null();
            if (na || nb) {
                if (na == nb) continue;
                return nb; // non-null before null
            }
            int c = compare(va, vb);
            if (c == 0) continue;
            if (dirs[k] == SortDir::Desc) c = -c;
            return c < 0;
        }
        return false;
    });

    std::vector<Row> rows;
    rows.reserve(order.size());
    for (size_t i : order) rows.push_back(t.rows()[i]);
    return make_table("sort", t.schema(), std::move(rows));
}

// ---------------------------------------------------------------------------
// group_by: one row per distinct key tuple (nulls group together), keyed
// columns first, then aggregate columns; group order = first appearance
// unless an explicit ordering is requested.
// ---------------------------------------------------------------------------

inline TablePtr group_by(const Table& t, const std::vector<std::string>& keys,
                         const std::vector<AggregateSpec>& specs,
                         const std::vector<SortKey>& order = {}) {
    if (keys.empty()) fail("invalid-spec", "group_by needs at least one key column");
    auto key_idx = detail::resolve_columns(t, keys);

    std::unordered_map<Row, size_t, RowHasher, RowIdentityEq> group_of;
    std::vector<Row> group_keys;
    std::vector<std::vector<size_t>> members;
    for (size_t r = 0; r < t.row_count(); ++r) {
        Row key = detail::project_row(t.rows()[r], key_idx);
        auto [it, inserted] = group_of.try_emplace(std::move(key), group_keys.size());
        if (inserted) {
            group_keys.push_back(it->first);
            members.emplace_back();
        }
        members[it->second].push_back(r);
    }

    std::vector<ColumnSpec> schema;
    for (size_t i : key_idx) schema.push_back(t.schema()[i]);
    for (const auto& spec : specs)
        schema.push_back({spec.output_name(), detail::aggregate_output_type(t, spec), ""});

    std::vector<Row> rows;
    rows.reserve(group_keys.size());
    for (size_t g = 0; g < group_keys.size(); ++g) {
        Row row = group_keys[g];
        for (const auto& spec : specs)
            row.push_back(detail::compute_aggregate(t, spec, members[g]));
        rows.push_back(std::move(row));
    }
    auto result = make_table("group_by", std::move(schema), std::move(rows));
    if (!order.empty())
        result = rebrand(*sort_rows(*result, order), "group_by", result->provenance());
    return result;
}

// ---------------------------------------------------------------------------
// join: SQL semantics. Null keys never match; unmatched sides are padded
// with nulls for left/right/full; name collisions from the right side get
// a _right suffix. Output order is left-major (right-major for unmatched
// right rows, which can only trail).
// ---------------------------------------------------------------------------

inline TablePtr join(const Table& a, const Table& b, const JoinSpec& spec) {
    if (spec.left_on.empty() || spec.left_on.size() != spec.right_on.size())
        fail("invalid-spec", "join key lists must be non-empty and of equal length");
    std::vector<size_t> lkey, rkey;
    for (const auto& n : spec.left_on) {
        auto i = a.column_index(n);
        if (!i) fail("invalid-spec", "left join key '" + n + "' not found in table '" + a.id() + "'");
        lkey.push_back(*i);
    }
    for (const auto& n : spec.right_on) {
        auto i = b.column_index(n);
        if (!i) fail("invalid-spec", "right join key '" + n + "' not found in table '" + b.id() + "'");
        rkey.push_back(*i);
    }

    std::vector<ColumnSpec> schema = a.schema();
    std::unordered_set<std::string> used;
    for (const auto& c : a.schema()) used.insert(c.name);
    for (const auto& c : b.schema()) {
        ColumnSpec spec_copy = c;
        spec_copy.name = detail::make_unique_name(c.name + (used.count(c.name) ? "_right" : ""),
                                                  used);
        used.insert(spec_copy.name);
        schema.push_back(std::move(spec_copy));
    }

    auto key_of = [](const Table& t, size_t row, const std::vector<size_t>& idx)
        -> std::optional<Row> {
        Row key;
        key.reserve(idx.size());
        for (size_t i : idx) {
            const Value& v = t.rows()[row][i];
            if (v.is_null()) return std::nullopt;
            key.push_back(v);
        }
        return key;
    };

    // Hash the right side; keys containing nulls can never match.
    std::unordered_map<Row, std::vector<size_t>, RowHasher, RowIdentityEq> right_index;
    for (size_t r = 0; r < b.row_count(); ++r)
        if (auto key = key_of(b, r, rkey)) right_index[*key].push_back(r);

    auto emit = [&](const Row* left, const Row* right, std::vector<Row>& out) {
        Row row;
        row.reserve(schema.size());
        if (left)
            row.insert(row.end(), left->begin(), left->end());
        else
            row.insert(row.end(), a.column_count(), Value::null());
        if (right)
            row.insert(row.end(), right->begin(), right->end());
        else
            row.insert(row.end(), b.column_count(), Value::null());
        out.push_back(std::move(row));
    };

    std::vector<Row> rows;
    if (spec.kind == JoinKind::Right) {
        std::unordered_map<Row, std::vector<size_t>, RowHasher, RowIdentityEq> left_index;
        for (size_t r = 0; r < a.row_count(); ++r)
            if (auto key = key_of(a, r, lkey)) left_index[*key].push_back(r);
        for (size_t r = 0; r < b.row_count(); ++r) {
            auto key = key_of(b, r, rkey);
            const std::vector<size_t>* matches = nullptr;
            if (key) {
                auto it = left_index.find(*key);
                if (it != left_index.end()) matches = &it->second;
            }
            if (matches)
                for (size_t lr : *matches) emit(&a.rows()[lr], &b.rows()[r], rows);
            else
                emit(nullptr, &b.rows()[r], rows);
        }
    } else {
        std::vector<bool> right_matched(b.row_count(), false);
        for (size_t r = 0; r < a.row_count(); ++r) {
            auto key = key_of(a, r, lkey);
            const std::vector<size_t>* matches = nullptr;
            if (key) {
                auto it = right_index.find(*key);
                if (it != right_index.end()) matches = &it->second;
            }
            if (matches) {
                for (size_t rr : *matches) {
                    emit(&a.rows()[r], &b.rows()[rr], rows);
                    right_matched[rr] = true;
                }
            } else if (spec.kind == JoinKind::Left || spec.kind == JoinKind::Full) {
                emit(&a.rows()[r], nullptr, rows);
            }
        }
        if (spec.kind == JoinKind::Full) {
            for (size_t r = 0; r < b.row_count(); ++r)
                if (!right_matched[r]) emit(nullptr, &b.rows()[r], rows);
        }
    }
    return make_table("join", std::move(schema), std::move(rows));
}

// ---------------------------------------------------------------------------
// set operations: union/intersect/except deduplicate (SQL), union_all
// concatenates. Output schema keeps the left table's names.
// ---------------------------------------------------------------------------

inline TablePtr set_op(const Table& a, const Table& b, SetOpKind kind) {
    if (a.column_count() != b.column_count())
        fail("arity-mismatch", "set operation over tables with " +
                                   std::to_string(a.column_count()) + " and " +
                                   std::to_string(b.column_count()) + " columns");

    std::vector<ColumnSpec> schema = a.schema();
    for (size_t c = 0; c < schema.size(); ++c)
        if (schema[c].type != b.schema()[c].type) schema[c].type = ColumnType::Mixed;

    std::vector<Row> rows;
    switch (kind) {
        case SetOpKind::UnionAll: {
            rows = a.rows();
            rows.insert(rows.end(), b.rows().begin(), b.rows().end());
            break;
        }
        case SetOpKind::Union: {
            std::unordered_set<Row, RowHasher, RowIdentityEq> seen;
            for (const auto* src : {&a.rows(), &b.rows()})
                for (const auto& r : *src)
                    if (seen.insert(r).second) rows.push_back(r);
            break;
        }
        case SetOpKind::Intersect: {
            std::unordered_set<Row, RowHasher, RowIdentityEq> in_b(b.rows().begin(),
                                                                   b.rows().end());
            std::unordered_set<Row, RowHasher, RowIdentityEq> emitted;
            for (const auto& r : a.rows())
                if (in_b.count(r) && emitted.insert(r).second) rows.push_back(r);
            break;
        }
        case SetOpKind::Except: {
            std::unordered_set<Row, RowHasher, RowIdentityEq> in_b(b.rows().begin(),
                                                                   b.rows().end());
            std::unordered_set<Row, RowHasher, RowIdentityEq> emitted;
            for (const auto& r : a.rows())
                if (!in_b.count(r) && emitted.insert(r).second) rows.push_back(r);
            break;
        }
    }
    if (kind == SetOpKind::Intersect || kind == SetOpKind::Except)
        schema = a.schema(); // rows all come from the left side
    return make_table("set_op", std::move(schema), std::move(rows));
}

// ---------------------------------------------------------------------------
// distinct: drop duplicate rows (of the projection, when given), keeping
// first occurrences.
// ---------------------------------------------------------------------------

inline TablePtr distinct(const Table& t,
                         const std::optional<std::vector<std::string>>& columns = {}) {
    TablePtr projected;
    const Table* src = &t;
    if (columns) {
        projected = select_filter(t, columns, nullptr);
        src = projected.get();
    }
    std::unordered_set<Row, RowHasher, RowIdentityEq> seen;
    std::vector<Row> rows;
    for (const auto& r : src->rows())
        if (seen.insert(r).second) rows.push_back(r);
    return make_table("distinct", src->schema(), std::move(rows));
}

// ---------------------------------------------------------------------------
// limit_with_ties: top-n by sort keys, extended with every row tied with
// the n-th row's key tuple.
// ---------------------------------------------------------------------------

inline TablePtr limit_with_ties(const Table& t, size_t n, const std::vector<SortKey>& by) {
    if (n < 1) fail("invalid-spec", "limit_with_ties needs n >= 1");
    auto sorted = sort_rows(t, by);
    if (sorted->row_count() <= n)
        return make_table("limit_with_ties", sorted->schema(), sorted->rows());

    std::vector<size_t> key_idx;
    for (const auto& k : by) key_idx.push_back(sorted->require_column(k.column));
    Row boundary = detail::project_row(sorted->rows()[n - 1], key_idx);

    std::vector<Row> rows(sorted->rows().begin(), sorted->rows().begin() + n);
    RowIdentityEq eq;
    for (size_t r = n; r < sorted->row_count(); ++r) {
        if (!eq(detail::project_row(sorted->rows()[r], key_idx), boundary)) break;
        rows.push_back(sorted->rows()[r]);
    }
    return make_table("limit_with_ties", sorted->schema(), std::move(rows));
}

} // namespace planql

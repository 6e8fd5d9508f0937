#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "planql/error.hpp"
#include "planql/value.hpp"

namespace planql {

enum class ColumnType { Boolean, Number, Text, Mixed };

inline const char* to_string(ColumnType t) {
    switch (t) {
        case ColumnType::Boolean: return "boolean";
        case ColumnType::Number: return "number";
        case ColumnType::Text: return "text";
        case ColumnType::Mixed: return "mixed";
    }
    return "?";
}

struct ColumnSpec {
    std::string name;
    ColumnType type = ColumnType::Text;
    std::string description; // optional, feeds index building and summaries
};

using Row = std::vector<Value>;

// Where a table came from: a source file or the plan node that produced it.
struct Provenance {
    enum class Kind { Source, PlanNode };
    Kind kind = Kind::Source;
    std::string source_path;
    int plan_node_id = -1;

    static Provenance source(std::string path) {
        Provenance p;
        p.kind = Kind::Source;
        p.source_path = std::move(path);
        return p;
    }
    static Provenance plan_node(int node_id) {
        Provenance p;
        p.kind = Kind::PlanNode;
        p.plan_node_id = node_id;
        return p;
    }
};

// Immutable typed table. All operators build fresh tables; nothing in the
// engine mutates rows or schema after construction.
class Table {
public:
    Table(std::string id, std::vector<ColumnSpec> schema, std::vector<Row> rows,
          Provenance provenance = Provenance::source(""))
        : id_(std::move(id)),
          schema_(std::move(schema)),
          rows_(std::move(rows)),
          provenance_(std::move(provenance)) {
        for (size_t r = 0; r < rows_.size(); ++r) {
            if (rows_[r].size() != schema_.size())
                fail("arity-mismatch",
                     "row " + std::to_string(r) + " has " + std::to_string(rows_[r].size()) +
                         " cells, schema has " + std::to_string(schema_.size()));
        }
    }

    const std::string& id() const { return id_; }
    const std::vector<ColumnSpec>& schema() const { return schema_; }
    const std::vector<Row>& rows() const { return rows_; }
    const Provenance& provenance() const { return provenance_; }

    size_t row_count() const { return rows_.size(); }
    size_t column_count() const { return schema_.size(); }

    std::optional<size_t> column_index(std::string_view name) const {
        for (size_t i = 0; i < schema_.size(); ++i)
            if (schema_[i].name == name) return i;
        return std::nullopt;
    }

    size_t require_column(const std::string& name) const {
        if (auto i = column_index(name)) return *i;
        std::ostringstream os;
        os << "unknown column '" << name << "'; available columns:";
        for (const auto& c : schema_) os << " '" << c.name << "'";
        fail("unknown-column", os.str());
    }

private:
    std::string id_;
    std::vector<ColumnSpec> schema_;
    std::vector<Row> rows_;
    Provenance provenance_;
};

using TablePtr = std::shared_ptr<const Table>;

inline TablePtr make_table(std::string id, std::vector<ColumnSpec> schema,
                           std::vector<Row> rows,
                           Provenance provenance = Provenance::source("")) {
    return std::make_shared<Table>(std::move(id), std::move(schema), std::move(rows),
                                   std::move(provenance));
}

// Same content under a new identity (used when a plan node adopts a result).
inline TablePtr rebrand(const Table& t, std::string new_id, Provenance provenance) {
    return make_table(std::move(new_id), t.schema(), t.rows(), std::move(provenance));
}

// Column type from the tags actually present: single non-null tag wins,
// two or more make it mixed, all-null columns default to text.
inline ColumnType column_type_of(const std::vector<Row>& rows, size_t col) {
    bool has_bool = false, has_num = false, has_text = false;
    for (const auto& r : rows) {
        switch (r[col].type()) {
            case ValueType::Null: break;
            case ValueType::Boolean: has_bool = true; break;
            case ValueType::Number: has_num = true; break;
            case ValueType::Text: has_text = true; break;
        }
    }
    int kinds = int(has_bool) + int(has_num) + int(has_text);
    if (kinds > 1) return ColumnType::Mixed;
    if (has_bool) return ColumnType::Boolean;
    if (has_num) return ColumnType::Number;
    return ColumnType::Text;
}

namespace detail {

// Deterministic partial Fisher-Yates; avoids std::uniform_int_distribution
// whose output is implementation-defined.
inline std::vector<size_t> shuffled_indices(size_t n, uint64_t seed) {
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    for (size_t i = 0; i + 1 < n; ++i) {
        size_t j = i + static_cast<size_t>(rng() % (n - i));
        std::swap(idx[i], idx[j]);
    }
    return idx;
}

inline std::string truncate_cell(const std::string& s, size_t limit = 120) {
    if (s.size() <= limit) return s;
    return s.substr(0, limit) + "...";
}

} // namespace detail

// Draws up to n rows without replacement; deterministic for a fixed seed.
inline TablePtr sample_rows(const Table& t, size_t n, uint64_t seed) {
    size_t take = std::min(n, t.row_count());
    auto idx = detail::shuffled_indices(t.row_count(), seed);
    std::vector<Row> out;
    out.reserve(take);
    for (size_t i = 0; i < take; ++i) out.push_back(t.rows()[idx[i]]);
    return make_table(t.id() + "#sample", t.schema(), std::move(out), t.provenance());
}

// Bounded human-readable summary: identity, shape, column list, and a few
// sample rows. Output never exceeds max_bytes; wide schemas and long cells
// are cut with explicit markers.
inline std::string describe_table(const Table& t, size_t max_sample = 5,
                                  size_t max_bytes = 8192) {
    std::ostringstream os;
    os << "table '" << t.id() << "' — " << t.row_count() << " rows, " << t.column_count()
       << " columns\n";
    std::string head = os.str();

    std::string body;
    // Headroom for the two truncation markers.
    size_t budget = max_bytes > head.size() + 160 ? max_bytes - head.size() - 160 : 0;

    size_t listed = 0;
    for (size_t i = 0; i < t.column_count(); ++i) {
        const auto& c = t.schema()[i];
        std::string line = "  [" + std::to_string(i) + "] " + c.name + " (" +
                           to_string(c.type) + ")";
        if (!c.description.empty())
            line += ": " + detail::truncate_cell(c.description);
        line += "\n";
        if (body.size() + line.size() > budget) break;
        body += line;
        ++listed;
    }
    if (listed < t.column_count())
        body += "  ... (+" + std::to_string(t.column_count() - listed) + " more columns)\n";

    size_t take = std::min(max_sample, t.row_count());
    if (take > 0) {
        std::string header = "sample rows (first " + std::to_string(take) + " of " +
                             std::to_string(t.row_count()) + "):\n";
        if (body.size() + header.size() <= budget) {
            body += header;
            for (size_t r = 0; r < take; ++r) {
                std::string line = "  ";
                for (size_t c = 0; c < t.column_count(); ++c) {
                    if (c) line += " | ";
                    line += detail::truncate_cell(render(t.rows()[r][c]));
                }
                line += "\n";
                if (body.size() + line.size() > budget) {
                    body += "  ... (truncated)\n";
                    break;
                }
                body += line;
            }
        }
    }
    return head + body;
}

} // namespace planql

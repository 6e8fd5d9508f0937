#pragma once

#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "planql/table.hpp"

namespace planql {

struct CsvOptions {
    bool header = true;
    bool type_inference = true;
    // Ground-truth fixtures use the token \N to disambiguate null from
    // the empty string; ordinary data files do not.
    bool backslash_n_null = false;
};

namespace detail {

struct RawCsv {
    std::vector<std::vector<std::string>> records;
};

// RFC 4180: comma delimiter, CRLF or LF, double-quote quoting with doubled
// quotes as escapes. A stray quote inside an unquoted field is taken
// literally (lenient, matches common readers).
inline RawCsv parse_csv_text(const std::string& text, const std::string& origin) {
    RawCsv out;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    size_t line = 1, quote_open_line = 0;

    size_t i = 0, n = text.size();
    // Strip a UTF-8 BOM if present.
    if (n >= 3 && static_cast<unsigned char>(text[0]) == 0xEF &&
        static_cast<unsigned char>(text[1]) == 0xBB &&
        static_cast<unsigned char>(text[2]) == 0xBF)
        i = 3;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        out.records.push_back(std::move(record));
        record.clear();
    };

    for (; i < n; ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < n && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field_started && field.empty()) {
                    in_quotes = true;
                    field_started = true;
                    quote_open_line = line;
                } else {
                    field += c;
                }
                break;
            case ',':
                end_field();
                break;
            case '\r':
                if (i + 1 < n && text[i + 1] == '\n') ++i;
                ++line;
                end_record();
                break;
            case '\n':
                ++line;
                end_record();
                break;
            default:
                field_started = true;
                field += c;
                break;
        }
    }
    if (in_quotes)
        fail("malformed-csv", origin + ": unclosed quote opened on line " +
                                  std::to_string(quote_open_line));
    if (field_started || !field.empty() || !record.empty()) end_record();
    return out;
}

inline bool is_null_token(const std::string& s, const CsvOptions& opt) {
    if (s.empty()) return true;
    if (opt.backslash_n_null && s == "\\N") return true;
    if (s.size() == 4) {
        std::string lower;
        for (char c : s) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (lower == "null") return true;
    }
    return false;
}

inline std::vector<std::string> dedupe_names(std::vector<std::string> names) {
    std::set<std::string> used;
    for (auto& name : names) {
        if (name.empty()) name = "column";
        if (!used.count(name)) {
            used.insert(name);
            continue;
        }
        int k = 2;
        std::string candidate;
        do {
            candidate = name + "_" + std::to_string(k++);
        } while (used.count(candidate));
        name = candidate;
        used.insert(name);
    }
    return names;
}

} // namespace detail

inline TablePtr load_csv_text(const std::string& text, const std::string& table_id,
                              const CsvOptions& opt = {},
                              const std::string& origin = "<string>") {
    auto raw = detail::parse_csv_text(text, origin);
    if (raw.records.empty()) {
        if (opt.header) fail("malformed-csv", origin + ": empty file, expected a header row");
        return make_table(table_id, {}, {}, Provenance::source(origin));
    }

    size_t ncols = raw.records.front().size();
    for (size_t r = 0; r < raw.records.size(); ++r) {
        if (raw.records[r].size() != ncols)
            fail("malformed-csv", origin + ": line " + std::to_string(r + 1) + " has " +
                                      std::to_string(raw.records[r].size()) +
                                      " fields, expected " + std::to_string(ncols));
    }

    std::vector<std::string> names;
    size_t first_data = 0;
    if (opt.header) {
        names = detail::dedupe_names(raw.records.front());
        first_data = 1;
    } else {
        for (size_t i = 0; i < ncols; ++i) names.push_back("c" + std::to_string(i + 1));
    }

    size_t nrows = raw.records.size() - first_data;

    // Column-level inference: a column is number when every non-null cell
    // parses as a float, boolean when every non-null cell is true/false,
    // text otherwise.
    std::vector<ColumnType> types(ncols, ColumnType::Text);
    if (opt.type_inference) {
        for (size_t c = 0; c < ncols; ++c) {
            bool all_number = true, all_boolean = true, any_value = false;
            for (size_t r = 0; r < nrows; ++r) {
                const auto& cell = raw.records[r + first_data][c];
                if (detail::is_null_token(cell, opt)) continue;
                any_value = true;
                if (all_number && !parse_number(cell)) all_number = false;
                if (all_boolean && !parse_boolean(cell)) all_boolean = false;
                if (!all_number && !all_boolean) break;
            }
            if (!any_value)
                types[c] = ColumnType::Text;
            else if (all_boolean)
                types[c] = ColumnType::Boolean;
            else if (all_number)
                types[c] = ColumnType::Number;
            else
                types[c] = ColumnType::Text;
        }
    }

    std::vector<Row> rows;
    rows.reserve(nrows);
    for (size_t r = 0; r < nrows; ++r) {
        Row row;
        row.reserve(ncols);
        for (size_t c = 0; c < ncols; ++c) {
            const auto& cell = raw.records[r + first_data][c];
            if (detail::is_null_token(cell, opt)) {
                row.push_back(Value::null());
            } else if (types[c] == ColumnType::Number) {
                row.push_back(Value::number(*parse_number(cell)));
            } else if (types[c] == ColumnType::Boolean) {
                row.push_back(Value::boolean(*parse_boolean(cell)));
            } else {
                row.push_back(Value::text(cell));
            }
        }
        rows.push_back(std::move(row));
    }

    std::vector<ColumnSpec> schema;
    for (size_t c = 0; c < ncols; ++c) schema.push_back({names[c], types[c], ""});
    return make_table(table_id, std::move(schema), std::move(rows), Provenance::source(origin));
}

inline TablePtr load_csv(const std::filesystem::path& path, const CsvOptions& opt = {},
                         std::string table_id = "") {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("file-not-found", "cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (table_id.empty()) {
        table_id = path.stem().string();
        // Table ids join column ids as "<table>.<column>"; keep them free of
        // the separator characters.
        for (char& c : table_id)
            if (c == '.' || c == '#') c = '_';
    }
    return load_csv_text(buf.str(), table_id, opt, path.string());
}

inline std::string csv_escape(const std::string& s) {
    bool needs_quotes = s.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs_quotes) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

inline std::string write_csv_string(const Table& t) {
    std::string out;
    for (size_t c = 0; c < t.column_count(); ++c) {
        if (c) out += ',';
        out += csv_escape(t.schema()[c].name);
    }
    out += '\n';
    for (const auto& row : t.rows()) {
        for (size_t c = 0; c < row.size(); ++c) {
            if (c) out += ',';
            out += csv_escape(render(row[c]));
        }
        out += '\n';
    }
    return out;
}

inline void write_csv(const Table& t, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("file-not-found", "cannot open '" + path.string() + "' for writing");
    out << write_csv_string(t);
}

} // namespace planql

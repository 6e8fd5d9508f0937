#include <catch2/catch_amalgamated.hpp>

#include "planql/csv.hpp"
#include "planql/table.hpp"

using namespace planql;

static TablePtr small_table() {
    return load_csv_text("id,name\n1,ann\n2,bo\n3,cy\n4,dee\n5,eli", "pets");
}

TEST_CASE("table construction rejects ragged rows") {
    CHECK_THROWS_AS(Table("t", {{"a", ColumnType::Text, ""}}, {{Value::number(1), Value::number(2)}}),
                    Error);
}

TEST_CASE("require_column names the offender and the schema") {
    auto t = small_table();
    try {
        t->require_column("nope");
        FAIL("expected unknown-column");
    } catch (const Error& e) {
        CHECK(e.kind() == "unknown-column");
        CHECK(std::string(e.what()).find("'nope'") != std::string::npos);
        CHECK(std::string(e.what()).find("'name'") != std::string::npos);
    }
}

TEST_CASE("sample_rows: zero case, full case, determinism") {
    auto t = small_table();

    auto zero = sample_rows(*t, 0, 99);
    CHECK(zero->row_count() == 0);
    CHECK(zero->column_count() == t->column_count());

    auto all = sample_rows(*t, t->row_count(), 5);
    REQUIRE(all->row_count() == t->row_count());
    // permutation: every original row appears exactly once
    for (const auto& orig : t->rows()) {
        int found = 0;
        for (const auto& got : all->rows())
            if (identity_equal(got[0], orig[0]) && identity_equal(got[1], orig[1])) ++found;
        CHECK(found == 1);
    }

    auto a = sample_rows(*t, 3, 42);
    auto b = sample_rows(*t, 3, 42);
    REQUIRE(a->row_count() == 3);
    for (size_t r = 0; r < 3; ++r)
        for (size_t c = 0; c < 2; ++c) CHECK(identity_equal(a->rows()[r][c], b->rows()[r][c]));

    auto c = sample_rows(*t, 3, 43);
    CHECK(c->row_count() == 3); // different seed still honors the bound
    CHECK(sample_rows(*t, 100, 1)->row_count() == t->row_count());
}

TEST_CASE("describe_table: empty table mentions 0 rows and lists columns") {
    auto t = load_csv_text("alpha,beta", "empty");
    auto text = describe_table(*t);
    CHECK(text.find("0 rows") != std::string::npos);
    CHECK(text.find("alpha") != std::string::npos);
    CHECK(text.find("beta") != std::string::npos);
}

TEST_CASE("describe_table: sample bound respected on a 10k-row table") {
    std::vector<Row> rows;
    for (int i = 0; i < 10000; ++i) rows.push_back({Value::number(i)});
    auto t = make_table("big", {{"n", ColumnType::Number, ""}}, std::move(rows));
    auto text = describe_table(*t, 5);
    CHECK(text.find("sample rows (first 5 of 10000)") != std::string::npos);
    // exactly 5 sample lines after the sample header
    size_t pos = text.find("sample rows");
    int lines = 0;
    for (size_t i = text.find('\n', pos) + 1; i < text.size();) {
        size_t next = text.find('\n', i);
        if (next == std::string::npos) break;
        ++lines;
        i = next + 1;
    }
    CHECK(lines == 5);
}

TEST_CASE("describe_table: 8058-column synthetic schema stays under the byte cap") {
    std::vector<ColumnSpec> schema;
    for (int i = 0; i < 8058; ++i)
        schema.push_back({"SatDom_band_mean_" + std::to_string(i), ColumnType::Number, ""});
    Row row;
    for (int i = 0; i < 8058; ++i) row.push_back(Value::number(i));
    auto t = make_table("wide", schema, {row, row});

    const size_t cap = 8192;
    auto text = describe_table(*t, 5, cap);
    CHECK(text.size() <= cap);
    CHECK(text.find("more columns") != std::string::npos);
    CHECK(text.find("8058 columns") != std::string::npos);
}

TEST_CASE("describe_table truncates long cells with a marker") {
    std::string longcell(500, 'x');
    auto t = make_table("t", {{"c", ColumnType::Text, ""}}, {{Value::text(longcell)}});
    auto text = describe_table(*t);
    CHECK(text.find(std::string(120, 'x') + "...") != std::string::npos);
    CHECK(text.find(std::string(121, 'x')) == std::string::npos);
}

TEST_CASE("immutability: operators never mutate inputs (spot check via share)") {
    auto t = small_table();
    auto s = sample_rows(*t, 2, 1);
    CHECK(t->row_count() == 5);
    CHECK(s->row_count() == 2);
}

#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <random>

#include "planql/csv.hpp"
#include "planql/index.hpp"

using namespace planql;
using nlohmann::json;

static std::string fixture(const std::string& rel) {
    return std::string(PLANQL_FIXTURES) + "/" + rel;
}

static std::vector<TablePtr> wide_tables() {
    std::vector<TablePtr> out;
    for (const char* name : {"bom_weather", "phen_crop", "sat_spectral"})
        out.push_back(load_csv(fixture(std::string("wide/") + name + ".csv")));
    return out;
}

static json load_golden() {
    std::ifstream in(fixture("golden/alg2_golden.json"));
    REQUIRE(in);
    return json::parse(in);
}

TEST_CASE("cosine_sim: self is 1, orthogonal is 0, random pairs match a loop oracle") {
    Embedding u{1, 2, 3}, v{0, 0, 0.5};
    CHECK(cosine_sim(u, u) == Catch::Approx(1.0).margin(1e-12));
    CHECK(cosine_sim({1, 0}, {0, 1}) == Catch::Approx(0.0).margin(1e-12));

    std::mt19937_64 rng(11);
    for (int i = 0; i < 50; ++i) {
        Embedding a(8), b(8);
        for (auto& x : a) x = static_cast<double>(rng() % 1000) / 500.0 - 1.0;
        for (auto& x : b) x = static_cast<double>(rng() % 1000) / 500.0 - 1.0;
        double dot = 0, na = 0, nb = 0;
        for (size_t j = 0; j < 8; ++j) {
            dot += a[j] * b[j];
            na += a[j] * a[j];
            nb += b[j] * b[j];
        }
        if (na == 0 || nb == 0) continue;
        double want = dot / (std::sqrt(na) * std::sqrt(nb));
        CHECK(cosine_sim(a, b) == Catch::Approx(want).margin(1e-12));
        CHECK(cosine_sim(a, b) >= -1.0 - 1e-12);
        CHECK(cosine_sim(a, b) <= 1.0 + 1e-12);
    }

    CHECK_THROWS_AS(cosine_sim({1, 2}, {1, 2, 3}), Error);
    CHECK_THROWS_AS(cosine_sim({0, 0}, {1, 2}), Error);
}

TEST_CASE("thresholds default to 0.75 everywhere") {
    Thresholds t;
    CHECK(t.theta_t == 0.75);
    CHECK(t.theta_c == 0.75);
    CHECK(t.theta_l == 0.75);
}

TEST_CASE("build_index: degenerate single-column table gives 1/1/1 entries") {
    auto t = load_csv_text("only\n1\n2", "solo");
    StubDescriber describer;
    StubEmbedder embedder;
    auto store = build_index({t}, describer, embedder);
    CHECK(store.columns.size() == 1);
    CHECK(store.clusters.size() == 1);
    CHECK(store.tables.size() == 1);
    CHECK(store.columns[0].id == "solo.only");
    CHECK(store.clusters[0].id == "solo#0");
    REQUIRE(store.clusters[0].members.size() == 1);
    CHECK(store.clusters[0].members[0] == "solo.only");
}

TEST_CASE("build_index: identical descriptions always share a cluster") {
    // two columns with identical names and values -> identical descriptions
    auto t = make_table("twins",
                        {{"v", ColumnType::Number, ""}, {"v", ColumnType::Number, ""}},
                        {{Value::number(1), Value::number(1)}});
    StubDescriber describer;
    StubEmbedder embedder;
    auto store = build_index({t}, describer, embedder, 1.0);
    CHECK(store.clusters.size() == 1);
    CHECK(store.clusters[0].members.size() == 2);
}

TEST_CASE("build_index: zero-column tables are skipped with a warning") {
    auto empty = make_table("none", {}, {});
    auto t = load_csv_text("a\n1", "ok");
    StubDescriber describer;
    StubEmbedder embedder;
    std::vector<std::string> warnings;
    auto store = build_index({empty, t}, describer, embedder, 0.8, &warnings);
    CHECK(store.tables.size() == 1);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("none") != std::string::npos);
}

TEST_CASE("build_index on the wide fixture matches the reference clustering oracle") {
    auto golden = load_golden();
    StubDescriber describer;
    StubEmbedder embedder;
    auto store = build_index(wide_tables(), describer, embedder,
                             golden.at("cluster_sim").get<double>());

    CHECK(store.columns.size() == golden.at("store_sizes").at("columns").get<size_t>());
    CHECK(store.clusters.size() == golden.at("store_sizes").at("clusters").get<size_t>());
    CHECK(store.tables.size() == golden.at("store_sizes").at("tables").get<size_t>());

    for (const auto& cluster : store.clusters) {
        REQUIRE(golden.at("clusters").contains(cluster.id));
        auto want = golden.at("clusters").at(cluster.id).get<std::vector<std::string>>();
        CHECK(cluster.members == want);
    }
}

TEST_CASE("hierarchy consistency: cluster members partition each table's columns") {
    StubDescriber describer;
    StubEmbedder embedder;
    auto tables = wide_tables();
    auto store = build_index(tables, describer, embedder, 0.45);
    for (const auto& t : tables) {
        std::set<std::string> from_clusters;
        size_t member_total = 0;
        for (const auto& c : store.clusters) {
            if (table_of_entry_id(c.id) != t->id()) continue;
            member_total += c.members.size();
            from_clusters.insert(c.members.begin(), c.members.end());
        }
        std::set<std::string> expect;
        for (const auto& col : t->schema()) expect.insert(column_id(t->id(), col.name));
        CHECK(from_clusters == expect);
        CHECK(member_total == expect.size()); // no overlaps
    }
}

TEST_CASE("build_index with deterministic providers is a pure function") {
    StubDescriber d1, d2;
    StubEmbedder e1, e2;
    auto a = store_to_json(build_index(wide_tables(), d1, e1, 0.45));
    auto b = store_to_json(build_index(wide_tables(), d2, e2, 0.45));
    CHECK(a == b);
}

TEST_CASE("query_relevant_columns: degenerate thresholds return everything affirmed") {
    StubDescriber describer;
    StubEmbedder embedder;
    auto store = build_index(wide_tables(), describer, embedder, 0.45);
    AffirmAllValidator affirm;
    Thresholds low{-1.0, -1.0, -1.0};
    auto got = query_relevant_columns("anything at all", store, low, affirm, embedder);
    CHECK(got.size() == store.columns.size());

    // a validator that denies every table yields the empty set, not an error
    ScriptedValidator deny;
    auto none = query_relevant_columns("anything", store, low, deny, embedder);
    CHECK(none.empty());
}

TEST_CASE("query_relevant_columns reproduces the hand-traced golden set") {
    auto golden = load_golden();
    StubDescriber describer;
    StubEmbedder embedder;
    auto store = build_index(wide_tables(), describer, embedder,
                             golden.at("cluster_sim").get<double>());
    auto validator = ScriptedValidator::from_json(golden.at("validator"));
    Thresholds thr{golden.at("thresholds").at("theta_t").get<double>(),
                   golden.at("thresholds").at("theta_c").get<double>(),
                   golden.at("thresholds").at("theta_l").get<double>()};

    auto got = query_relevant_columns(golden.at("question").get<std::string>(), store, thr,
                                      validator, embedder);
    auto want = golden.at("relevant_columns").get<std::set<std::string>>();
    CHECK(got == want);
}

TEST_CASE("threshold monotonicity: lowering thresholds never shrinks the result") {
    auto golden = load_golden();
    StubDescriber describer;
    StubEmbedder embedder;
    auto store = build_index(wide_tables(), describer, embedder, 0.45);
    auto validator = ScriptedValidator::from_json(golden.at("validator"));
    std::string q = golden.at("question").get<std::string>();

    std::mt19937_64 rng(77);
    auto u = [&] { return static_cast<double>(rng() % 2001) / 1000.0 - 1.0; };
    for (int i = 0; i < 40; ++i) {
        Thresholds hi{u(), u(), u()};
        Thresholds lo{hi.theta_t - 0.2, hi.theta_c - 0.2, hi.theta_l - 0.2};
        auto s_hi = query_relevant_columns(q, store, hi, validator, embedder);
        auto s_lo = query_relevant_columns(q, store, lo, validator, embedder);
        for (const auto& c : s_hi) CHECK(s_lo.count(c) == 1);
    }
}

TEST_CASE("store persists to JSON and back unchanged") {
    StubDescriber describer;
    StubEmbedder embedder;
    auto store = build_index(wide_tables(), describer, embedder, 0.45);
    auto j = store_to_json(store);
    auto back = store_from_json(j);
    CHECK(store_to_json(back) == j);
    CHECK(back.columns.size() == store.columns.size());
    CHECK(back.clusters[1].members == store.clusters[1].members);
}

TEST_CASE("stub embedder: unit norm, identical texts identical vectors, domain affinity") {
    auto e = StubEmbedder::embed_one("crop yield tons");
    double norm = 0;
    for (double x : e) norm += x * x;
    CHECK(std::sqrt(norm) == Catch::Approx(1.0).margin(1e-12));

    CHECK(StubEmbedder::embed_one("same text") == StubEmbedder::embed_one("same text"));

    double near = cosine_sim(StubEmbedder::embed_one("crop yield"),
                             StubEmbedder::embed_one("grain yield tons"));
    double far = cosine_sim(StubEmbedder::embed_one("crop yield"),
                            StubEmbedder::embed_one("satellite band reflectance"));
    CHECK(near > far);
}

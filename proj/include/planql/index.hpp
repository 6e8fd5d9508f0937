#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "planql/providers.hpp"
#include "planql/table.hpp"

namespace planql {

// ---------------------------------------------------------------------------
// Three-level vector store over schema descriptions: columns, clusters of
// columns within a table, and tables. Ids are hierarchical by convention:
//   column  "<table>.<column>"   (tables never contain '.' or '#')
//   cluster "<table>#<k>"
//   table   "<table>"
// ---------------------------------------------------------------------------

struct ColumnEntry {
    std::string id;
    std::string description;
    Embedding embedding;
};

struct ClusterEntry {
    std::string id;
    std::string description;
    Embedding embedding;
    std::vector<std::string> members; // column ids
};

struct TableEntry {
    std::string id;
    std::string description;
    Embedding embedding;
};

struct Thresholds {
    double theta_t = 0.75;
    double theta_c = 0.75;
    double theta_l = 0.75;
};

struct VectorStore {
    std::vector<ColumnEntry> columns;
    std::vector<ClusterEntry> clusters;
    std::vector<TableEntry> tables;
};

inline std::string column_id(const std::string& table, const std::string& column) {
    return table + "." + column;
}

inline std::string table_of_entry_id(const std::string& id) {
    size_t dot = id.find('.');
    size_t hash = id.find('#');
    size_t cut = std::min(dot, hash);
    return cut == std::string::npos ? id : id.substr(0, cut);
}

inline double cosine_sim(const Embedding& u, const Embedding& v) {
    if (u.size() != v.size())
        fail("dimension-mismatch", "embeddings of size " + std::to_string(u.size()) + " and " +
                                       std::to_string(v.size()));
    double dot = 0, nu = 0, nv = 0;
    for (size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) fail("zero-vector", "cosine similarity of a zero vector");
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

// ---------------------------------------------------------------------------
// Description and relevance contracts. LLM-backed in production, scripted
// or deterministic in tests.
// ---------------------------------------------------------------------------

struct ColumnContext {
    std::string table_id;
    std::string name;
    ColumnType type = ColumnType::Text;
    std::vector<std::string> sample_values; // up to 10 distinct non-null values
};

class Describer {
public:
    virtual ~Describer() = default;
    virtual std::string describe_column(const ColumnContext& ctx) = 0;
    // Summarizes member descriptions into a cluster or table description.
    virtual std::string summarize(const std::string& scope_id,
                                  const std::vector<std::string>& member_descriptions) = 0;
};

enum class ClusterRelevance { Irrelevant, WholeCluster, Partial };

class Validator {
public:
    virtual ~Validator() = default;
    virtual bool table_relevant(const std::string& question, const std::string& id,
                                const std::string& description) = 0;
    virtual ClusterRelevance cluster_relevance(const std::string& question, const std::string& id,
                                               const std::string& description) = 0;
    virtual bool column_relevant(const std::string& question, const std::string& id,
                                 const std::string& description) = 0;
};

// Grounded deterministic describer: name, type, and sample values. The
// samples matter; a name alone routinely misleads retrieval. The format
// is deliberately terse so shared filler words don't wash out the
// bag-of-words similarity structure.
class StubDescriber : public Describer {
public:
    std::string describe_column(const ColumnContext& ctx) override {
        std::string out = ctx.table_id + "." + ctx.name + " (" + to_string(ctx.type) + "):";
        for (const auto& v : ctx.sample_values) out += " " + v + ";";
        return out;
    }

    std::string summarize(const std::string& scope_id,
                          const std::vector<std::string>& member_descriptions) override {
        std::string out = scope_id + ":";
        for (const auto& d : member_descriptions) out += " " + d;
        return out;
    }
};

class AffirmAllValidator : public Validator {
public:
    bool table_relevant(const std::string&, const std::string&, const std::string&) override {
        return true;
    }
    ClusterRelevance cluster_relevance(const std::string&, const std::string&,
                                       const std::string&) override {
        return ClusterRelevance::Partial;
    }
    bool column_relevant(const std::string&, const std::string&, const std::string&) override {
        return true;
    }
};

// Table-driven validator for tests: answers keyed by entry id, everything
// else denied.
class ScriptedValidator : public Validator {
public:
    std::map<std::string, bool> tables;
    std::map<std::string, ClusterRelevance> clusters;
    std::map<std::string, bool> columns;

    static ScriptedValidator from_json(const nlohmann::json& j) {
        ScriptedValidator v;
        if (j.contains("tables"))
            for (auto& [k, val] : j.at("tables").items()) v.tables[k] = val.get<bool>();
        if (j.contains("clusters"))
            for (auto& [k, val] : j.at("clusters").items()) {
                std::string s = val.get<std::string>();
                if (s == "whole") v.clusters[k] = ClusterRelevance::WholeCluster;
                else if (s == "partial") v.clusters[k] = ClusterRelevance::Partial;
                else v.clusters[k] = ClusterRelevance::Irrelevant;
            }
        if (j.contains("columns"))
            for (auto& [k, val] : j.at("columns").items()) v.columns[k] = val.get<bool>();
        return v;
    }

    bool table_relevant(const std::string&, const std::string& id, const std::string&) override {
        auto it = tables.find(id);
        return it != tables.end() && it->second;
    }
    ClusterRelevance cluster_relevance(const std::string&, const std::string& id,
                                       const std::string&) override {
        auto it = clusters.find(id);
        return it == clusters.end() ? ClusterRelevance::Irrelevant : it->second;
    }
    bool column_relevant(const std::string&, const std::string& id, const std::string&) override {
        auto it = columns.find(id);
        return it != columns.end() && it->second;
    }
};

// ---------------------------------------------------------------------------
// Build: describe and embed every column, leader-cluster columns within
// each table, then summarize upward into cluster and table entries.
// ---------------------------------------------------------------------------

inline std::vector<std::string> distinct_sample_values(const Table& t, size_t col,
                                                       size_t limit = 10) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& row : t.rows()) {
        const Value& v = row[col];
        if (v.is_null()) continue;
        std::string s = detail::truncate_cell(render(v), 40);
        if (seen.insert(s).second) {
            out.push_back(s);
            if (out.size() >= limit) break;
        }
    }
    return out;
}

inline VectorStore build_index(const std::vector<TablePtr>& tables, Describer& describer,
                               EmbedProvider& embedder, double cluster_sim = 0.80,
                               std::vector<std::string>* warnings = nullptr) {
    if (tables.empty()) fail("invalid-spec", "build_index needs at least one table");
    VectorStore store;

    for (const auto& t : tables) {
        if (t->column_count() == 0) {
            if (warnings)
                warnings->push_back("table '" + t->id() + "' has no columns; skipped");
            continue;
        }

        std::vector<std::string> descriptions;
        descriptions.reserve(t->column_count());
        for (size_t c = 0; c < t->column_count(); ++c) {
            ColumnContext ctx{t->id(), t->schema()[c].name, t->schema()[c].type,
                              distinct_sample_values(*t, c)};
            descriptions.push_back(describer.describe_column(ctx));
        }
        auto embeddings = embedder.embed(descriptions);
        if (embeddings.size() != descriptions.size())
            fail("dimension-inconsistency", "embedder returned " +
                                                std::to_string(embeddings.size()) +
                                                " vectors for " +
                                                std::to_string(descriptions.size()) + " texts");

        size_t first_col = store.columns.size();
        for (size_t c = 0; c < t->column_count(); ++c)
            store.columns.push_back(
                {column_id(t->id(), t->schema()[c].name), descriptions[c], embeddings[c]});

        // Leader clustering in schema order: join the first cluster whose
        // leader is similar enough, else found a new one.
        std::vector<std::vector<size_t>> cluster_members; // indices into this table's columns
        std::vector<size_t> leaders;
        for (size_t c = 0; c < t->column_count(); ++c) {
            bool placed = false;
            for (size_t g = 0; g < leaders.size() && !placed; ++g) {
                if (cosine_sim(embeddings[c], embeddings[leaders[g]]) >= cluster_sim) {
                    cluster_members[g].push_back(c);
                    placed = true;
                }
            }
            if (!placed) {
                leaders.push_back(c);
                cluster_members.push_back({c});
            }
        }

        std::vector<std::string> cluster_descs;
        for (size_t g = 0; g < cluster_members.size(); ++g) {
            std::string cid = t->id() + "#" + std::to_string(g);
            std::vector<std::string> member_descs;
            std::vector<std::string> member_ids;
            for (size_t c : cluster_members[g]) {
                member_descs.push_back(descriptions[c]);
                member_ids.push_back(store.columns[first_col + c].id);
            }
            std::string desc = describer.summarize(cid, member_descs);
            cluster_descs.push_back(desc);
            store.clusters.push_back({cid, desc, {}, std::move(member_ids)});
        }
        auto cluster_embeddings = embedder.embed(cluster_descs);
        for (size_t g = 0; g < cluster_descs.size(); ++g)
            store.clusters[store.clusters.size() - cluster_descs.size() + g].embedding =
                cluster_embeddings[g];

        std::string table_desc = describer.summarize(t->id(), cluster_descs);
        store.tables.push_back({t->id(), table_desc, embedder.embed({table_desc})[0]});
    }
    return store;
}

// ---------------------------------------------------------------------------
// Query: hierarchical retrieval per the three thresholds, with relevance
// validation at each level. A cluster validated as a whole contributes all
// of its columns; a partially relevant one descends to per-column checks.
// ---------------------------------------------------------------------------

inline std::set<std::string> query_relevant_columns(const std::string& question,
                                                    const VectorStore& store,
                                                    const Thresholds& thr, Validator& validator,
                                                    EmbedProvider& embedder) {
    if (store.tables.empty()) fail("invalid-spec", "query over an empty store");
    Embedding q = embedder.embed({question})[0];

    std::map<std::string, const ColumnEntry*> column_by_id;
    for (const auto& c : store.columns) column_by_id[c.id] = &c;

    std::set<std::string> relevant;
    for (const auto& table : store.tables) {
        if (cosine_sim(q, table.embedding) < thr.theta_t) continue;
        if (!validator.table_relevant(question, table.id, table.description)) continue;

        for (const auto& cluster : store.clusters) {
            if (table_of_entry_id(cluster.id) != table.id) continue;
            if (cosine_sim(q, cluster.embedding) < thr.theta_c) continue;
            ClusterRelevance rel =
                validator.cluster_relevance(question, cluster.id, cluster.description);
            if (rel == ClusterRelevance::Irrelevant) continue;
            if (rel == ClusterRelevance::WholeCluster) {
                relevant.insert(cluster.members.begin(), cluster.members.end());
                continue;
            }
            for (const auto& member : cluster.members) {
                auto it = column_by_id.find(member);
                if (it == column_by_id.end())
                    fail("malformed-plan", "store references unknown column '" + member + "'");
                const ColumnEntry& col = *it->second;
                if (cosine_sim(q, col.embedding) < thr.theta_l) continue;
                if (validator.column_relevant(question, col.id, col.description))
                    relevant.insert(col.id);
            }
        }
    }
    return relevant;
}

// ---------------------------------------------------------------------------
// Persistence: one JSON document with the three entry arrays.
// ---------------------------------------------------------------------------

inline nlohmann::json store_to_json(const VectorStore& store) {
    nlohmann::json j{{"columns", nlohmann::json::array()},
                     {"clusters", nlohmann::json::array()},
                     {"tables", nlohmann::json::array()}};
    for (const auto& c : store.columns)
        j["columns"].push_back(
            {{"id", c.id}, {"description", c.description}, {"embedding", c.embedding}});
    for (const auto& g : store.clusters)
        j["clusters"].push_back({{"id", g.id},
                                 {"description", g.description},
                                 {"embedding", g.embedding},
                                 {"members", g.members}});
    for (const auto& t : store.tables)
        j["tables"].push_back(
            {{"id", t.id}, {"description", t.description}, {"embedding", t.embedding}});
    return j;
}

inline VectorStore store_from_json(const nlohmann::json& j) {
    VectorStore store;
    for (const auto& c : j.at("columns"))
        store.columns.push_back({c.at("id").get<std::string>(),
                                 c.at("description").get<std::string>(),
                                 c.at("embedding").get<Embedding>()});
    for (const auto& g : j.at("clusters"))
        store.clusters.push_back({g.at("id").get<std::string>(),
                                  g.at("description").get<std::string>(),
                                  g.at("embedding").get<Embedding>(),
                                  g.value("members", std::vector<std::string>{})});
    for (const auto& t : j.at("tables"))
        store.tables.push_back({t.at("id").get<std::string>(),
                                t.at("description").get<std::string>(),
                                t.at("embedding").get<Embedding>()});
    return store;
}

inline void save_store(const VectorStore& store, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("file-not-found", "cannot open '" + path + "' for writing");
    out << store_to_json(store).dump(2) << "\n";
}

inline VectorStore load_store(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("file-not-found", "cannot open '" + path + "'");
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) fail("malformed-plan", "store file '" + path + "' is not valid JSON");
    return store_from_json(j);
}

} // namespace planql

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "planql/agent.hpp"
#include "planql/csv.hpp"
#include "planql/plan.hpp"

namespace planql {

// ---------------------------------------------------------------------------
// Cell and table comparison. Numeric cells compare with relative 1e-9
// (absolute 1e-12 near zero); column names are ignored and column order is
// normalized by greedy multiset agreement before rows are compared.
// ---------------------------------------------------------------------------

inline bool cells_match(const Value& a, const Value& b) {
    if (a.type() != b.type()) return false;
    switch (a.type()) {
        case ValueType::Null: return true;
        case ValueType::Boolean: return a.as_bool() == b.as_bool();
        case ValueType::Number: {
            double x = a.as_number(), y = b.as_number();
            double tol = std::max(1e-12, 1e-9 * std::max(std::fabs(x), std::fabs(y)));
            return std::fabs(x - y) <= tol;
        }
        case ValueType::Text: return a.as_text() == b.as_text();
    }
    return false;
}

namespace detail {

inline std::vector<Value> column_values(const Table& t, size_t col) {
    std::vector<Value> out;
    out.reserve(t.row_count());
    for (const auto& r : t.rows()) out.push_back(r[col]);
    return out;
}

// Size of a maximal greedy matching between two cell multisets.
inline size_t multiset_overlap(const std::vector<Value>& a, const std::vector<Value>& b) {
    std::vector<bool> used(b.size(), false);
    size_t n = 0;
    for (const auto& x : a) {
        for (size_t j = 0; j < b.size(); ++j) {
            if (used[j]) continue;
            if (cells_match(x, b[j])) {
                used[j] = true;
                ++n;
                break;
            }
        }
    }
    return n;
}

// Greedy one-to-one column assignment maximizing per-pair multiset
// agreement; returns map truth column -> result column.
inline std::vector<size_t> match_columns(const Table& result, const Table& truth) {
    size_t n = truth.column_count();
    std::vector<std::vector<size_t>> score(n, std::vector<size_t>(n, 0));
    std::vector<std::vector<Value>> rcols, tcols;
    for (size_t i = 0; i < n; ++i) rcols.push_back(column_values(result, i));
    for (size_t j = 0; j < n; ++j) tcols.push_back(column_values(truth, j));
    for (size_t j = 0; j < n; ++j)
        for (size_t i = 0; i < n; ++i) score[j][i] = multiset_overlap(tcols[j], rcols[i]);

    std::vector<size_t> assign(n, SIZE_MAX);
    std::vector<bool> r_used(n, false);
    for (size_t round = 0; round < n; ++round) {
        size_t best_j = SIZE_MAX, best_i = SIZE_MAX;
        long long best = -1;
        for (size_t j = 0; j < n; ++j) {
            if (assign[j] != SIZE_MAX) continue;
            for (size_t i = 0; i < n; ++i) {
                if (r_used[i]) continue;
                if (static_cast<long long>(score[j][i]) > best) {
                    best = static_cast<long long>(score[j][i]);
                    best_j = j;
                    best_i = i;
                }
            }
        }
        assign[best_j] = best_i;
        r_used[best_i] = true;
    }
    return assign;
}

} // namespace detail

inline bool exact_match(const Table& result, const Table& truth, bool order_sensitive) {
    if (result.column_count() != truth.column_count()) return false;
    if (result.row_count() != truth.row_count()) return false;
    if (truth.column_count() == 0) return true;

    auto assign = detail::match_columns(result, truth);

    auto rows_equal = [&](const Row& r, const Row& t) {
        for (size_t j = 0; j < assign.size(); ++j)
            if (!cells_match(r[assign[j]], t[j])) return false;
        return true;
    };

    if (order_sensitive) {
        for (size_t i = 0; i < truth.row_count(); ++i)
            if (!rows_equal(result.rows()[i], truth.rows()[i])) return false;
        return true;
    }
    std::vector<bool> used(result.row_count(), false);
    for (const auto& t : truth.rows()) {
        bool found = false;
        for (size_t i = 0; i < result.row_count() && !found; ++i) {
            if (used[i]) continue;
            if (rows_equal(result.rows()[i], t)) {
                used[i] = true;
                found = true;
            }
        }
        if (!found) return false;
    }
    return true;
}

// (1/|truth|) * |pred - truth| * 100; a prediction counts as correct when
// this is at most 10.
inline double percentage_error(double pred, double truth) {
    if (truth == 0.0) fail("zero-truth", "percentage error is undefined for truth = 0");
    return std::fabs(pred - truth) / std::fabs(truth) * 100.0;
}

inline constexpr double kCorrectPctThreshold = 10.0;

inline bool prediction_correct(double pred, double truth) {
    return percentage_error(pred, truth) <= kCorrectPctThreshold + 1e-9;
}

// ---------------------------------------------------------------------------
// Cases and reports.
// ---------------------------------------------------------------------------

enum class Hardness { Easy, Medium, Hard, Extra };

inline const char* to_string(Hardness h) {
    switch (h) {
        case Hardness::Easy: return "easy";
        case Hardness::Medium: return "medium";
        case Hardness::Hard: return "hard";
        case Hardness::Extra: return "extra";
    }
    return "?";
}

inline Hardness hardness_from_string(const std::string& s) {
    if (s == "easy") return Hardness::Easy;
    if (s == "medium") return Hardness::Medium;
    if (s == "hard") return Hardness::Hard;
    if (s == "extra") return Hardness::Extra;
    fail("malformed-manifest", "unknown hardness '" + s + "'");
}

enum class CaseKind { TableResult, NumericResult };

struct QueryCase {
    std::string case_id;
    std::string question;
    std::map<std::string, std::string> tables; // name -> csv path
    std::string truth_path;                    // table cases
    std::optional<double> truth_scalar;        // numeric cases
    bool order_sensitive = false;
    Hardness hardness = Hardness::Easy;
    CaseKind kind = CaseKind::TableResult;
    std::string plan_path;  // replay runner
    std::string trace_path; // scripted runner
    std::optional<int> budget;
};

enum class Outcome { T, F, S };

inline const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::T: return "T";
        case Outcome::F: return "F";
        case Outcome::S: return "S";
    }
    return "?";
}

struct BucketStats {
    int attempted = 0;
    int correct = 0;
    int incorrect = 0;
    int unanswered = 0;
};

struct CaseOutcome {
    std::string case_id;
    Outcome outcome = Outcome::F;
    std::string reason;
};

struct EvalReport {
    std::map<Hardness, BucketStats> buckets;
    double overall_em = 0.0; // percent
    std::vector<CaseOutcome> outcomes;
};

inline std::vector<QueryCase> parse_suite_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("file-not-found", "cannot open manifest '" + path.string() + "'");
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) fail("malformed-manifest", "manifest is not valid JSON");
    if (!j.is_object() || !j.contains("cases") || !j.at("cases").is_array())
        fail("malformed-manifest", "manifest needs a top-level \"cases\" array");

    auto base = path.parent_path();
    auto resolve = [&](const std::string& p) { return (base / p).string(); };

    std::vector<QueryCase> cases;
    for (const auto& c : j.at("cases")) {
        if (!c.is_object() || !c.contains("id") || !c.contains("question") ||
            !c.contains("tables") || !c.contains("hardness"))
            fail("malformed-manifest", "case needs id, question, tables, hardness: " + c.dump());
        QueryCase q;
        q.case_id = c.at("id").get<std::string>();
        q.question = c.at("question").get<std::string>();
        for (auto& [name, p] : c.at("tables").items())
            q.tables[name] = resolve(p.get<std::string>());
        q.hardness = hardness_from_string(c.at("hardness").get<std::string>());
        q.order_sensitive = c.value("order_sensitive", false);
        std::string kind = c.value("kind", "table");
        if (kind == "table") q.kind = CaseKind::TableResult;
        else if (kind == "numeric") q.kind = CaseKind::NumericResult;
        else fail("malformed-manifest", "kind must be table or numeric, got '" + kind + "'");
        if (!c.contains("truth")) fail("malformed-manifest", "case '" + q.case_id + "' has no truth");
        if (c.at("truth").is_number()) q.truth_scalar = c.at("truth").get<double>();
        else q.truth_path = resolve(c.at("truth").get<std::string>());
        if (q.kind == CaseKind::NumericResult && !q.truth_scalar)
            fail("malformed-manifest", "numeric case '" + q.case_id + "' needs a numeric truth");
        if (c.contains("plan")) q.plan_path = resolve(c.at("plan").get<std::string>());
        if (c.contains("trace")) q.trace_path = resolve(c.at("trace").get<std::string>());
        if (c.contains("budget")) q.budget = c.at("budget").get<int>();
        cases.push_back(std::move(q));
    }
    return cases;
}

inline std::vector<std::string> load_trace_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("file-not-found", "cannot open trace '" + path + "'");
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_array())
        fail("malformed-manifest", "trace file must be a JSON array of turn texts");
    std::vector<std::string> turns;
    for (const auto& t : j) turns.push_back(t.get<std::string>());
    return turns;
}

struct SuiteRunner {
    enum class Mode { Replay, Scripted, Live };
    Mode mode = Mode::Replay;
    AgentConfig agent;
    ChatProvider* live_llm = nullptr;
    EmbedProvider* embedder = nullptr;
    Describer* describer = nullptr;
    Validator* validator = nullptr;
};

namespace detail {

struct CaseResult {
    bool answered = false;
    bool unanswered = false;
    TablePtr table;
    std::string text;
};

inline CaseResult run_case(const QueryCase& q, const SuiteRunner& runner) {
    std::map<std::string, TablePtr> tables;
    for (const auto& [name, path] : q.tables) tables[name] = load_csv(path, {}, name);

    CaseResult res;
    if (runner.mode == SuiteRunner::Mode::Replay) {
        if (q.plan_path.empty()) fail("malformed-manifest", "replay runner needs a plan file");
        std::ifstream in(q.plan_path, std::ios::binary);
        if (!in) fail("file-not-found", "cannot open plan '" + q.plan_path + "'");
        nlohmann::json plan = nlohmann::json::parse(in, nullptr, false);
        if (plan.is_discarded()) fail("malformed-plan", "plan file is not valid JSON");
        res.table = replay(plan, tables);
        res.answered = true;
        return res;
    }

    AgentConfig cfg = runner.agent;
    if (q.budget) cfg.budget = *q.budget;
    std::unique_ptr<ScriptedChat> scripted;
    ChatProvider* llm = runner.live_llm;
    if (runner.mode == SuiteRunner::Mode::Scripted) {
        if (q.trace_path.empty()) fail("malformed-manifest", "scripted runner needs a trace file");
        scripted = std::make_unique<ScriptedChat>(load_trace_file(q.trace_path));
        llm = scripted.get();
    }
    if (!llm) fail("invalid-config", "live runner needs a chat provider");

    AgentDeps deps{*llm, runner.embedder, runner.describer, runner.validator, nullptr};
    auto run = run_agent(q.question, tables, cfg, deps);
    if (run.status == RunStatus::Unanswered) {
        res.unanswered = true;
        return res;
    }
    if (run.status == RunStatus::Error) fail("provider-unreachable", run.answer_text);
    res.answered = true;
    res.table = run.answer_table;
    res.text = run.answer_text;
    return res;
}

inline std::optional<double> scalar_of(const CaseResult& res) {
    if (res.table && res.table->row_count() == 1 && res.table->column_count() == 1) {
        const Value& v = res.table->rows()[0][0];
        return coerce_numeric(v);
    }
    if (!res.text.empty()) return parse_number(res.text);
    return std::nullopt;
}

} // namespace detail

// Outcome convention follows the paper's tables: T correct, F incorrect,
// S unanswered within budget. A broken fixture fails its case, never the
// suite.
inline EvalReport run_suite(const std::vector<QueryCase>& cases, const SuiteRunner& runner) {
    EvalReport report;
    for (const auto& q : cases) {
        CaseOutcome out;
        out.case_id = q.case_id;
        auto& bucket = report.buckets[q.hardness];
        ++bucket.attempted;
        try {
            auto res = detail::run_case(q, runner);
            if (res.unanswered) {
                out.outcome = Outcome::S;
                out.reason = "budget exhausted";
            } else if (q.kind == CaseKind::NumericResult) {
                auto scalar = detail::scalar_of(res);
                if (!scalar) {
                    out.outcome = Outcome::F;
                    out.reason = "no numeric answer produced";
                } else if (prediction_correct(*scalar, *q.truth_scalar)) {
                    out.outcome = Outcome::T;
                } else {
                    out.outcome = Outcome::F;
                    out.reason = "percentage error " +
                                 format_number(percentage_error(*scalar, *q.truth_scalar)) +
                                 " exceeds " + format_number(kCorrectPctThreshold);
                }
            } else {
                CsvOptions truth_opt;
                truth_opt.backslash_n_null = true;
                TablePtr truth = load_csv(q.truth_path, truth_opt, "truth");
                TablePtr answer = res.table;
                if (!answer) {
                    // Literal text answer compared as a 1x1 table.
                    Value v = parse_number(res.text) ? Value::number(*parse_number(res.text))
                                                     : Value::text(res.text);
                    answer = make_table("answer", {{"answer", ColumnType::Text, ""}},
                                        {{v}});
                }
                out.outcome = exact_match(*answer, *truth, q.order_sensitive) ? Outcome::T
                                                                              : Outcome::F;
                if (out.outcome == Outcome::F) out.reason = "result does not match truth";
            }
        } catch (const Error& e) {
            out.outcome = Outcome::F;
            out.reason = std::string(e.kind()) + ": " + e.what();
        }
        if (out.outcome == Outcome::T) ++bucket.correct;
        else if (out.outcome == Outcome::F) ++bucket.incorrect;
        else ++bucket.unanswered;
        report.outcomes.push_back(std::move(out));
    }

    int attempted = 0, correct = 0;
    for (const auto& [h, b] : report.buckets) {
        attempted += b.attempted;
        correct += b.correct;
    }
    report.overall_em = attempted == 0 ? 0.0 : 100.0 * correct / attempted;
    return report;
}

inline std::string report_to_text(const EvalReport& report) {
    std::ostringstream os;
    os << "hardness   attempted  T    F    S    EM%\n";
    for (Hardness h : {Hardness::Easy, Hardness::Medium, Hardness::Hard, Hardness::Extra}) {
        auto it = report.buckets.find(h);
        if (it == report.buckets.end()) continue;
        const auto& b = it->second;
        double em = b.attempted == 0 ? 0.0 : 100.0 * b.correct / b.attempted;
        char line[128];
        std::snprintf(line, sizeof(line), "%-10s %-10d %-4d %-4d %-4d %.2f\n", to_string(h),
                      b.attempted, b.correct, b.incorrect, b.unanswered, em);
        os << line;
    }
    char overall[64];
    std::snprintf(overall, sizeof(overall), "overall EM: %.2f%%\n", report.overall_em);
    os << overall;
    for (const auto& o : report.outcomes) {
        os << o.case_id << ": " << to_string(o.outcome);
        if (!o.reason.empty()) os << " (" << o.reason << ")";
        os << "\n";
    }
    return os.str();
}

inline nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json buckets = nlohmann::json::object();
    for (const auto& [h, b] : report.buckets)
        buckets[to_string(h)] = {{"attempted", b.attempted},
                                 {"correct", b.correct},
                                 {"incorrect", b.incorrect},
                                 {"unanswered", b.unanswered}};
    nlohmann::json outcomes = nlohmann::json::array();
    for (const auto& o : report.outcomes) {
        nlohmann::json jo{{"case", o.case_id}, {"outcome", to_string(o.outcome)}};
        if (!o.reason.empty()) jo["reason"] = o.reason;
        outcomes.push_back(jo);
    }
    return nlohmann::json{
        {"overall_em", report.overall_em}, {"buckets", buckets}, {"outcomes", outcomes}};
}

} // namespace planql

// Acceptance suite: one criterion per check, one PASS/FAIL line each.
// Exits nonzero when any criterion fails.
//
//   acceptance [cli-binary] [repo-root]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "planql/agent.hpp"
#include "planql/analytics.hpp"
#include "planql/config.hpp"
#include "planql/csv.hpp"
#include "planql/eval.hpp"
#include "planql/index.hpp"

#include "reference/eigen_oracle.hpp"
#include "reference/random_tables.hpp"

namespace fs = std::filesystem;
using namespace planql;

namespace {

std::string g_bin = PLANQL_BIN;
std::string g_root = PLANQL_REPO_ROOT;

std::string fixtures() { return g_root + "/tests/fixtures"; }

struct Shell {
    int code;
    std::string out;
};

Shell shell(const std::string& cmd) {
    static int counter = 0;
    fs::path dir = fs::temp_directory_path() / "planql_acceptance";
    fs::create_directories(dir);
    fs::path out = dir / ("out" + std::to_string(counter++) + ".txt");
    std::string full = "cd \"" + g_root + "\" && " + cmd + " > " + out.string() + " 2>/dev/null";
    int status = std::system(full.c_str());
    std::ifstream in(out, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, buf.str()};
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

bool multiset_equal_csv(const std::string& a_csv, const std::string& b_csv) {
    auto a = load_csv_text(a_csv, "a");
    auto b = load_csv_text(b_csv, "b");
    if (a->column_count() != b->column_count() || a->row_count() != b->row_count())
        return false;
    return refops::same_rows_multiset(a->rows(), b->rows());
}

// ---------------------------------------------------------------------------

std::string figure1_end_to_end() {
    auto start = Clock::now();
    auto run = shell("\"" + g_bin + "\" ask \"Which countries in Europe have at least 3 car "
                     "manufacturers?\" --tables " + fixtures() + "/cars --trace " + fixtures() +
                     "/traces/figure1.json --providers stub");
    if (run.code != 0) return "cmd_ask exited " + std::to_string(run.code);
    auto oracle = shell("python3 tests/oracles/figure1_oracle.py");
    if (oracle.code != 0) return "oracle script exited " + std::to_string(oracle.code);
    if (!multiset_equal_csv(run.out, oracle.out))
        return "answer differs from the brute-force oracle:\n" + run.out + "--\n" + oracle.out;
    double elapsed = seconds_since(start);
    if (elapsed >= 5.0) return "took " + std::to_string(elapsed) + "s (budget 5s)";
    return "";
}

std::string operator_oracle_suite() {
    auto start = Clock::now();
    auto failures = refops::run_oracle_suite(200, 987654321ull);
    if (!failures.empty())
        return std::to_string(failures.size()) + " mismatches; first: " + failures.front();
    double elapsed = seconds_since(start);
    if (elapsed >= 60.0) return "took " + std::to_string(elapsed) + "s (budget 60s)";
    return "";
}

std::string regression_pack() {
    auto cases = parse_suite_manifest(fixtures() + "/suite/regression.json");
    if (cases.size() != 6) return "expected 6 cases, found " + std::to_string(cases.size());
    SuiteRunner runner;
    runner.mode = SuiteRunner::Mode::Replay;
    auto report = run_suite(cases, runner);
    for (const auto& o : report.outcomes)
        if (o.outcome != Outcome::T)
            return o.case_id + " -> " + to_string(o.outcome) + " (" + o.reason + ")";
    return "";
}

std::string pca_numerics() {
    auto start = Clock::now();
    std::mt19937_64 rng(160914);
    for (int trial = 0; trial < 5; ++trial) {
        // random 6-column fixture with correlated structure
        std::vector<ColumnSpec> schema;
        for (int c = 0; c < 6; ++c)
            schema.push_back({"v" + std::to_string(c), ColumnType::Number, ""});
        std::vector<Row> rows;
        auto unit = [&] { return static_cast<double>(rng() % 10000) / 10000.0 - 0.5; };
        for (int r = 0; r < 60; ++r) {
            double base = unit() * 4.0, second = unit() * 2.0;
            Row row;
            for (int c = 0; c < 6; ++c)
                row.push_back(Value::number(base * (1.0 + 0.45 * c) +
                                            second * (c % 2 ? 1.2 : -0.7) + unit() * 0.2));
            rows.push_back(std::move(row));
        }
        auto t = make_table("rand", schema, rows);
        std::vector<std::string> cols;
        for (const auto& c : schema) cols.push_back(c.name);
        auto res = pca(*t, cols, 6);

        // orthonormality within 1e-8
        for (size_t a = 0; a < 6; ++a)
            for (size_t b = 0; b < 6; ++b) {
                double dot = 0;
                for (size_t j = 0; j < 6; ++j)
                    dot += res.components->rows()[a][j + 1].as_number() *
                           res.components->rows()[b][j + 1].as_number();
                double want = a == b ? 1.0 : 0.0;
                if (std::fabs(dot - want) > 1e-8)
                    return "orthonormality violated at trial " + std::to_string(trial);
            }
        // explained variance non-increasing
        for (size_t c = 1; c < 6; ++c)
            if (res.explained_variance[c - 1] < res.explained_variance[c] - 1e-12)
                return "explained variance increased at component " + std::to_string(c);

        // covariance for the residual and oracle comparison
        refops::OracleMatrix cov(6, std::vector<double>(6, 0.0));
        std::vector<double> mean(6, 0.0);
        for (const auto& r : rows)
            for (int c = 0; c < 6; ++c) mean[c] += r[c].as_number();
        for (auto& m : mean) m /= static_cast<double>(rows.size());
        for (const auto& r : rows)
            for (int i = 0; i < 6; ++i)
                for (int j = 0; j < 6; ++j)
                    cov[i][j] += (r[i].as_number() - mean[i]) * (r[j].as_number() - mean[j]);
        for (auto& rrow : cov)
            for (auto& x : rrow) x /= static_cast<double>(rows.size() - 1);

        // eigenpair residual ||cov v - lambda v||_inf <= 1e-6
        for (size_t k = 0; k < 6; ++k) {
            std::vector<double> v(6);
            for (int j = 0; j < 6; ++j) v[j] = res.components->rows()[k][j + 1].as_number();
            auto av = refops::oracle_mat_vec(cov, v);
            for (int j = 0; j < 6; ++j)
                if (std::fabs(av[j] - res.explained_variance[k] * v[j]) > 1e-6)
                    return "eigenpair residual above 1e-6 at component " + std::to_string(k);
        }
        // top eigenvalues agree with the brute-force power-method oracle
        auto oracle = refops::power_eigen(cov, 3);
        for (size_t k = 0; k < 3; ++k)
            if (std::fabs(oracle[k].value - res.explained_variance[k]) > 1e-6)
                return "eigenvalue " + std::to_string(k) + " differs from the oracle";
    }
    double elapsed = seconds_since(start);
    if (elapsed >= 10.0) return "took " + std::to_string(elapsed) + "s (budget 10s)";
    return "";
}

std::string algorithm2_golden_trace() {
    std::ifstream in(fixtures() + "/golden/alg2_golden.json");
    if (!in) return "missing golden file";
    auto golden = nlohmann::json::parse(in);

    std::vector<TablePtr> tables;
    for (const char* name : {"bom_weather", "phen_crop", "sat_spectral"})
        tables.push_back(load_csv(fixtures() + "/wide/" + name + ".csv"));
    StubDescriber describer;
    StubEmbedder embedder;
    auto store =
        build_index(tables, describer, embedder, golden.at("cluster_sim").get<double>());
    auto validator = ScriptedValidator::from_json(golden.at("validator"));
    Thresholds thr{golden.at("thresholds").at("theta_t").get<double>(),
                   golden.at("thresholds").at("theta_c").get<double>(),
                   golden.at("thresholds").at("theta_l").get<double>()};
    std::string question = golden.at("question").get<std::string>();

    auto got = query_relevant_columns(question, store, thr, validator, embedder);
    auto want = golden.at("relevant_columns").get<std::set<std::string>>();
    if (got != want) {
        std::string diag = "retrieved set differs; got:";
        for (const auto& c : got) diag += " " + c;
        return diag;
    }

    // threshold monotonicity over 100 random threshold pairs
    std::mt19937_64 rng(271828);
    auto u = [&] { return static_cast<double>(rng() % 2001) / 1000.0 - 1.0; };
    for (int i = 0; i < 100; ++i) {
        Thresholds hi{u(), u(), u()};
        double dt = static_cast<double>(rng() % 500) / 1000.0;
        Thresholds lo{hi.theta_t - dt, hi.theta_c - dt, hi.theta_l - dt};
        auto s_hi = query_relevant_columns(question, store, hi, validator, embedder);
        auto s_lo = query_relevant_columns(question, store, lo, validator, embedder);
        for (const auto& c : s_hi)
            if (!s_lo.count(c)) return "monotonicity violated at pair " + std::to_string(i);
    }
    return "";
}

std::string defaults_audit() {
    Thresholds t;
    if (t.theta_t != 0.75 || t.theta_c != 0.75 || t.theta_l != 0.75)
        return "Thresholds defaults are not 0.75";
    Config cfg;
    if (cfg.thresholds.theta_t != 0.75 || cfg.thresholds.theta_c != 0.75 ||
        cfg.thresholds.theta_l != 0.75)
        return "Config threshold defaults are not 0.75";
    if (cfg.cluster_sim != 0.80) return "cluster_sim default is not 0.80";
    if (cfg.budget != 15) return "budget default is not 15";
    AgentConfig agent;
    if (agent.thresholds.theta_t != 0.75 || agent.budget != 15)
        return "AgentConfig defaults drifted";
    return "";
}

std::string budget_semantics() {
    std::ifstream in(fixtures() + "/traces/noop15.json");
    ScriptedChat llm(nlohmann::json::parse(in).get<std::vector<std::string>>());
    std::map<std::string, TablePtr> tables{
        {"countries", load_csv(fixtures() + "/cars/countries.csv")}};
    AgentConfig cfg;
    cfg.budget = 15;
    cfg.prompts_dir = g_root + "/prompts";
    auto result = run_agent("anything", tables, cfg, {llm});
    if (result.status != RunStatus::Unanswered)
        return "expected unanswered, got a different status";
    if (result.state.iteration != 15)
        return "expected exactly 15 iterations, got " +
               std::to_string(result.state.iteration);
    if (result.state.transcript.size() != 15) return "transcript length drifted from budget";
    return "";
}

std::string percentage_error_rule() {
    if (!prediction_correct(1.10 * 73.0, 73.0)) return "boundary 1.10*truth not correct";
    if (prediction_correct(1.12 * 73.0, 73.0)) return "1.12*truth counted as correct";
    std::mt19937_64 rng(424242);
    for (int i = 0; i < 1000; ++i) {
        double truth = (static_cast<double>(rng() % 200000) - 100000.0) / 100.0;
        if (truth == 0.0) continue;
        double pred = (static_cast<double>(rng() % 200000) - 100000.0) / 100.0;
        double want = std::fabs(pred - truth) / std::fabs(truth) * 100.0;
        if (std::fabs(percentage_error(pred, truth) - want) > 1e-12)
            return "formula deviates at pair " + std::to_string(i);
    }
    return "";
}

std::string determinism() {
    fs::path dir = fs::temp_directory_path() / "planql_acceptance";
    fs::create_directories(dir);
    std::string replay_cmd = "\"" + g_bin + "\" replay --plan " + fixtures() +
                             "/plans/figure1.json --tables " + fixtures() + "/cars";
    auto r1 = shell(replay_cmd);
    auto r2 = shell(replay_cmd);
    if (r1.code != 0 || r2.code != 0) return "cmd_replay failed";
    if (r1.out != r2.out) return "cmd_replay outputs differ between runs";

    fs::path s1 = dir / "det_store1.json";
    fs::path s2 = dir / "det_store2.json";
    std::string index_cmd = "\"" + g_bin + "\" index --tables " + fixtures() +
                            "/wide --providers stub --out ";
    if (shell(index_cmd + s1.string()).code != 0) return "cmd_index run 1 failed";
    if (shell(index_cmd + s2.string()).code != 0) return "cmd_index run 2 failed";
    std::ifstream f1(s1, std::ios::binary), f2(s2, std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    if (b1.empty() || b1 != b2) return "cmd_index store files differ between runs";
    return "";
}

} // namespace

int main(int argc, char** argv) {
    if (argc > 1) g_bin = argv[1];
    if (argc > 2) g_root = argv[2];

    struct Criterion {
        const char* name;
        std::function<std::string()> run;
    };
    const std::vector<Criterion> criteria = {
        {"figure-1 end-to-end (scripted trace vs brute-force oracle, <5s)", figure1_end_to_end},
        {"operator oracle suite (200 random instances per operator, <60s)", operator_oracle_suite},
        {"ground-truth regression pack (6 replayed cases all T)", regression_pack},
        {"pca numerics (orthonormality 1e-8, residual 1e-6, variance order, <10s)", pca_numerics},
        {"hierarchical retrieval golden trace + threshold monotonicity", algorithm2_golden_trace},
        {"defaults audit (theta_t = theta_c = theta_l = 0.75)", defaults_audit},
        {"budget semantics (no-progress trace, budget 15, unanswered)", budget_semantics},
        {"percentage-error rule (boundary at 10%, 1000 random pairs)", percentage_error_rule},
        {"determinism (cmd_replay and stub cmd_index byte-identical)", determinism},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        std::string diag;
        try {
            diag = c.run();
        } catch (const std::exception& e) {
            diag = std::string("exception: ") + e.what();
        }
        if (diag.empty()) {
            std::cout << "PASS — " << c.name << "\n";
        } else {
            ++failures;
            std::cout << "FAIL — " << c.name << ": " << diag << "\n";
        }
    }
    std::cout << (failures == 0 ? "all criteria passed" : "criteria failed") << " ("
              << criteria.size() - failures << "/" << criteria.size() << ")\n";
    return failures == 0 ? 0 : 1;
}

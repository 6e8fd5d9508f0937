// planql: answer natural-language questions over CSV tables by building
// executable operation trees. Subcommands: index, ask, replay, eval.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "planql/agent.hpp"
#include "planql/config.hpp"
#include "planql/csv.hpp"
#include "planql/eval.hpp"
#include "planql/http_client.hpp"
#include "planql/index.hpp"
#include "planql/llm_schema_providers.hpp"
#include "planql/plan.hpp"

namespace fs = std::filesystem;
using namespace planql;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitUnanswered = 2;

struct GlobalOpts {
    std::string config_path;
    std::string providers = "http"; // http | stub
    int budget_flag = -1;           // -1 = not set
};

Config effective_config(const GlobalOpts& opts) {
    Config cfg;
    std::string path = opts.config_path;
    if (path.empty()) {
        if (const char* env = std::getenv("PLANQL_CONFIG")) path = env;
    }
    if (!path.empty()) cfg = load_config(path);
    apply_env_overrides(cfg);
    if (opts.budget_flag > 0) cfg.budget = opts.budget_flag;
    validate_config(cfg);
    return cfg;
}

std::map<std::string, TablePtr> load_tables_dir(const std::string& dir) {
    if (!fs::is_directory(dir)) fail("file-not-found", "'" + dir + "' is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) fail("file-not-found", "no tables found in '" + dir + "'");
    std::map<std::string, TablePtr> tables;
    for (const auto& f : files) {
        auto t = load_csv(f);
        tables[t->id()] = t;
    }
    return tables;
}

// Provider bundle owning whichever implementations the mode needs.
struct Providers {
    std::unique_ptr<ChatProvider> chat;
    std::unique_ptr<EmbedProvider> embedder;
    std::unique_ptr<Describer> describer;
    std::unique_ptr<Validator> validator;
    std::unique_ptr<PromptLibrary> prompts;
};

Providers make_providers(const Config& cfg, const GlobalOpts& opts,
                         const std::string& trace_path) {
    Providers p;
    if (!trace_path.empty()) {
        p.chat = std::make_unique<ScriptedChat>(load_trace_file(trace_path));
    } else if (opts.providers == "http") {
        p.chat = std::make_unique<HttpChatProvider>(cfg.llm);
    }
    if (opts.providers == "stub") {
        p.embedder = std::make_unique<StubEmbedder>();
        p.describer = std::make_unique<StubDescriber>();
        p.validator = std::make_unique<AffirmAllValidator>();
    } else {
        p.embedder = std::make_unique<HttpEmbedProvider>(cfg.embedder);
        p.prompts = std::make_unique<PromptLibrary>(cfg.prompts_dir);
        if (!p.chat) p.chat = std::make_unique<HttpChatProvider>(cfg.llm);
        p.describer = std::make_unique<LlmDescriber>(*p.chat, *p.prompts);
        p.validator = std::make_unique<LlmValidator>(*p.chat, *p.prompts);
    }
    return p;
}

int cmd_index(const GlobalOpts& opts, const std::string& tables_dir, const std::string& out,
              double cluster_sim_flag) {
    Config cfg = effective_config(opts);
    if (cluster_sim_flag >= -1.0) cfg.cluster_sim = cluster_sim_flag;
    auto tables_map = load_tables_dir(!tables_dir.empty() ? tables_dir : cfg.tables_dir);
    std::vector<TablePtr> tables;
    for (const auto& [name, t] : tables_map) tables.push_back(t);

    Providers p = make_providers(cfg, opts, "");
    std::vector<std::string> warnings;
    auto store = build_index(tables, *p.describer, *p.embedder, cfg.cluster_sim, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";

    std::string out_path = !out.empty() ? out : cfg.index_path;
    if (out_path.empty()) fail("invalid-config", "no output path; pass --out or paths.index_path");
    save_store(store, out_path);
    std::cout << "columns=" << store.columns.size() << " clusters=" << store.clusters.size()
              << " tables=" << store.tables.size() << "\n";
    return kExitOk;
}

int cmd_ask(const GlobalOpts& opts, const std::string& question, const std::string& tables_dir,
            const std::string& trace, const std::string& emit_plan,
            const std::string& index_path) {
    Config cfg = effective_config(opts);
    auto tables = load_tables_dir(!tables_dir.empty() ? tables_dir : cfg.tables_dir);
    Providers p = make_providers(cfg, opts, trace);
    if (!p.chat) fail("invalid-config", "stub providers need --trace for ask");

    VectorStore store;
    AgentDeps deps{*p.chat, p.embedder.get(), p.describer.get(), p.validator.get(), nullptr};
    std::string store_path = !index_path.empty() ? index_path : cfg.index_path;
    if (!store_path.empty() && fs::exists(store_path)) {
        store = load_store(store_path);
        deps.store = &store;
    }

    auto result = run_agent(question, tables, cfg.agent_config(), deps);
    if (result.status == RunStatus::Error) fail("provider-unreachable", result.answer_text);
    if (result.status == RunStatus::Unanswered) {
        std::cerr << "unanswered: iteration budget (" << cfg.budget << ") exhausted\n";
        return kExitUnanswered;
    }

    if (!emit_plan.empty()) {
        if (result.state.registry.root_id()) {
            std::ofstream out(emit_plan, std::ios::binary);
            if (!out) fail("file-not-found", "cannot write plan to '" + emit_plan + "'");
            out << plan_to_json(result.state.registry, *result.state.registry.root_id()).dump(1)
                << "\n";
        } else {
            std::cerr << "note: literal-text answer has no plan to emit\n";
        }
    }

    if (result.answer_table) {
        std::cout << write_csv_string(*result.answer_table);
    } else {
        TablePtr t = make_table("answer", {{"answer", ColumnType::Text, ""}},
                                {{Value::text(result.answer_text)}});
        std::cout << write_csv_string(*t);
    }
    return kExitOk;
}

int cmd_replay(const GlobalOpts& opts, const std::string& plan_path,
               const std::string& tables_dir) {
    Config cfg = effective_config(opts);
    std::ifstream in(plan_path, std::ios::binary);
    if (!in) fail("file-not-found", "cannot open plan '" + plan_path + "'");
    nlohmann::json plan = nlohmann::json::parse(in, nullptr, false);
    if (plan.is_discarded()) fail("malformed-plan", "plan file is not valid JSON");

    auto tables = load_tables_dir(!tables_dir.empty() ? tables_dir : cfg.tables_dir);
    auto result = replay(plan, tables);
    std::cout << write_csv_string(*result);
    return kExitOk;
}

int cmd_eval(const GlobalOpts& opts, const std::string& suite_path, const std::string& mode,
             const std::string& report_path) {
    Config cfg = effective_config(opts);
    auto cases = parse_suite_manifest(suite_path);

    SuiteRunner runner;
    runner.agent = cfg.agent_config();
    Providers p;
    if (mode == "replay") {
        runner.mode = SuiteRunner::Mode::Replay;
    } else if (mode == "scripted") {
        runner.mode = SuiteRunner::Mode::Scripted;
    } else if (mode == "live") {
        runner.mode = SuiteRunner::Mode::Live;
        p = make_providers(cfg, opts, "");
        if (!p.chat) fail("invalid-config", "live eval needs a chat provider");
        runner.live_llm = p.chat.get();
        runner.embedder = p.embedder.get();
        runner.describer = p.describer.get();
        runner.validator = p.validator.get();
    } else {
        fail("invalid-config", "runner must be replay, scripted, or live; got '" + mode + "'");
    }

    auto report = run_suite(cases, runner);
    std::cout << report_to_text(report);
    if (!report_path.empty()) {
        std::ofstream out(report_path, std::ios::binary);
        if (!out) fail("file-not-found", "cannot write report to '" + report_path + "'");
        out << report_to_json(report).dump(1) << "\n";
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tree-driven question answering over tabular files"};
    app.require_subcommand(1);

    GlobalOpts opts;
    app.add_option("--config", opts.config_path,
                   "config file (key = value); falls back to $PLANQL_CONFIG");
    app.add_option("--providers", opts.providers, "provider mode: http or stub")
        ->check(CLI::IsMember({"http", "stub"}));
    app.add_option("--budget", opts.budget_flag, "iteration budget override");

    std::string tables_dir, out_path, question, trace, emit_plan, index_path, plan_path;
    std::string suite_path, runner_mode = "replay", report_path;
    double cluster_sim_flag = -2.0;

    auto* index = app.add_subcommand("index", "build the three-level schema index");
    index->add_option("--tables", tables_dir, "directory of CSV files");
    index->add_option("--out", out_path, "store file to write");
    index->add_option("--cluster-sim", cluster_sim_flag, "leader clustering threshold");

    auto* ask = app.add_subcommand("ask", "answer a question over a table directory");
    ask->add_option("question", question, "natural-language question")->required();
    ask->add_option("--tables", tables_dir, "directory of CSV files");
    ask->add_option("--trace", trace, "scripted model trace (JSON array of turns)");
    ask->add_option("--emit-plan", emit_plan, "write the answer plan to this file");
    ask->add_option("--index", index_path, "prebuilt schema index for wide tables");

    auto* rep = app.add_subcommand("replay", "execute a serialized plan");
    rep->add_option("--plan", plan_path, "plan file")->required();
    rep->add_option("--tables", tables_dir, "directory of CSV files");

    auto* ev = app.add_subcommand("eval", "run an evaluation suite");
    ev->add_option("--suite", suite_path, "suite manifest")->required();
    ev->add_option("--runner", runner_mode, "replay, scripted, or live");
    ev->add_option("--report", report_path, "write the machine-readable report here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(index))
            return cmd_index(opts, tables_dir, out_path, cluster_sim_flag);
        if (app.got_subcommand(ask))
            return cmd_ask(opts, question, tables_dir, trace, emit_plan, index_path);
        if (app.got_subcommand(rep)) return cmd_replay(opts, plan_path, tables_dir);
        if (app.got_subcommand(ev)) return cmd_eval(opts, suite_path, runner_mode, report_path);
    } catch (const Error& e) {
        std::cerr << "error[" << e.kind() << "]: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}

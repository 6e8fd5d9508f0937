#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "planql/agent.hpp"
#include "planql/providers.hpp"

namespace planql {

// Engine configuration. File values override these defaults; environment
// variables override the file; command-line flags override everything.
struct Config {
    ProviderConfig llm;
    ProviderConfig embedder;
    Thresholds thresholds;      // theta_t = theta_c = theta_l = 0.75
    double cluster_sim = 0.80;
    int budget = 15;
    size_t wide_table_threshold = 120;
    size_t observation_cap = 16384;
    size_t describe_cap = 8192;
    size_t sample_rows = 5;
    std::string tables_dir;
    std::string index_path;
    std::string prompts_dir = "prompts";

    AgentConfig agent_config() const {
        AgentConfig a;
        a.budget = budget;
        a.wide_table_threshold = wide_table_threshold;
        a.caps.observation_bytes = observation_cap;
        a.caps.describe_bytes = describe_cap;
        a.caps.sample_rows = sample_rows;
        a.prompts_dir = prompts_dir;
        a.thresholds = thresholds;
        a.cluster_sim = cluster_sim;
        return a;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    return s;
}

inline double config_number(const std::string& key, const std::string& value) {
    auto n = parse_number(value);
    if (!n) fail("invalid-config", "key '" + key + "' needs a number, got '" + value + "'");
    return *n;
}

} // namespace detail

// Flat key = value document (a TOML subset): comments with #, strings
// optionally double-quoted, dotted key names. Unknown keys are rejected so
// typos never silently fall back to defaults.
inline void apply_config_line(Config& cfg, const std::string& key, const std::string& raw) {
    using detail::config_number;
    std::string value = detail::unquote(raw);

    auto provider_key = [&](ProviderConfig& p, const std::string& sub) {
        if (sub == "endpoint") p.endpoint = value;
        else if (sub == "model") p.model = value;
        else if (sub == "api_key_env") p.api_key_env = value;
        else if (sub == "timeout_s") p.timeout_s = config_number(key, value);
        else if (sub == "retry_attempts") p.retry.attempts = static_cast<int>(config_number(key, value));
        else if (sub == "retry_base_ms") p.retry.base_delay_ms = static_cast<int>(config_number(key, value));
        else if (sub == "requests_per_minute") p.requests_per_minute = config_number(key, value);
        else fail("invalid-config", "unknown key '" + key + "'");
    };

    if (key.rfind("llm.", 0) == 0) provider_key(cfg.llm, key.substr(4));
    else if (key.rfind("embedder.", 0) == 0) provider_key(cfg.embedder, key.substr(9));
    else if (key == "thresholds.theta_t") cfg.thresholds.theta_t = config_number(key, value);
    else if (key == "thresholds.theta_c") cfg.thresholds.theta_c = config_number(key, value);
    else if (key == "thresholds.theta_l") cfg.thresholds.theta_l = config_number(key, value);
    else if (key == "thresholds.cluster_sim") cfg.cluster_sim = config_number(key, value);
    else if (key == "agent.budget") cfg.budget = static_cast<int>(config_number(key, value));
    else if (key == "agent.wide_table_threshold")
        cfg.wide_table_threshold = static_cast<size_t>(config_number(key, value));
    else if (key == "agent.observation_cap")
        cfg.observation_cap = static_cast<size_t>(config_number(key, value));
    else if (key == "agent.describe_cap")
        cfg.describe_cap = static_cast<size_t>(config_number(key, value));
    else if (key == "agent.sample_rows")
        cfg.sample_rows = static_cast<size_t>(config_number(key, value));
    else if (key == "paths.tables_dir") cfg.tables_dir = value;
    else if (key == "paths.index_path") cfg.index_path = value;
    else if (key == "paths.prompts_dir") cfg.prompts_dir = value;
    else fail("invalid-config", "unknown key '" + key + "'");
}

inline void validate_config(const Config& cfg) {
    auto in_range = [](double v) { return v >= -1.0 && v <= 1.0; };
    if (!in_range(cfg.thresholds.theta_t) || !in_range(cfg.thresholds.theta_c) ||
        !in_range(cfg.thresholds.theta_l) || !in_range(cfg.cluster_sim))
        fail("invalid-config", "thresholds must lie in [-1, 1]");
    if (cfg.budget < 1) fail("invalid-config", "agent.budget must be >= 1");
    if (cfg.llm.retry.attempts < 1 || cfg.embedder.retry.attempts < 1)
        fail("invalid-config", "retry attempts must be >= 1");
    if (cfg.llm.timeout_s <= 0 || cfg.embedder.timeout_s <= 0)
        fail("invalid-config", "timeouts must be > 0");
}

inline Config parse_config_text(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            fail("invalid-config", "line " + std::to_string(lineno) + " is not key = value");
        std::string key = detail::trim(t.substr(0, eq));
        std::string value = detail::trim(t.substr(eq + 1));
        apply_config_line(cfg, key, value);
    }
    validate_config(cfg);
    return cfg;
}

inline Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("file-not-found", "cannot open config '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

// Environment overrides (between file values and command-line flags).
inline void apply_env_overrides(Config& cfg) {
    if (const char* v = std::getenv("PLANQL_BUDGET")) {
        auto n = parse_number(v);
        if (!n) fail("invalid-config", "PLANQL_BUDGET must be a number");
        cfg.budget = static_cast<int>(*n);
    }
    validate_config(cfg);
}

} // namespace planql

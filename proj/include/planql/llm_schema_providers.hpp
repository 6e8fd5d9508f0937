#pragma once

// LLM-backed description and relevance providers for index building and
// hierarchical retrieval. The deterministic doubles used in tests live in
// index.hpp; these are their production counterparts.

#include <cctype>
#include <string>
#include <vector>

#include "planql/index.hpp"
#include "planql/prompts.hpp"
#include "planql/providers.hpp"

namespace planql {

namespace detail {

inline std::string first_word_lower(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (std::isalpha(static_cast<unsigned char>(c)))
            out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        else if (!out.empty())
            break;
    }
    return out;
}

} // namespace detail

class LlmDescriber : public Describer {
public:
    LlmDescriber(ChatProvider& llm, PromptLibrary& prompts) : llm_(llm), prompts_(prompts) {}

    std::string describe_column(const ColumnContext& ctx) override {
        std::string samples;
        for (const auto& v : ctx.sample_values) {
            if (!samples.empty()) samples += ", ";
            samples += v;
        }
        std::string prompt = prompts_.render("column_describe_v1", {{"table", ctx.table_id},
                                                                    {"name", ctx.name},
                                                                    {"type", to_string(ctx.type)},
                                                                    {"samples", samples}});
        return llm_.complete({{"user", prompt}});
    }

    std::string summarize(const std::string& scope_id,
                          const std::vector<std::string>& member_descriptions) override {
        std::string joined;
        for (const auto& d : member_descriptions) joined += "- " + d + "\n";
        bool cluster = scope_id.find('#') != std::string::npos;
        std::string prompt = prompts_.render(
            cluster ? "cluster_summarize_v1" : "table_summarize_v1", {{"descriptions", joined}});
        return llm_.complete({{"user", prompt}});
    }

private:
    ChatProvider& llm_;
    PromptLibrary& prompts_;
};

class LlmValidator : public Validator {
public:
    LlmValidator(ChatProvider& llm, PromptLibrary& prompts) : llm_(llm), prompts_(prompts) {}

    bool table_relevant(const std::string& question, const std::string&,
                        const std::string& description) override {
        return ask_yes_no("validate_table_v1", question, description);
    }

    ClusterRelevance cluster_relevance(const std::string& question, const std::string&,
                                       const std::string& description) override {
        std::string prompt = prompts_.render(
            "validate_cluster_v1", {{"question", question}, {"description", description}});
        std::string word = detail::first_word_lower(llm_.complete({{"user", prompt}}));
        if (word == "whole") return ClusterRelevance::WholeCluster;
        if (word == "partial") return ClusterRelevance::Partial;
        return ClusterRelevance::Irrelevant;
    }

    bool column_relevant(const std::string& question, const std::string&,
                         const std::string& description) override {
        return ask_yes_no("validate_column_v1", question, description);
    }

private:
    bool ask_yes_no(const std::string& templ, const std::string& question,
                    const std::string& description) {
        std::string prompt =
            prompts_.render(templ, {{"question", question}, {"description", description}});
        return detail::first_word_lower(llm_.complete({{"user", prompt}})) == "yes";
    }

    ChatProvider& llm_;
    PromptLibrary& prompts_;
};

} // namespace planql

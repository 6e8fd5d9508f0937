#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "planql/error.hpp"

namespace planql {

// Prompt templates are versioned files under prompts/, not inline
// constants; {{placeholders}} are substituted at call sites.
class PromptLibrary {
public:
    explicit PromptLibrary(std::string dir) : dir_(std::move(dir)) {}

    const std::string& get(const std::string& name) {
        auto it = cache_.find(name);
        if (it != cache_.end()) return it->second;
        std::filesystem::path path = std::filesystem::path(dir_) / (name + ".txt");
        std::ifstream in(path, std::ios::binary);
        if (!in) fail("prompt-missing", "no prompt template at '" + path.string() + "'");
        std::ostringstream buf;
        buf << in.rdbuf();
        return cache_.emplace(name, buf.str()).first->second;
    }

    std::string render(const std::string& name,
                       const std::map<std::string, std::string>& vars) {
        std::string out = get(name);
        for (const auto& [key, value] : vars) {
            std::string token = "{{" + key + "}}";
            size_t pos = 0;
            while ((pos = out.find(token, pos)) != std::string::npos) {
                out.replace(pos, token.size(), value);
                pos += value.size();
            }
        }
        return out;
    }

private:
    std::string dir_;
    std::map<std::string, std::string> cache_;
};

} // namespace planql

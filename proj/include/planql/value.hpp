#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "planql/error.hpp"

namespace planql {

enum class ValueType { Null, Boolean, Number, Text };

inline const char* to_string(ValueType t) {
    switch (t) {
        case ValueType::Null: return "null";
        case ValueType::Boolean: return "boolean";
        case ValueType::Number: return "number";
        case ValueType::Text: return "text";
    }
    return "?";
}

// One table cell. Numbers are IEEE doubles, text is UTF-8.
class Value {
public:
    Value() : v_(std::monostate{}) {}

    static Value null() { return Value(); }
    static Value boolean(bool b) { return Value(Payload(b)); }
    static Value number(double d) { return Value(Payload(d)); }
    static Value text(std::string s) { return Value(Payload(std::move(s))); }

    ValueType type() const {
        switch (v_.index()) {
            case 0: return ValueType::Null;
            case 1: return ValueType::Boolean;
            case 2: return ValueType::Number;
            default: return ValueType::Text;
        }
    }

    bool is_null() const { return v_.index() == 0; }
    bool as_bool() const { return std::get<bool>(v_); }
    double as_number() const { return std::get<double>(v_); }
    const std::string& as_text() const { return std::get<std::string>(v_); }

    bool operator==(const Value& other) const = default;

private:
    using Payload = std::variant<std::monostate, bool, double, std::string>;
    explicit Value(Payload p) : v_(std::move(p)) {}
    Payload v_;
};

// Strict decimal/scientific float parse over the whole (whitespace-trimmed)
// string. Rejects inf/nan spellings and hex floats so that ids like
// "0x1f" or stray words never infer as numbers.
inline std::optional<double> parse_number(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    if (b == e) return std::nullopt;
    std::string_view t = s.substr(b, e - b);
    for (char c : t) {
        if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '+' || c == '-' ||
              c == '.' || c == 'e' || c == 'E'))
            return std::nullopt;
    }
    std::string buf(t);
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(buf.c_str(), &end);
    if (end != buf.c_str() + buf.size()) return std::nullopt;
    if (!std::isfinite(v)) return std::nullopt;
    return v;
}

inline std::optional<bool> parse_boolean(std::string_view s) {
    auto ieq = [&](std::string_view w) {
        if (s.size() != w.size()) return false;
        for (size_t i = 0; i < w.size(); ++i)
            if (std::tolower(static_cast<unsigned char>(s[i])) != w[i]) return false;
        return true;
    };
    if (ieq("true")) return true;
    if (ieq("false")) return false;
    return std::nullopt;
}

// Rendering rule: integers without a decimal point, everything else with
// up to 12 significant digits. Keeps CSV output and exact-match
// comparisons stable across runs.
inline std::string format_number(double v) {
    if (v == 0.0) return "0";
    if (std::floor(v) == v && std::fabs(v) < 1e15) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(v));
        return buf;
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

// Text form used for CSV cells and observations. Null renders empty.
inline std::string render(const Value& v) {
    switch (v.type()) {
        case ValueType::Null: return "";
        case ValueType::Boolean: return v.as_bool() ? "true" : "false";
        case ValueType::Number: return format_number(v.as_number());
        case ValueType::Text: return v.as_text();
    }
    return "";
}

// Numeric view of a cell when an operation requests coercion: numbers pass
// through, booleans map to 0/1, text is parsed, null and non-parsable text
// yield nothing.
inline std::optional<double> coerce_numeric(const Value& v) {
    switch (v.type()) {
        case ValueType::Null: return std::nullopt;
        case ValueType::Boolean: return v.as_bool() ? 1.0 : 0.0;
        case ValueType::Number: return v.as_number();
        case ValueType::Text: return parse_number(v.as_text());
    }
    return std::nullopt;
}

namespace detail {
// Cross-type rank for the total order: boolean < number < text < null.
inline int type_rank(ValueType t) {
    switch (t) {
        case ValueType::Boolean: return 0;
        case ValueType::Number: return 1;
        case ValueType::Text: return 2;
        case ValueType::Null: return 3;
    }
    return 3;
}
} // namespace detail

// Total order over cells: numeric within numbers, byte order within texts,
// false < true within booleans, nulls equal to each other and after all
// non-nulls. Used by sort, grouping, and dedup identity.
inline int compare(const Value& a, const Value& b) {
    int ra = detail::type_rank(a.type());
    int rb = detail::type_rank(b.type());
    if (ra != rb) return ra < rb ? -1 : 1;
    switch (a.type()) {
        case ValueType::Null: return 0;
        case ValueType::Boolean: {
            int ia = a.as_bool() ? 1 : 0, ib = b.as_bool() ? 1 : 0;
            return ia == ib ? 0 : (ia < ib ? -1 : 1);
        }
        case ValueType::Number: {
            double x = a.as_number(), y = b.as_number();
            return x == y ? 0 : (x < y ? -1 : 1);
        }
        case ValueType::Text: {
            int c = a.as_text().compare(b.as_text());
            return c == 0 ? 0 : (c < 0 ? -1 : 1);
        }
    }
    return 0;
}

// Dedup/grouping identity: same tag and payload, null == null.
inline bool identity_equal(const Value& a, const Value& b) {
    return a.type() == b.type() && compare(a, b) == 0;
}

inline uint64_t hash_value(const Value& v) {
    // FNV-1a over the tag and a canonical payload encoding.
    uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](const void* data, size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 1099511628211ull;
        }
    };
    int tag = static_cast<int>(v.type());
    mix(&tag, sizeof(tag));
    switch (v.type()) {
        case ValueType::Null: break;
        case ValueType::Boolean: {
            char b = v.as_bool() ? 1 : 0;
            mix(&b, 1);
            break;
        }
        case ValueType::Number: {
            double d = v.as_number();
            if (d == 0.0) d = 0.0; // collapse -0.0
            mix(&d, sizeof(d));
            break;
        }
        case ValueType::Text:
            mix(v.as_text().data(), v.as_text().size());
            break;
    }
    return h;
}

} // namespace planql

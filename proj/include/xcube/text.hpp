#pragma once

#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace xcube::text {

inline bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline std::string_view trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return s.substr(b, e - b);
}

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

/// Collapses runs of whitespace to one space and trims both ends.
inline std::string collapse_space(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending = false;
    for (char c : s) {
        if (is_space(c)) {
            pending = !out.empty();
            continue;
        }
        if (pending) out.push_back(' ');
        pending = false;
        out.push_back(c);
    }
    return out;
}

/// Canonical form of a tag or attribute name: namespace prefix stripped, lowercased,
/// internal whitespace runs replaced by one underscore.
inline std::string canonical_name(std::string_view raw) {
    auto s = trim(raw);
    bool attribute = !s.empty() && s.front() == '@';
    if (attribute) s.remove_prefix(1);
    if (auto colon = s.rfind(':'); colon != std::string_view::npos) s.remove_prefix(colon + 1);
    std::string out = attribute ? "@" : "";
    bool pending = false;
    for (char c : s) {
        if (is_space(c)) {
            pending = true;
            continue;
        }
        if (pending && out.size() > (attribute ? 1u : 0u)) out.push_back('_');
        pending = false;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

struct Token {
    std::string term;
    std::uint32_t position;
};

/// Splits on non-alphanumerics and lowercases. Numbers stay tokens, so "16.9" -> {"16", "9"}.
inline std::vector<Token> tokenize(std::string_view s) {
    std::vector<Token> out;
    std::string cur;
    std::uint32_t pos = 0;
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!cur.empty()) {
            out.push_back({std::move(cur), pos++});
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back({std::move(cur), pos++});
    return out;
}

inline std::vector<std::string> tokenize_terms(std::string_view s) {
    std::vector<std::string> out;
    for (auto& t : tokenize(s)) out.push_back(std::move(t.term));
    return out;
}

/// Glob match where '*' matches any (possibly empty) substring.
inline bool glob_match(std::string_view pattern, std::string_view s) {
    std::size_t p = 0, i = 0, star = std::string_view::npos, mark = 0;
    while (i < s.size()) {
        if (p < pattern.size() && pattern[p] != '*' && pattern[p] == s[i]) {
            ++p;
            ++i;
        } else if (p < pattern.size() && pattern[p] == '*') {
            star = p++;
            mark = i;
        } else if (star != std::string_view::npos) {
            p = star + 1;
            i = ++mark;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '*') ++p;
    return p == pattern.size();
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

/// RFC 4180 field quoting.
inline std::string csv_field(std::string_view s) {
    bool needs = s.find_first_of(",\"\r\n") != std::string_view::npos;
    if (!needs) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

inline std::string csv_row(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        out += csv_field(fields[i]);
    }
    out += "\r\n";
    return out;
}

}  // namespace xcube::text

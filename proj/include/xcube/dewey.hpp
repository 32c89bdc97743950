#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "xcube/error.hpp"

namespace xcube {

/// Hierarchical node identifier: document ordinal plus child ordinals from the document root.
/// The root element of a document is step `{1}`; attributes of an element are numbered
/// before its element children, so Dewey order equals document pre-order.
struct DeweyId {
    std::uint32_t doc = 0;
    std::vector<std::uint32_t> steps;

    friend bool operator==(const DeweyId&, const DeweyId&) = default;
    friend std::strong_ordering operator<=>(const DeweyId& a, const DeweyId& b) {
        if (auto c = a.doc <=> b.doc; c != 0) return c;
        return std::lexicographical_compare_three_way(a.steps.begin(), a.steps.end(), b.steps.begin(),
                                                      b.steps.end());
    }

    std::size_t depth() const noexcept { return steps.size(); }

    /// Strict ancestor test within one document.
    bool is_ancestor_of(const DeweyId& other) const {
        return doc == other.doc && steps.size() < other.steps.size() &&
               std::equal(steps.begin(), steps.end(), other.steps.begin());
    }

    /// True when both ids share the first `len` steps in the same document.
    bool shares_prefix(const DeweyId& other, std::size_t len) const {
        return doc == other.doc && steps.size() >= len && other.steps.size() >= len &&
               std::equal(steps.begin(), steps.begin() + static_cast<std::ptrdiff_t>(len), other.steps.begin());
    }

    /// "doc:1.2.3"
    std::string to_string() const {
        std::string out = std::to_string(doc) + ":";
        for (std::size_t i = 0; i < steps.size(); ++i) {
            if (i) out.push_back('.');
            out += std::to_string(steps[i]);
        }
        return out;
    }

    static DeweyId parse(std::string_view s) {
        auto colon = s.find(':');
        if (colon == std::string_view::npos || colon == 0) throw InvalidArgumentError("bad Dewey id: " + std::string(s));
        DeweyId id;
        auto parse_num = [&](std::string_view part) -> std::uint32_t {
            if (part.empty() || part.size() > 9) throw InvalidArgumentError("bad Dewey id: " + std::string(s));
            std::uint32_t v = 0;
            for (char c : part) {
                if (c < '0' || c > '9') throw InvalidArgumentError("bad Dewey id: " + std::string(s));
                v = v * 10 + static_cast<std::uint32_t>(c - '0');
            }
            return v;
        };
        id.doc = parse_num(s.substr(0, colon));
        auto rest = s.substr(colon + 1);
        while (!rest.empty()) {
            auto dot = rest.find('.');
            auto step = parse_num(rest.substr(0, dot));
            if (step == 0) throw InvalidArgumentError("Dewey steps are positive: " + std::string(s));
            id.steps.push_back(step);
            if (dot == std::string_view::npos) break;
            rest.remove_prefix(dot + 1);
            if (rest.empty()) throw InvalidArgumentError("bad Dewey id: " + std::string(s));
        }
        return id;
    }
};

}  // namespace xcube

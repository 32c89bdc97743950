#pragma once

#include <compare>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "xcube/error.hpp"
#include "xcube/text.hpp"

namespace xcube {

/// Root-to-node path of canonical names, e.g. "/country/economy/import_partners/item".
/// Attribute segments carry an "@" prefix. Ordering is by the rendered string.
class ContextPath {
public:
    ContextPath() = default;

    explicit ContextPath(std::vector<std::string> segments) : segments_(std::move(segments)) {
        for (auto& s : segments_) s = text::canonical_name(s);
        render();
    }

    /// Parses "/a/b c/@d"; each segment is canonicalized. Throws on an empty segment.
    static ContextPath parse(std::string_view s) {
        s = text::trim(s);
        if (s.empty() || s.front() != '/') throw InvalidArgumentError("context path must start with '/': " + std::string(s));
        std::vector<std::string> segs;
        s.remove_prefix(1);
        while (true) {
            auto slash = s.find('/');
            auto seg = text::trim(s.substr(0, slash));
            if (seg.empty()) throw InvalidArgumentError("empty path segment in: /" + std::string(s));
            segs.emplace_back(seg);
            if (slash == std::string_view::npos) break;
            s.remove_prefix(slash + 1);
        }
        return ContextPath(std::move(segs));
    }

    const std::vector<std::string>& segments() const noexcept { return segments_; }
    const std::string& str() const noexcept { return rendered_; }
    std::size_t depth() const noexcept { return segments_.size(); }
    bool empty() const noexcept { return segments_.empty(); }
    const std::string& leaf() const { return segments_.back(); }

    ContextPath parent() const {
        ContextPath p;
        p.segments_.assign(segments_.begin(), segments_.end() - (segments_.empty() ? 0 : 1));
        p.render();
        return p;
    }

    ContextPath prefix(std::size_t len) const {
        ContextPath p;
        p.segments_.assign(segments_.begin(), segments_.begin() + static_cast<std::ptrdiff_t>(std::min(len, depth())));
        p.render();
        return p;
    }

    ContextPath child(std::string_view name) const {
        ContextPath p = *this;
        p.segments_.push_back(text::canonical_name(name));
        p.render();
        return p;
    }

    bool is_prefix_of(const ContextPath& other) const {
        if (depth() > other.depth()) return false;
        for (std::size_t i = 0; i < depth(); ++i)
            if (segments_[i] != other.segments_[i]) return false;
        return true;
    }

    friend bool operator==(const ContextPath& a, const ContextPath& b) { return a.rendered_ == b.rendered_; }
    friend std::strong_ordering operator<=>(const ContextPath& a, const ContextPath& b) {
        return a.rendered_ <=> b.rendered_;
    }

private:
    void render() {
        rendered_.clear();
        for (auto& s : segments_) {
            rendered_.push_back('/');
            rendered_ += s;
        }
    }

    std::vector<std::string> segments_;
    std::string rendered_;
};

/// Canonicalizes a path selector that may contain '*' globs, segment by segment.
inline std::string canonical_selector(std::string_view s) {
    std::string out;
    std::size_t i = 0;
    s = text::trim(s);
    while (i < s.size()) {
        if (s[i] == '/') {
            out.push_back('/');
            ++i;
            continue;
        }
        auto end = s.find('/', i);
        if (end == std::string_view::npos) end = s.size();
        auto seg = s.substr(i, end - i);
        std::string canon;
        std::size_t j = 0;
        while (j < seg.size()) {
            auto star = seg.find('*', j);
            auto piece = seg.substr(j, star == std::string_view::npos ? std::string_view::npos : star - j);
            if (!piece.empty()) canon += text::canonical_name(piece);
            if (star == std::string_view::npos) break;
            canon.push_back('*');
            j = star + 1;
        }
        out += canon;
        i = end;
    }
    return out;
}

}  // namespace xcube

template <>
struct std::hash<xcube::ContextPath> {
    std::size_t operator()(const xcube::ContextPath& p) const noexcept { return std::hash<std::string>{}(p.str()); }
};

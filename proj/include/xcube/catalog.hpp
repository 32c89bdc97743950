#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "xcube/corpus_store.hpp"

namespace xcube {

/// One component of a relative key.
///   "/a/b"   absolute: the node at that path in the anchor's document
///   "."      the anchor itself
///   "./x/y"  resolved from the anchor's parent, so "./x" names a sibling
///   "../x"   one level further up per leading "../"
class KeyPath {
public:
    enum class Form { absolute, self, relative };

    static KeyPath parse(std::string_view s) {
        s = text::trim(s);
        KeyPath k;
        if (s.empty()) throw InvalidArgumentError("empty key path");
        if (s == ".") {
            k.form_ = Form::self;
        } else if (s.front() == '/') {
            k.form_ = Form::absolute;
            k.path_ = ContextPath::parse(s);
        } else {
            k.form_ = Form::relative;
            k.up_ = 1;
            if (s.starts_with("./")) {
                s.remove_prefix(2);
            } else if (s.starts_with("../")) {
                while (s.starts_with("../")) {
                    ++k.up_;
                    s.remove_prefix(3);
                }
            } else {
                throw InvalidArgumentError("key path must be '.', absolute, or start with './' or '../': " + std::string(s));
            }
            std::size_t start = 0;
            while (start <= s.size()) {
                auto slash = s.find('/', start);
                auto seg = text::trim(s.substr(start, slash == std::string_view::npos ? slash : slash - start));
                if (seg.empty()) throw InvalidArgumentError("empty segment in key path: " + std::string(s));
                k.down_.push_back(text::canonical_name(seg));
                if (slash == std::string_view::npos) break;
                start = slash + 1;
            }
        }
        return k;
    }

    Form form() const noexcept { return form_; }

    std::string to_string() const {
        switch (form_) {
            case Form::self: return ".";
            case Form::absolute: return path_.str();
            case Form::relative: {
                std::string s = up_ == 1 ? "./" : "";
                for (std::size_t i = 1; i < up_; ++i) s += "../";
                for (std::size_t i = 0; i < down_.size(); ++i) s += (i ? "/" : "") + down_[i];
                return s;
            }
        }
        return ".";
    }

    /// Column name used in emitted tables; empty for "." (callers use the entry name).
    std::string leaf_name() const {
        switch (form_) {
            case Form::self: return {};
            case Form::absolute: return path_.leaf();
            case Form::relative: return down_.back();
        }
        return {};
    }

    /// Nodes the key component denotes for `anchor`; a usable key yields exactly one.
    std::vector<NodeRef> resolve(const CorpusStore& store, NodeRef anchor) const {
        switch (form_) {
            case Form::self: return {anchor};
            case Form::absolute: {
                auto pid = store.path_id(path_);
                if (!pid) return {};
                const auto& on = store.nodes_on_path(*pid);
                auto lo = std::lower_bound(on.begin(), on.end(), store.doc_begin(store.doc_of(anchor)));
                auto hi = std::lower_bound(on.begin(), on.end(), store.doc_end(store.doc_of(anchor)));
                return {lo, hi};
            }
            case Form::relative: {
                NodeRef base = anchor;
                for (std::size_t i = 0; i < up_; ++i) {
                    base = store.node(base).parent;
                    if (base == kNoNode) return {};
                }
                std::vector<NodeRef> frontier{base};
                for (auto& name : down_) {
                    std::vector<NodeRef> next;
                    for (auto f : frontier)
                        store.for_each_child(f, [&](NodeRef c) {
                            if (store.node(c).name == name) next.push_back(c);
                        });
                    frontier = std::move(next);
                }
                return frontier;
            }
        }
        return {};
    }

    friend bool operator==(const KeyPath& a, const KeyPath& b) { return a.to_string() == b.to_string(); }

private:
    Form form_ = Form::self;
    ContextPath path_;
    std::size_t up_ = 0;
    std::vector<std::string> down_;
};

enum class EntryKind { fact, dimension };

inline std::string_view to_string(EntryKind k) { return k == EntryKind::fact ? "fact" : "dimension"; }

inline EntryKind entry_kind_from_string(std::string_view s) {
    if (s == "fact" || s == "facts") return EntryKind::fact;
    if (s == "dimension" || s == "dim" || s == "dimensions") return EntryKind::dimension;
    throw InvalidArgumentError("entry kind must be fact or dimension: " + std::string(s));
}

struct ContextDef {
    ContextPath context;
    std::vector<KeyPath> key;

    friend bool operator==(const ContextDef&, const ContextDef&) = default;
};

/// A fact or dimension: a name and the contexts it covers, each with its relative key.
struct EntryDef {
    std::string name;
    EntryKind kind = EntryKind::dimension;
    std::vector<ContextDef> contexts;

    std::set<ContextPath> context_set() const {
        std::set<ContextPath> s;
        for (auto& c : contexts) s.insert(c.context);
        return s;
    }

    const ContextDef* find(const ContextPath& p) const {
        for (auto& c : contexts)
            if (c.context == p) return &c;
        return nullptr;
    }

    /// Column names of the key, in key order.
    std::vector<std::string> key_names() const {
        std::vector<std::string> out;
        if (contexts.empty()) return out;
        for (auto& k : contexts.front().key) out.push_back(k.leaf_name().empty() ? name : k.leaf_name());
        return out;
    }

    void validate() const {
        if (text::trim(name).empty()) throw InvalidArgumentError("entry name is empty");
        if (contexts.empty()) throw InvalidArgumentError("entry " + name + " has no contexts");
        std::set<ContextPath> seen;
        for (auto& c : contexts) {
            if (!seen.insert(c.context).second)
                throw InvalidArgumentError("entry " + name + " lists context " + c.context.str() + " twice");
            if (c.key.size() != contexts.front().key.size())
                throw InvalidArgumentError("entry " + name + ": every context needs a key of the same arity");
            if (c.key.empty()) throw InvalidArgumentError("entry " + name + ": empty key for " + c.context.str());
        }
    }

    friend bool operator==(const EntryDef&, const EntryDef&) = default;
};

inline nlohmann::json entry_to_json(const EntryDef& e) {
    auto ctxs = nlohmann::json::array();
    for (auto& c : e.contexts) {
        std::vector<std::string> key;
        for (auto& k : c.key) key.push_back(k.to_string());
        ctxs.push_back({{"context", c.context.str()}, {"key", key}});
    }
    return {{"name", e.name}, {"contexts", ctxs}};
}

inline EntryDef entry_from_json(const nlohmann::json& j, EntryKind kind) {
    EntryDef e;
    e.kind = kind;
    e.name = j.at("name").get<std::string>();
    for (auto& c : j.at("contexts")) {
        ContextDef d;
        d.context = ContextPath::parse(c.at("context").get<std::string>());
        for (auto& k : c.at("key")) d.key.push_back(KeyPath::parse(k.get<std::string>()));
        e.contexts.push_back(std::move(d));
    }
    e.validate();
    return e;
}

/// Fact and dimension definitions, persisted as facts.json and dimensions.json.
class Catalog {
public:
    const std::vector<EntryDef>& entries(EntryKind k) const { return k == EntryKind::fact ? facts_ : dims_; }
    const std::vector<EntryDef>& facts() const noexcept { return facts_; }
    const std::vector<EntryDef>& dimensions() const noexcept { return dims_; }

    const EntryDef* find(EntryKind k, std::string_view name) const {
        for (auto& e : entries(k))
            if (e.name == name) return &e;
        return nullptr;
    }

    const EntryDef& at(EntryKind k, std::string_view name) const {
        if (auto e = find(k, name)) return *e;
        throw NotFoundError("no " + std::string(to_string(k)) + " named " + std::string(name));
    }

    void add(EntryDef e) {
        e.validate();
        if (find(e.kind, e.name))
            throw InvalidArgumentError(std::string(to_string(e.kind)) + " " + e.name + " already exists");
        (e.kind == EntryKind::fact ? facts_ : dims_).push_back(std::move(e));
    }

    bool remove(EntryKind k, std::string_view name) {
        auto& v = k == EntryKind::fact ? facts_ : dims_;
        auto it = std::find_if(v.begin(), v.end(), [&](const EntryDef& e) { return e.name == name; });
        if (it == v.end()) return false;
        v.erase(it);
        return true;
    }

    /// Merges an administrator seed file {"facts": [...], "dimensions": [...]}.
    void import(const nlohmann::json& j) {
        if (j.contains("facts"))
            for (auto& e : j["facts"]) add(entry_from_json(e, EntryKind::fact));
        if (j.contains("dimensions"))
            for (auto& e : j["dimensions"]) add(entry_from_json(e, EntryKind::dimension));
    }

    void import_file(const std::filesystem::path& file) {
        std::ifstream in(file);
        if (!in) throw IoError("cannot open catalog seed " + file.string());
        import(nlohmann::json::parse(in));
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["facts"] = nlohmann::json::array();
        j["dimensions"] = nlohmann::json::array();
        for (auto& e : facts_) j["facts"].push_back(entry_to_json(e));
        for (auto& e : dims_) j["dimensions"].push_back(entry_to_json(e));
        return j;
    }

    void save(const std::filesystem::path& dir) const {
        auto j = to_json();
        std::ofstream(dir / "facts.json") << nlohmann::json{{"facts", j["facts"]}}.dump(2) << "\n";
        std::ofstream(dir / "dimensions.json") << nlohmann::json{{"dimensions", j["dimensions"]}}.dump(2) << "\n";
    }

    /// Loads both files; a missing file means an empty list.
    static Catalog load(const std::filesystem::path& dir) {
        Catalog c;
        for (auto [file, key] : {std::pair{"facts.json", "facts"}, std::pair{"dimensions.json", "dimensions"}}) {
            std::ifstream in(dir / file);
            if (!in) continue;
            auto j = nlohmann::json::parse(in);
            for (auto& e : j.at(key)) c.add(entry_from_json(e, entry_kind_from_string(key)));
        }
        return c;
    }

    friend bool operator==(const Catalog&, const Catalog&) = default;

private:
    std::vector<EntryDef> facts_;
    std::vector<EntryDef> dims_;
};

}  // namespace xcube

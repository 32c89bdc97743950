#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "xcube/catalog.hpp"
#include "xcube/materializer.hpp"

namespace xcube {

/// A column of node references; rows align across all columns of a table.
struct CubeColumn {
    std::string name;
    std::string provenance;  // "query term 2", "key 2 of fact percentage on c3", ...
    std::vector<NodeRef> nodes;
};

struct CubeTable {
    std::vector<CubeColumn> columns;

    std::size_t rows() const { return columns.empty() ? 0 : columns.front().nodes.size(); }

    std::optional<std::size_t> find(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i].name == name) return i;
        return std::nullopt;
    }

    std::set<ContextPath> paths(const CorpusStore& store, std::size_t c) const {
        std::set<ContextPath> out;
        for (auto n : columns.at(c).nodes) out.insert(store.context(n));
        return out;
    }

    std::string to_csv(const CorpusStore& store) const {
        std::vector<std::string> header;
        for (auto& c : columns) header.push_back(c.name);
        std::string out = text::csv_row(header);
        for (std::size_t r = 0; r < rows(); ++r) {
            std::vector<std::string> cells;
            for (auto& c : columns) cells.push_back(store.node(c.nodes[r]).id.to_string());
            out += text::csv_row(cells);
        }
        return out;
    }
};

/// Columns c1..cm, one per query term.
inline CubeTable cube_table(const FullResult& r) {
    CubeTable t;
    for (std::size_t i = 0; i < r.terms; ++i) {
        CubeColumn c{"c" + std::to_string(i + 1), "query term " + std::to_string(i + 1), {}};
        for (auto& row : r.rows) c.nodes.push_back(row[i]);
        t.columns.push_back(std::move(c));
    }
    return t;
}

// ---------------------------------------------------------------------------------------------
// Matching

struct EntryMatch {
    EntryKind kind = EntryKind::dimension;
    std::string entry;
    bool full = false;
    std::vector<ContextPath> missing;  // column paths the entry does not cover (partial only)
};

struct ColumnReport {
    std::size_t column = 0;
    std::string name;
    std::set<ContextPath> paths;
    std::vector<EntryMatch> matches;

    std::string status() const {
        bool partial = false;
        for (auto& m : matches) {
            if (m.full) return "full";
            partial = true;
        }
        return partial ? "partial" : "none";
    }
};

struct MatchReport {
    std::vector<ColumnReport> columns;

    std::set<std::string> entries(EntryKind k, bool full_only = true) const {
        std::set<std::string> out;
        for (auto& c : columns)
            for (auto& m : c.matches)
                if (m.kind == k && (m.full || !full_only)) out.insert(m.entry);
        return out;
    }

    std::vector<std::string> warnings() const {
        std::vector<std::string> out;
        for (auto& c : columns)
            for (auto& m : c.matches) {
                if (m.full) continue;
                std::string miss;
                for (auto& p : m.missing) miss += (miss.empty() ? "" : ", ") + p.str();
                out.push_back("column " + c.name + " partially matches " + std::string(to_string(m.kind)) + " " +
                              m.entry + "; uncovered paths: " + miss);
            }
        return out;
    }
};

/// Full when every path of the column is a context of the entry, partial when some are.
inline ColumnReport match_column(const CorpusStore& store, const CubeTable& t, std::size_t c, const Catalog& cat) {
    ColumnReport rep{c, t.columns[c].name, t.paths(store, c), {}};
    for (auto kind : {EntryKind::fact, EntryKind::dimension})
        for (auto& e : cat.entries(kind)) {
            auto ctx = e.context_set();
            std::vector<ContextPath> missing;
            for (auto& p : rep.paths)
                if (!ctx.count(p)) missing.push_back(p);
            if (missing.size() == rep.paths.size()) continue;
            rep.matches.push_back({kind, e.name, missing.empty(), missing.empty() ? std::vector<ContextPath>{} : missing});
        }
    return rep;
}

inline MatchReport match(const CorpusStore& store, const CubeTable& t, const Catalog& cat) {
    MatchReport r;
    for (std::size_t c = 0; c < t.columns.size(); ++c)
        if (!t.columns[c].nodes.empty()) r.columns.push_back(match_column(store, t, c, cat));
    return r;
}

// ---------------------------------------------------------------------------------------------
// Augmentation

struct CubeSelection {
    std::set<std::string> facts;
    std::set<std::string> dimensions;
};

struct Binding {
    EntryKind kind = EntryKind::dimension;
    std::string entry;
    std::size_t column = 0;
    std::vector<std::size_t> key_columns;

    friend bool operator==(const Binding&, const Binding&) = default;
};

struct AugmentOptions {
    bool skip_rows = false;  // drop rows whose keys do not resolve instead of failing
};

struct Augmented {
    CubeTable table;
    CubeSelection selection;          // as requested plus dimensions added automatically
    std::set<std::string> auto_dims;  // dimensions matched on key columns the builder added
    std::vector<Binding> bindings;
    MatchReport report;
    std::vector<std::string> row_errors;  // rows dropped under skip_rows
};

namespace detail {

struct RowFailure {
    std::size_t row;
    NodeRef node;
    std::string message;
};

/// Key nodes per key position for one column bound to one entry; failures are collected.
inline std::vector<std::vector<NodeRef>> resolve_keys(const CorpusStore& store, const CubeColumn& col,
                                                      const EntryDef& e, std::vector<RowFailure>& fail) {
    const auto arity = e.contexts.front().key.size();
    std::vector<std::vector<NodeRef>> keys(arity, std::vector<NodeRef>(col.nodes.size(), kNoNode));
    for (std::size_t r = 0; r < col.nodes.size(); ++r) {
        auto n = col.nodes[r];
        const auto* def = e.find(store.context(n));
        if (!def) {
            fail.push_back({r, n, "context " + store.context(n).str() + " is not covered by " + e.name});
            continue;
        }
        for (std::size_t k = 0; k < arity; ++k) {
            auto hits = def->key[k].resolve(store, n);
            if (hits.size() != 1) {
                fail.push_back({r, n,
                                "key " + def->key[k].to_string() + " of " + e.name + " resolves to " +
                                    std::to_string(hits.size()) + " nodes"});
                break;
            }
            keys[k][r] = hits.front();
        }
    }
    return keys;
}

inline void drop_rows(CubeTable& t, const std::set<std::size_t>& rows) {
    for (auto& c : t.columns) {
        std::vector<NodeRef> kept;
        for (std::size_t r = 0; r < c.nodes.size(); ++r)
            if (!rows.count(r)) kept.push_back(c.nodes[r]);
        c.nodes = std::move(kept);
    }
}

inline std::string unique_name(const CubeTable& t, std::string base) {
    if (base.empty()) base = "key";
    if (!t.find(base)) return base;
    for (int i = 2;; ++i)
        if (!t.find(base + "_" + std::to_string(i))) return base + "_" + std::to_string(i);
}

}  // namespace detail

/// Binds selected entries to the columns they fully match, adding a column for every key
/// component not already present (identical node columns are reused). Added columns are
/// matched again, and fully matched dimensions are selected automatically, until nothing
/// changes. Re-running on the output adds nothing.
inline Augmented augment(const CorpusStore& store, CubeTable table, const Catalog& cat, CubeSelection sel,
                         const AugmentOptions& opt = {}) {
    for (auto& f : sel.facts) cat.at(EntryKind::fact, f);
    for (auto& d : sel.dimensions) cat.at(EntryKind::dimension, d);
    Augmented out;
    while (true) {
        out.bindings.clear();
        std::vector<detail::RowFailure> fail;
        bool changed = false;
        for (std::size_t c = 0; c < table.columns.size() && fail.empty(); ++c) {
            bool key_column = table.columns[c].provenance.starts_with("key ");
            auto rep = match_column(store, table, c, cat);
            for (auto& m : rep.matches) {
                if (!m.full) continue;
                bool selected = m.kind == EntryKind::fact ? sel.facts.count(m.entry) : sel.dimensions.count(m.entry);
                if (!selected && m.kind == EntryKind::dimension && key_column) {
                    sel.dimensions.insert(m.entry);
                    out.auto_dims.insert(m.entry);
                    changed = true;
                    selected = true;
                }
                if (!selected) continue;
                const auto& e = cat.at(m.kind, m.entry);
                auto keys = detail::resolve_keys(store, table.columns[c], e, fail);
                if (!fail.empty()) break;
                Binding b{m.kind, m.entry, c, {}};
                for (std::size_t k = 0; k < keys.size(); ++k) {
                    std::optional<std::size_t> reuse;
                    for (std::size_t x = 0; x < table.columns.size() && !reuse; ++x)
                        if (table.columns[x].nodes == keys[k]) reuse = x;
                    if (!reuse) {
                        auto base = e.contexts.front().key[k].leaf_name();
                        table.columns.push_back({detail::unique_name(table, base.empty() ? e.name : base),
                                                 "key " + std::to_string(k + 1) + " of " +
                                                     std::string(to_string(e.kind)) + " " + e.name + " on " +
                                                     table.columns[c].name,
                                                 std::move(keys[k])});
                        reuse = table.columns.size() - 1;
                        changed = true;
                    }
                    b.key_columns.push_back(*reuse);
                }
                out.bindings.push_back(std::move(b));
            }
        }
        if (!fail.empty()) {
            if (!opt.skip_rows) {
                const auto& f = fail.front();
                std::string msg = std::to_string(fail.size()) + " row(s) with unresolvable keys; first: row " +
                                  std::to_string(f.row + 1) + " (" + store.node(f.node).id.to_string() + "): " + f.message;
                throw KeyViolationError(msg, store.node(f.node).id.to_string());
            }
            std::set<std::size_t> rows;
            for (auto& f : fail) {
                rows.insert(f.row);
                out.row_errors.push_back("row " + std::to_string(f.row + 1) + " (" + store.node(f.node).id.to_string() +
                                         "): " + f.message);
            }
            detail::drop_rows(table, rows);
            continue;
        }
        if (!changed) break;
    }
    out.table = std::move(table);
    out.selection = std::move(sel);
    out.report = match(store, out.table, cat);
    return out;
}

// ---------------------------------------------------------------------------------------------
// Star schema

struct StarTable {
    std::string name;  // file stem, e.g. fact_percentage
    EntryKind kind = EntryKind::fact;
    std::vector<std::string> keys;
    std::vector<std::string> values;  // measures, or "value" for dimensions
    std::vector<std::string> entries;
    std::vector<std::vector<std::string>> rows;  // sorted

    std::vector<std::string> header() const {
        auto h = keys;
        h.insert(h.end(), values.begin(), values.end());
        return h;
    }

    std::string to_csv() const {
        std::string out = text::csv_row(header());
        for (auto& r : rows) out += text::csv_row(r);
        return out;
    }
};

struct StarSchema {
    std::vector<StarTable> facts;
    std::vector<StarTable> dimensions;
    nlohmann::json manifest;

    const StarTable* table(const std::string& name) const {
        for (auto* v : {&facts, &dimensions})
            for (auto& t : *v)
                if (t.name == name) return &t;
        return nullptr;
    }

    std::vector<std::filesystem::path> write(const std::filesystem::path& dir) const {
        std::filesystem::create_directories(dir);
        std::vector<std::filesystem::path> files;
        for (auto* v : {&facts, &dimensions})
            for (auto& t : *v) {
                auto p = dir / (t.name + ".csv");
                std::ofstream(p, std::ios::binary) << t.to_csv();
                files.push_back(p);
            }
        std::ofstream(dir / "manifest.json") << manifest.dump(2) << "\n";
        files.push_back(dir / "manifest.json");
        return files;
    }
};

namespace detail {

using KeyTuple = std::vector<std::string>;

struct EntryRows {
    std::string entry;
    std::vector<std::string> key_names;
    std::map<KeyTuple, std::pair<std::string, NodeRef>> rows;  // key -> (value, node)
};

/// Distinct (key, value) rows of one entry over every column it is bound to. A key shared by
/// two fact nodes, or by two dimension members with different values, breaks the primary key.
inline EntryRows entry_rows(const CorpusStore& store, const Augmented& a, const EntryDef& e) {
    EntryRows er{e.name, e.key_names(), {}};
    for (auto& b : a.bindings) {
        if (b.kind != e.kind || b.entry != e.name) continue;
        const auto& col = a.table.columns[b.column];
        for (std::size_t r = 0; r < col.nodes.size(); ++r) {
            KeyTuple key;
            for (auto kc : b.key_columns) key.push_back(store.value(a.table.columns[kc].nodes[r]));
            auto n = col.nodes[r];
            auto [it, inserted] = er.rows.emplace(key, std::pair{store.value(n), n});
            // Fact keys identify one node; dimension members with equal key and value coincide.
            bool clash = e.kind == EntryKind::fact ? it->second.second != n : it->second.first != store.value(n);
            if (!inserted && clash) {
                std::string k;
                for (auto& s : key) k += (k.empty() ? "" : ", ") + s;
                throw KeyViolationError("primary key (" + k + ") of " + std::string(to_string(e.kind)) + " " + e.name +
                                            " is shared by " + store.node(it->second.second).id.to_string() + " and " +
                                            store.node(n).id.to_string(),
                                        store.node(it->second.second).id.to_string(), store.node(n).id.to_string());
            }
        }
    }
    return er;
}

}  // namespace detail

/// Emits one fact table per group of selected facts sharing a key-name set (facts in a group
/// are outer-joined on the key), and one table per selected dimension.
inline StarSchema emit_star(const CorpusStore& store, const Augmented& a, const Catalog& cat,
                            const std::string& query_text = {}) {
    StarSchema s;
    std::map<std::set<std::string>, std::vector<detail::EntryRows>> groups;
    std::vector<std::set<std::string>> group_order;
    for (auto& f : a.selection.facts) {
        auto er = detail::entry_rows(store, a, cat.at(EntryKind::fact, f));
        std::set<std::string> key_set(er.key_names.begin(), er.key_names.end());
        if (!groups.count(key_set)) group_order.push_back(key_set);
        groups[key_set].push_back(std::move(er));
    }
    for (auto& ks : group_order) {
        auto& members = groups[ks];
        StarTable t;
        t.kind = EntryKind::fact;
        t.keys = members.front().key_names;
        std::string stem;
        for (auto& m : members) {
            t.values.push_back(m.entry);
            t.entries.push_back(m.entry);
            stem += (stem.empty() ? "" : "_") + m.entry;
        }
        t.name = "fact_" + stem;
        std::map<detail::KeyTuple, std::vector<std::string>> merged;
        for (std::size_t i = 0; i < members.size(); ++i) {
            // reorder this fact's key tuple into the table's key order
            std::vector<std::size_t> perm;
            for (auto& k : t.keys)
                perm.push_back(std::find(members[i].key_names.begin(), members[i].key_names.end(), k) -
                               members[i].key_names.begin());
            for (auto& [key, v] : members[i].rows) {
                detail::KeyTuple ordered;
                for (auto p : perm) ordered.push_back(key[p]);
                auto& cells = merged[ordered];
                cells.resize(members.size());
                cells[i] = v.first;
            }
        }
        for (auto& [key, cells] : merged) {
            auto row = key;
            row.insert(row.end(), cells.begin(), cells.end());
            t.rows.push_back(std::move(row));
        }
        s.facts.push_back(std::move(t));
    }
    for (auto& d : a.selection.dimensions) {
        auto er = detail::entry_rows(store, a, cat.at(EntryKind::dimension, d));
        StarTable t;
        t.kind = EntryKind::dimension;
        t.name = "dim_" + d;
        t.keys = er.key_names;
        t.values = {"value"};
        t.entries = {d};
        for (auto& [key, v] : er.rows) {
            auto row = key;
            row.push_back(v.first);
            t.rows.push_back(std::move(row));
        }
        s.dimensions.push_back(std::move(t));
    }

    auto& m = s.manifest;
    m["query"] = query_text;
    m["tables"] = nlohmann::json::array();
    for (auto* v : {&s.facts, &s.dimensions})
        for (auto& t : *v)
            m["tables"].push_back({{"name", t.name},
                                   {"kind", to_string(t.kind)},
                                   {"file", t.name + ".csv"},
                                   {"keys", t.keys},
                                   {"values", t.values},
                                   {"entries", t.entries},
                                   {"rows", t.rows.size()}});
    m["columns"] = nlohmann::json::array();
    for (std::size_t c = 0; c < a.table.columns.size(); ++c) {
        std::vector<std::string> paths;
        for (auto& p : a.table.paths(store, c)) paths.push_back(p.str());
        m["columns"].push_back({{"name", a.table.columns[c].name},
                                {"provenance", a.table.columns[c].provenance},
                                {"paths", paths}});
    }
    m["bindings"] = nlohmann::json::array();
    for (auto& b : a.bindings) {
        std::vector<std::string> keys;
        for (auto k : b.key_columns) keys.push_back(a.table.columns[k].name);
        m["bindings"].push_back({{"kind", to_string(b.kind)},
                                 {"entry", b.entry},
                                 {"column", a.table.columns[b.column].name},
                                 {"key_columns", keys}});
    }
    m["auto_dimensions"] = a.auto_dims;
    m["row_errors"] = a.row_errors;
    return s;
}

// ---------------------------------------------------------------------------------------------
// Catalog authoring

/// Defines a new entry over some of a column's contexts, after checking that every covered
/// node has a resolvable key and that no two nodes share key values.
inline EntryDef define_entry(const CorpusStore& store, Catalog& cat, EntryKind kind, const std::string& name,
                             const std::set<ContextPath>& contexts, const std::vector<std::string>& key,
                             const std::vector<NodeRef>& column) {
    if (cat.find(kind, name)) throw InvalidArgumentError(std::string(to_string(kind)) + " " + name + " already exists");
    if (contexts.empty()) throw InvalidArgumentError("no contexts given for " + name);
    std::set<ContextPath> col_paths;
    for (auto n : column) col_paths.insert(store.context(n));
    for (auto& p : contexts)
        if (!col_paths.count(p)) throw InvalidArgumentError("context " + p.str() + " does not occur in the column");
    EntryDef e{name, kind, {}};
    std::vector<KeyPath> kp;
    for (auto& k : key) kp.push_back(KeyPath::parse(k));
    for (auto& p : contexts) e.contexts.push_back({p, kp});
    e.validate();

    std::set<NodeRef> nodes;
    for (auto n : column)
        if (contexts.count(store.context(n))) nodes.insert(n);
    std::map<std::vector<std::string>, NodeRef> seen;
    for (auto n : nodes) {
        std::vector<std::string> values;
        for (auto& k : kp) {
            auto hits = k.resolve(store, n);
            if (hits.size() != 1)
                throw KeyViolationError("key " + k.to_string() + " resolves to " + std::to_string(hits.size()) +
                                            " nodes for " + store.node(n).id.to_string(),
                                        store.node(n).id.to_string());
            values.push_back(store.value(hits.front()));
        }
        auto [it, inserted] = seen.emplace(values, n);
        if (!inserted) {
            std::string k;
            for (auto& v : values) k += (k.empty() ? "" : ", ") + v;
            throw KeyViolationError("key (" + k + ") is not unique: " + store.node(it->second).id.to_string() + " and " +
                                        store.node(n).id.to_string(),
                                    store.node(it->second).id.to_string(), store.node(n).id.to_string());
        }
    }
    cat.add(e);
    return e;
}

}  // namespace xcube

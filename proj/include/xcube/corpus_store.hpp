#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "xcube/context_path.hpp"
#include "xcube/dewey.hpp"
#include "xcube/error.hpp"
#include "xcube/text.hpp"
#include "xcube/xml_reader.hpp"

namespace xcube {

/// Dense node handle. Nodes are stored in Dewey order, so comparing handles compares Dewey ids.
using NodeRef = std::uint32_t;
using PathId = std::uint32_t;
inline constexpr NodeRef kNoNode = std::numeric_limits<NodeRef>::max();

enum class EdgeKind : std::uint8_t { parent_child = 0, idref = 1, xlink = 2, value_based = 3 };
inline constexpr std::array<EdgeKind, 4> kAllEdgeKinds{EdgeKind::parent_child, EdgeKind::idref, EdgeKind::xlink,
                                                      EdgeKind::value_based};

inline std::string_view to_string(EdgeKind k) {
    switch (k) {
        case EdgeKind::parent_child: return "parent_child";
        case EdgeKind::idref: return "idref";
        case EdgeKind::xlink: return "xlink";
        case EdgeKind::value_based: return "value_based";
    }
    return "?";
}

inline EdgeKind edge_kind_from_string(std::string_view s) {
    for (auto k : kAllEdgeKinds)
        if (to_string(k) == s) return k;
    throw InvalidArgumentError("unknown edge kind: " + std::string(s));
}

class EdgeKindSet {
public:
    constexpr EdgeKindSet() = default;
    constexpr EdgeKindSet(std::initializer_list<EdgeKind> kinds) {
        for (auto k : kinds) bits_ |= bit(k);
    }
    static constexpr EdgeKindSet all() { return {EdgeKind::parent_child, EdgeKind::idref, EdgeKind::xlink, EdgeKind::value_based}; }

    constexpr bool contains(EdgeKind k) const { return (bits_ & bit(k)) != 0; }
    constexpr bool empty() const { return bits_ == 0; }

private:
    static constexpr std::uint8_t bit(EdgeKind k) { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(k)); }
    std::uint8_t bits_ = 0;
};

struct EdgeRecord {
    EdgeKind kind = EdgeKind::parent_child;
    DeweyId from;
    DeweyId to;
    std::string label;

    friend bool operator==(const EdgeRecord&, const EdgeRecord&) = default;
};

/// Describes how non-tree edges are derived. Selectors are path globs ('*' matches any run).
struct LinkSpec {
    EdgeKind kind = EdgeKind::value_based;
    std::string source;
    std::string target;
    std::string label;
    bool case_fold = false;

    friend bool operator==(const LinkSpec&, const LinkSpec&) = default;
};

inline void to_json(nlohmann::json& j, const LinkSpec& s) {
    j = {{"kind", to_string(s.kind)}, {"source", s.source}, {"target", s.target}, {"label", s.label},
         {"case_fold", s.case_fold}};
}

inline void from_json(const nlohmann::json& j, LinkSpec& s) {
    s.kind = edge_kind_from_string(j.at("kind").get<std::string>());
    if (s.kind == EdgeKind::parent_child) throw InvalidArgumentError("parent_child edges cannot be declared as links");
    s.source = j.at("source").get<std::string>();
    s.target = j.at("target").get<std::string>();
    s.label = j.value("label", std::string(to_string(s.kind)));
    s.case_fold = j.value("case_fold", false);
}

inline std::vector<LinkSpec> read_link_specs(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open link specification: " + file.string());
    auto j = nlohmann::json::parse(in);
    const auto& arr = j.is_object() ? j.at("links") : j;
    return arr.get<std::vector<LinkSpec>>();
}

struct DataNode {
    DeweyId id;
    NodeKind kind = NodeKind::element;
    std::string name;
    PathId path = 0;
    std::string text;  // direct text for elements, value for attributes
    NodeRef parent = kNoNode;
    NodeRef subtree_end = 0;
    std::uint32_t frag_begin = 0;
    std::uint32_t frag_end = 0;
};

struct DocumentInfo {
    std::uint32_t ordinal = 0;
    std::string name;
};

struct SourceDocument {
    std::string name;
    std::string bytes;
};

struct Rejection {
    std::string document;
    std::string message;
};

struct LinkReport {
    std::string label;
    EdgeKind kind = EdgeKind::value_based;
    std::size_t edges = 0;
};

struct CorpusStats {
    std::size_t documents = 0;
    std::size_t nodes = 0;
    std::map<EdgeKind, std::size_t> edges;
    std::size_t distinct_paths = 0;
    std::vector<Rejection> rejected;
    std::vector<LinkReport> links;

    friend bool operator==(const CorpusStats& a, const CorpusStats& b) {
        return a.documents == b.documents && a.nodes == b.nodes && a.edges == b.edges &&
               a.distinct_paths == b.distinct_paths;
    }

    std::string to_text() const {
        std::ostringstream os;
        os << "documents\t" << documents << "\n"
           << "nodes\t" << nodes << "\n";
        for (auto k : kAllEdgeKinds) {
            auto it = edges.find(k);
            os << "edges." << to_string(k) << "\t" << (it == edges.end() ? 0 : it->second) << "\n";
        }
        os << "distinct_paths\t" << distinct_paths << "\n";
        for (auto& l : links) os << "link\t" << l.label << "\t" << to_string(l.kind) << "\t" << l.edges << "\n";
        for (auto& r : rejected) os << "rejected\t" << r.document << "\t" << r.message << "\n";
        return os.str();
    }
};

struct Neighbor {
    EdgeRecord edge;
    const DataNode* node = nullptr;
};

/// Immutable data graph of a document collection. Built by `ingest`, persisted by `save`/`load`.
class CorpusStore {
public:
    struct Link {
        NodeRef from = 0;
        NodeRef to = 0;
        EdgeKind kind = EdgeKind::value_based;
        std::uint32_t label = 0;
    };

    struct IngestResult;

    static IngestResult ingest(const std::vector<SourceDocument>& documents, const std::vector<LinkSpec>& links);

    static IngestResult ingest_directory(const std::filesystem::path& dir, const std::vector<LinkSpec>& links);

    // --- lookups ---------------------------------------------------------

    const std::vector<DocumentInfo>& documents() const noexcept { return documents_; }
    const std::vector<DataNode>& nodes() const noexcept { return nodes_; }
    std::size_t node_count() const noexcept { return nodes_.size(); }
    const DataNode& node(NodeRef n) const { return nodes_.at(n); }

    std::optional<NodeRef> find(const DeweyId& id) const {
        auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id,
                                   [](const DataNode& n, const DeweyId& d) { return n.id < d; });
        if (it == nodes_.end() || it->id != id) return std::nullopt;
        return static_cast<NodeRef>(it - nodes_.begin());
    }

    NodeRef at(const DeweyId& id) const {
        if (auto n = find(id)) return *n;
        throw NotFoundError("unknown node " + id.to_string());
    }

    /// Handles of a document's nodes: [doc_begin(d), doc_end(d)).
    NodeRef doc_begin(std::uint32_t doc) const { return doc_offsets_.at(doc); }
    NodeRef doc_end(std::uint32_t doc) const { return doc_offsets_.at(doc + 1); }
    std::uint32_t doc_of(NodeRef n) const { return nodes_[n].id.doc; }

    const std::vector<ContextPath>& paths() const noexcept { return paths_; }
    const ContextPath& path(PathId p) const { return paths_.at(p); }
    const ContextPath& context(NodeRef n) const { return paths_[nodes_[n].path]; }
    std::optional<PathId> path_id(const ContextPath& p) const {
        auto it = path_lookup_.find(p.str());
        if (it == path_lookup_.end()) return std::nullopt;
        return it->second;
    }
    /// Nodes on a path, Dewey-sorted.
    const std::vector<NodeRef>& nodes_on_path(PathId p) const { return nodes_by_path_.at(p); }
    /// Number of documents containing the path.
    std::size_t path_doc_frequency(PathId p) const { return path_doc_freq_.at(p); }
    /// Number of nodes whose context is the path.
    std::size_t path_occurrence(PathId p) const { return nodes_by_path_.at(p).size(); }
    /// Paths whose rendered form matches a glob selector.
    std::vector<PathId> match_paths(std::string_view selector) const {
        auto canon = canonical_selector(selector);
        std::vector<PathId> out;
        for (PathId p = 0; p < paths_.size(); ++p)
            if (text::glob_match(canon, paths_[p].str())) out.push_back(p);
        return out;
    }

    /// Concatenated descendant text in document order, single space between fragments.
    std::string content(NodeRef n) const {
        const auto& node = nodes_.at(n);
        if (node.kind == NodeKind::attribute) return node.text;
        std::string out;
        for (auto f = node.frag_begin; f < node.frag_end; ++f) {
            if (!out.empty()) out.push_back(' ');
            out += fragments_[f];
        }
        return out;
    }
    std::string content(const DeweyId& id) const { return content(at(id)); }

    /// Scalar value of a node: its own text when present, otherwise its content.
    std::string value(NodeRef n) const {
        const auto& node = nodes_.at(n);
        return node.text.empty() ? content(n) : node.text;
    }

    const std::string& label(std::uint32_t id) const { return labels_.at(id); }
    std::optional<std::uint32_t> label_id(std::string_view s) const {
        for (std::uint32_t i = 0; i < labels_.size(); ++i)
            if (labels_[i] == s) return i;
        return std::nullopt;
    }
    const std::vector<Link>& links() const noexcept { return links_; }
    const std::vector<LinkSpec>& link_specs() const noexcept { return link_specs_; }

    /// Visits every incident edge, both directions: f(other, kind, label_id).
    template <class F>
    void for_each_neighbor(NodeRef n, F&& f) const {
        const auto& node = nodes_[n];
        if (node.parent != kNoNode) f(node.parent, EdgeKind::parent_child, kNoLabel);
        for (NodeRef c = n + 1; c < node.subtree_end; c = nodes_[c].subtree_end) f(c, EdgeKind::parent_child, kNoLabel);
        for (auto e : adjacency_[n]) {
            const auto& l = links_[e];
            f(l.from == n ? l.to : l.from, l.kind, l.label);
        }
    }

    /// Like for_each_neighbor but also reports direction: f(other, kind, label_id, outgoing).
    /// For tree edges "outgoing" means other is a child; for links, n is the stored source.
    template <class F>
    void for_each_incident(NodeRef n, F&& f) const {
        const auto& node = nodes_[n];
        if (node.parent != kNoNode) f(node.parent, EdgeKind::parent_child, kNoLabel, false);
        for (NodeRef c = n + 1; c < node.subtree_end; c = nodes_[c].subtree_end) f(c, EdgeKind::parent_child, kNoLabel, true);
        for (auto e : adjacency_[n]) {
            const auto& l = links_[e];
            f(l.from == n ? l.to : l.from, l.kind, l.label, l.from == n);
        }
    }

    template <class F>
    void for_each_child(NodeRef n, F&& f) const {
        for (NodeRef c = n + 1; c < nodes_[n].subtree_end; c = nodes_[c].subtree_end) f(c);
    }

    std::vector<Neighbor> neighbors(const DeweyId& id, EdgeKindSet kinds) const {
        auto n = at(id);
        std::vector<std::pair<NodeRef, EdgeRecord>> found;
        for_each_neighbor(n, [&](NodeRef other, EdgeKind kind, std::uint32_t label) {
            if (!kinds.contains(kind)) return;
            EdgeRecord e;
            e.kind = kind;
            if (kind == EdgeKind::parent_child) {
                bool other_is_parent = nodes_[n].parent == other;
                e.from = other_is_parent ? nodes_[other].id : nodes_[n].id;
                e.to = other_is_parent ? nodes_[n].id : nodes_[other].id;
            } else {
                e.label = labels_[label];
                // direction of the stored link
                bool outgoing = false;
                for (auto li : adjacency_[n]) {
                    const auto& l = links_[li];
                    if (l.kind == kind && l.label == label && ((l.from == n && l.to == other))) outgoing = true;
                }
                e.from = outgoing ? nodes_[n].id : nodes_[other].id;
                e.to = outgoing ? nodes_[other].id : nodes_[n].id;
            }
            found.emplace_back(other, std::move(e));
        });
        std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
            if (a.second.kind != b.second.kind) return a.second.kind < b.second.kind;
            if (a.first != b.first) return a.first < b.first;
            return a.second.label < b.second.label;
        });
        found.erase(std::unique(found.begin(), found.end(),
                                [](const auto& a, const auto& b) { return a.first == b.first && a.second == b.second; }),
                    found.end());
        std::vector<Neighbor> out;
        out.reserve(found.size());
        for (auto& [other, e] : found) out.push_back({std::move(e), &nodes_[other]});
        return out;
    }

    const CorpusStats& stats() const noexcept { return stats_; }

    // --- persistence -----------------------------------------------------

    void save(const std::filesystem::path& dir) const;
    static CorpusStore load(const std::filesystem::path& dir);

    static constexpr std::uint32_t kNoLabel = std::numeric_limits<std::uint32_t>::max();

private:
    void append_document(std::uint32_t ordinal, const ParsedDocument& doc);
    void finalize();
    void resolve_links(const std::vector<LinkSpec>& specs);
    PathId intern_path(const ContextPath& p) {
        auto [it, inserted] = path_lookup_.emplace(p.str(), static_cast<PathId>(paths_.size()));
        if (inserted) paths_.push_back(p);
        return it->second;
    }
    std::uint32_t intern_label(const std::string& s) {
        if (auto id = label_id(s)) return *id;
        labels_.push_back(s);
        return static_cast<std::uint32_t>(labels_.size() - 1);
    }
    void add_link(NodeRef from, NodeRef to, EdgeKind kind, std::uint32_t label) {
        if (from == to) return;
        links_.push_back({from, to, kind, label});
    }

    std::vector<DocumentInfo> documents_;
    std::vector<DataNode> nodes_;
    std::vector<NodeRef> doc_offsets_{0};
    std::vector<std::string> fragments_;
    std::vector<ContextPath> paths_;
    std::unordered_map<std::string, PathId> path_lookup_;
    std::vector<std::vector<NodeRef>> nodes_by_path_;
    std::vector<std::size_t> path_doc_freq_;
    std::vector<std::string> labels_;
    std::vector<Link> links_;
    std::vector<std::vector<std::uint32_t>> adjacency_;
    std::vector<LinkSpec> link_specs_;
    CorpusStats stats_;
};

struct CorpusStore::IngestResult {
    CorpusStore store;
    CorpusStats stats;
};

inline CorpusStore::IngestResult CorpusStore::ingest_directory(const std::filesystem::path& dir, const std::vector<LinkSpec>& links) {
    if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".xml") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<SourceDocument> docs;
    for (auto& f : files) {
        std::ifstream in(f, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        docs.push_back({f.filename().string(), ss.str()});
    }
    return ingest(docs, links);
}

inline void CorpusStore::append_document(std::uint32_t ordinal, const ParsedDocument& doc) {
    auto base = static_cast<NodeRef>(nodes_.size());
    auto frag_base = static_cast<std::uint32_t>(fragments_.size());
    std::vector<ContextPath> ctx(doc.nodes.size());
    for (std::size_t i = 0; i < doc.nodes.size(); ++i) {
        const auto& pn = doc.nodes[i];
        DataNode n;
        n.kind = pn.kind;
        n.name = pn.name;
        n.text = pn.text;
        n.id.doc = ordinal;
        if (pn.parent >= 0) {
            auto p = static_cast<std::size_t>(pn.parent);
            n.id.steps = nodes_[base + p].id.steps;
            n.parent = base + static_cast<NodeRef>(p);
            ctx[i] = ctx[p].child(pn.name);
        } else {
            ctx[i] = ContextPath(std::vector<std::string>{pn.name});
        }
        n.id.steps.push_back(pn.ordinal);
        n.path = intern_path(ctx[i]);
        n.subtree_end = base + pn.subtree_end;
        n.frag_begin = frag_base + pn.frag_begin;
        n.frag_end = frag_base + pn.frag_end;
        nodes_.push_back(std::move(n));
    }
    fragments_.insert(fragments_.end(), doc.fragments.begin(), doc.fragments.end());
    doc_offsets_.push_back(static_cast<NodeRef>(nodes_.size()));
}

inline void CorpusStore::finalize() {
    nodes_by_path_.assign(paths_.size(), {});
    path_doc_freq_.assign(paths_.size(), 0);
    for (NodeRef n = 0; n < nodes_.size(); ++n) nodes_by_path_[nodes_[n].path].push_back(n);
    for (std::uint32_t d = 0; d + 1 < doc_offsets_.size(); ++d) {
        std::set<PathId> seen;
        for (NodeRef n = doc_offsets_[d]; n < doc_offsets_[d + 1]; ++n) seen.insert(nodes_[n].path);
        for (auto p : seen) ++path_doc_freq_[p];
    }
    adjacency_.assign(nodes_.size(), {});
    std::sort(links_.begin(), links_.end(), [](const Link& a, const Link& b) {
        return std::tie(a.kind, a.from, a.to, a.label) < std::tie(b.kind, b.from, b.to, b.label);
    });
    links_.erase(std::unique(links_.begin(), links_.end(),
                             [](const Link& a, const Link& b) {
                                 return a.kind == b.kind && a.from == b.from && a.to == b.to && a.label == b.label;
                             }),
                 links_.end());
    for (std::uint32_t i = 0; i < links_.size(); ++i) {
        adjacency_[links_[i].from].push_back(i);
        adjacency_[links_[i].to].push_back(i);
    }
    stats_.documents = documents_.size();
    stats_.nodes = nodes_.size();
    stats_.distinct_paths = paths_.size();
    stats_.edges.clear();
    stats_.edges[EdgeKind::parent_child] = nodes_.size() - documents_.size();
    for (auto k : {EdgeKind::idref, EdgeKind::xlink, EdgeKind::value_based}) stats_.edges[k] = 0;
    for (auto& l : links_) ++stats_.edges[l.kind];
    stats_.links.clear();
    for (auto& spec : link_specs_) {
        LinkReport r{spec.label, spec.kind, 0};
        if (auto lid = label_id(spec.label))
            for (auto& l : links_)
                if (l.kind == spec.kind && l.label == *lid) ++r.edges;
        stats_.links.push_back(r);
    }
}

inline void CorpusStore::resolve_links(const std::vector<LinkSpec>& specs) {
    auto normalize = [](std::string v, bool fold) {
        v = text::collapse_space(v);
        return fold ? text::to_lower(v) : v;
    };
    auto owner = [&](NodeRef n) { return nodes_[n].kind == NodeKind::attribute ? nodes_[n].parent : n; };
    for (const auto& spec : specs) {
        auto label = intern_label(spec.label);
        std::vector<NodeRef> sources, targets;
        for (auto p : match_paths(spec.source))
            for (auto n : nodes_by_path_[p]) sources.push_back(n);
        for (auto p : match_paths(spec.target))
            for (auto n : nodes_by_path_[p]) targets.push_back(n);
        std::sort(sources.begin(), sources.end());
        std::sort(targets.begin(), targets.end());

        std::unordered_map<std::string, std::vector<NodeRef>> by_value;
        for (auto t : targets) {
            auto v = normalize(value(t), spec.case_fold);
            if (!v.empty()) by_value[v].push_back(t);
        }
        for (auto s : sources) {
            switch (spec.kind) {
                case EdgeKind::value_based: {
                    auto it = by_value.find(normalize(value(s), spec.case_fold));
                    if (it == by_value.end()) break;
                    for (auto t : it->second) add_link(s, t, spec.kind, label);
                    break;
                }
                case EdgeKind::idref: {
                    std::istringstream refs(value(s));
                    std::string ref;
                    while (refs >> ref) {
                        auto it = by_value.find(normalize(ref, spec.case_fold));
                        if (it == by_value.end()) continue;
                        for (auto t : it->second) add_link(owner(s), owner(t), spec.kind, label);
                    }
                    break;
                }
                case EdgeKind::xlink: {
                    auto href = text::collapse_space(value(s));
                    auto hash = href.find('#');
                    std::string doc_name = hash == std::string::npos ? std::string() : href.substr(0, hash);
                    std::string frag = hash == std::string::npos ? href : href.substr(hash + 1);
                    auto it = by_value.find(normalize(frag, spec.case_fold));
                    if (it == by_value.end()) break;
                    for (auto t : it->second) {
                        if (!doc_name.empty()) {
                            const auto& tname = documents_[nodes_[t].id.doc].name;
                            auto stem = std::filesystem::path(tname).stem().string();
                            if (tname != doc_name && stem != doc_name) continue;
                        }
                        add_link(owner(s), owner(t), spec.kind, label);
                    }
                    break;
                }
                case EdgeKind::parent_child: throw InvalidArgumentError("parent_child edges cannot be declared as links");
            }
        }
    }
}

inline CorpusStore::IngestResult CorpusStore::ingest(const std::vector<SourceDocument>& documents,
                                                     const std::vector<LinkSpec>& links) {
    std::set<std::string> names;
    for (auto& d : documents)
        if (!names.insert(d.name).second) throw InvalidArgumentError("duplicate document identity: " + d.name);

    CorpusStore store;
    std::vector<Rejection> rejected;
    for (const auto& d : documents) {
        ParsedDocument parsed;
        try {
            parsed = parse_xml(d.bytes);
        } catch (const XmlParseError& e) {
            rejected.push_back({d.name, e.what()});
            continue;
        }
        auto ordinal = static_cast<std::uint32_t>(store.documents_.size());
        store.documents_.push_back({ordinal, d.name});
        store.append_document(ordinal, parsed);
    }
    store.link_specs_ = links;
    for (auto& s : store.link_specs_) {
        s.source = canonical_selector(s.source);
        s.target = canonical_selector(s.target);
    }
    store.nodes_by_path_.assign(store.paths_.size(), {});
    for (NodeRef n = 0; n < store.nodes_.size(); ++n) store.nodes_by_path_[store.nodes_[n].path].push_back(n);
    store.resolve_links(store.link_specs_);
    store.finalize();
    store.stats_.rejected = rejected;
    auto stats = store.stats_;
    return {std::move(store), std::move(stats)};
}

inline void CorpusStore::save(const std::filesystem::path& dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::json manifest;
    manifest["format"] = "xcube-store/1";
    for (auto& d : documents_) manifest["documents"].push_back({{"ordinal", d.ordinal}, {"name", d.name}});
    if (documents_.empty()) manifest["documents"] = nlohmann::json::array();
    manifest["links"] = link_specs_;
    nlohmann::json edges_by_kind;
    for (auto& [k, v] : stats_.edges) edges_by_kind[std::string(to_string(k))] = v;
    manifest["stats"] = {{"documents", stats_.documents},
                         {"nodes", stats_.nodes},
                         {"distinct_paths", stats_.distinct_paths},
                         {"edges", edges_by_kind}};
    for (auto& r : stats_.rejected) manifest["rejected"].push_back({{"document", r.document}, {"message", r.message}});

    nlohmann::json body;
    auto& jn = body["nodes"] = nlohmann::json::array();
    for (auto& n : nodes_) {
        jn.push_back({n.id.to_string(), n.kind == NodeKind::attribute ? 1 : 0, n.name, n.text, n.frag_begin, n.frag_end});
    }
    body["fragments"] = fragments_;
    body["labels"] = labels_;
    auto& je = body["links"] = nlohmann::json::array();
    for (auto& l : links_) je.push_back({l.from, l.to, static_cast<int>(l.kind), l.label});

    std::ofstream(dir / "manifest.json") << manifest.dump(2) << "\n";
    std::ofstream(dir / "corpus.json") << body.dump() << "\n";
}

inline CorpusStore CorpusStore::load(const std::filesystem::path& dir) {
    std::ifstream min(dir / "manifest.json");
    std::ifstream bin(dir / "corpus.json");
    if (!min || !bin) throw IoError("no corpus store at " + dir.string() + " (run ingest first)");
    auto manifest = nlohmann::json::parse(min);
    auto body = nlohmann::json::parse(bin);

    CorpusStore s;
    for (auto& d : manifest.at("documents"))
        s.documents_.push_back({d.at("ordinal").get<std::uint32_t>(), d.at("name").get<std::string>()});
    s.link_specs_ = manifest.at("links").get<std::vector<LinkSpec>>();
    s.fragments_ = body.at("fragments").get<std::vector<std::string>>();
    s.labels_ = body.at("labels").get<std::vector<std::string>>();

    // Rebuild structure from Dewey ids; nodes are stored in Dewey order.
    std::vector<NodeRef> stack;
    for (auto& jn : body.at("nodes")) {
        DataNode n;
        n.id = DeweyId::parse(jn.at(0).get<std::string>());
        n.kind = jn.at(1).get<int>() == 1 ? NodeKind::attribute : NodeKind::element;
        n.name = jn.at(2).get<std::string>();
        n.text = jn.at(3).get<std::string>();
        n.frag_begin = jn.at(4).get<std::uint32_t>();
        n.frag_end = jn.at(5).get<std::uint32_t>();
        auto self = static_cast<NodeRef>(s.nodes_.size());
        while (!stack.empty() && !s.nodes_[stack.back()].id.is_ancestor_of(n.id)) {
            s.nodes_[stack.back()].subtree_end = self;
            stack.pop_back();
        }
        if (stack.empty()) {
            if (!s.nodes_.empty()) s.doc_offsets_.push_back(self);
            n.path = s.intern_path(ContextPath(std::vector<std::string>{n.name}));
        } else {
            n.parent = stack.back();
            n.path = s.intern_path(s.paths_[s.nodes_[n.parent].path].child(n.name));
        }
        s.nodes_.push_back(std::move(n));
        stack.push_back(self);
    }
    for (auto n : stack) s.nodes_[n].subtree_end = static_cast<NodeRef>(s.nodes_.size());
    s.doc_offsets_.push_back(static_cast<NodeRef>(s.nodes_.size()));
    if (s.nodes_.empty()) s.doc_offsets_ = {0};
    for (auto& jl : body.at("links"))
        s.links_.push_back({jl.at(0).get<NodeRef>(), jl.at(1).get<NodeRef>(), static_cast<EdgeKind>(jl.at(2).get<int>()),
                            jl.at(3).get<std::uint32_t>()});
    s.finalize();
    if (manifest.contains("rejected"))
        for (auto& r : manifest["rejected"])
            s.stats_.rejected.push_back({r.at("document").get<std::string>(), r.at("message").get<std::string>()});
    return s;
}

}  // namespace xcube

#pragma once

#include <expat.h>

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "xcube/error.hpp"
#include "xcube/text.hpp"

namespace xcube {

enum class NodeKind : std::uint8_t { element, attribute };

/// One element or attribute of a parsed document, in pre-order.
struct ParsedNode {
    NodeKind kind = NodeKind::element;
    std::string name;                 // canonical; attributes carry '@'
    std::int32_t parent = -1;         // index into ParsedDocument::nodes
    std::uint32_t ordinal = 0;        // 1-based position among the parent's children
    std::uint32_t subtree_end = 0;    // one past the last descendant
    std::uint32_t frag_begin = 0;     // text fragments inside this subtree
    std::uint32_t frag_end = 0;
    std::string text;                 // direct text (elements) or value (attributes)
};

struct ParsedDocument {
    std::vector<ParsedNode> nodes;
    std::vector<std::string> fragments;        // non-empty text runs, document order
    std::vector<std::uint32_t> fragment_owner;  // node index owning each fragment
};

class XmlParseError : public Error {
public:
    XmlParseError(const std::string& msg, std::uint64_t line, std::uint64_t column)
        : Error(msg + " at line " + std::to_string(line) + ", column " + std::to_string(column)),
          line_(line),
          column_(column) {}

    std::uint64_t line() const noexcept { return line_; }
    std::uint64_t column() const noexcept { return column_; }

private:
    std::uint64_t line_;
    std::uint64_t column_;
};

namespace detail {

struct ParserState {
    ParsedDocument doc;
    std::vector<std::uint32_t> open;           // stack of open element indices
    std::vector<std::uint32_t> child_count;    // per node, children numbered so far
    std::string pending;

    void flush() {
        if (open.empty()) {
            pending.clear();
            return;
        }
        auto frag = text::collapse_space(pending);
        pending.clear();
        if (frag.empty()) return;
        auto owner = open.back();
        auto& node = doc.nodes[owner];
        if (!node.text.empty()) node.text.push_back(' ');
        node.text += frag;
        doc.fragments.push_back(std::move(frag));
        doc.fragment_owner.push_back(owner);
    }

    std::uint32_t add_node(NodeKind kind, std::string name, std::int32_t parent) {
        ParsedNode n;
        n.kind = kind;
        n.name = std::move(name);
        n.parent = parent;
        if (parent >= 0) n.ordinal = ++child_count[static_cast<std::size_t>(parent)];
        else n.ordinal = 1;
        n.frag_begin = static_cast<std::uint32_t>(doc.fragments.size());
        doc.nodes.push_back(std::move(n));
        child_count.push_back(0);
        return static_cast<std::uint32_t>(doc.nodes.size() - 1);
    }

    static void XMLCALL on_start(void* ud, const XML_Char* name, const XML_Char** attrs) {
        auto* st = static_cast<ParserState*>(ud);
        st->flush();
        std::int32_t parent = st->open.empty() ? -1 : static_cast<std::int32_t>(st->open.back());
        auto idx = st->add_node(NodeKind::element, text::canonical_name(name), parent);
        for (std::size_t i = 0; attrs[i]; i += 2) {
            std::string_view aname = attrs[i];
            if (aname == "xmlns" || aname.starts_with("xmlns:")) continue;
            auto a = st->add_node(NodeKind::attribute, "@" + text::canonical_name(aname), static_cast<std::int32_t>(idx));
            auto& an = st->doc.nodes[a];
            an.text = text::collapse_space(attrs[i + 1]);
            an.subtree_end = a + 1;
            an.frag_end = an.frag_begin;
        }
        st->open.push_back(idx);
    }

    static void XMLCALL on_end(void* ud, const XML_Char*) {
        auto* st = static_cast<ParserState*>(ud);
        st->flush();
        auto idx = st->open.back();
        st->open.pop_back();
        auto& n = st->doc.nodes[idx];
        n.subtree_end = static_cast<std::uint32_t>(st->doc.nodes.size());
        n.frag_end = static_cast<std::uint32_t>(st->doc.fragments.size());
    }

    static void XMLCALL on_text(void* ud, const XML_Char* s, int len) {
        static_cast<ParserState*>(ud)->pending.append(s, static_cast<std::size_t>(len));
    }
};

}  // namespace detail

/// Parses one well-formed XML document. Throws XmlParseError with a line/column diagnostic.
inline ParsedDocument parse_xml(std::string_view bytes) {
    std::unique_ptr<std::remove_pointer_t<XML_Parser>, decltype(&XML_ParserFree)> parser(XML_ParserCreate(nullptr),
                                                                                         &XML_ParserFree);
    if (!parser) throw Error("cannot allocate XML parser");
    detail::ParserState state;
    XML_SetUserData(parser.get(), &state);
    XML_SetElementHandler(parser.get(), &detail::ParserState::on_start, &detail::ParserState::on_end);
    XML_SetCharacterDataHandler(parser.get(), &detail::ParserState::on_text);
    if (XML_Parse(parser.get(), bytes.data(), static_cast<int>(bytes.size()), XML_TRUE) == XML_STATUS_ERROR) {
        throw XmlParseError(XML_ErrorString(XML_GetErrorCode(parser.get())),
                            XML_GetCurrentLineNumber(parser.get()), XML_GetCurrentColumnNumber(parser.get()));
    }
    if (state.doc.nodes.empty()) throw XmlParseError("no document element", 1, 0);
    return std::move(state.doc);
}

}  // namespace xcube

#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "xcube/corpus_store.hpp"

namespace xcube::testing {

inline std::filesystem::path fixtures() { return XCUBE_FIXTURES; }

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline CorpusStore factbook() {
    auto links = read_link_specs(fixtures() / "factbook_links.json");
    return CorpusStore::ingest_directory(fixtures() / "factbook", links).store;
}

inline CorpusStore mixed() {
    auto links = read_link_specs(fixtures() / "mixed_links.json");
    return CorpusStore::ingest_directory(fixtures() / "mixed", links).store;
}

inline CorpusStore from_strings(const std::vector<std::string>& docs, const std::vector<LinkSpec>& links = {}) {
    std::vector<SourceDocument> src;
    for (std::size_t i = 0; i < docs.size(); ++i) src.push_back({"d" + std::to_string(i) + ".xml", docs[i]});
    return CorpusStore::ingest(src, links).store;
}

/// Three document families over a common /doc root. Each document holds the family's six core
/// paths plus two of four optional leaves, so intra-family overlap is at least 0.6 while
/// families share only /doc and /doc/meta (overlap at most 0.25).
inline std::vector<std::string> family_corpus(std::size_t per_family = 100) {
    std::vector<std::string> docs;
    for (std::size_t i = 0; i < per_family; ++i)
        for (int f = 0; f < 3; ++f) {
            std::string fam = "f" + std::to_string(f);
            std::string body = "<" + fam + "><a>x" + std::to_string(i) + "</a><b>y</b><c>z</c>";
            std::size_t o1 = i % 4, o2 = (i / 4 + o1 + 1) % 4;
            if (o2 == o1) o2 = (o1 + 1) % 4;
            for (std::size_t o = 0; o < 4; ++o)
                if (o == o1 || o == o2) body += "<o" + std::to_string(o) + ">v</o" + std::to_string(o) + ">";
            docs.push_back("<doc><meta>m</meta>" + body + "</" + fam + "></doc>");
        }
    return docs;
}

/// N documents, each a shared core plus a distinct 4-of-8 choice of optional elements, so no
/// document's paths contain another's.
inline std::vector<std::string> degenerate_corpus(std::size_t n = 50) {
    std::vector<std::string> docs;
    for (unsigned mask = 0; mask < 256 && docs.size() < n; ++mask) {
        if (__builtin_popcount(mask) != 4) continue;
        std::string body = "<core>c</core>";
        for (int b = 0; b < 8; ++b)
            if (mask & (1u << b)) body += "<e" + std::to_string(b) + ">v</e" + std::to_string(b) + ">";
        docs.push_back("<rec>" + body + "</rec>");
    }
    return docs;
}

/// Small random corpus with tree structure and value-based links, sized well under 500 nodes.
inline CorpusStore random_corpus(unsigned seed, std::size_t docs = 4) {
    std::mt19937 rng(seed);
    const std::vector<std::string> names{"a", "b", "c", "d"};
    const std::vector<std::string> words{"red", "blue", "green red", "blue blue red", "red green", "k1", "k2"};
    std::vector<std::string> out;
    for (std::size_t d = 0; d < docs; ++d) {
        std::function<std::string(int)> gen = [&](int depth) {
            auto n = names[rng() % names.size()];
            std::string s = "<" + n + ">" + words[rng() % words.size()];
            if (depth < 3)
                for (unsigned c = 0, kids = rng() % 4; c < kids; ++c) s += gen(depth + 1);
            return s + "</" + n + ">";
        };
        out.push_back("<r>" + gen(0) + gen(0) + "</r>");
    }
    std::vector<LinkSpec> links{{EdgeKind::value_based, "/r/a/b", "/r/c", "v", true},
                                {EdgeKind::value_based, "/r/b/d", "/r/a", "w", true}};
    return from_strings(out, links);
}

/// Scratch directory removed on destruction.
struct TempDir {
    std::filesystem::path path;
    TempDir() {
        static std::mt19937_64 rng{std::random_device{}()};
        path = std::filesystem::temp_directory_path() / ("xcube-test-" + std::to_string(rng()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

}  // namespace xcube::testing

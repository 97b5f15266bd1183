#include "mx/walks.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>

#include "mx/util.hpp"

namespace mx {

namespace {

struct Edge {
    const std::string* predicate;
    const Term* object;
};

}  // namespace

std::vector<Walk> generate_walks(const KnowledgeGraph& kg, std::size_t walks_per_entity,
                                 std::size_t walk_length, std::uint64_t seed) {
    if (kg.triples.empty()) throw ValidationError("cannot walk an empty graph");
    if (walk_length < 1) throw ValidationError("walk_length must be >= 1");

    // Adjacency in canonical order, so edge indices are reproducible.
    std::unordered_map<std::string, std::vector<Edge>> out_edges;
    for (const auto& t : kg.triples) out_edges[t.subject].push_back({&t.predicate, &t.object});

    auto entities = kg.entities();
    std::vector<Walk> walks;
    walks.reserve(entities.size() * walks_per_entity);

    for (const auto& start : entities) {
        std::uint64_t entity_seed = derive_seed(seed, fnv1a64(start));
        for (std::size_t w = 0; w < walks_per_entity; ++w) {
            Rng rng(derive_seed(entity_seed, w));
            Walk walk;
            walk.tokens.push_back(start);
            const std::string* cur = &start;
            for (std::size_t hop = 1; hop < walk_length; ++hop) {
                auto it = out_edges.find(*cur);
                if (it == out_edges.end() || it->second.empty()) break;
                const Edge& e = it->second[rng.next_below(it->second.size())];
                walk.tokens.push_back(*e.predicate);
                if (e.object->is_literal) {
                    // Literal tokens may contain spaces; encode once so the
                    // in-memory token equals the on-disk token.
                    walk.tokens.push_back(iri_encode(e.object->lit.lexical()));
                    break;
                }
                walk.tokens.push_back(e.object->iri);
                cur = &e.object->iri;
            }
            walks.push_back(std::move(walk));
        }
    }
    return walks;
}

void save_walks(const std::vector<Walk>& walks, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    for (const auto& w : walks) {
        for (std::size_t i = 0; i < w.tokens.size(); ++i) {
            if (i) out << ' ';
            out << w.tokens[i];
        }
        out << '\n';
    }
    if (!out) throw IoError("write to '" + path + "' failed");
}

std::vector<Walk> load_walks(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::vector<Walk> walks;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Walk w;
        std::istringstream ss(line);
        std::string tok;
        while (ss >> tok) w.tokens.push_back(std::move(tok));
        walks.push_back(std::move(w));
    }
    return walks;
}

}  // namespace mx

#pragma once

// Uniform random walks over the graph, emitting entity and predicate tokens
// alternately. One walk visits at most walk_length nodes, so it carries at
// most 2*walk_length - 1 tokens; it stops early at nodes without outgoing
// edges. Literal objects become (percent-encoded) tokens and always end the
// walk.

#include <cstdint>
#include <string>
#include <vector>

#include "mx/kg.hpp"

namespace mx {

struct Walk {
    std::vector<std::string> tokens;

    bool operator==(const Walk&) const = default;
};

/// walks_per_entity walks from every entity node. Each entity's walks use a
/// seed derived from the global seed and the entity IRI, so generation can
/// be sharded without changing the output.
std::vector<Walk> generate_walks(const KnowledgeGraph& kg, std::size_t walks_per_entity,
                                 std::size_t walk_length, std::uint64_t seed);

/// One walk per line, tokens space-separated.
void save_walks(const std::vector<Walk>& walks, const std::string& path);
std::vector<Walk> load_walks(const std::string& path);

}  // namespace mx

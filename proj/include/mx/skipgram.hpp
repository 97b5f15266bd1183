#pragma once

// Skip-gram with negative sampling over walk corpora, written out from the
// standard objective: positive pairs from a fixed-size window, negatives
// from the unigram^0.75 distribution, SGD with linearly decaying rate.
// Single-worker training is bit-deterministic; more workers trade that for
// speed (unsynchronized updates on shared vectors).

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mx/walks.hpp"

namespace mx {

struct TrainConfig {
    std::size_t dim = 100;
    std::size_t window = 5;
    std::size_t negatives = 5;
    std::size_t epochs = 10;
    std::size_t walks_per_entity = 10;
    std::size_t walk_length = 20;  // node-hops, not tokens
    std::size_t min_count = 0;
    double initial_lr = 0.025;
    std::uint64_t seed = 42;
    std::size_t workers = 1;

    void check() const;
};

struct EmbeddingTable {
    std::size_t dim = 0;
    std::vector<std::string> vocab;  // sorted
    std::unordered_map<std::string, std::size_t> index;
    std::vector<double> input;   // vocab.size() * dim, row-major; these are E(·)
    std::vector<double> output;  // context vectors, same layout

    bool has(const std::string& token) const { return index.count(token) > 0; }
    std::span<const double> vec(const std::string& token) const;
    std::span<const double> row(std::size_t i) const { return {input.data() + i * dim, dim}; }
};

/// Loss and analytic gradients of one (center, context, label) pair,
/// label 1 for observed pairs and 0 for noise. Overflow-safe log-sigmoid.
double sg_pair_loss_grad(std::span<const double> center, std::span<const double> context,
                         int label, std::span<double> grad_center,
                         std::span<double> grad_context);

struct TrainStats {
    std::vector<double> epoch_loss;  // mean loss per positive pair, incl. its negatives
    std::size_t pairs_per_epoch = 0;
    std::size_t vocab_size = 0;
};

EmbeddingTable train_skipgram(const std::vector<Walk>& walks, const TrainConfig& config,
                              TrainStats* stats = nullptr);

/// a·b / (‖a‖‖b‖); zero-norm input gives 0 and sets *degenerate.
double cosine(std::span<const double> a, std::span<const double> b, bool* degenerate = nullptr);

/// TSV with a "dim=<d>" header line, then token and 9-significant-digit
/// components. Only the input vectors travel; a loaded table has zero output
/// vectors.
void save_embeddings(const EmbeddingTable& table, const std::string& path);
EmbeddingTable load_embeddings(const std::string& path);

}  // namespace mx

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mx/corpus.hpp"

namespace mx {

// Shape of a generated benchmark corpus. Datasets come in clusters with a
// shared performance profile; pipeline configurations come in families that
// share an operator sequence.
struct BenchSpec {
    std::size_t n_dataset_clusters = 3;
    std::size_t datasets_per_cluster = 10;
    std::size_t n_pipeline_families = 5;
    std::size_t configs_per_family = 20;
    double sparsity = 0.55;      // fraction of dataset x config pairs evaluated
    double noise_sd = 0.05;      // gaussian noise on top of the planted base value
    double invalid_rate = 0.0;   // fraction of evaluations marked failed
    std::uint64_t seed = 42;

    void check() const;
    bool operator==(const BenchSpec&) const = default;
};

struct GeneratedBench {
    ExperimentCorpus corpus;
    std::vector<std::string> warnings;
};

// Builds a corpus whose pair value is clip(base(cluster, family) + noise):
// the base matrix is drawn once per seed and gives each family one affine
// cluster, so datasets of a cluster share a performance profile. Variable
// names are drawn from per-cluster pools on top of a global pool, and
// same-family configs share their operator sequence, which is what the graph
// embeddings can pick up.
GeneratedBench generate_corpus(const BenchSpec& spec);

// Marks every record whose fit time reaches time_ratio times its pipeline's
// reference time as failed with the worst value. Records without a fit time
// or without a pipeline reference time are left alone. Returns how many
// records were newly invalidated.
std::size_t apply_timeout_rule(std::vector<EvaluationRecord>& records,
                               const std::vector<PipelineConfigDescriptor>& pipelines,
                               double time_ratio = 10.0);

void save_bench_spec(const BenchSpec& spec, const std::string& path);
BenchSpec load_bench_spec(const std::string& path);

}  // namespace mx

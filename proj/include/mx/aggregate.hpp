#pragma once

// Entity-vector aggregation: a pipeline is the mean of its method vectors,
// a dataset is the mean of its data-entity vectors (variable view), the mean
// of its linked pipelines' vectors (pipeline view, absent without linked
// pipelines), and the midpoint of the two views (combined view).

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mx/kg.hpp"
#include "mx/skipgram.hpp"

namespace mx {

struct PipelineEmbedding {
    std::string pipeline_id;
    std::vector<double> vector;
};

struct DatasetEmbedding {
    std::string dataset_id;
    std::vector<double> de_var;
    std::optional<std::vector<double>> de_pip;
    std::optional<std::vector<double>> de_comb;
};

/// Mean of the pipeline's method-node vectors. Methods whose tokens never
/// made it into the vocabulary are skipped; a pipeline with none at all is
/// an error naming the pipeline.
PipelineEmbedding pipeline_embedding(const KnowledgeGraph& kg, const EmbeddingTable& table,
                                     const std::string& pipeline_id);

/// Mean of the dataset's data-entity vectors.
std::vector<double> dataset_var_embedding(const KnowledgeGraph& kg, const EmbeddingTable& table,
                                          const std::string& dataset_id);

/// Mean of the linked pipelines' embeddings; nullopt when none are linked.
std::optional<std::vector<double>> dataset_pip_embedding(const KnowledgeGraph& kg,
                                                         const EmbeddingTable& table,
                                                         const std::string& dataset_id);

/// Elementwise midpoint of the two views.
std::vector<double> dataset_comb_embedding(const std::vector<double>& de_var,
                                           const std::vector<double>& de_pip);

struct AggregatedEmbeddings {
    std::size_t dim = 0;
    std::map<std::string, PipelineEmbedding> pipelines;
    std::map<std::string, DatasetEmbedding> datasets;
};

/// All pipelines and datasets present in the graph in one pass.
AggregatedEmbeddings aggregate_all(const KnowledgeGraph& kg, const EmbeddingTable& table);

/// TSV rows keyed `pipeline:<id>` and `dataset:<id>:var|pip|comb`, after a
/// dim=<d> header; 9 significant digits, sorted keys.
void save_aggregated(const AggregatedEmbeddings& agg, const std::string& path);
AggregatedEmbeddings load_aggregated(const std::string& path);

}  // namespace mx

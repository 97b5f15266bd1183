#pragma once

#include <map>
#include <string>
#include <vector>

#include "mx/forest.hpp"

namespace mx {

// Constant predictor: the mean training target.
struct AverageBaseline {
    double mean = 0.0;
};

AverageBaseline fit_baseline_average(const std::vector<FeatureRow>& train_rows);

// Nearest-pipeline predictor over the embedding space. For a query pipeline
// it finds the training pipeline with the highest cosine similarity and
// returns the recorded value of (dataset, nearest) when that pair was in the
// training set, otherwise the nearest pipeline's mean training value.
struct ClosestEmbeddingBaseline {
    std::map<std::pair<std::string, std::string>, double> pair_value;
    std::map<std::string, double> pipeline_mean;
    std::map<std::string, std::vector<double>> embeddings;  // training pipelines only
};

ClosestEmbeddingBaseline fit_baseline_closest(
    const std::vector<FeatureRow>& train_rows,
    const std::map<std::string, std::vector<double>>& pipeline_embeddings);

double predict_closest(const ClosestEmbeddingBaseline& model, const std::string& dataset_id,
                       const std::vector<double>& query_embedding);

}  // namespace mx

#include "mx/baselines.hpp"

#include "mx/skipgram.hpp"
#include "mx/util.hpp"

namespace mx {

AverageBaseline fit_baseline_average(const std::vector<FeatureRow>& train_rows) {
    if (train_rows.empty()) throw ValidationError("average baseline needs training rows");
    double sum = 0;
    for (const auto& r : train_rows) sum += r.y;
    return {sum / static_cast<double>(train_rows.size())};
}

ClosestEmbeddingBaseline fit_baseline_closest(
    const std::vector<FeatureRow>& train_rows,
    const std::map<std::string, std::vector<double>>& pipeline_embeddings) {
    if (train_rows.empty()) throw ValidationError("closest-embedding baseline needs training rows");
    ClosestEmbeddingBaseline model;
    std::map<std::string, std::pair<double, std::size_t>> sums;
    for (const auto& r : train_rows) {
        auto it = pipeline_embeddings.find(r.pipeline_id);
        if (it == pipeline_embeddings.end())
            throw ValidationError("training pipeline " + r.pipeline_id + " has no embedding");
        model.embeddings[r.pipeline_id] = it->second;
        model.pair_value[{r.dataset_id, r.pipeline_id}] = r.y;
        auto& [sum, count] = sums[r.pipeline_id];
        sum += r.y;
        count++;
    }
    for (const auto& [pid, sc] : sums)
        model.pipeline_mean[pid] = sc.first / static_cast<double>(sc.second);
    return model;
}

double predict_closest(const ClosestEmbeddingBaseline& model, const std::string& dataset_id,
                       const std::vector<double>& query_embedding) {
    if (model.embeddings.empty()) throw ValidationError("closest-embedding baseline is unfitted");
    const std::string* best_id = nullptr;
    double best_cos = 0;
    for (const auto& [pid, vec] : model.embeddings) {
        double c = cosine(vec, query_embedding);
        // map iteration is ordered, so on ties the lexicographically
        // smallest pipeline id is kept
        if (!best_id || c > best_cos) {
            best_id = &pid;
            best_cos = c;
        }
    }
    auto pair_it = model.pair_value.find({dataset_id, *best_id});
    if (pair_it != model.pair_value.end()) return pair_it->second;
    return model.pipeline_mean.at(*best_id);
}

}  // namespace mx

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "mx/aggregate.hpp"
#include "mx/corpus.hpp"
#include "mx/forest.hpp"
#include "mx/meta_features.hpp"

namespace mx {

enum class SplitLevel { kByDataset, kByPipeline };

std::string to_string(SplitLevel level);

struct Split {
    SplitLevel level = SplitLevel::kByDataset;
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
    double ratio = 0.7;
    std::uint64_t seed = 42;
};

// Sorts the ids, shuffles them with the seed and sends the first
// ceil(ratio * n) to the training side, so the result does not depend on the
// caller's ordering.
Split make_split(const std::vector<std::string>& ids, SplitLevel level, double ratio = 0.7,
                 std::uint64_t seed = 42);

// Keeps the records whose pipeline appears in at least min_count of the
// given records.
std::vector<EvaluationRecord> filter_min_support(const std::vector<EvaluationRecord>& pairs,
                                                 std::size_t min_count = 50);

struct RegressionScore {
    double mse = 0.0;
    double r2 = 0.0;
    bool constant_truth = false;  // r2 forced to 0
};

RegressionScore score_regression(const std::vector<double>& y_true,
                                 const std::vector<double>& y_pred);

struct ClassificationScore {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
};

// Labels are bin indices. Classes absent from both truth and prediction are
// left out of the macro F1 mean.
ClassificationScore score_classification(const std::vector<int>& labels_true,
                                         const std::vector<int>& labels_pred);

struct PerformanceProfile {
    std::string dataset_id;
    std::map<std::string, double> entries;  // pipeline id -> recorded value
};

// One profile per dataset holding the recorded values for the given metric.
// Invalid evaluations participate with their recorded worst value.
std::map<std::string, PerformanceProfile> build_profiles(const ExperimentCorpus& corpus,
                                                         const Metric& metric);

// Cosine over the values of the shared pipelines; fewer than 2 shared
// pipelines means there is no meaningful ground truth for the pair.
std::optional<double> ground_truth_similarity(const PerformanceProfile& a,
                                              const PerformanceProfile& b);

enum class DpseStrategy { kVar, kPip, kComb };

std::string to_string(DpseStrategy strategy);

struct RankedCandidate {
    std::string dataset_id;
    double score = 0.0;
};

// All other datasets carrying the strategy's embedding, sorted by descending
// cosine to the query; ties by ascending dataset id.
std::vector<RankedCandidate> rank_dpse(const std::string& query_id,
                                       const AggregatedEmbeddings& embeddings,
                                       DpseStrategy strategy);

struct HitResult {
    bool possible = false;  // at least one ground-truth entry above the threshold
    int hit = 0;
};

HitResult hit_at_k(const std::vector<RankedCandidate>& ranked,
                   const std::map<std::string, double>& gt_row, std::size_t k, double st);

struct NdcgResult {
    double value = 0.0;
    bool degenerate = false;  // ideal DCG was zero
};

NdcgResult ndcg_at_k(const std::vector<RankedCandidate>& ranked,
                     const std::map<std::string, double>& gt_row, std::size_t k);

// Per-feature mean and standard deviation for the normalized variant of the
// meta-feature similarity, computed over a corpus of vectors.
struct MfStats {
    std::vector<double> mean;
    std::vector<double> sd;
};

MfStats mf_train_stats(const std::vector<std::vector<double>>& vectors);

// Negated p-norm of the (optionally z-scored) difference. Zero-sd features
// are dropped in the normalized variant.
double mf_pnorm_similarity(const std::vector<double>& m1, const std::vector<double>& m2,
                           double p, bool normalize, const MfStats* stats);

enum class PpeScenario { kUnseenDatasets, kUnseenPipelines };

std::string to_string(PpeScenario scenario);

struct PpeOptions {
    double split_ratio = 0.7;
    std::uint64_t seed = 42;
    std::size_t min_support = 50;       // unseen_datasets scenario only
    bool grid_search = false;           // default: fixed_params, no CV sweep
    ForestParams fixed_params{100, std::nullopt, 2};
    int cv_folds = 10;
    int workers = 1;
    std::vector<MetaFeatureCategory> mf_subset;  // empty = all categories
};

struct PpeReport {
    PpeScenario scenario = PpeScenario::kUnseenDatasets;
    std::string meta_target;
    std::string mf_subset_name;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::size_t n_features = 0;
    ForestParams regression_params;
    ForestParams classification_params;
    RegressionScore regression;
    ClassificationScore classification;
    bool bins_degenerate = false;
    std::optional<RegressionScore> baseline_average;    // unseen_pipelines only
    std::optional<RegressionScore> baseline_closest;    // unseen_pipelines only
};

// Full protocol for one scenario and meta-target: builds feature rows
// ([meta-features | pipeline embedding] against the recorded value), splits,
// filters, fits the predictor both as a regressor and as a three-class
// classifier over binned targets, and scores on the held-out pairs.
PpeReport run_ppe_scenario(const ExperimentCorpus& corpus, const AggregatedEmbeddings& embeddings,
                           PpeScenario scenario, const Metric& meta_target,
                           const PpeOptions& options = {});

// Both predictor heads fit on every recorded pair, with the imputer and the
// target bins fit on the same full set. No protocol scores; this is the
// deployment path that turns a finished corpus into loadable model files.
struct PpeTrainArtifacts {
    MetaModel regression;
    MetaModel classification;
    TargetBins bins;
    std::vector<std::string> feature_layout;
    std::size_t n_rows = 0;
};

PpeTrainArtifacts train_ppe_full(const ExperimentCorpus& corpus,
                                 const AggregatedEmbeddings& embeddings,
                                 const Metric& meta_target, const PpeOptions& options = {});

struct DpseOptions {
    std::vector<std::size_t> ks = {1, 2, 5};
    double similarity_threshold = 0.8;
    double mf_p = 2.0;
    Metric metric = Metric::accuracy();
};

struct DpseCell {
    double mean = 0.0;
    std::size_t queries = 0;   // denominator after exclusions
    std::size_t excluded = 0;  // impossible or degenerate queries
};

struct DpseReport {
    std::vector<std::size_t> ks;
    double similarity_threshold = 0.8;
    std::string metric;
    // method name ("var", "pip", "comb", "mf", "mf_norm") -> k -> cell
    std::map<std::string, std::map<std::size_t, DpseCell>> hit;
    std::map<std::string, std::map<std::size_t, DpseCell>> ndcg;
};

// Dataset-similarity protocol: every dataset with a performance profile acts
// as a query; embedding strategies rank by cosine and the meta-feature
// baselines by negated p-norm (raw and z-scored).
DpseReport run_dpse(const ExperimentCorpus& corpus, const AggregatedEmbeddings& embeddings,
                    const DpseOptions& options = {});

nlohmann::json ppe_report_json(const PpeReport& report);
nlohmann::json dpse_report_json(const DpseReport& report);
std::string ppe_report_text(const std::vector<PpeReport>& reports);
std::string dpse_report_text(const DpseReport& report);

}  // namespace mx

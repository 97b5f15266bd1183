#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mx {

// One training or probe instance for the performance predictor. The feature
// vector layout is fixed as [meta-features in corpus order | embedding
// components 0..dim-1] and is recorded in the fitted model so that probes
// with a different layout are rejected.
struct FeatureRow {
    std::string dataset_id;
    std::string pipeline_id;
    std::vector<double> x;
    double y = 0.0;  // performance value in [0, 1]
    int label = -1;  // bin label for classification mode, -1 when unused
};

enum class ModelMode { kRegression, kClassification };

std::string to_string(ModelMode mode);
ModelMode model_mode_from_string(const std::string& s);

// Three-way target binning at the 1/3 and 2/3 empirical quantiles
// (linear interpolation over the sorted training targets).
struct TargetBins {
    double b1 = 0.0;
    double b2 = 0.0;
    bool degenerate = false;  // all training targets equal
};

TargetBins quantile_bin_targets(const std::vector<double>& train_targets);

// 0 = low (y <= b1), 1 = medium (y <= b2), 2 = high. Degenerate bins map
// everything to medium.
int classify_bin(const TargetBins& bins, double y);
const std::vector<std::string>& bin_label_names();

struct ForestParams {
    int n_estimators = 100;
    std::optional<int> max_depth;  // empty = unbounded
    int min_samples_split = 2;

    bool operator==(const ForestParams&) const = default;
};

// Flat binary tree. Leaves have feature == -1 and carry the prediction in
// leaf_value (mean target for regression, class label for classification).
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double leaf_value = 0.0;
};

struct Tree {
    std::vector<TreeNode> nodes;
};

double tree_predict(const Tree& tree, std::span<const double> x);

struct MetaModel {
    ModelMode mode = ModelMode::kRegression;
    ForestParams params;
    std::uint64_t seed = 42;
    std::vector<std::string> feature_layout;
    int n_classes = 0;  // classification only
    std::vector<Tree> trees;
};

// Bagged ensemble of depth-limited CART trees. Each tree is grown on a
// bootstrap sample of the rows (size n, drawn with replacement) with its own
// seed derived from the tree index, so results do not depend on `workers`.
// Per split, ceil(sqrt(d)) candidate features are drawn for classification
// and ceil(d/3) for regression.
MetaModel fit_meta_model(const std::vector<FeatureRow>& rows, ModelMode mode,
                         const ForestParams& params,
                         const std::vector<std::string>& feature_layout,
                         std::uint64_t seed = 42, int workers = 1);

double predict_regression(const MetaModel& model, std::span<const double> x);
// Majority vote over trees; ties go to the lower label index.
int predict_label(const MetaModel& model, std::span<const double> x);

struct GridSearchResult {
    ForestParams best;
    double best_score = 0.0;  // mean CV MSE (regression) or accuracy (classification)
    std::size_t cells_evaluated = 0;
};

// 27-cell default grid: n_estimators {50,100,200} for classification or
// {20,100,200} for regression, max_depth {10, 20, unbounded},
// min_samples_split {2, 5, 10}.
std::vector<ForestParams> default_param_grid(ModelMode mode);

// Exhaustive k-fold cross validation over the grid. Picks the lowest mean
// MSE (regression) or highest mean accuracy (classification); ties go to the
// smaller model: fewer trees first, then the shallower depth limit.
GridSearchResult grid_search_cv(const std::vector<FeatureRow>& rows, ModelMode mode,
                                const std::vector<ForestParams>& grid, int folds = 10,
                                std::uint64_t seed = 42, int workers = 1);

void save_model(const MetaModel& model, const std::string& path);
MetaModel load_model(const std::string& path);

}  // namespace mx

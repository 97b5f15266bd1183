#include "mx/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <thread>

#include "json.hpp"
#include "mx/util.hpp"

namespace mx {

std::string to_string(ModelMode mode) {
    return mode == ModelMode::kRegression ? "regression" : "classification";
}

ModelMode model_mode_from_string(const std::string& s) {
    if (s == "regression") return ModelMode::kRegression;
    if (s == "classification") return ModelMode::kClassification;
    throw ValidationError("unknown model mode: " + s);
}

namespace {

// Empirical quantile with linear interpolation over sorted values.
double quantile_sorted(const std::vector<double>& sorted, double q) {
    double h = q * static_cast<double>(sorted.size() - 1);
    std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= sorted.size()) return sorted.back();
    double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

TargetBins quantile_bin_targets(const std::vector<double>& train_targets) {
    if (train_targets.size() < 3)
        throw ValidationError("target binning needs at least 3 training targets");
    std::vector<double> sorted = train_targets;
    std::sort(sorted.begin(), sorted.end());
    TargetBins bins;
    bins.b1 = quantile_sorted(sorted, 1.0 / 3.0);
    bins.b2 = quantile_sorted(sorted, 2.0 / 3.0);
    bins.degenerate = sorted.front() == sorted.back();
    return bins;
}

int classify_bin(const TargetBins& bins, double y) {
    if (bins.degenerate) return 1;
    if (y <= bins.b1) return 0;
    if (y <= bins.b2) return 1;
    return 2;
}

const std::vector<std::string>& bin_label_names() {
    static const std::vector<std::string> names = {"low", "medium", "high"};
    return names;
}

double tree_predict(const Tree& tree, std::span<const double> x) {
    int node = 0;
    while (tree.nodes[node].feature >= 0) {
        const TreeNode& n = tree.nodes[node];
        node = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return tree.nodes[node].leaf_value;
}

namespace {

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double score = std::numeric_limits<double>::infinity();  // lower is better
};

class TreeBuilder {
public:
    TreeBuilder(const std::vector<FeatureRow>& rows, ModelMode mode, int n_classes,
                const ForestParams& params, std::uint64_t seed)
        : rows_(rows), mode_(mode), n_classes_(n_classes), params_(params), rng_(seed) {
        dim_ = rows.front().x.size();
        double d = static_cast<double>(dim_);
        double m = mode == ModelMode::kClassification ? std::sqrt(d) : d / 3.0;
        n_candidates_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(m)));
        feature_pool_.resize(dim_);
        for (std::size_t i = 0; i < dim_; ++i) feature_pool_[i] = static_cast<int>(i);
    }

    Tree build() {
        std::size_t n = rows_.size();
        std::vector<std::size_t> sample(n);
        for (std::size_t i = 0; i < n; ++i) sample[i] = rng_.next_below(n);
        Tree tree;
        grow(tree, sample, 0);
        return tree;
    }

private:
    double target(std::size_t row) const {
        return mode_ == ModelMode::kClassification
                   ? static_cast<double>(rows_[row].label)
                   : rows_[row].y;
    }

    double leaf_value(const std::vector<std::size_t>& idx) const {
        if (mode_ == ModelMode::kRegression) {
            double sum = 0;
            for (std::size_t i : idx) sum += rows_[i].y;
            return sum / static_cast<double>(idx.size());
        }
        std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes_), 0);
        for (std::size_t i : idx) counts[static_cast<std::size_t>(rows_[i].label)]++;
        std::size_t best = 0;
        for (std::size_t c = 1; c < counts.size(); ++c)
            if (counts[c] > counts[best]) best = c;  // ties keep the lower label
        return static_cast<double>(best);
    }

    bool pure(const std::vector<std::size_t>& idx) const {
        double first = target(idx.front());
        for (std::size_t i : idx)
            if (target(i) != first) return false;
        return true;
    }

    // Impurity of a split as the weighted sum over both children: Gini for
    // classification, within-child squared error for regression. Lower wins.
    SplitChoice best_split(const std::vector<std::size_t>& idx) {
        // Draw the per-split feature subset, then scan it in index order.
        for (std::size_t i = 0; i < n_candidates_; ++i) {
            std::size_t j = i + rng_.next_below(dim_ - i);
            std::swap(feature_pool_[i], feature_pool_[j]);
        }
        std::vector<int> chosen(feature_pool_.begin(),
                                feature_pool_.begin() + static_cast<long>(n_candidates_));
        std::sort(chosen.begin(), chosen.end());

        SplitChoice best;
        std::vector<std::pair<double, double>> vals(idx.size());  // (x_f, target)
        for (int f : chosen) {
            for (std::size_t i = 0; i < idx.size(); ++i)
                vals[i] = {rows_[idx[i]].x[static_cast<std::size_t>(f)], target(idx[i])};
            std::sort(vals.begin(), vals.end());
            if (vals.front().first == vals.back().first) continue;
            scan_feature(vals, f, best);
        }
        return best;
    }

    void scan_feature(const std::vector<std::pair<double, double>>& vals, int feature,
                      SplitChoice& best) {
        std::size_t n = vals.size();
        if (mode_ == ModelMode::kRegression) {
            double total = 0, total_sq = 0;
            for (const auto& [_, y] : vals) {
                total += y;
                total_sq += y * y;
            }
            double lsum = 0, lsq = 0;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                lsum += vals[i].second;
                lsq += vals[i].second * vals[i].second;
                if (vals[i].first == vals[i + 1].first) continue;
                double nl = static_cast<double>(i + 1);
                double nr = static_cast<double>(n - i - 1);
                double sse_l = lsq - lsum * lsum / nl;
                double rsum = total - lsum;
                double sse_r = (total_sq - lsq) - rsum * rsum / nr;
                double score = sse_l + sse_r;
                if (score < best.score) {
                    best = {true, feature, (vals[i].first + vals[i + 1].first) / 2.0, score};
                }
            }
        } else {
            std::vector<double> totals(static_cast<std::size_t>(n_classes_), 0);
            for (const auto& [_, y] : vals) totals[static_cast<std::size_t>(y)] += 1;
            std::vector<double> left(static_cast<std::size_t>(n_classes_), 0);
            for (std::size_t i = 0; i + 1 < n; ++i) {
                left[static_cast<std::size_t>(vals[i].second)] += 1;
                if (vals[i].first == vals[i + 1].first) continue;
                double nl = static_cast<double>(i + 1);
                double nr = static_cast<double>(n - i - 1);
                double gini_l = 1, gini_r = 1;
                for (std::size_t c = 0; c < left.size(); ++c) {
                    double pl = left[c] / nl;
                    double pr = (totals[c] - left[c]) / nr;
                    gini_l -= pl * pl;
                    gini_r -= pr * pr;
                }
                double score = (nl * gini_l + nr * gini_r) / static_cast<double>(n);
                if (score < best.score) {
                    best = {true, feature, (vals[i].first + vals[i + 1].first) / 2.0, score};
                }
            }
        }
    }

    int grow(Tree& tree, const std::vector<std::size_t>& idx, int depth) {
        int id = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({});
        bool depth_capped = params_.max_depth && depth >= *params_.max_depth;
        if (depth_capped || idx.size() < static_cast<std::size_t>(params_.min_samples_split) ||
            pure(idx)) {
            tree.nodes[static_cast<std::size_t>(id)].leaf_value = leaf_value(idx);
            return id;
        }
        SplitChoice split = best_split(idx);
        if (!split.found) {
            tree.nodes[static_cast<std::size_t>(id)].leaf_value = leaf_value(idx);
            return id;
        }
        std::vector<std::size_t> left_idx, right_idx;
        for (std::size_t i : idx) {
            if (rows_[i].x[static_cast<std::size_t>(split.feature)] <= split.threshold)
                left_idx.push_back(i);
            else
                right_idx.push_back(i);
        }
        tree.nodes[static_cast<std::size_t>(id)].feature = split.feature;
        tree.nodes[static_cast<std::size_t>(id)].threshold = split.threshold;
        int left = grow(tree, left_idx, depth + 1);
        tree.nodes[static_cast<std::size_t>(id)].left = left;
        int right = grow(tree, right_idx, depth + 1);
        tree.nodes[static_cast<std::size_t>(id)].right = right;
        return id;
    }

    const std::vector<FeatureRow>& rows_;
    ModelMode mode_;
    int n_classes_;
    ForestParams params_;
    Rng rng_;
    std::size_t dim_ = 0;
    std::size_t n_candidates_ = 0;
    std::vector<int> feature_pool_;
};

void check_rows(const std::vector<FeatureRow>& rows, ModelMode mode) {
    if (rows.empty()) throw ValidationError("cannot fit a model on zero rows");
    std::size_t dim = rows.front().x.size();
    for (const auto& r : rows) {
        if (r.x.size() != dim)
            throw ValidationError("inconsistent feature vector lengths: " +
                                  std::to_string(r.x.size()) + " vs " + std::to_string(dim));
        if (!std::isfinite(r.y)) throw ValidationError("non-finite target value");
        if (mode == ModelMode::kClassification && r.label < 0)
            throw ValidationError("classification mode requires binned labels on every row");
    }
}

}  // namespace

MetaModel fit_meta_model(const std::vector<FeatureRow>& rows, ModelMode mode,
                         const ForestParams& params,
                         const std::vector<std::string>& feature_layout, std::uint64_t seed,
                         int workers) {
    check_rows(rows, mode);
    if (params.n_estimators < 1) throw ValidationError("n_estimators must be at least 1");
    if (params.min_samples_split < 2)
        throw ValidationError("min_samples_split must be at least 2");
    if (!feature_layout.empty() && feature_layout.size() != rows.front().x.size())
        throw ValidationError("feature layout does not match the feature vector length");

    MetaModel model;
    model.mode = mode;
    model.params = params;
    model.seed = seed;
    model.feature_layout = feature_layout;
    if (mode == ModelMode::kClassification) {
        int max_label = 0;
        for (const auto& r : rows) max_label = std::max(max_label, r.label);
        model.n_classes = max_label + 1;
    }
    model.trees.resize(static_cast<std::size_t>(params.n_estimators));

    auto fit_range = [&](std::size_t worker, std::size_t stride) {
        for (std::size_t t = worker; t < model.trees.size(); t += stride) {
            TreeBuilder builder(rows, mode, model.n_classes, params, derive_seed(seed, t));
            model.trees[t] = builder.build();
        }
    };
    int n_workers = std::max(1, workers);
    if (n_workers == 1) {
        fit_range(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < n_workers; ++w)
            pool.emplace_back(fit_range, static_cast<std::size_t>(w),
                              static_cast<std::size_t>(n_workers));
        for (auto& th : pool) th.join();
    }
    return model;
}

namespace {

void check_probe(const MetaModel& model, std::span<const double> x) {
    if (model.trees.empty()) throw ValidationError("model has no trees");
    if (!model.feature_layout.empty() && x.size() != model.feature_layout.size())
        throw ValidationError("probe length " + std::to_string(x.size()) +
                              " does not match model layout of " +
                              std::to_string(model.feature_layout.size()) + " features");
}

}  // namespace

double predict_regression(const MetaModel& model, std::span<const double> x) {
    if (model.mode != ModelMode::kRegression)
        throw ValidationError("predict_regression called on a classification model");
    check_probe(model, x);
    double sum = 0;
    for (const auto& t : model.trees) sum += tree_predict(t, x);
    return sum / static_cast<double>(model.trees.size());
}

int predict_label(const MetaModel& model, std::span<const double> x) {
    if (model.mode != ModelMode::kClassification)
        throw ValidationError("predict_label called on a regression model");
    check_probe(model, x);
    std::vector<std::size_t> votes(static_cast<std::size_t>(model.n_classes), 0);
    for (const auto& t : model.trees) {
        auto label = static_cast<std::size_t>(tree_predict(t, x));
        votes[label]++;
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < votes.size(); ++c)
        if (votes[c] > votes[best]) best = c;  // ties keep the lower label
    return static_cast<int>(best);
}

std::vector<ForestParams> default_param_grid(ModelMode mode) {
    std::vector<int> estimators = mode == ModelMode::kClassification
                                      ? std::vector<int>{50, 100, 200}
                                      : std::vector<int>{20, 100, 200};
    std::vector<std::optional<int>> depths = {10, 20, std::nullopt};
    std::vector<int> splits = {2, 5, 10};
    std::vector<ForestParams> grid;
    for (int n : estimators)
        for (const auto& d : depths)
            for (int s : splits) grid.push_back({n, d, s});
    return grid;
}

GridSearchResult grid_search_cv(const std::vector<FeatureRow>& rows, ModelMode mode,
                                const std::vector<ForestParams>& grid, int folds,
                                std::uint64_t seed, int workers) {
    check_rows(rows, mode);
    if (grid.empty()) throw ValidationError("empty hyperparameter grid");
    if (folds < 2) throw ValidationError("cross validation needs at least 2 folds");
    if (rows.size() < static_cast<std::size_t>(folds))
        throw ValidationError("fewer rows than folds: " + std::to_string(rows.size()) +
                              " < " + std::to_string(folds));

    std::size_t n = rows.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng shuffler(derive_seed(seed, 0xF01D));
    shuffler.shuffle(order);

    auto fold_range = [&](int k) {
        std::size_t lo = n * static_cast<std::size_t>(k) / static_cast<std::size_t>(folds);
        std::size_t hi = n * static_cast<std::size_t>(k + 1) / static_cast<std::size_t>(folds);
        return std::pair<std::size_t, std::size_t>{lo, hi};
    };

    // Lower is better in both modes, so accuracy is negated.
    auto depth_rank = [](const std::optional<int>& d) {
        return d ? *d : std::numeric_limits<int>::max();
    };
    GridSearchResult result;
    double best_loss = std::numeric_limits<double>::infinity();
    for (std::size_t cell = 0; cell < grid.size(); ++cell) {
        double loss_sum = 0;
        for (int k = 0; k < folds; ++k) {
            auto [lo, hi] = fold_range(k);
            std::vector<FeatureRow> train, test;
            for (std::size_t i = 0; i < n; ++i) {
                if (i >= lo && i < hi)
                    test.push_back(rows[order[i]]);
                else
                    train.push_back(rows[order[i]]);
            }
            auto model = fit_meta_model(train, mode, grid[cell], {},
                                        derive_seed(derive_seed(seed, cell), k), workers);
            if (mode == ModelMode::kRegression) {
                double sse = 0;
                for (const auto& r : test) {
                    double e = predict_regression(model, r.x) - r.y;
                    sse += e * e;
                }
                loss_sum += sse / static_cast<double>(test.size());
            } else {
                std::size_t hits = 0;
                for (const auto& r : test)
                    if (predict_label(model, r.x) == r.label) hits++;
                loss_sum += -(static_cast<double>(hits) / static_cast<double>(test.size()));
            }
        }
        double loss = loss_sum / folds;
        bool better = loss < best_loss;
        if (loss == best_loss) {
            const ForestParams& cur = grid[cell];
            const ForestParams& inc = result.best;
            better = cur.n_estimators < inc.n_estimators ||
                     (cur.n_estimators == inc.n_estimators &&
                      depth_rank(cur.max_depth) < depth_rank(inc.max_depth));
        }
        if (cell == 0 || better) {
            best_loss = loss;
            result.best = grid[cell];
        }
        result.cells_evaluated++;
    }
    result.best_score = mode == ModelMode::kRegression ? best_loss : -best_loss;
    return result;
}

void save_model(const MetaModel& model, const std::string& path) {
    nlohmann::json j;
    j["mode"] = to_string(model.mode);
    j["n_estimators"] = model.params.n_estimators;
    if (model.params.max_depth)
        j["max_depth"] = *model.params.max_depth;
    else
        j["max_depth"] = nullptr;
    j["min_samples_split"] = model.params.min_samples_split;
    j["seed"] = model.seed;
    j["feature_layout"] = model.feature_layout;
    j["n_classes"] = model.n_classes;
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : model.trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& nd : t.nodes)
            nodes.push_back({nd.feature, nd.threshold, nd.left, nd.right, nd.leaf_value});
        trees.push_back(std::move(nodes));
    }
    j["trees"] = std::move(trees);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
    if (!out) throw IoError("failed while writing " + path);
}

MetaModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
    try {
        MetaModel model;
        model.mode = model_mode_from_string(j.at("mode").get<std::string>());
        model.params.n_estimators = j.at("n_estimators").get<int>();
        if (!j.at("max_depth").is_null()) model.params.max_depth = j.at("max_depth").get<int>();
        model.params.min_samples_split = j.at("min_samples_split").get<int>();
        model.seed = j.at("seed").get<std::uint64_t>();
        model.feature_layout = j.at("feature_layout").get<std::vector<std::string>>();
        model.n_classes = j.at("n_classes").get<int>();
        for (const auto& tj : j.at("trees")) {
            Tree t;
            for (const auto& nj : tj) {
                TreeNode nd;
                nd.feature = nj.at(0).get<int>();
                nd.threshold = nj.at(1).get<double>();
                nd.left = nj.at(2).get<int>();
                nd.right = nj.at(3).get<int>();
                nd.leaf_value = nj.at(4).get<double>();
                t.nodes.push_back(nd);
            }
            if (t.nodes.empty()) throw ValidationError("empty tree in model file");
            model.trees.push_back(std::move(t));
        }
        if (model.trees.empty()) throw ValidationError("model file has no trees");
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

}  // namespace mx

#include "mx/evaltasks.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "mx/baselines.hpp"
#include "mx/skipgram.hpp"
#include "mx/util.hpp"

namespace mx {

std::string to_string(SplitLevel level) {
    return level == SplitLevel::kByDataset ? "by_dataset" : "by_pipeline";
}

std::string to_string(PpeScenario scenario) {
    return scenario == PpeScenario::kUnseenDatasets ? "unseen_datasets" : "unseen_pipelines";
}

std::string to_string(DpseStrategy strategy) {
    switch (strategy) {
        case DpseStrategy::kVar: return "var";
        case DpseStrategy::kPip: return "pip";
        default: return "comb";
    }
}

Split make_split(const std::vector<std::string>& ids, SplitLevel level, double ratio,
                 std::uint64_t seed) {
    if (ids.size() < 2) throw ValidationError("a split needs at least 2 ids");
    if (!(ratio > 0.0 && ratio < 1.0)) throw ValidationError("split ratio must be in (0,1)");
    std::vector<std::string> sorted = ids;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw ValidationError("duplicate ids passed to make_split");
    Rng rng(seed);
    rng.shuffle(sorted);
    auto n_train = static_cast<std::size_t>(
        std::ceil(ratio * static_cast<double>(sorted.size())));
    Split split;
    split.level = level;
    split.ratio = ratio;
    split.seed = seed;
    split.train_ids.assign(sorted.begin(), sorted.begin() + static_cast<long>(n_train));
    split.test_ids.assign(sorted.begin() + static_cast<long>(n_train), sorted.end());
    return split;
}

std::vector<EvaluationRecord> filter_min_support(const std::vector<EvaluationRecord>& pairs,
                                                 std::size_t min_count) {
    std::map<std::string, std::size_t> support;
    for (const auto& p : pairs) support[p.pipeline_id]++;
    std::vector<EvaluationRecord> kept;
    for (const auto& p : pairs)
        if (support[p.pipeline_id] >= min_count) kept.push_back(p);
    return kept;
}

RegressionScore score_regression(const std::vector<double>& y_true,
                                 const std::vector<double>& y_pred) {
    if (y_true.empty() || y_true.size() != y_pred.size())
        throw ValidationError("score_regression needs equal non-empty vectors");
    double n = static_cast<double>(y_true.size());
    double sse = 0, mean = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        double e = y_true[i] - y_pred[i];
        sse += e * e;
        mean += y_true[i];
    }
    mean /= n;
    double sst = 0;
    for (double y : y_true) sst += (y - mean) * (y - mean);
    RegressionScore score;
    score.mse = sse / n;
    if (sst == 0.0) {
        score.r2 = 0.0;
        score.constant_truth = true;
    } else {
        score.r2 = 1.0 - sse / sst;
    }
    return score;
}

ClassificationScore score_classification(const std::vector<int>& labels_true,
                                         const std::vector<int>& labels_pred) {
    if (labels_true.empty() || labels_true.size() != labels_pred.size())
        throw ValidationError("score_classification needs equal non-empty vectors");
    std::size_t hits = 0;
    std::set<int> seen;
    for (std::size_t i = 0; i < labels_true.size(); ++i) {
        if (labels_true[i] == labels_pred[i]) hits++;
        seen.insert(labels_true[i]);
        seen.insert(labels_pred[i]);
    }
    double f1_sum = 0;
    for (int c : seen) {
        double tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < labels_true.size(); ++i) {
            if (labels_pred[i] == c && labels_true[i] == c) tp++;
            if (labels_pred[i] == c && labels_true[i] != c) fp++;
            if (labels_pred[i] != c && labels_true[i] == c) fn++;
        }
        double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
        double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
        double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
        f1_sum += f1;
    }
    ClassificationScore score;
    score.accuracy = static_cast<double>(hits) / static_cast<double>(labels_true.size());
    score.macro_f1 = seen.empty() ? 0.0 : f1_sum / static_cast<double>(seen.size());
    return score;
}

std::map<std::string, PerformanceProfile> build_profiles(const ExperimentCorpus& corpus,
                                                         const Metric& metric) {
    std::map<std::string, PerformanceProfile> profiles;
    for (const auto& e : corpus.evaluations) {
        if (!(e.metric == metric)) continue;
        auto& profile = profiles[e.dataset_id];
        profile.dataset_id = e.dataset_id;
        profile.entries[e.pipeline_id] = e.value;
    }
    return profiles;
}

std::optional<double> ground_truth_similarity(const PerformanceProfile& a,
                                              const PerformanceProfile& b) {
    std::vector<double> va, vb;
    for (const auto& [pid, value] : a.entries) {
        auto it = b.entries.find(pid);
        if (it == b.entries.end()) continue;
        va.push_back(value);
        vb.push_back(it->second);
    }
    if (va.size() < 2) return std::nullopt;
    return cosine(va, vb);
}

namespace {

void sort_ranked(std::vector<RankedCandidate>& ranked) {
    std::sort(ranked.begin(), ranked.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.dataset_id < b.dataset_id;
    });
}

const std::vector<double>* strategy_vector(const DatasetEmbedding& emb, DpseStrategy strategy) {
    switch (strategy) {
        case DpseStrategy::kVar: return &emb.de_var;
        case DpseStrategy::kPip: return emb.de_pip ? &*emb.de_pip : nullptr;
        default: return emb.de_comb ? &*emb.de_comb : nullptr;
    }
}

}  // namespace

std::vector<RankedCandidate> rank_dpse(const std::string& query_id,
                                       const AggregatedEmbeddings& embeddings,
                                       DpseStrategy strategy) {
    auto qit = embeddings.datasets.find(query_id);
    const std::vector<double>* query =
        qit == embeddings.datasets.end() ? nullptr : strategy_vector(qit->second, strategy);
    if (!query)
        throw ValidationError("dataset " + query_id + " has no " + to_string(strategy) +
                              " embedding");
    std::vector<RankedCandidate> ranked;
    for (const auto& [id, emb] : embeddings.datasets) {
        if (id == query_id) continue;
        const std::vector<double>* v = strategy_vector(emb, strategy);
        if (!v) continue;
        ranked.push_back({id, cosine(*query, *v)});
    }
    sort_ranked(ranked);
    return ranked;
}

HitResult hit_at_k(const std::vector<RankedCandidate>& ranked,
                   const std::map<std::string, double>& gt_row, std::size_t k, double st) {
    if (k < 1) throw ValidationError("hit_at_k needs k >= 1");
    HitResult result;
    for (const auto& [_, sim] : gt_row) {
        if (sim > st) {
            result.possible = true;
            break;
        }
    }
    if (!result.possible) return result;
    for (std::size_t r = 0; r < ranked.size() && r < k; ++r) {
        auto it = gt_row.find(ranked[r].dataset_id);
        if (it != gt_row.end() && it->second > st) {
            result.hit = 1;
            break;
        }
    }
    return result;
}

NdcgResult ndcg_at_k(const std::vector<RankedCandidate>& ranked,
                     const std::map<std::string, double>& gt_row, std::size_t k) {
    if (k < 1) throw ValidationError("ndcg_at_k needs k >= 1");
    if (gt_row.empty()) throw ValidationError("ndcg_at_k needs a non-empty ground-truth row");
    double dcg = 0;
    for (std::size_t r = 0; r < ranked.size() && r < k; ++r) {
        auto it = gt_row.find(ranked[r].dataset_id);
        double gain = it == gt_row.end() ? 0.0 : std::max(it->second, 0.0);
        dcg += gain / std::log2(static_cast<double>(r) + 2.0);
    }
    std::vector<double> gains;
    gains.reserve(gt_row.size());
    for (const auto& [_, sim] : gt_row) gains.push_back(std::max(sim, 0.0));
    std::sort(gains.begin(), gains.end(), std::greater<>());
    double idcg = 0;
    for (std::size_t r = 0; r < gains.size() && r < k; ++r)
        idcg += gains[r] / std::log2(static_cast<double>(r) + 2.0);
    NdcgResult result;
    if (idcg == 0.0) {
        result.degenerate = true;
        return result;
    }
    result.value = dcg / idcg;
    return result;
}

MfStats mf_train_stats(const std::vector<std::vector<double>>& vectors) {
    if (vectors.empty()) throw ValidationError("mf_train_stats needs at least one vector");
    std::size_t dim = vectors.front().size();
    MfStats stats;
    stats.mean.assign(dim, 0.0);
    stats.sd.assign(dim, 0.0);
    for (const auto& v : vectors) {
        if (v.size() != dim) throw ValidationError("ragged meta-feature vectors");
        for (std::size_t i = 0; i < dim; ++i) stats.mean[i] += v[i];
    }
    double n = static_cast<double>(vectors.size());
    for (auto& m : stats.mean) m /= n;
    for (const auto& v : vectors)
        for (std::size_t i = 0; i < dim; ++i) {
            double d = v[i] - stats.mean[i];
            stats.sd[i] += d * d;
        }
    for (auto& s : stats.sd) s = std::sqrt(s / n);
    return stats;
}

double mf_pnorm_similarity(const std::vector<double>& m1, const std::vector<double>& m2,
                           double p, bool normalize, const MfStats* stats) {
    if (m1.size() != m2.size()) throw ValidationError("meta-feature vectors differ in length");
    if (p < 1.0) throw ValidationError("p-norm needs p >= 1");
    if (normalize && (!stats || stats->mean.size() != m1.size()))
        throw ValidationError("normalized similarity needs matching corpus stats");
    double acc = 0;
    for (std::size_t i = 0; i < m1.size(); ++i) {
        double a = m1[i], b = m2[i];
        if (normalize) {
            if (stats->sd[i] == 0.0) continue;  // constant feature carries no signal
            a = (a - stats->mean[i]) / stats->sd[i];
            b = (b - stats->mean[i]) / stats->sd[i];
        }
        acc += std::pow(std::abs(a - b), p);
    }
    return -std::pow(acc, 1.0 / p);
}

namespace {

std::optional<MetaFeatureVector> resolve_meta_features(const DatasetDescriptor& d) {
    if (d.meta_features) return *d.meta_features;
    if (d.table) {
        auto extraction = extract_meta_features(*d.table, d.target().name, d.task_kind);
        return extraction.vector;
    }
    return std::nullopt;
}

std::vector<std::size_t> subset_indices(const MetaFeatureVector& mf,
                                        const std::vector<MetaFeatureCategory>& subset) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < mf.names.size(); ++i) {
        bool keep = subset.empty();
        for (auto c : subset)
            if (mf.categories[i] == c) keep = true;
        if (keep) idx.push_back(i);
    }
    return idx;
}

std::string subset_name(const std::vector<MetaFeatureCategory>& subset) {
    if (subset.empty()) return "all";
    std::string name;
    for (auto c : subset) {
        if (!name.empty()) name += "+";
        name += to_string(c);
    }
    return name;
}

}  // namespace

PpeReport run_ppe_scenario(const ExperimentCorpus& corpus, const AggregatedEmbeddings& embeddings,
                           PpeScenario scenario, const Metric& meta_target,
                           const PpeOptions& options) {
    std::vector<EvaluationRecord> pairs;
    for (const auto& e : corpus.evaluations)
        if (e.metric == meta_target) pairs.push_back(e);
    if (pairs.empty())
        throw ValidationError("no evaluations recorded for metric " + meta_target.str());

    // split at the scenario's level
    std::set<std::string> id_set;
    for (const auto& p : pairs)
        id_set.insert(scenario == PpeScenario::kUnseenDatasets ? p.dataset_id : p.pipeline_id);
    std::vector<std::string> ids(id_set.begin(), id_set.end());
    auto level = scenario == PpeScenario::kUnseenDatasets ? SplitLevel::kByDataset
                                                          : SplitLevel::kByPipeline;
    auto split = make_split(ids, level, options.split_ratio, options.seed);
    std::set<std::string> train_side(split.train_ids.begin(), split.train_ids.end());

    std::vector<EvaluationRecord> train_pairs, test_pairs;
    for (const auto& p : pairs) {
        const std::string& key =
            scenario == PpeScenario::kUnseenDatasets ? p.dataset_id : p.pipeline_id;
        (train_side.count(key) ? train_pairs : test_pairs).push_back(p);
    }

    if (scenario == PpeScenario::kUnseenDatasets && options.min_support > 0) {
        train_pairs = filter_min_support(train_pairs, options.min_support);
        std::set<std::string> surviving;
        for (const auto& p : train_pairs) surviving.insert(p.pipeline_id);
        std::vector<EvaluationRecord> kept;
        for (const auto& p : test_pairs)
            if (surviving.count(p.pipeline_id)) kept.push_back(p);
        test_pairs = std::move(kept);
    }
    if (train_pairs.empty() || test_pairs.empty())
        throw ValidationError("scenario split left an empty train or test side");

    // meta-features for every dataset in play, imputed with train-side medians
    std::set<std::string> train_datasets, all_datasets;
    for (const auto& p : train_pairs) {
        train_datasets.insert(p.dataset_id);
        all_datasets.insert(p.dataset_id);
    }
    for (const auto& p : test_pairs) all_datasets.insert(p.dataset_id);

    std::map<std::string, MetaFeatureVector> mf_by_dataset;
    for (const auto& id : all_datasets) {
        const DatasetDescriptor* d = corpus.find_dataset(id);
        if (!d) throw ValidationError("evaluation references unknown dataset " + id);
        auto mf = resolve_meta_features(*d);
        if (!mf)
            throw ValidationError("dataset " + id +
                                  " has neither stored meta-features nor a table");
        mf_by_dataset.emplace(id, std::move(*mf));
    }
    std::vector<const MetaFeatureVector*> train_mfs;
    for (const auto& id : train_datasets) train_mfs.push_back(&mf_by_dataset.at(id));
    auto imputer = fit_imputer(train_mfs);
    for (auto& [_, mf] : mf_by_dataset) apply_imputer(imputer, mf);

    auto indices = subset_indices(mf_by_dataset.begin()->second, options.mf_subset);
    if (indices.empty()) throw ValidationError("meta-feature subset selected no features");

    std::vector<std::string> layout;
    const auto& first_mf = mf_by_dataset.begin()->second;
    for (std::size_t i : indices) layout.push_back(first_mf.names[i]);
    for (std::size_t i = 0; i < embeddings.dim; ++i) layout.push_back("pe_" + std::to_string(i));

    auto build_rows = [&](const std::vector<EvaluationRecord>& recs) {
        std::vector<FeatureRow> rows;
        rows.reserve(recs.size());
        for (const auto& rec : recs) {
            auto pit = embeddings.pipelines.find(rec.pipeline_id);
            if (pit == embeddings.pipelines.end())
                throw ValidationError("pipeline " + rec.pipeline_id + " has no embedding");
            const auto& mf = mf_by_dataset.at(rec.dataset_id);
            FeatureRow row;
            row.dataset_id = rec.dataset_id;
            row.pipeline_id = rec.pipeline_id;
            row.x.reserve(indices.size() + embeddings.dim);
            for (std::size_t i : indices) row.x.push_back(mf.values[i]);
            row.x.insert(row.x.end(), pit->second.vector.begin(), pit->second.vector.end());
            row.y = rec.value;
            rows.push_back(std::move(row));
        }
        return rows;
    };
    auto train_rows = build_rows(train_pairs);
    auto test_rows = build_rows(test_pairs);

    PpeReport report;
    report.scenario = scenario;
    report.meta_target = meta_target.str();
    report.mf_subset_name = subset_name(options.mf_subset);
    report.n_train = train_rows.size();
    report.n_test = test_rows.size();
    report.n_features = layout.size();

    // regression head
    ForestParams reg_params = options.fixed_params;
    if (options.grid_search) {
        auto grid = default_param_grid(ModelMode::kRegression);
        reg_params = grid_search_cv(train_rows, ModelMode::kRegression, grid, options.cv_folds,
                                    derive_seed(options.seed, 101), options.workers)
                         .best;
    }
    auto reg_model = fit_meta_model(train_rows, ModelMode::kRegression, reg_params, layout,
                                    derive_seed(options.seed, 11), options.workers);
    std::vector<double> y_true, y_pred;
    for (const auto& r : test_rows) {
        y_true.push_back(r.y);
        y_pred.push_back(predict_regression(reg_model, r.x));
    }
    report.regression_params = reg_params;
    report.regression = score_regression(y_true, y_pred);

    // classification head over binned targets
    std::vector<double> train_targets;
    for (const auto& r : train_rows) train_targets.push_back(r.y);
    auto bins = quantile_bin_targets(train_targets);
    report.bins_degenerate = bins.degenerate;
    auto cls_train = train_rows;
    for (auto& r : cls_train) r.label = classify_bin(bins, r.y);
    ForestParams cls_params = options.fixed_params;
    if (options.grid_search) {
        auto grid = default_param_grid(ModelMode::kClassification);
        cls_params = grid_search_cv(cls_train, ModelMode::kClassification, grid,
                                    options.cv_folds, derive_seed(options.seed, 102),
                                    options.workers)
                         .best;
    }
    auto cls_model = fit_meta_model(cls_train, ModelMode::kClassification, cls_params, layout,
                                    derive_seed(options.seed, 12), options.workers);
    std::vector<int> labels_true, labels_pred;
    for (const auto& r : test_rows) {
        labels_true.push_back(classify_bin(bins, r.y));
        labels_pred.push_back(predict_label(cls_model, r.x));
    }
    report.classification_params = cls_params;
    report.classification = score_classification(labels_true, labels_pred);

    if (scenario == PpeScenario::kUnseenPipelines) {
        auto avg = fit_baseline_average(train_rows);
        std::vector<double> avg_pred(test_rows.size(), avg.mean);
        report.baseline_average = score_regression(y_true, avg_pred);

        std::map<std::string, std::vector<double>> pe_map;
        for (const auto& [pid, pe] : embeddings.pipelines) pe_map[pid] = pe.vector;
        auto closest = fit_baseline_closest(train_rows, pe_map);
        std::vector<double> closest_pred;
        for (const auto& r : test_rows)
            closest_pred.push_back(
                predict_closest(closest, r.dataset_id, pe_map.at(r.pipeline_id)));
        report.baseline_closest = score_regression(y_true, closest_pred);
    }
    return report;
}

PpeTrainArtifacts train_ppe_full(const ExperimentCorpus& corpus,
                                 const AggregatedEmbeddings& embeddings,
                                 const Metric& meta_target, const PpeOptions& options) {
    std::vector<EvaluationRecord> pairs;
    for (const auto& e : corpus.evaluations)
        if (e.metric == meta_target) pairs.push_back(e);
    if (pairs.empty())
        throw ValidationError("no evaluations recorded for metric " + meta_target.str());

    std::set<std::string> datasets;
    for (const auto& p : pairs) datasets.insert(p.dataset_id);
    std::map<std::string, MetaFeatureVector> mf_by_dataset;
    for (const auto& id : datasets) {
        const DatasetDescriptor* d = corpus.find_dataset(id);
        if (!d) throw ValidationError("evaluation references unknown dataset " + id);
        auto mf = resolve_meta_features(*d);
        if (!mf)
            throw ValidationError("dataset " + id +
                                  " has neither stored meta-features nor a table");
        mf_by_dataset.emplace(id, std::move(*mf));
    }
    std::vector<const MetaFeatureVector*> all_mfs;
    for (auto& [_, mf] : mf_by_dataset) all_mfs.push_back(&mf);
    auto imputer = fit_imputer(all_mfs);
    for (auto& [_, mf] : mf_by_dataset) apply_imputer(imputer, mf);

    auto indices = subset_indices(mf_by_dataset.begin()->second, options.mf_subset);
    if (indices.empty()) throw ValidationError("meta-feature subset selected no features");

    PpeTrainArtifacts artifacts;
    const auto& first_mf = mf_by_dataset.begin()->second;
    for (std::size_t i : indices) artifacts.feature_layout.push_back(first_mf.names[i]);
    for (std::size_t i = 0; i < embeddings.dim; ++i)
        artifacts.feature_layout.push_back("pe_" + std::to_string(i));

    std::vector<FeatureRow> rows;
    rows.reserve(pairs.size());
    for (const auto& rec : pairs) {
        auto pit = embeddings.pipelines.find(rec.pipeline_id);
        if (pit == embeddings.pipelines.end())
            throw ValidationError("pipeline " + rec.pipeline_id + " has no embedding");
        const auto& mf = mf_by_dataset.at(rec.dataset_id);
        FeatureRow row;
        row.dataset_id = rec.dataset_id;
        row.pipeline_id = rec.pipeline_id;
        row.x.reserve(indices.size() + embeddings.dim);
        for (std::size_t i : indices) row.x.push_back(mf.values[i]);
        row.x.insert(row.x.end(), pit->second.vector.begin(), pit->second.vector.end());
        row.y = rec.value;
        rows.push_back(std::move(row));
    }
    artifacts.n_rows = rows.size();

    ForestParams reg_params = options.fixed_params;
    if (options.grid_search)
        reg_params = grid_search_cv(rows, ModelMode::kRegression,
                                    default_param_grid(ModelMode::kRegression), options.cv_folds,
                                    derive_seed(options.seed, 101), options.workers)
                         .best;
    artifacts.regression = fit_meta_model(rows, ModelMode::kRegression, reg_params,
                                          artifacts.feature_layout,
                                          derive_seed(options.seed, 11), options.workers);

    std::vector<double> targets;
    for (const auto& r : rows) targets.push_back(r.y);
    artifacts.bins = quantile_bin_targets(targets);
    for (auto& r : rows) r.label = classify_bin(artifacts.bins, r.y);
    ForestParams cls_params = options.fixed_params;
    if (options.grid_search)
        cls_params = grid_search_cv(rows, ModelMode::kClassification,
                                    default_param_grid(ModelMode::kClassification),
                                    options.cv_folds, derive_seed(options.seed, 102),
                                    options.workers)
                         .best;
    artifacts.classification = fit_meta_model(rows, ModelMode::kClassification, cls_params,
                                              artifacts.feature_layout,
                                              derive_seed(options.seed, 12), options.workers);
    return artifacts;
}

DpseReport run_dpse(const ExperimentCorpus& corpus, const AggregatedEmbeddings& embeddings,
                    const DpseOptions& options) {
    if (options.ks.empty()) throw ValidationError("run_dpse needs at least one k");
    auto profiles = build_profiles(corpus, options.metric);
    if (profiles.size() < 2)
        throw ValidationError("dataset similarity needs at least 2 datasets with profiles");

    DpseReport report;
    report.ks = options.ks;
    report.similarity_threshold = options.similarity_threshold;
    report.metric = options.metric.str();

    // ground-truth rows, computed once
    std::map<std::string, std::map<std::string, double>> gt;
    for (const auto& [qid, qprof] : profiles) {
        auto& row = gt[qid];
        for (const auto& [cid, cprof] : profiles) {
            if (cid == qid) continue;
            auto sim = ground_truth_similarity(qprof, cprof);
            if (sim) row[cid] = *sim;
        }
    }

    auto accumulate = [&](const std::string& method, const std::string& query,
                          const std::vector<RankedCandidate>& ranked) {
        const auto& row = gt.at(query);
        for (std::size_t k : options.ks) {
            auto& hit_cell = report.hit[method][k];
            auto hit = hit_at_k(ranked, row, k, options.similarity_threshold);
            if (hit.possible) {
                hit_cell.mean += hit.hit;
                hit_cell.queries++;
            } else {
                hit_cell.excluded++;
            }
            auto& ndcg_cell = report.ndcg[method][k];
            if (row.empty()) {
                ndcg_cell.excluded++;
            } else {
                auto ndcg = ndcg_at_k(ranked, row, k);
                ndcg_cell.mean += ndcg.value;
                ndcg_cell.queries++;
            }
        }
    };
    auto mark_excluded = [&](const std::string& method) {
        for (std::size_t k : options.ks) {
            report.hit[method][k].excluded++;
            report.ndcg[method][k].excluded++;
        }
    };

    for (DpseStrategy strategy : {DpseStrategy::kVar, DpseStrategy::kPip, DpseStrategy::kComb}) {
        std::string method = to_string(strategy);
        for (const auto& [qid, _] : profiles) {
            auto it = embeddings.datasets.find(qid);
            if (it == embeddings.datasets.end() || !strategy_vector(it->second, strategy)) {
                mark_excluded(method);
                continue;
            }
            auto ranked = rank_dpse(qid, embeddings, strategy);
            // keep only candidates that have a profile
            std::erase_if(ranked,
                          [&](const RankedCandidate& c) { return !profiles.count(c.dataset_id); });
            accumulate(method, qid, ranked);
        }
    }

    // meta-feature baselines
    std::map<std::string, std::vector<double>> mf_vectors;
    {
        std::vector<const MetaFeatureVector*> fitted;
        std::map<std::string, MetaFeatureVector> resolved;
        for (const auto& [qid, _] : profiles) {
            const DatasetDescriptor* d = corpus.find_dataset(qid);
            if (!d) continue;
            auto mf = resolve_meta_features(*d);
            if (mf) resolved.emplace(qid, std::move(*mf));
        }
        for (auto& [_, mf] : resolved) fitted.push_back(&mf);
        if (!fitted.empty()) {
            auto imputer = fit_imputer(fitted);
            for (auto& [qid, mf] : resolved) {
                apply_imputer(imputer, mf);
                mf_vectors[qid] = mf.values;
            }
        }
    }
    if (!mf_vectors.empty()) {
        std::vector<std::vector<double>> all;
        for (const auto& [_, v] : mf_vectors) all.push_back(v);
        auto stats = mf_train_stats(all);
        for (bool normalize : {false, true}) {
            std::string method = normalize ? "mf_norm" : "mf";
            for (const auto& [qid, _] : profiles) {
                auto qit = mf_vectors.find(qid);
                if (qit == mf_vectors.end()) {
                    mark_excluded(method);
                    continue;
                }
                std::vector<RankedCandidate> ranked;
                for (const auto& [cid, v] : mf_vectors) {
                    if (cid == qid) continue;
                    ranked.push_back(
                        {cid, mf_pnorm_similarity(qit->second, v, options.mf_p, normalize,
                                                  &stats)});
                }
                sort_ranked(ranked);
                accumulate(method, qid, ranked);
            }
        }
    }

    for (auto* table : {&report.hit, &report.ndcg})
        for (auto& [_, per_k] : *table)
            for (auto& [_, cell] : per_k)
                if (cell.queries > 0) cell.mean /= static_cast<double>(cell.queries);
    return report;
}

namespace {

nlohmann::json params_json(const ForestParams& p) {
    nlohmann::json j;
    j["n_estimators"] = p.n_estimators;
    if (p.max_depth)
        j["max_depth"] = *p.max_depth;
    else
        j["max_depth"] = nullptr;
    j["min_samples_split"] = p.min_samples_split;
    return j;
}

nlohmann::json regression_json(const RegressionScore& s) {
    return {{"mse", s.mse}, {"r2", s.r2}, {"constant_truth", s.constant_truth}};
}

}  // namespace

nlohmann::json ppe_report_json(const PpeReport& report) {
    nlohmann::json j;
    j["scenario"] = to_string(report.scenario);
    j["meta_target"] = report.meta_target;
    j["mf_subset"] = report.mf_subset_name;
    j["n_train"] = report.n_train;
    j["n_test"] = report.n_test;
    j["n_features"] = report.n_features;
    j["regression_params"] = params_json(report.regression_params);
    j["classification_params"] = params_json(report.classification_params);
    j["regression"] = regression_json(report.regression);
    j["classification"] = {{"accuracy", report.classification.accuracy},
                           {"macro_f1", report.classification.macro_f1}};
    j["bins_degenerate"] = report.bins_degenerate;
    if (report.baseline_average) j["baseline_average"] = regression_json(*report.baseline_average);
    if (report.baseline_closest) j["baseline_closest"] = regression_json(*report.baseline_closest);
    return j;
}

nlohmann::json dpse_report_json(const DpseReport& report) {
    nlohmann::json j;
    j["ks"] = report.ks;
    j["similarity_threshold"] = report.similarity_threshold;
    j["metric"] = report.metric;
    auto table_json = [](const std::map<std::string, std::map<std::size_t, DpseCell>>& table) {
        nlohmann::json t;
        for (const auto& [method, per_k] : table) {
            nlohmann::json m;
            for (const auto& [k, cell] : per_k) {
                m[std::to_string(k)] = {{"mean", cell.mean},
                                        {"queries", cell.queries},
                                        {"excluded", cell.excluded}};
            }
            t[method] = std::move(m);
        }
        return t;
    };
    j["hit"] = table_json(report.hit);
    j["ndcg"] = table_json(report.ndcg);
    return j;
}

std::string ppe_report_text(const std::vector<PpeReport>& reports) {
    std::ostringstream out;
    out << std::left << std::setw(18) << "scenario" << std::setw(12) << "target" << std::setw(14)
        << "mf_subset" << std::right << std::setw(10) << "mse" << std::setw(10) << "r2"
        << std::setw(10) << "acc" << std::setw(10) << "f1" << std::setw(12) << "avg_mse"
        << std::setw(12) << "closest_mse"
        << "\n";
    out << std::string(108, '-') << "\n";
    out << std::fixed << std::setprecision(4);
    for (const auto& r : reports) {
        out << std::left << std::setw(18) << to_string(r.scenario) << std::setw(12)
            << r.meta_target << std::setw(14) << r.mf_subset_name << std::right << std::setw(10)
            << r.regression.mse << std::setw(10) << r.regression.r2 << std::setw(10)
            << r.classification.accuracy << std::setw(10) << r.classification.macro_f1;
        if (r.baseline_average)
            out << std::setw(12) << r.baseline_average->mse;
        else
            out << std::setw(12) << "-";
        if (r.baseline_closest)
            out << std::setw(12) << r.baseline_closest->mse;
        else
            out << std::setw(12) << "-";
        out << "\n";
    }
    return out.str();
}

std::string dpse_report_text(const DpseReport& report) {
    std::ostringstream out;
    out << "metric " << report.metric << ", similarity threshold "
        << repr_double(report.similarity_threshold) << "\n";
    auto render = [&](const char* title,
                      const std::map<std::string, std::map<std::size_t, DpseCell>>& table) {
        out << title << "\n";
        out << std::left << std::setw(10) << "method";
        for (std::size_t k : report.ks) out << std::right << std::setw(12) << ("@" + std::to_string(k));
        out << std::right << std::setw(12) << "excluded"
            << "\n";
        out << std::string(10 + 12 * (report.ks.size() + 1), '-') << "\n";
        out << std::fixed << std::setprecision(4);
        for (const auto& [method, per_k] : table) {
            out << std::left << std::setw(10) << method;
            std::size_t excluded = 0;
            for (std::size_t k : report.ks) {
                const auto& cell = per_k.at(k);
                out << std::right << std::setw(12) << cell.mean;
                excluded = std::max(excluded, cell.excluded);
            }
            out << std::right << std::setw(12) << excluded << "\n";
        }
    };
    render("hit rate", report.hit);
    render("ndcg", report.ndcg);
    return out.str();
}

}  // namespace mx

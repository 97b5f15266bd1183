#include "mx/synthbench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "json.hpp"
#include "mx/util.hpp"

namespace mx {

void BenchSpec::check() const {
    if (n_dataset_clusters < 1 || datasets_per_cluster < 1 || n_pipeline_families < 1 ||
        configs_per_family < 1)
        throw ValidationError("benchmark spec counts must all be at least 1");
    if (!(sparsity > 0.0 && sparsity <= 1.0))
        throw ValidationError("sparsity must be in (0,1]");
    if (!(noise_sd >= 0.0)) throw ValidationError("noise_sd must be >= 0");
    if (!(invalid_rate >= 0.0 && invalid_rate < 1.0))
        throw ValidationError("invalid_rate must be in [0,1)");
}

namespace {

constexpr const char* kPrepOps[7] = {"StandardScaler",    "MinMaxScaler", "PCA",
                                     "SelectKBest",       "VarianceThreshold",
                                     "OneHotEncoder",     "SimpleImputer"};
constexpr const char* kEstimators[5] = {"RandomForestClassifier", "LogisticRegression",
                                        "KNeighborsClassifier", "DecisionTreeClassifier",
                                        "GaussianNB"};

double clip01(double v) { return std::min(1.0, std::max(0.0, v)); }

HpValue pick(Rng& rng, const std::vector<HpValue>& options) {
    return options[rng.next_below(options.size())];
}

// One or two hyperparameters per operator, drawn from small discrete sets so
// equal values are shared across configurations.
std::vector<Hyperparameter> draw_hyperparameters(const std::string& op, Rng& rng) {
    std::vector<Hyperparameter> hps;
    if (op == "StandardScaler") {
        hps.push_back({"with_mean", pick(rng, {HpValue{true}, HpValue{false}})});
    } else if (op == "MinMaxScaler") {
        hps.push_back({"clip", pick(rng, {HpValue{true}, HpValue{false}})});
    } else if (op == "PCA") {
        hps.push_back({"n_components", pick(rng, {HpValue{2.0}, HpValue{3.0}, HpValue{5.0}})});
    } else if (op == "SelectKBest") {
        hps.push_back({"k", pick(rng, {HpValue{5.0}, HpValue{10.0}})});
    } else if (op == "VarianceThreshold") {
        hps.push_back({"threshold", pick(rng, {HpValue{0.0}, HpValue{0.1}})});
    } else if (op == "OneHotEncoder") {
        hps.push_back({"drop_first", pick(rng, {HpValue{true}, HpValue{false}})});
    } else if (op == "SimpleImputer") {
        hps.push_back({"strategy", pick(rng, {HpValue{std::string("mean")},
                                              HpValue{std::string("median")}})});
    } else if (op == "RandomForestClassifier") {
        hps.push_back({"n_estimators", pick(rng, {HpValue{50.0}, HpValue{100.0}, HpValue{200.0}})});
        hps.push_back({"max_depth", pick(rng, {HpValue{3.0}, HpValue{5.0}, HpValue{10.0}})});
    } else if (op == "LogisticRegression") {
        hps.push_back({"c", pick(rng, {HpValue{0.1}, HpValue{1.0}, HpValue{10.0}})});
        hps.push_back({"penalty", pick(rng, {HpValue{std::string("l1")},
                                             HpValue{std::string("l2")}})});
    } else if (op == "KNeighborsClassifier") {
        hps.push_back({"n_neighbors", pick(rng, {HpValue{3.0}, HpValue{5.0}, HpValue{7.0}})});
        hps.push_back({"weights", pick(rng, {HpValue{std::string("uniform")},
                                             HpValue{std::string("distance")}})});
    } else if (op == "DecisionTreeClassifier") {
        hps.push_back({"max_depth", pick(rng, {HpValue{3.0}, HpValue{5.0}, HpValue{10.0}})});
        hps.push_back({"criterion", pick(rng, {HpValue{std::string("gini")},
                                               HpValue{std::string("entropy")}})});
    } else if (op == "GaussianNB") {
        hps.push_back({"var_smoothing", pick(rng, {HpValue{1e-9}, HpValue{1e-8}})});
        hps.push_back({"priors", HpValue{}});  // recorded with no value
    }
    return hps;
}

}  // namespace

GeneratedBench generate_corpus(const BenchSpec& spec) {
    spec.check();
    GeneratedBench out;
    if (spec.n_dataset_clusters == 1 && spec.noise_sd == 0.0)
        out.warnings.push_back(
            "single cluster with zero noise: every dataset carries an identical profile");

    Rng rng(spec.seed);
    std::size_t n_clusters = spec.n_dataset_clusters;
    std::size_t n_families = spec.n_pipeline_families;

    // planted base value per (cluster, family); families are affine to the
    // cluster they index modulo the cluster count
    std::vector<std::vector<double>> base(n_clusters, std::vector<double>(n_families));
    for (std::size_t c = 0; c < n_clusters; ++c)
        for (std::size_t f = 0; f < n_families; ++f) {
            bool affine = f % n_clusters == c;
            base[c][f] = clip01((affine ? 0.85 : 0.15) + rng.next_real(-0.05, 0.05));
        }

    // datasets: per-cluster variable pools on top of a small global pool
    const std::vector<std::string> global_pool = {"g0", "g1", "g2", "g3", "g4"};
    for (std::size_t c = 0; c < n_clusters; ++c) {
        std::string cl = std::to_string(c);
        std::vector<std::string> extras;
        for (int x = 0; x < 6; ++x) extras.push_back("c" + cl + "_x" + std::to_string(x));
        std::size_t n_classes = 2 + c % 3;

        for (std::size_t k = 0; k < spec.datasets_per_cluster; ++k) {
            DatasetDescriptor d;
            d.id = "synth/c" + cl + "/d" + std::to_string(k);
            d.name = "Synthetic dataset " + cl + "-" + std::to_string(k);
            d.task_kind = TaskKind::kClassification;
            d.tags = {"synthetic"};

            std::vector<std::string> numeric_cols;
            // two names everyone can share
            std::vector<std::string> globals = global_pool;
            rng.shuffle(globals);
            numeric_cols.push_back(globals[0]);
            numeric_cols.push_back(globals[1]);
            // three names every dataset of this cluster shares
            for (int core = 0; core < 3; ++core)
                numeric_cols.push_back("c" + cl + "_core" + std::to_string(core));
            // and a cluster-dependent count of looser cluster names
            std::vector<std::string> pool = extras;
            rng.shuffle(pool);
            for (std::size_t x = 0; x < 1 + c; ++x) numeric_cols.push_back(pool[x]);
            std::sort(numeric_cols.begin(), numeric_cols.end());
            std::string cat_col = "c" + cl + "_cat";

            for (const auto& col : numeric_cols)
                d.variables.push_back({col, VarKind::kNumeric, VarRole::kFeature});
            d.variables.push_back({cat_col, VarKind::kCategorical, VarRole::kFeature});
            d.variables.push_back({"class", VarKind::kCategorical, VarRole::kTarget});

            TableData table;
            for (const auto& v : d.variables) {
                table.columns.push_back(v.name);
                table.kinds.push_back(v.kind);
            }
            std::size_t n_rows = 40 + 15 * c + k;
            for (std::size_t row = 0; row < n_rows; ++row) {
                std::vector<Cell> cells;
                for (std::size_t j = 0; j < numeric_cols.size(); ++j)
                    cells.push_back(rng.next_normal(0.0, 1.0) +
                                    2.0 * static_cast<double>(c) + 0.3 * static_cast<double>(j));
                std::size_t label = rng.next_below(n_classes);
                std::size_t shown = rng.next_real() < 0.7 ? label : rng.next_below(n_classes);
                cells.push_back(std::string("m") + std::to_string(shown));
                cells.push_back(std::string("cls") + std::to_string(label));
                table.rows.push_back(std::move(cells));
            }
            d.table = std::move(table);
            out.corpus.datasets.push_back(std::move(d));
        }
    }

    // pipeline configurations: family fixes the operator sequence, the
    // config draws hyperparameter values
    for (std::size_t f = 0; f < n_families; ++f) {
        std::size_t n_preps = f % 3;
        std::vector<std::string> ops;
        for (std::size_t p = 0; p < n_preps; ++p) ops.push_back(kPrepOps[(f + 2 * p) % 7]);
        ops.push_back(kEstimators[f % 5]);
        std::size_t affine_cluster = f % n_clusters;

        for (std::size_t j = 0; j < spec.configs_per_family; ++j) {
            PipelineConfigDescriptor pc;
            pc.id = "cfg/f" + std::to_string(f) + "/c" + std::to_string(j);
            pc.task_kind = TaskKind::kClassification;
            pc.atomic = ops.size() == 1;
            for (std::size_t s = 0; s < ops.size(); ++s) {
                PipelineStep step;
                step.position = s;
                step.operator_name = ops[s];
                if (s + 1 == ops.size())
                    step.step_kind = StepKind::kEstimation;
                else if (ops[s] == "SelectKBest" || ops[s] == "VarianceThreshold")
                    step.step_kind = StepKind::kFeatureSelection;
                else
                    step.step_kind = StepKind::kTransformation;
                step.hyperparameters = draw_hyperparameters(ops[s], rng);
                pc.steps.push_back(std::move(step));
            }
            std::size_t origin_index = j % spec.datasets_per_cluster;
            pc.origin_dataset = "synth/c" + std::to_string(affine_cluster) + "/d" +
                                std::to_string(origin_index);
            pc.source_performance =
                clip01(base[affine_cluster][f] + rng.next_real(-0.02, 0.02));
            pc.reference_time_s = rng.next_real(1.0, 5.0);
            out.corpus.pipelines.push_back(std::move(pc));
        }
    }

    // sparse evaluations with gaussian noise on the planted base
    for (std::size_t c = 0; c < n_clusters; ++c)
        for (std::size_t k = 0; k < spec.datasets_per_cluster; ++k)
            for (std::size_t f = 0; f < n_families; ++f)
                for (std::size_t j = 0; j < spec.configs_per_family; ++j) {
                    if (rng.next_real() >= spec.sparsity) continue;
                    EvaluationRecord r;
                    r.dataset_id = "synth/c" + std::to_string(c) + "/d" + std::to_string(k);
                    r.pipeline_id = "cfg/f" + std::to_string(f) + "/c" + std::to_string(j);
                    r.metric = Metric::accuracy();
                    r.value = clip01(base[c][f] + rng.next_normal(0.0, spec.noise_sd));
                    r.valid = true;
                    const auto& ref =
                        out.corpus.pipelines[f * spec.configs_per_family + j].reference_time_s;
                    r.fit_time_s = *ref * rng.next_real(0.8, 3.0);
                    out.corpus.evaluations.push_back(std::move(r));
                }

    // fail a fixed fraction, chosen by a seeded shuffle
    auto n_invalid = static_cast<std::size_t>(
        std::llround(spec.invalid_rate * static_cast<double>(out.corpus.evaluations.size())));
    if (n_invalid > 0) {
        std::vector<std::size_t> order(out.corpus.evaluations.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng.shuffle(order);
        for (std::size_t i = 0; i < n_invalid; ++i) {
            auto& r = out.corpus.evaluations[order[i]];
            r.valid = false;
            r.value = 0.0;
        }
    }
    return out;
}

std::size_t apply_timeout_rule(std::vector<EvaluationRecord>& records,
                               const std::vector<PipelineConfigDescriptor>& pipelines,
                               double time_ratio) {
    if (!(time_ratio > 0)) throw ValidationError("time_ratio must be positive");
    std::map<std::string, double> reference;
    for (const auto& p : pipelines)
        if (p.reference_time_s) reference[p.id] = *p.reference_time_s;
    std::size_t flipped = 0;
    for (auto& r : records) {
        if (!r.fit_time_s) continue;
        auto it = reference.find(r.pipeline_id);
        if (it == reference.end()) continue;
        if (*r.fit_time_s >= time_ratio * it->second) {
            if (r.valid) flipped++;
            r.valid = false;
            r.value = 0.0;
        }
    }
    return flipped;
}

void save_bench_spec(const BenchSpec& spec, const std::string& path) {
    nlohmann::json j;
    j["n_dataset_clusters"] = spec.n_dataset_clusters;
    j["datasets_per_cluster"] = spec.datasets_per_cluster;
    j["n_pipeline_families"] = spec.n_pipeline_families;
    j["configs_per_family"] = spec.configs_per_family;
    j["sparsity"] = spec.sparsity;
    j["noise_sd"] = spec.noise_sd;
    j["invalid_rate"] = spec.invalid_rate;
    j["seed"] = spec.seed;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
    if (!out) throw IoError("failed while writing " + path);
}

BenchSpec load_bench_spec(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
    BenchSpec spec;
    try {
        if (j.contains("n_dataset_clusters"))
            spec.n_dataset_clusters = j["n_dataset_clusters"].get<std::size_t>();
        if (j.contains("datasets_per_cluster"))
            spec.datasets_per_cluster = j["datasets_per_cluster"].get<std::size_t>();
        if (j.contains("n_pipeline_families"))
            spec.n_pipeline_families = j["n_pipeline_families"].get<std::size_t>();
        if (j.contains("configs_per_family"))
            spec.configs_per_family = j["configs_per_family"].get<std::size_t>();
        if (j.contains("sparsity")) spec.sparsity = j["sparsity"].get<double>();
        if (j.contains("noise_sd")) spec.noise_sd = j["noise_sd"].get<double>();
        if (j.contains("invalid_rate")) spec.invalid_rate = j["invalid_rate"].get<double>();
        if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
    spec.check();
    return spec;
}

}  // namespace mx

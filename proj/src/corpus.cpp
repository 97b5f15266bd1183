#include "mx/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

namespace mx {

using nlohmann::json;

std::string to_string(VarKind k) {
    return k == VarKind::kNumeric ? "numeric" : "categorical";
}
std::string to_string(VarRole r) {
    return r == VarRole::kFeature ? "feature" : "target";
}
std::string to_string(TaskKind t) {
    return t == TaskKind::kClassification ? "classification" : "regression";
}
std::string to_string(StepKind s) {
    switch (s) {
        case StepKind::kSplitting: return "splitting";
        case StepKind::kTransformation: return "transformation";
        case StepKind::kFeatureSelection: return "feature_selection";
        case StepKind::kEstimation: return "estimation";
        case StepKind::kOther: return "other";
    }
    throw Error("bad StepKind");
}
std::string to_string(MetaFeatureCategory c) {
    switch (c) {
        case MetaFeatureCategory::kSimple: return "simple";
        case MetaFeatureCategory::kStatistical: return "statistical";
        case MetaFeatureCategory::kInfoTheoretic: return "info_theoretic";
        case MetaFeatureCategory::kLandmarker: return "landmarker";
    }
    throw Error("bad MetaFeatureCategory");
}

VarKind var_kind_from_string(const std::string& s) {
    if (s == "numeric") return VarKind::kNumeric;
    if (s == "categorical") return VarKind::kCategorical;
    throw ValidationError("unknown variable kind '" + s + "'");
}
VarRole var_role_from_string(const std::string& s) {
    if (s == "feature") return VarRole::kFeature;
    if (s == "target") return VarRole::kTarget;
    throw ValidationError("unknown variable role '" + s + "'");
}
TaskKind task_kind_from_string(const std::string& s) {
    if (s == "classification") return TaskKind::kClassification;
    if (s == "regression") return TaskKind::kRegression;
    throw ValidationError("unknown task kind '" + s + "'");
}
StepKind step_kind_from_string(const std::string& s) {
    if (s == "splitting") return StepKind::kSplitting;
    if (s == "transformation") return StepKind::kTransformation;
    if (s == "feature_selection") return StepKind::kFeatureSelection;
    if (s == "estimation") return StepKind::kEstimation;
    if (s == "other") return StepKind::kOther;
    throw ValidationError("unknown step kind '" + s + "'");
}
MetaFeatureCategory mf_category_from_string(const std::string& s) {
    if (s == "simple") return MetaFeatureCategory::kSimple;
    if (s == "statistical") return MetaFeatureCategory::kStatistical;
    if (s == "info_theoretic") return MetaFeatureCategory::kInfoTheoretic;
    if (s == "landmarker") return MetaFeatureCategory::kLandmarker;
    throw ValidationError("unknown meta-feature category '" + s + "'");
}

std::string Metric::str() const {
    switch (kind) {
        case kAccuracy: return "accuracy";
        case kPrecision: return "precision";
        case kR2: return "r2";
        case kOther: return other_name;
    }
    throw Error("bad Metric kind");
}

Metric Metric::parse(const std::string& s) {
    if (s == "accuracy") return accuracy();
    if (s == "precision") return precision();
    if (s == "r2") return r2();
    if (s.empty()) throw ValidationError("empty metric name");
    return other(s);
}

const VariableDescriptor& DatasetDescriptor::target() const {
    for (const auto& v : variables)
        if (v.role == VarRole::kTarget) return v;
    throw ValidationError("dataset '" + id + "' has no target variable");
}

std::vector<std::string> PipelineConfigDescriptor::operator_sequence() const {
    std::vector<std::string> seq;
    seq.reserve(steps.size());
    for (const auto& s : steps) seq.push_back(s.operator_name);
    return seq;
}

const DatasetDescriptor* ExperimentCorpus::find_dataset(const std::string& id) const {
    for (const auto& d : datasets)
        if (d.id == id) return &d;
    return nullptr;
}

const PipelineConfigDescriptor* ExperimentCorpus::find_pipeline(const std::string& id) const {
    for (const auto& p : pipelines)
        if (p.id == id) return &p;
    return nullptr;
}

// ---- JSON conversion ----------------------------------------------------
// JSON has no NaN, so missing numeric values travel as null.

namespace {

json num_or_null(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

double num_from(const json& j, const char* what) {
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    if (!j.is_number()) throw ValidationError(std::string(what) + " is not a number");
    return j.get<double>();
}

json cell_to_json(const Cell& c) {
    if (std::holds_alternative<double>(c)) return num_or_null(std::get<double>(c));
    return std::get<std::string>(c);
}

Cell cell_from_json(const json& j) {
    if (j.is_string()) return j.get<std::string>();
    return num_from(j, "table cell");
}

json hp_value_to_json(const HpValue& v) {
    if (std::holds_alternative<std::monostate>(v)) return nullptr;
    if (std::holds_alternative<double>(v)) return std::get<double>(v);
    if (std::holds_alternative<bool>(v)) return std::get<bool>(v);
    return std::get<std::string>(v);
}

HpValue hp_value_from_json(const json& j) {
    if (j.is_null()) return std::monostate{};
    if (j.is_boolean()) return j.get<bool>();
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) return j.get<std::string>();
    throw ValidationError("hyperparameter value must be null, number, string or bool");
}

json dataset_to_json(const DatasetDescriptor& d) {
    json j;
    j["kind"] = "dataset";
    j["id"] = d.id;
    j["name"] = d.name;
    j["description"] = d.description;
    j["tags"] = d.tags;
    j["task_kind"] = to_string(d.task_kind);
    json vars = json::array();
    for (const auto& v : d.variables) {
        vars.push_back({{"name", v.name},
                        {"kind", to_string(v.kind)},
                        {"role", to_string(v.role)}});
    }
    j["variables"] = vars;
    if (d.meta_features) {
        json mf;
        mf["names"] = d.meta_features->names;
        json vals = json::array();
        for (double v : d.meta_features->values) vals.push_back(num_or_null(v));
        mf["values"] = vals;
        json cats = json::array();
        for (auto c : d.meta_features->categories) cats.push_back(to_string(c));
        mf["categories"] = cats;
        j["meta_features"] = mf;
    }
    if (d.table) {
        json t;
        t["columns"] = d.table->columns;
        json rows = json::array();
        for (const auto& row : d.table->rows) {
            json r = json::array();
            for (const auto& c : row) r.push_back(cell_to_json(c));
            rows.push_back(r);
        }
        t["rows"] = rows;
        j["table"] = t;
    }
    return j;
}

DatasetDescriptor dataset_from_json(const json& j) {
    DatasetDescriptor d;
    d.id = j.at("id").get<std::string>();
    d.name = j.value("name", std::string());
    d.description = j.value("description", std::string());
    if (j.contains("tags")) d.tags = j.at("tags").get<std::vector<std::string>>();
    d.task_kind = task_kind_from_string(j.at("task_kind").get<std::string>());
    for (const auto& vj : j.at("variables")) {
        VariableDescriptor v;
        v.name = vj.at("name").get<std::string>();
        v.kind = var_kind_from_string(vj.at("kind").get<std::string>());
        v.role = var_role_from_string(vj.at("role").get<std::string>());
        d.variables.push_back(std::move(v));
    }
    if (j.contains("meta_features") && !j.at("meta_features").is_null()) {
        const json& mj = j.at("meta_features");
        MetaFeatureVector mf;
        mf.names = mj.at("names").get<std::vector<std::string>>();
        for (const auto& vj : mj.at("values")) mf.values.push_back(num_from(vj, "meta-feature value"));
        for (const auto& cj : mj.at("categories"))
            mf.categories.push_back(mf_category_from_string(cj.get<std::string>()));
        d.meta_features = std::move(mf);
    }
    if (j.contains("table") && !j.at("table").is_null()) {
        const json& tj = j.at("table");
        TableData t;
        t.columns = tj.at("columns").get<std::vector<std::string>>();
        for (const auto& rj : tj.at("rows")) {
            std::vector<Cell> row;
            for (const auto& cj : rj) row.push_back(cell_from_json(cj));
            t.rows.push_back(std::move(row));
        }
        // Cell kinds come from the variable declarations; columns not
        // declared (there should be none) fall back to inference.
        t.kinds.assign(t.columns.size(), VarKind::kNumeric);
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
            bool declared = false;
            for (const auto& v : d.variables) {
                if (v.name == t.columns[c]) {
                    t.kinds[c] = v.kind;
                    declared = true;
                    break;
                }
            }
            if (!declared) {
                for (const auto& row : t.rows) {
                    if (c < row.size() && !std::holds_alternative<double>(row[c])) {
                        t.kinds[c] = VarKind::kCategorical;
                        break;
                    }
                }
            }
        }
        d.table = std::move(t);
    }
    return d;
}

json pipeline_to_json(const PipelineConfigDescriptor& p) {
    json j;
    j["kind"] = "pipeline";
    j["id"] = p.id;
    j["task_kind"] = to_string(p.task_kind);
    j["origin_dataset"] = p.origin_dataset;
    j["atomic"] = p.atomic;
    if (p.source_performance) j["source_performance"] = *p.source_performance;
    if (p.reference_time_s) j["reference_time_s"] = *p.reference_time_s;
    json steps = json::array();
    for (const auto& s : p.steps) {
        json sj;
        sj["position"] = s.position;
        sj["operator"] = s.operator_name;
        sj["step_kind"] = to_string(s.step_kind);
        json hps = json::array();
        for (const auto& h : s.hyperparameters)
            hps.push_back({{"name", h.name}, {"value", hp_value_to_json(h.value)}});
        sj["hyperparameters"] = hps;
        steps.push_back(sj);
    }
    j["steps"] = steps;
    return j;
}

PipelineConfigDescriptor pipeline_from_json(const json& j) {
    PipelineConfigDescriptor p;
    p.id = j.at("id").get<std::string>();
    p.task_kind = task_kind_from_string(j.at("task_kind").get<std::string>());
    p.origin_dataset = j.at("origin_dataset").get<std::string>();
    p.atomic = j.value("atomic", false);
    if (j.contains("source_performance") && !j.at("source_performance").is_null())
        p.source_performance = j.at("source_performance").get<double>();
    if (j.contains("reference_time_s") && !j.at("reference_time_s").is_null())
        p.reference_time_s = j.at("reference_time_s").get<double>();
    for (const auto& sj : j.at("steps")) {
        PipelineStep s;
        s.position = sj.at("position").get<int>();
        s.operator_name = sj.at("operator").get<std::string>();
        s.step_kind = step_kind_from_string(sj.at("step_kind").get<std::string>());
        if (sj.contains("hyperparameters")) {
            for (const auto& hj : sj.at("hyperparameters")) {
                Hyperparameter h;
                h.name = hj.at("name").get<std::string>();
                h.value = hp_value_from_json(hj.at("value"));
                s.hyperparameters.push_back(std::move(h));
            }
        }
        p.steps.push_back(std::move(s));
    }
    return p;
}

json evaluation_to_json(const EvaluationRecord& e) {
    json j;
    j["kind"] = "evaluation";
    j["dataset_id"] = e.dataset_id;
    j["pipeline_id"] = e.pipeline_id;
    j["metric"] = e.metric.str();
    j["value"] = e.value;
    j["valid"] = e.valid;
    if (e.fit_time_s) j["fit_time_s"] = *e.fit_time_s;
    return j;
}

EvaluationRecord evaluation_from_json(const json& j) {
    EvaluationRecord e;
    e.dataset_id = j.at("dataset_id").get<std::string>();
    e.pipeline_id = j.at("pipeline_id").get<std::string>();
    e.metric = Metric::parse(j.at("metric").get<std::string>());
    e.value = j.at("value").get<double>();
    e.valid = j.value("valid", true);
    if (j.contains("fit_time_s") && !j.at("fit_time_s").is_null())
        e.fit_time_s = j.at("fit_time_s").get<double>();
    return e;
}

}  // namespace

// ---- validation ----------------------------------------------------------

void validate_corpus(const ExperimentCorpus& corpus) {
    std::unordered_set<std::string> dataset_ids;
    for (const auto& d : corpus.datasets) {
        if (d.id.empty()) throw ValidationError("dataset with empty id");
        if (!dataset_ids.insert(d.id).second)
            throw ValidationError("duplicate dataset id '" + d.id + "'");
        if (d.variables.empty())
            throw ValidationError("dataset '" + d.id + "' has no variables");
        std::unordered_set<std::string> var_names;
        int targets = 0;
        for (const auto& v : d.variables) {
            if (v.name.empty())
                throw ValidationError("dataset '" + d.id + "' has a variable with empty name");
            if (!var_names.insert(v.name).second)
                throw ValidationError("dataset '" + d.id + "' repeats variable '" + v.name + "'");
            if (v.role == VarRole::kTarget) ++targets;
        }
        if (targets != 1)
            throw ValidationError("dataset '" + d.id + "' must have exactly one target variable, has " +
                                  std::to_string(targets));
        if (d.meta_features) {
            const auto& mf = *d.meta_features;
            if (mf.names.size() != mf.values.size() || mf.names.size() != mf.categories.size())
                throw ValidationError("dataset '" + d.id + "' has ragged meta-feature vector");
            std::unordered_set<std::string> mf_names(mf.names.begin(), mf.names.end());
            if (mf_names.size() != mf.names.size())
                throw ValidationError("dataset '" + d.id + "' repeats a meta-feature name");
        }
        if (d.table) {
            d.table->check_shape();
            for (const auto& v : d.variables) {
                bool found = false;
                for (const auto& c : d.table->columns)
                    if (c == v.name) { found = true; break; }
                if (!found)
                    throw ValidationError("dataset '" + d.id + "' table is missing column '" + v.name + "'");
            }
            for (const auto& c : d.table->columns) {
                bool declared = false;
                for (const auto& v : d.variables)
                    if (v.name == c) { declared = true; break; }
                if (!declared)
                    throw ValidationError("dataset '" + d.id + "' table column '" + c +
                                          "' is not a declared variable");
            }
        }
    }

    std::unordered_set<std::string> pipeline_ids;
    std::unordered_map<std::string, TaskKind> pipeline_tasks;
    for (const auto& p : corpus.pipelines) {
        if (p.id.empty()) throw ValidationError("pipeline with empty id");
        if (!pipeline_ids.insert(p.id).second)
            throw ValidationError("duplicate pipeline id '" + p.id + "'");
        pipeline_tasks[p.id] = p.task_kind;
        if (p.steps.empty())
            throw ValidationError("pipeline '" + p.id + "' has no steps");
        for (std::size_t i = 0; i < p.steps.size(); ++i) {
            const auto& s = p.steps[i];
            if (s.position != static_cast<int>(i))
                throw ValidationError("pipeline '" + p.id + "' step positions must be 0..n-1 in order");
            if (s.operator_name.empty())
                throw ValidationError("pipeline '" + p.id + "' step " + std::to_string(i) +
                                      " has empty operator name");
            std::unordered_set<std::string> hp_names;
            for (const auto& h : s.hyperparameters)
                if (!hp_names.insert(h.name).second)
                    throw ValidationError("pipeline '" + p.id + "' step " + std::to_string(i) +
                                          " repeats hyperparameter '" + h.name + "'");
        }
        if (p.steps.back().step_kind != StepKind::kEstimation)
            throw ValidationError("pipeline '" + p.id + "' must end with an estimation step");
        if (p.origin_dataset.empty() || !dataset_ids.count(p.origin_dataset))
            throw ValidationError("pipeline '" + p.id + "' references missing dataset '" +
                                  p.origin_dataset + "'");
        if (p.source_performance && (*p.source_performance < 0.0 || *p.source_performance > 1.0))
            throw ValidationError("pipeline '" + p.id + "' source_performance outside [0,1]");
        if (p.reference_time_s && *p.reference_time_s <= 0.0)
            throw ValidationError("pipeline '" + p.id + "' reference_time_s must be positive");
    }

    std::set<std::tuple<std::string, std::string, std::string>> eval_keys;
    std::unordered_map<std::string, TaskKind> dataset_tasks;
    for (const auto& d : corpus.datasets) dataset_tasks[d.id] = d.task_kind;
    for (const auto& e : corpus.evaluations) {
        if (!dataset_tasks.count(e.dataset_id))
            throw ValidationError("evaluation references missing dataset '" + e.dataset_id + "'");
        if (!pipeline_tasks.count(e.pipeline_id))
            throw ValidationError("evaluation references missing pipeline '" + e.pipeline_id + "'");
        if (dataset_tasks[e.dataset_id] != pipeline_tasks[e.pipeline_id])
            throw ValidationError("evaluation pairs dataset '" + e.dataset_id + "' with pipeline '" +
                                  e.pipeline_id + "' of a different task kind");
        if (!eval_keys.insert({e.dataset_id, e.pipeline_id, e.metric.str()}).second)
            throw ValidationError("duplicate evaluation for (" + e.dataset_id + ", " + e.pipeline_id +
                                  ", " + e.metric.str() + ")");
        if (!std::isfinite(e.value))
            throw ValidationError("evaluation of (" + e.dataset_id + ", " + e.pipeline_id +
                                  ") has non-finite value");
        if (!e.valid && e.value != 0.0)
            throw ValidationError("invalid evaluation of (" + e.dataset_id + ", " + e.pipeline_id +
                                  ") must carry the worst value 0.0");
        if (e.fit_time_s && *e.fit_time_s < 0.0)
            throw ValidationError("evaluation of (" + e.dataset_id + ", " + e.pipeline_id +
                                  ") has negative fit time");
    }
}

// ---- persistence ----------------------------------------------------------

ExperimentCorpus load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open corpus file '" + path + "'");
    ExperimentCorpus corpus;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ValidationError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        try {
            const std::string kind = j.at("kind").get<std::string>();
            if (kind == "dataset") corpus.datasets.push_back(dataset_from_json(j));
            else if (kind == "pipeline") corpus.pipelines.push_back(pipeline_from_json(j));
            else if (kind == "evaluation") corpus.evaluations.push_back(evaluation_from_json(j));
            else throw ValidationError("unknown record kind '" + kind + "'");
        } catch (const json::exception& e) {
            throw ValidationError(path + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    validate_corpus(corpus);
    return corpus;
}

void save_corpus(const ExperimentCorpus& corpus, const std::string& path) {
    validate_corpus(corpus);
    auto datasets = corpus.datasets;
    auto pipelines = corpus.pipelines;
    auto evaluations = corpus.evaluations;
    std::sort(datasets.begin(), datasets.end(),
              [](const auto& a, const auto& b) { return a.id < b.id; });
    std::sort(pipelines.begin(), pipelines.end(),
              [](const auto& a, const auto& b) { return a.id < b.id; });
    std::sort(evaluations.begin(), evaluations.end(), [](const auto& a, const auto& b) {
        return std::tie(a.dataset_id, a.pipeline_id) < std::tie(b.dataset_id, b.pipeline_id) ||
               (a.dataset_id == b.dataset_id && a.pipeline_id == b.pipeline_id &&
                a.metric.str() < b.metric.str());
    });

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write corpus file '" + path + "'");
    for (const auto& d : datasets) out << dataset_to_json(d).dump() << '\n';
    for (const auto& p : pipelines) out << pipeline_to_json(p).dump() << '\n';
    for (const auto& e : evaluations) out << evaluation_to_json(e).dump() << '\n';
    if (!out) throw IoError("write to '" + path + "' failed");
}

// ---- stats and filters -----------------------------------------------------

CorpusStats corpus_stats(const ExperimentCorpus& corpus) {
    CorpusStats st;
    st.n_datasets = corpus.datasets.size();
    st.n_pipelines = corpus.pipelines.size();
    st.n_evaluations = corpus.evaluations.size();
    for (const auto& e : corpus.evaluations)
        if (!e.valid) ++st.n_invalid_evaluations;
    std::unordered_set<std::string> with_pipelines;
    for (const auto& p : corpus.pipelines) with_pipelines.insert(p.origin_dataset);
    for (const auto& d : corpus.datasets)
        if (!with_pipelines.count(d.id)) st.datasets_without_pipelines.push_back(d.id);
    std::sort(st.datasets_without_pipelines.begin(), st.datasets_without_pipelines.end());
    return st;
}

namespace {

ExperimentCorpus keep_pipelines(const ExperimentCorpus& corpus,
                                const std::unordered_set<std::string>& keep) {
    ExperimentCorpus out;
    out.datasets = corpus.datasets;
    for (const auto& p : corpus.pipelines)
        if (keep.count(p.id)) out.pipelines.push_back(p);
    for (const auto& e : corpus.evaluations)
        if (keep.count(e.pipeline_id)) out.evaluations.push_back(e);
    return out;
}

}  // namespace

ExperimentCorpus filter_top_k_configs(const ExperimentCorpus& corpus, std::size_t k) {
    // Group key: origin dataset plus the step-ordered operator sequence.
    std::map<std::pair<std::string, std::vector<std::string>>,
             std::vector<const PipelineConfigDescriptor*>> groups;
    for (const auto& p : corpus.pipelines)
        groups[{p.origin_dataset, p.operator_sequence()}].push_back(&p);

    std::unordered_set<std::string> keep;
    for (auto& [key, members] : groups) {
        std::sort(members.begin(), members.end(), [](const auto* a, const auto* b) {
            // Best score first; missing scores rank last; ties break by id.
            double sa = a->source_performance.value_or(-std::numeric_limits<double>::infinity());
            double sb = b->source_performance.value_or(-std::numeric_limits<double>::infinity());
            if (sa != sb) return sa > sb;
            return a->id < b->id;
        });
        for (std::size_t i = 0; i < members.size() && i < k; ++i) keep.insert(members[i]->id);
    }
    return keep_pipelines(corpus, keep);
}

ExperimentCorpus filter_atomic(const ExperimentCorpus& corpus) {
    std::unordered_set<std::string> keep;
    for (const auto& p : corpus.pipelines)
        if (p.atomic) keep.insert(p.id);
    return keep_pipelines(corpus, keep);
}

}  // namespace mx

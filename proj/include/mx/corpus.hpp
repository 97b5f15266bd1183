#pragma once

// Experiment corpus data model: datasets, pipeline configurations and
// evaluation records, with JSONL persistence and the two corpus filters
// (top-k per config family, atomic-only).

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mx/table.hpp"
#include "mx/util.hpp"

namespace mx {

enum class VarRole { kFeature, kTarget };
enum class TaskKind { kClassification, kRegression };
enum class StepKind { kSplitting, kTransformation, kFeatureSelection, kEstimation, kOther };
enum class MetaFeatureCategory { kSimple, kStatistical, kInfoTheoretic, kLandmarker };

std::string to_string(VarKind k);
std::string to_string(VarRole r);
std::string to_string(TaskKind t);
std::string to_string(StepKind s);
std::string to_string(MetaFeatureCategory c);

VarKind var_kind_from_string(const std::string& s);
VarRole var_role_from_string(const std::string& s);
TaskKind task_kind_from_string(const std::string& s);
StepKind step_kind_from_string(const std::string& s);
MetaFeatureCategory mf_category_from_string(const std::string& s);

/// Performance metric of an evaluation record. The well-known metrics get
/// enum tags; anything else is carried verbatim under kOther.
struct Metric {
    enum Kind { kAccuracy, kPrecision, kR2, kOther };
    Kind kind = kAccuracy;
    std::string other_name;  // set iff kind == kOther

    static Metric accuracy() { return {kAccuracy, ""}; }
    static Metric precision() { return {kPrecision, ""}; }
    static Metric r2() { return {kR2, ""}; }
    static Metric other(std::string name) { return {kOther, std::move(name)}; }

    std::string str() const;
    static Metric parse(const std::string& s);

    bool operator==(const Metric&) const = default;
    bool operator<(const Metric& rhs) const { return str() < rhs.str(); }
};

struct VariableDescriptor {
    std::string name;
    VarKind kind = VarKind::kNumeric;
    VarRole role = VarRole::kFeature;

    bool operator==(const VariableDescriptor&) const = default;
};

struct MetaFeatureVector {
    std::vector<std::string> names;
    std::vector<double> values;
    std::vector<MetaFeatureCategory> categories;

    bool operator==(const MetaFeatureVector&) const = default;
};

struct DatasetDescriptor {
    std::string id;
    std::string name;
    std::string description;
    std::vector<std::string> tags;
    std::vector<VariableDescriptor> variables;
    TaskKind task_kind = TaskKind::kClassification;
    std::optional<MetaFeatureVector> meta_features;
    // Optional raw sample; needed only when meta-features are to be computed.
    std::optional<TableData> table;

    bool operator==(const DatasetDescriptor&) const = default;

    const VariableDescriptor& target() const;
};

/// Hyperparameter value: number, string, flag, or explicit null.
using HpValue = std::variant<std::monostate, double, std::string, bool>;

struct Hyperparameter {
    std::string name;
    HpValue value;

    bool operator==(const Hyperparameter&) const = default;
};

struct PipelineStep {
    int position = 0;
    std::string operator_name;
    StepKind step_kind = StepKind::kOther;
    std::vector<Hyperparameter> hyperparameters;

    bool operator==(const PipelineStep&) const = default;
};

struct PipelineConfigDescriptor {
    std::string id;
    std::vector<PipelineStep> steps;
    TaskKind task_kind = TaskKind::kClassification;
    // Performance reported by the source the config was mined from, if any.
    std::optional<double> source_performance;
    std::string origin_dataset;
    bool atomic = false;
    // Wall-clock of a trusted reference run; used by the timeout rule.
    std::optional<double> reference_time_s;

    bool operator==(const PipelineConfigDescriptor&) const = default;

    /// Operator names in step order; two configs with the same sequence
    /// belong to the same config family.
    std::vector<std::string> operator_sequence() const;
};

struct EvaluationRecord {
    std::string dataset_id;
    std::string pipeline_id;
    Metric metric;
    double value = 0.0;
    bool valid = true;
    std::optional<double> fit_time_s;

    bool operator==(const EvaluationRecord&) const = default;
};

struct ExperimentCorpus {
    std::vector<DatasetDescriptor> datasets;
    std::vector<PipelineConfigDescriptor> pipelines;
    std::vector<EvaluationRecord> evaluations;

    bool operator==(const ExperimentCorpus&) const = default;

    const DatasetDescriptor* find_dataset(const std::string& id) const;
    const PipelineConfigDescriptor* find_pipeline(const std::string& id) const;
};

struct CorpusStats {
    std::size_t n_datasets = 0;
    std::size_t n_pipelines = 0;
    std::size_t n_evaluations = 0;
    std::size_t n_invalid_evaluations = 0;
    // Datasets no pipeline claims as origin; legal but worth surfacing.
    std::vector<std::string> datasets_without_pipelines;
};

/// Throws ValidationError on the first violated invariant (duplicate ids,
/// dangling references, malformed steps/variables, out-of-range values).
void validate_corpus(const ExperimentCorpus& corpus);

/// Reads a JSONL corpus file. Each line is one record tagged with
/// "kind": "dataset" | "pipeline" | "evaluation". Parse and validation
/// errors carry the 1-based line number.
ExperimentCorpus load_corpus(const std::string& path);

/// Writes JSONL with records sorted by kind (datasets, pipelines,
/// evaluations) and by id within a kind, one compact JSON object per line.
void save_corpus(const ExperimentCorpus& corpus, const std::string& path);

CorpusStats corpus_stats(const ExperimentCorpus& corpus);

/// Keeps, per (origin dataset, operator sequence) group, the k configs with
/// the highest source_performance; ties and missing scores resolve by id.
/// Evaluations referencing dropped configs are removed as well.
ExperimentCorpus filter_top_k_configs(const ExperimentCorpus& corpus, std::size_t k);

/// Keeps only configs flagged atomic, dropping their orphaned evaluations.
ExperimentCorpus filter_atomic(const ExperimentCorpus& corpus);

}  // namespace mx

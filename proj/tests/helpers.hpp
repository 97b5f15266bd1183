#pragma once

// Shared fixtures for the unit tests.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "mx/corpus.hpp"

namespace mxtest {

inline std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Two classification datasets, three configs, a handful of evaluations.
inline mx::ExperimentCorpus tiny_corpus() {
    using namespace mx;
    ExperimentCorpus c;

    DatasetDescriptor d1;
    d1.id = "ds/iris";
    d1.name = "iris";
    d1.description = "flower measurements";
    d1.tags = {"tabular", "small"};
    d1.task_kind = TaskKind::kClassification;
    d1.variables = {
        {"sepal_len", VarKind::kNumeric, VarRole::kFeature},
        {"petal_len", VarKind::kNumeric, VarRole::kFeature},
        {"species", VarKind::kCategorical, VarRole::kTarget},
    };
    d1.table = TableData{
        {"sepal_len", "petal_len", "species"},
        {VarKind::kNumeric, VarKind::kNumeric, VarKind::kCategorical},
        {
            {5.1, 1.4, std::string("setosa")},
            {6.2, 4.5, std::string("versicolor")},
            {5.9, 5.1, std::string("virginica")},
            {5.0, 1.3, std::string("setosa")},
            {6.7, 4.7, std::string("versicolor")},
            {6.3, 5.0, std::string("virginica")},
        },
    };

    DatasetDescriptor d2;
    d2.id = "ds/wine";
    d2.name = "wine";
    d2.task_kind = TaskKind::kClassification;
    d2.variables = {
        {"alcohol", VarKind::kNumeric, VarRole::kFeature},
        {"class", VarKind::kCategorical, VarRole::kTarget},
    };

    auto step = [](int pos, const std::string& op, StepKind kind) {
        PipelineStep s;
        s.position = pos;
        s.operator_name = op;
        s.step_kind = kind;
        return s;
    };

    PipelineConfigDescriptor p1;
    p1.id = "cfg/a";
    p1.task_kind = TaskKind::kClassification;
    p1.origin_dataset = "ds/iris";
    p1.source_performance = 0.91;
    p1.steps = {step(0, "StandardScaler", StepKind::kTransformation),
                step(1, "LogisticRegression", StepKind::kEstimation)};
    p1.steps[1].hyperparameters = {{"C", mx::HpValue(1.0)},
                                   {"penalty", mx::HpValue(std::string("l2"))}};

    PipelineConfigDescriptor p2;
    p2.id = "cfg/b";
    p2.task_kind = TaskKind::kClassification;
    p2.origin_dataset = "ds/iris";
    p2.source_performance = 0.88;
    p2.steps = {step(0, "StandardScaler", StepKind::kTransformation),
                step(1, "LogisticRegression", StepKind::kEstimation)};
    p2.steps[1].hyperparameters = {{"C", mx::HpValue(10.0)}};

    PipelineConfigDescriptor p3;
    p3.id = "cfg/c";
    p3.task_kind = TaskKind::kClassification;
    p3.origin_dataset = "ds/wine";
    p3.atomic = true;
    p3.steps = {step(0, "DecisionTreeClassifier", StepKind::kEstimation)};
    p3.steps[0].hyperparameters = {{"max_depth", mx::HpValue(3.0)},
                                   {"pruned", mx::HpValue(true)},
                                   {"class_weight", mx::HpValue()}};

    c.datasets = {d1, d2};
    c.pipelines = {p1, p2, p3};
    c.evaluations = {
        {"ds/iris", "cfg/a", Metric::accuracy(), 0.93, true, 0.8},
        {"ds/iris", "cfg/b", Metric::accuracy(), 0.89, true, std::nullopt},
        {"ds/wine", "cfg/c", Metric::accuracy(), 0.0, false, 12.0},
    };
    return c;
}

}  // namespace mxtest

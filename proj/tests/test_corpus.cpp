#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>

#include "helpers.hpp"
#include "mx/corpus.hpp"

using namespace mx;

TEST_CASE("corpus round-trips through jsonl and resaves byte-identically") {
    auto c = mxtest::tiny_corpus();
    auto path = mxtest::temp_path("mx_corpus_rt.jsonl");
    save_corpus(c, path);
    auto loaded = load_corpus(path);
    CHECK(loaded.datasets.size() == c.datasets.size());
    CHECK(loaded.pipelines.size() == c.pipelines.size());
    CHECK(loaded.evaluations.size() == c.evaluations.size());
    CHECK(*loaded.find_dataset("ds/iris") == *c.find_dataset("ds/iris"));
    CHECK(*loaded.find_pipeline("cfg/c") == *c.find_pipeline("cfg/c"));

    auto path2 = mxtest::temp_path("mx_corpus_rt2.jsonl");
    save_corpus(loaded, path2);
    CHECK(mxtest::slurp(path) == mxtest::slurp(path2));
}

TEST_CASE("save orders records deterministically regardless of input order") {
    auto c = mxtest::tiny_corpus();
    auto shuffled = c;
    std::swap(shuffled.datasets[0], shuffled.datasets[1]);
    std::swap(shuffled.pipelines[0], shuffled.pipelines[2]);
    std::swap(shuffled.evaluations[0], shuffled.evaluations[2]);
    auto pa = mxtest::temp_path("mx_corpus_oa.jsonl");
    auto pb = mxtest::temp_path("mx_corpus_ob.jsonl");
    save_corpus(c, pa);
    save_corpus(shuffled, pb);
    CHECK(mxtest::slurp(pa) == mxtest::slurp(pb));
}

TEST_CASE("hyperparameter values keep their types") {
    auto c = mxtest::tiny_corpus();
    auto path = mxtest::temp_path("mx_corpus_hp.jsonl");
    save_corpus(c, path);
    auto loaded = load_corpus(path);
    const auto* p = loaded.find_pipeline("cfg/c");
    REQUIRE(p != nullptr);
    const auto& hps = p->steps[0].hyperparameters;
    REQUIRE(hps.size() == 3);
    CHECK(std::get<double>(hps[0].value) == 3.0);
    CHECK(std::get<bool>(hps[1].value) == true);
    CHECK(std::holds_alternative<std::monostate>(hps[2].value));
}

TEST_CASE("parse errors carry the line number") {
    auto path = mxtest::temp_path("mx_corpus_bad.jsonl");
    {
        std::ofstream out(path);
        out << R"({"kind":"dataset","id":"ds/x","task_kind":"classification","variables":[{"name":"a","kind":"numeric","role":"feature"},{"name":"y","kind":"categorical","role":"target"}]})"
            << "\n";
        out << "{not json\n";
    }
    try {
        load_corpus(path);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
}

TEST_CASE("validation rejects broken corpora") {
    SUBCASE("duplicate dataset id") {
        auto c = mxtest::tiny_corpus();
        c.datasets.push_back(c.datasets[0]);
        CHECK_THROWS_AS(validate_corpus(c), ValidationError);
    }
    SUBCASE("dangling evaluation reference names the missing id") {
        auto c = mxtest::tiny_corpus();
        c.evaluations.push_back({"ds/iris", "cfg/ghost", Metric::accuracy(), 0.5, true, {}});
        try {
            validate_corpus(c);
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            CHECK(std::string(e.what()).find("cfg/ghost") != std::string::npos);
        }
    }
    SUBCASE("dangling origin dataset") {
        auto c = mxtest::tiny_corpus();
        c.pipelines[0].origin_dataset = "ds/ghost";
        CHECK_THROWS_AS(validate_corpus(c), ValidationError);
    }
    SUBCASE("no target variable") {
        auto c = mxtest::tiny_corpus();
        c.datasets[1].variables[1].role = VarRole::kFeature;
        CHECK_THROWS_AS(validate_corpus(c), ValidationError);
    }
    SUBCASE("two target variables") {
        auto c = mxtest::tiny_corpus();
        c.datasets[1].variables[0].role = VarRole::kTarget;
        CHECK_THROWS_AS(validate_corpus(c), ValidationError);
    }
    SUBCASE("pipeline must end with an estimation step") {
        auto c = mxtest::tiny_corpus();
        c.pipelines[0].steps[1].step_kind = StepKind::kTransformation;
        CHECK_THROWS_AS(validate_corpus(c), ValidationError);
    }
    SUBCASE("step positions must be gapless") {
        auto c = mxtest::tiny_corpus();
        c.pipelines[0].steps[1].position = 5;
        CHECK_THROWS_AS(validate_corpus(c), ValidationError);
    }
    SUBCASE("duplicate evaluation key") {
        auto c = mxtest::tiny_corpus();
        c.evaluations.push_back(c.evaluations[0]);
        CHECK_THROWS_AS(validate_corpus(c), ValidationError);
    }
    SUBCASE("same pair under a different metric is fine") {
        auto c = mxtest::tiny_corpus();
        auto extra = c.evaluations[0];
        extra.metric = Metric::precision();
        c.evaluations.push_back(extra);
        CHECK_NOTHROW(validate_corpus(c));
    }
    SUBCASE("invalid evaluation must carry the worst value") {
        auto c = mxtest::tiny_corpus();
        c.evaluations[2].value = 0.4;
        CHECK_THROWS_AS(validate_corpus(c), ValidationError);
    }
    SUBCASE("task kind mismatch between dataset and pipeline") {
        auto c = mxtest::tiny_corpus();
        c.pipelines[2].task_kind = TaskKind::kRegression;
        CHECK_THROWS_AS(validate_corpus(c), ValidationError);
    }
}

TEST_CASE("top-k filter keeps the best-scored configs per family") {
    ExperimentCorpus c;
    DatasetDescriptor d;
    d.id = "ds/a";
    d.task_kind = TaskKind::kClassification;
    d.variables = {{"x", VarKind::kNumeric, VarRole::kFeature},
                   {"y", VarKind::kCategorical, VarRole::kTarget}};
    c.datasets = {d};
    auto mk = [&](const std::string& id, const std::string& op, std::optional<double> score) {
        PipelineConfigDescriptor p;
        p.id = id;
        p.task_kind = TaskKind::kClassification;
        p.origin_dataset = "ds/a";
        p.source_performance = score;
        PipelineStep s;
        s.position = 0;
        s.operator_name = op;
        s.step_kind = StepKind::kEstimation;
        p.steps = {s};
        return p;
    };
    // Family "Tree": four scored configs plus one unscored straggler.
    c.pipelines = {mk("cfg/t1", "Tree", 0.70), mk("cfg/t2", "Tree", 0.90),
                   mk("cfg/t3", "Tree", 0.80), mk("cfg/t4", "Tree", 0.90),
                   mk("cfg/t5", "Tree", std::nullopt),
                   // Family "Knn": a single config survives any k >= 1.
                   mk("cfg/k1", "Knn", 0.50)};
    c.evaluations = {{"ds/a", "cfg/t1", Metric::accuracy(), 0.7, true, {}},
                     {"ds/a", "cfg/t2", Metric::accuracy(), 0.9, true, {}}};

    auto top2 = filter_top_k_configs(c, 2);
    std::vector<std::string> kept;
    for (const auto& p : top2.pipelines) kept.push_back(p.id);
    // Ties at 0.90 break by id, so t2 and t4 survive.
    CHECK(kept == std::vector<std::string>{"cfg/t2", "cfg/t4", "cfg/k1"});
    CHECK(top2.evaluations.size() == 1);  // cfg/t1's evaluation is gone
    CHECK(top2.evaluations[0].pipeline_id == "cfg/t2");

    auto top10 = filter_top_k_configs(c, 10);
    CHECK(top10.pipelines.size() == 6);
}

TEST_CASE("atomic filter drops composed configs and their evaluations") {
    auto c = mxtest::tiny_corpus();
    auto a = filter_atomic(c);
    REQUIRE(a.pipelines.size() == 1);
    CHECK(a.pipelines[0].id == "cfg/c");
    REQUIRE(a.evaluations.size() == 1);
    CHECK(a.evaluations[0].pipeline_id == "cfg/c");
    CHECK(a.datasets.size() == 2);
}

TEST_CASE("stats flag datasets that lost all their configs") {
    auto c = mxtest::tiny_corpus();
    auto a = filter_atomic(c);
    auto st = corpus_stats(a);
    CHECK(st.n_datasets == 2);
    CHECK(st.n_pipelines == 1);
    CHECK(st.datasets_without_pipelines == std::vector<std::string>{"ds/iris"});
    CHECK(corpus_stats(c).datasets_without_pipelines.empty());
    CHECK(corpus_stats(c).n_invalid_evaluations == 1);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "mx/baselines.hpp"
#include "mx/forest.hpp"
#include "mx/skipgram.hpp"
#include "mx/util.hpp"

using namespace mx;

namespace {

std::vector<FeatureRow> random_regression_rows(std::size_t n, std::size_t dim,
                                               std::uint64_t seed) {
    Rng rng(seed);
    std::vector<FeatureRow> rows(n);
    for (auto& r : rows) {
        r.x.resize(dim);
        for (auto& v : r.x) v = rng.next_real();
        r.y = 0.3 * r.x[0] + 0.2 * r.x[dim - 1] + 0.1 * rng.next_real();
    }
    return rows;
}

}  // namespace

TEST_CASE("quantile binning splits sorted ninths into exact thirds") {
    std::vector<double> targets = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    auto bins = quantile_bin_targets(targets);
    CHECK(!bins.degenerate);
    int counts[3] = {0, 0, 0};
    for (double y : targets) counts[classify_bin(bins, y)]++;
    CHECK(counts[0] == 3);
    CHECK(counts[1] == 3);
    CHECK(counts[2] == 3);
    CHECK(bin_label_names() == std::vector<std::string>{"low", "medium", "high"});
}

TEST_CASE("all-equal targets are flagged degenerate and map to medium") {
    auto bins = quantile_bin_targets({0.5, 0.5, 0.5, 0.5});
    CHECK(bins.degenerate);
    CHECK(classify_bin(bins, 0.0) == 1);
    CHECK(classify_bin(bins, 0.5) == 1);
    CHECK(classify_bin(bins, 1.0) == 1);
}

TEST_CASE("binning 1000 uniform targets lands each class near a third") {
    Rng rng(99);
    std::vector<double> targets(1000);
    for (auto& t : targets) t = rng.next_real();
    auto bins = quantile_bin_targets(targets);
    CHECK(bins.b1 <= bins.b2);
    // brute-force count per class
    int counts[3] = {0, 0, 0};
    for (double y : targets) {
        if (y <= bins.b1)
            counts[0]++;
        else if (y <= bins.b2)
            counts[1]++;
        else
            counts[2]++;
    }
    for (int c : counts) {
        CHECK(c >= 332);
        CHECK(c <= 335);
    }
}

TEST_CASE("distinct targets of size 3k bin into exactly k per class") {
    for (std::size_t k : {1u, 2u, 3u, 100u}) {
        std::vector<double> targets(3 * k);
        for (std::size_t i = 0; i < targets.size(); ++i)
            targets[i] = 0.001 * static_cast<double>(i + 1);
        Rng rng(k);
        rng.shuffle(targets);
        auto bins = quantile_bin_targets(targets);
        std::size_t counts[3] = {0, 0, 0};
        for (double y : targets) counts[classify_bin(bins, y)]++;
        CHECK(counts[0] == k);
        CHECK(counts[1] == k);
        CHECK(counts[2] == k);
    }
    CHECK_THROWS_AS(quantile_bin_targets({0.1, 0.2}), ValidationError);
}

TEST_CASE("a single training row makes every tree a leaf with that target") {
    FeatureRow row;
    row.x = {0.3, 0.8};
    row.y = 0.62;
    auto model = fit_meta_model({row}, ModelMode::kRegression, {25, std::nullopt, 2}, {}, 7);
    REQUIRE(model.trees.size() == 25);
    for (const auto& t : model.trees) {
        CHECK(t.nodes.size() == 1);
        CHECK(tree_predict(t, row.x) == 0.62);
    }
    CHECK(predict_regression(model, row.x) == doctest::Approx(0.62).epsilon(1e-15));
}

TEST_CASE("fitting is deterministic and independent of worker count") {
    auto rows = random_regression_rows(80, 4, 11);
    auto probes = random_regression_rows(10, 4, 12);
    auto m1 = fit_meta_model(rows, ModelMode::kRegression, {40, 10, 2}, {}, 5, 1);
    auto m2 = fit_meta_model(rows, ModelMode::kRegression, {40, 10, 2}, {}, 5, 1);
    auto m4 = fit_meta_model(rows, ModelMode::kRegression, {40, 10, 2}, {}, 5, 4);
    for (const auto& p : probes) {
        double a = predict_regression(m1, p.x);
        CHECK(a == predict_regression(m2, p.x));
        CHECK(a == predict_regression(m4, p.x));
    }
}

TEST_CASE("separable labels are learned to perfect training accuracy") {
    Rng rng(21);
    std::vector<FeatureRow> rows(500);
    for (auto& r : rows) {
        r.x = {rng.next_real(), rng.next_real(), rng.next_real()};
        r.label = r.x[0] > 0.5 ? 1 : 0;
    }
    auto model = fit_meta_model(rows, ModelMode::kClassification, {50, 10, 2}, {}, 3);
    std::size_t hits = 0;
    for (const auto& r : rows)
        if (predict_label(model, r.x) == r.label) hits++;
    CHECK(hits == rows.size());
}

TEST_CASE("regression prediction equals the per-tree mean oracle") {
    auto rows = random_regression_rows(60, 5, 31);
    auto model = fit_meta_model(rows, ModelMode::kRegression, {30, std::nullopt, 2}, {}, 13);
    auto probes = random_regression_rows(20, 5, 32);
    for (const auto& p : probes) {
        double sum = 0;
        for (const auto& t : model.trees) sum += tree_predict(t, p.x);
        double oracle = sum / static_cast<double>(model.trees.size());
        CHECK(std::abs(predict_regression(model, p.x) - oracle) <= 1e-12);
    }
}

TEST_CASE("classification prediction equals the brute-force vote oracle") {
    Rng rng(41);
    std::vector<FeatureRow> rows(90);
    for (auto& r : rows) {
        r.x = {rng.next_real(), rng.next_real()};
        r.label = static_cast<int>(rng.next_below(3));
    }
    auto model = fit_meta_model(rows, ModelMode::kClassification, {21, 10, 2}, {}, 8);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> x = {rng.next_real(), rng.next_real()};
        int votes[3] = {0, 0, 0};
        for (const auto& t : model.trees) votes[static_cast<int>(tree_predict(t, x))]++;
        int expect = 0;
        for (int c = 1; c < 3; ++c)
            if (votes[c] > votes[expect]) expect = c;
        CHECK(predict_label(model, x) == expect);
    }
}

TEST_CASE("a two-tree tied vote resolves to the lower label") {
    MetaModel model;
    model.mode = ModelMode::kClassification;
    model.n_classes = 3;
    Tree low, high;
    low.nodes.push_back({-1, 0, -1, -1, 0.0});
    high.nodes.push_back({-1, 0, -1, -1, 2.0});
    model.trees = {low, high};
    CHECK(predict_label(model, std::vector<double>{0.5}) == 0);
}

TEST_CASE("regression predictions stay within the training target range") {
    auto rows = random_regression_rows(70, 3, 51);
    double lo = rows[0].y, hi = rows[0].y;
    for (const auto& r : rows) {
        lo = std::min(lo, r.y);
        hi = std::max(hi, r.y);
    }
    auto model = fit_meta_model(rows, ModelMode::kRegression, {35, std::nullopt, 2}, {}, 19);
    Rng rng(52);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x = {rng.next_real(-2, 3), rng.next_real(-2, 3),
                                 rng.next_real(-2, 3)};
        double p = predict_regression(model, x);
        CHECK(p >= lo);
        CHECK(p <= hi);
    }
}

TEST_CASE("grid search returns a single cell unchanged") {
    auto rows = random_regression_rows(12, 2, 61);
    ForestParams only{7, 5, 4};
    auto result = grid_search_cv(rows, ModelMode::kRegression, {only}, 3, 1);
    CHECK(result.best == only);
    CHECK(result.cells_evaluated == 1);
}

TEST_CASE("grid search selects a strictly dominating cell") {
    Rng rng(71);
    std::vector<FeatureRow> rows(200);
    for (auto& r : rows) {
        double a = rng.next_below(2) ? 0.75 : 0.25;
        double b = rng.next_below(2) ? 0.75 : 0.25;
        r.x = {a + rng.next_real(-0.05, 0.05), b + rng.next_real(-0.05, 0.05),
               rng.next_real()};
        r.label = (a > 0.5) != (b > 0.5) ? 1 : 0;
    }
    ForestParams shallow{1, 1, 2};
    ForestParams deep{30, std::nullopt, 2};
    auto result = grid_search_cv(rows, ModelMode::kClassification, {shallow, deep}, 5, 2);
    CHECK(result.best == deep);
    CHECK(result.best_score > 0.9);
}

TEST_CASE("the default grid has 27 cells and all are evaluated") {
    CHECK(default_param_grid(ModelMode::kRegression).size() == 27);
    CHECK(default_param_grid(ModelMode::kClassification).size() == 27);
    auto grid = default_param_grid(ModelMode::kRegression);
    bool has_20 = false, has_50 = false;
    for (const auto& cell : grid) {
        if (cell.n_estimators == 20) has_20 = true;
        if (cell.n_estimators == 50) has_50 = true;
    }
    CHECK(has_20);
    CHECK(!has_50);
    for (const auto& cell : default_param_grid(ModelMode::kClassification))
        CHECK(cell.n_estimators >= 50);

    auto rows = random_regression_rows(12, 2, 81);
    auto result = grid_search_cv(rows, ModelMode::kRegression, grid, 3, 4);
    CHECK(result.cells_evaluated == 27);
}

TEST_CASE("tied grid cells fall back to fewer trees, then shallower depth") {
    Rng rng(91);
    std::vector<FeatureRow> rows(15);
    for (auto& r : rows) {
        r.x = {rng.next_real(), rng.next_real()};
        r.y = 0.5;  // constant target: every cell scores an exact zero MSE
    }
    std::vector<ForestParams> grid = {{100, std::nullopt, 2}, {50, std::nullopt, 2}, {50, 10, 2}};
    auto result = grid_search_cv(rows, ModelMode::kRegression, grid, 5, 3);
    CHECK(result.best == ForestParams{50, 10, 2});
    CHECK(result.best_score == 0.0);

    CHECK_THROWS_AS(grid_search_cv(rows, ModelMode::kRegression, grid, 16, 3), ValidationError);
}

TEST_CASE("models survive a save and load round trip") {
    auto rows = random_regression_rows(50, 4, 101);
    std::vector<std::string> layout = {"f0", "f1", "f2", "f3"};
    auto model = fit_meta_model(rows, ModelMode::kRegression, {20, 10, 5}, layout, 23);
    auto path = mxtest::temp_path("mx_model.json");
    save_model(model, path);
    auto back = load_model(path);
    CHECK(back.params == model.params);
    CHECK(back.feature_layout == layout);
    CHECK(back.seed == 23);
    auto probes = random_regression_rows(25, 4, 102);
    for (const auto& p : probes)
        CHECK(predict_regression(back, p.x) == predict_regression(model, p.x));

    Rng rng(103);
    std::vector<FeatureRow> crows(60);
    for (auto& r : crows) {
        r.x = {rng.next_real(), rng.next_real(), rng.next_real(), rng.next_real()};
        r.label = static_cast<int>(rng.next_below(3));
    }
    auto cmodel =
        fit_meta_model(crows, ModelMode::kClassification, {15, std::nullopt, 2}, layout, 29);
    auto cpath = mxtest::temp_path("mx_model_cls.json");
    save_model(cmodel, cpath);
    auto cback = load_model(cpath);
    CHECK(cback.n_classes == cmodel.n_classes);
    for (const auto& p : probes)
        CHECK(predict_label(cback, p.x) == predict_label(cmodel, p.x));

    CHECK_THROWS_AS(predict_regression(model, std::vector<double>{1, 2, 3}), ValidationError);
}

TEST_CASE("fit rejects bad inputs") {
    CHECK_THROWS_AS(fit_meta_model({}, ModelMode::kRegression, {10, 10, 2}, {}, 1),
                    ValidationError);
    FeatureRow a, b;
    a.x = {1, 2};
    b.x = {1};
    CHECK_THROWS_AS(fit_meta_model({a, b}, ModelMode::kRegression, {10, 10, 2}, {}, 1),
                    ValidationError);
    a.label = -1;
    CHECK_THROWS_AS(fit_meta_model({a}, ModelMode::kClassification, {10, 10, 2}, {}, 1),
                    ValidationError);
    b.x = {1, 2};
    CHECK_THROWS_AS(fit_meta_model({a, b}, ModelMode::kRegression, {0, 10, 2}, {}, 1),
                    ValidationError);
}

TEST_CASE("average baseline is the training mean") {
    FeatureRow a, b;
    a.y = 0.5;
    b.y = 0.7;
    CHECK(fit_baseline_average({a, b}).mean == doctest::Approx(0.6).epsilon(1e-15));
    FeatureRow c;
    c.y = 0.3;
    CHECK(fit_baseline_average({c}).mean == 0.3);
    CHECK_THROWS_AS(fit_baseline_average({}), ValidationError);

    Rng rng(111);
    std::vector<FeatureRow> rows(1000);
    double sum = 0;
    for (auto& r : rows) {
        r.y = rng.next_real();
        sum += r.y;
    }
    CHECK(std::abs(fit_baseline_average(rows).mean - sum / 1000.0) <= 1e-12);
}

TEST_CASE("average baseline scores zero r2 when the test mean matches") {
    FeatureRow a, b;
    a.y = 0.4;
    b.y = 0.6;
    double mean = fit_baseline_average({a, b}).mean;
    std::vector<double> test_y = {0.3, 0.7};  // same mean as training
    double test_mean = (test_y[0] + test_y[1]) / 2.0;
    double sse = 0, sst = 0;
    for (double y : test_y) {
        sse += (y - mean) * (y - mean);
        sst += (y - test_mean) * (y - test_mean);
    }
    CHECK(1.0 - sse / sst == 0.0);
}

TEST_CASE("closest-embedding baseline returns the recorded pair value") {
    std::map<std::string, std::vector<double>> pes = {{"pa", {1, 0}}, {"pb", {0, 1}}};
    FeatureRow r1{"d1", "pa", {}, 0.8, -1};
    FeatureRow r2{"d1", "pb", {}, 0.4, -1};
    auto model = fit_baseline_closest({r1, r2}, pes);
    CHECK(predict_closest(model, "d1", {1, 0}) == 0.8);
    CHECK(predict_closest(model, "d1", {0, 2}) == 0.4);
}

TEST_CASE("closest-embedding baseline falls back to the pipeline mean") {
    std::map<std::string, std::vector<double>> pes = {{"pa", {1, 0}}, {"pb", {0, 1}}};
    FeatureRow r1{"d1", "pa", {}, 0.8, -1};
    FeatureRow r2{"d3", "pa", {}, 0.6, -1};
    FeatureRow r3{"d1", "pb", {}, 0.4, -1};
    auto model = fit_baseline_closest({r1, r2, r3}, pes);
    // d2 never saw pa, so its mean over d1 and d3 is used
    CHECK(predict_closest(model, "d2", {1, 0}) == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("cosine ties resolve to the lexicographically first pipeline") {
    std::map<std::string, std::vector<double>> pes = {{"pb", {2, 0}}, {"pa", {1, 0}}};
    FeatureRow r1{"d1", "pb", {}, 0.9, -1};
    FeatureRow r2{"d1", "pa", {}, 0.2, -1};
    auto model = fit_baseline_closest({r1, r2}, pes);
    // both embeddings point the same way, so cosine ties at 1
    CHECK(predict_closest(model, "d1", {3, 0}) == 0.2);
}

TEST_CASE("closest-embedding matches an exhaustive scan on random instances") {
    Rng rng(121);
    std::map<std::string, std::vector<double>> pes;
    std::vector<FeatureRow> rows;
    for (int p = 0; p < 20; ++p) {
        std::string pid = "p" + std::to_string(p);
        std::vector<double> v(4);
        for (auto& x : v) x = rng.next_real(-1, 1);
        pes[pid] = v;
        for (int d = 0; d < 3; ++d) {
            if (rng.next_real() < 0.5) continue;
            FeatureRow r;
            r.dataset_id = "d" + std::to_string(d);
            r.pipeline_id = pid;
            r.y = rng.next_real();
            rows.push_back(r);
        }
    }
    if (rows.empty()) FAIL("fixture produced no rows");
    auto model = fit_baseline_closest(rows, pes);

    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> q(4);
        for (auto& x : q) x = rng.next_real(-1, 1);
        std::string dataset = "d" + std::to_string(trial % 3);

        // independent oracle: scan training pipelines in sorted id order
        std::string best_id;
        double best_cos = -2;
        for (const auto& [pid, vec] : model.embeddings) {
            double c = cosine(vec, q);
            if (best_id.empty() || c > best_cos) {
                best_id = pid;
                best_cos = c;
            }
        }
        double expect;
        auto it = model.pair_value.find({dataset, best_id});
        if (it != model.pair_value.end())
            expect = it->second;
        else
            expect = model.pipeline_mean.at(best_id);
        CHECK(predict_closest(model, dataset, q) == expect);
    }

    std::map<std::string, std::vector<double>> missing = pes;
    missing.erase("p0");
    CHECK_THROWS_AS(fit_baseline_closest(rows, missing), ValidationError);
}

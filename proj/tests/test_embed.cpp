#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "helpers.hpp"
#include "mx/kg.hpp"
#include "mx/skipgram.hpp"
#include "mx/util.hpp"
#include "mx/walks.hpp"

using namespace mx;

namespace {

KnowledgeGraph chain_graph(int n) {
    KnowledgeGraph kg;
    for (int i = 0; i + 1 < n; ++i)
        kg.add({"mx:n/" + std::to_string(i), pred::kHasNextTask,
                Term::node("mx:n/" + std::to_string(i + 1))});
    kg.canonicalize();
    return kg;
}

}  // namespace

TEST_CASE("entities with no outgoing edges walk in place") {
    KnowledgeGraph kg;
    kg.add({"mx:n/a", pred::kBelongsTo, Term::node("mx:n/b")});
    kg.canonicalize();
    auto walks = generate_walks(kg, 10, 20, 1);
    CHECK(walks.size() == 20);  // two entities, ten walks each
    std::size_t from_b = 0;
    for (const auto& w : walks) {
        if (w.tokens.front() == "mx:n/b") {
            ++from_b;
            CHECK(w.tokens == std::vector<std::string>{"mx:n/b"});
        } else {
            CHECK(w.tokens ==
                  std::vector<std::string>{"mx:n/a", pred::kBelongsTo, "mx:n/b"});
        }
    }
    CHECK(from_b == 10);
}

TEST_CASE("a single-edge chain produces the one possible walk") {
    auto kg = chain_graph(3);
    auto walks = generate_walks(kg, 10, 20, 9);
    for (const auto& w : walks) {
        if (w.tokens.front() != "mx:n/0") continue;
        CHECK(w.tokens == std::vector<std::string>{"mx:n/0", pred::kHasNextTask, "mx:n/1",
                                                   pred::kHasNextTask, "mx:n/2"});
    }
}

TEST_CASE("walk count and token budget follow the config") {
    auto kg = build_kg(mxtest::tiny_corpus());
    std::size_t n_entities = kg.entities().size();
    auto walks = generate_walks(kg, 10, 20, 42);
    CHECK(walks.size() == 10 * n_entities);
    for (const auto& w : walks) {
        CHECK(!w.tokens.empty());
        CHECK(w.tokens.size() <= 2 * 20 - 1);
        CHECK(w.tokens.size() % 2 == 1);  // entity, (predicate, node)*
    }
    // A 25-node chain saturates the budget exactly: 20 nodes, 39 tokens.
    auto chain_walks = generate_walks(chain_graph(25), 1, 20, 0);
    bool saw_full = false;
    for (const auto& w : chain_walks)
        if (w.tokens.front() == "mx:n/0") {
            CHECK(w.tokens.size() == 39);
            saw_full = true;
        }
    CHECK(saw_full);
}

TEST_CASE("walks are seed-stable and seed-sensitive") {
    auto kg = build_kg(mxtest::tiny_corpus());
    auto a = generate_walks(kg, 10, 20, 42);
    auto b = generate_walks(kg, 10, 20, 42);
    CHECK(a == b);
    auto c = generate_walks(kg, 10, 20, 43);
    CHECK(a != c);  // the graph branches, so some choice must differ
}

TEST_CASE("literal tokens end walks and carry no spaces") {
    KnowledgeGraph kg;
    kg.add({"mx:dataset/a", pred::kHasValue, Term::literal(Literal::str("two words"))});
    kg.canonicalize();
    auto walks = generate_walks(kg, 5, 20, 3);
    for (const auto& w : walks) {
        REQUIRE(w.tokens.size() == 3);
        CHECK(w.tokens[2] == "two%20words");
    }
    auto path = mxtest::temp_path("mx_walks.txt");
    save_walks(walks, path);
    auto back = load_walks(path);
    CHECK(back == walks);
}

TEST_CASE("pair loss and gradients match the closed forms") {
    std::vector<double> u = {1.0, 0.0, 2.0};
    std::vector<double> v = {0.0, 3.0, 0.0};  // orthogonal: u·v = 0
    std::vector<double> gu(3), gv(3);
    double loss = sg_pair_loss_grad(u, v, 1, gu, gv);
    CHECK(loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    for (int i = 0; i < 3; ++i) {
        CHECK(gu[i] == doctest::Approx(-0.5 * v[i]).epsilon(1e-12));
        CHECK(gv[i] == doctest::Approx(-0.5 * u[i]).epsilon(1e-12));
    }

    // Saturation: strongly aligned positive pair has vanishing loss; the
    // overflow-safe path must not produce inf/nan even at huge scores.
    std::vector<double> big_u = {40.0, 0.0}, big_v = {40.0, 0.0}, g1(2), g2(2);
    CHECK(sg_pair_loss_grad(big_u, big_v, 1, g1, g2) < 1e-12);
    std::vector<double> huge_u = {1e6, 0.0}, huge_v = {1e6, 0.0};
    double huge_loss = sg_pair_loss_grad(huge_u, huge_v, 0, g1, g2);
    CHECK(std::isfinite(huge_loss));
    CHECK(huge_loss == doctest::Approx(1e12).epsilon(1e-9));
}

TEST_CASE("analytic gradients match central finite differences") {
    Rng rng(2024);
    const std::size_t dim = 8;
    const double h = 1e-5;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> u(dim), v(dim), gu(dim), gv(dim), tmp_gu(dim), tmp_gv(dim);
        for (auto& x : u) x = rng.next_real(-2.0, 2.0);
        for (auto& x : v) x = rng.next_real(-2.0, 2.0);
        int label = trial % 2;
        sg_pair_loss_grad(u, v, label, gu, gv);
        for (std::size_t i = 0; i < dim; ++i) {
            auto up = u, um = u;
            up[i] += h;
            um[i] -= h;
            double lp = sg_pair_loss_grad(up, v, label, tmp_gu, tmp_gv);
            double lm = sg_pair_loss_grad(um, v, label, tmp_gu, tmp_gv);
            double numeric = (lp - lm) / (2 * h);
            double rel = std::abs(gu[i] - numeric) /
                         std::max({std::abs(gu[i]), std::abs(numeric), 1e-10});
            CHECK(rel < 1e-4);

            auto vp = v, vm = v;
            vp[i] += h;
            vm[i] -= h;
            lp = sg_pair_loss_grad(u, vp, label, tmp_gu, tmp_gv);
            lm = sg_pair_loss_grad(u, vm, label, tmp_gu, tmp_gv);
            numeric = (lp - lm) / (2 * h);
            rel = std::abs(gv[i] - numeric) /
                  std::max({std::abs(gv[i]), std::abs(numeric), 1e-10});
            CHECK(rel < 1e-4);
        }
    }
}

TEST_CASE("one-token corpus trains to a finite vector without pairs") {
    std::vector<Walk> walks = {Walk{{"solo"}}};
    TrainConfig cfg;
    cfg.dim = 16;
    cfg.epochs = 2;
    TrainStats stats;
    auto table = train_skipgram(walks, cfg, &stats);
    CHECK(stats.pairs_per_epoch == 0);
    REQUIRE(table.has("solo"));
    for (double x : table.vec("solo")) {
        CHECK(std::isfinite(x));
        CHECK(std::abs(x) <= 0.5 / 16 + 1e-12);
    }
}

TEST_CASE("co-occurring tokens end up closer than unrelated ones") {
    // alpha and beta share every window (and the anchor token with it);
    // gamma/delta live in disjoint walks.
    std::vector<Walk> walks;
    for (int i = 0; i < 250; ++i) {
        walks.push_back(Walk{{"alpha", "beta", "anchor"}});
        walks.push_back(Walk{{"beta", "alpha", "anchor"}});
        walks.push_back(Walk{{"gamma", "delta", "elsewhere"}});
    }
    TrainConfig cfg;
    cfg.dim = 16;
    cfg.epochs = 5;
    cfg.seed = 7;
    auto table = train_skipgram(walks, cfg);
    double close = cosine(table.vec("alpha"), table.vec("beta"));
    double far1 = cosine(table.vec("alpha"), table.vec("gamma"));
    double far2 = cosine(table.vec("beta"), table.vec("delta"));
    CHECK(close > far1);
    CHECK(close > far2);
}

TEST_CASE("training loss does not increase from first to last epoch") {
    auto kg = build_kg(mxtest::tiny_corpus());
    auto walks = generate_walks(kg, 5, 10, 11);
    TrainConfig cfg;
    cfg.dim = 24;
    cfg.epochs = 4;
    TrainStats stats;
    train_skipgram(walks, cfg, &stats);
    REQUIRE(stats.epoch_loss.size() == 4);
    CHECK(stats.epoch_loss.back() <= stats.epoch_loss.front());
}

TEST_CASE("training is deterministic for one worker") {
    auto kg = build_kg(mxtest::tiny_corpus());
    auto walks = generate_walks(kg, 3, 8, 5);
    TrainConfig cfg;
    cfg.dim = 12;
    cfg.epochs = 2;
    auto a = train_skipgram(walks, cfg);
    auto b = train_skipgram(walks, cfg);
    CHECK(a.vocab == b.vocab);
    CHECK(a.input == b.input);
}

TEST_CASE("min_count filter can empty the vocabulary") {
    std::vector<Walk> walks = {Walk{{"a", "b"}}};
    TrainConfig cfg;
    cfg.min_count = 99;
    CHECK_THROWS_AS(train_skipgram(walks, cfg), ValidationError);
}

TEST_CASE("cosine basics") {
    std::vector<double> e1 = {1, 0}, e2 = {0, 1}, d = {1, 2}, d2 = {2, 4};
    CHECK(cosine(e1, e1) == 1.0);
    CHECK(cosine(e1, e2) == 0.0);
    CHECK(cosine(d, d2) == doctest::Approx(1.0).epsilon(1e-12));

    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        std::vector<double> a(6), b(6);
        for (auto& x : a) x = rng.next_real(-1, 1);
        for (auto& x : b) x = rng.next_real(-1, 1);
        double lambda = rng.next_real(0.1, 10.0);
        auto scaled = a;
        for (auto& x : scaled) x *= lambda;
        CHECK(cosine(scaled, b) == doctest::Approx(cosine(a, b)).epsilon(1e-9));
    }

    bool degenerate = false;
    std::vector<double> zero = {0, 0};
    CHECK(cosine(zero, e1, &degenerate) == 0.0);
    CHECK(degenerate);
    std::vector<double> short_vec = {1.0};
    CHECK_THROWS_AS(cosine(short_vec, e1), ValidationError);
}

TEST_CASE("embedding tsv round-trips") {
    auto kg = build_kg(mxtest::tiny_corpus());
    auto walks = generate_walks(kg, 2, 6, 13);
    TrainConfig cfg;
    cfg.dim = 8;
    cfg.epochs = 1;
    auto table = train_skipgram(walks, cfg);
    auto p1 = mxtest::temp_path("mx_emb1.tsv");
    auto p2 = mxtest::temp_path("mx_emb2.tsv");
    save_embeddings(table, p1);
    auto text = mxtest::slurp(p1);
    CHECK(text.substr(0, 6) == "dim=8\n");
    auto back = load_embeddings(p1);
    CHECK(back.dim == table.dim);
    CHECK(back.vocab == table.vocab);
    save_embeddings(back, p2);
    CHECK(mxtest::slurp(p1) == mxtest::slurp(p2));
    // 9 significant digits means a relative error no worse than ~1e-8.
    for (const auto& tok : table.vocab) {
        auto a = table.vec(tok);
        auto b = back.vec(tok);
        for (std::size_t i = 0; i < a.size(); ++i)
            CHECK(std::abs(a[i] - b[i]) <= 1e-8 * std::max(1.0, std::abs(a[i])));
    }
}

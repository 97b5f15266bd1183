#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "json.hpp"
#include "mx/commands.hpp"
#include "mx/skipgram.hpp"
#include "mx/synthbench.hpp"
#include "mx/util.hpp"

using namespace mx;
namespace fs = std::filesystem;

namespace {

struct CliWorkspace {
    std::string dir;

    CliWorkspace() {
        dir = mxtest::temp_path("mx_cli_ws");
        fs::remove_all(dir);
        fs::create_directories(dir);
    }

    std::string path(const std::string& name) const { return dir + "/" + name; }
};

int run(const std::vector<std::string>& args, std::string* captured = nullptr) {
    std::ostringstream out;
    int code = run_cli(args, out);
    if (captured) *captured = out.str();
    return code;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    f << text;
}

}  // namespace

TEST_CASE("the full command chain runs a small corpus end to end") {
    CliWorkspace ws;
    BenchSpec spec;
    spec.n_dataset_clusters = 2;
    spec.datasets_per_cluster = 3;
    spec.n_pipeline_families = 3;
    spec.configs_per_family = 4;
    spec.sparsity = 1.0;
    spec.seed = 7;
    save_bench_spec(spec, ws.path("spec.json"));

    std::string out;
    CHECK(run({"gen-bench", "--spec", ws.path("spec.json"), "--out", ws.path("corpus.jsonl")},
              &out) == 0);
    CHECK(out.find("datasets=6") != std::string::npos);
    CHECK(out.find("evaluations=72") != std::string::npos);

    CHECK(run({"build-kg", "--in", ws.path("corpus.jsonl"), "--out", ws.path("kg.nt")},
              &out) == 0);
    CHECK(out.find("entities=") != std::string::npos);
    CHECK(out.find("triples=") != std::string::npos);
    CHECK(fs::exists(ws.path("kg.nt")));

    CHECK(run({"embed", "--in", ws.path("kg.nt"), "--out", ws.path("emb.tsv"),
               "--binnings", ws.path("binnings.json"), "--walks", ws.path("walks.txt"),
               "--dim", "16", "--epochs", "2", "--walks_per_entity", "3",
               "--walk_length", "8", "--seed", "7"},
              &out) == 0);
    CHECK(fs::exists(ws.path("emb.tsv")));
    CHECK(fs::exists(ws.path("walks.txt")));
    CHECK(fs::exists(ws.path("binnings.json")));
    CHECK(load_embeddings(ws.path("emb.tsv")).dim == 16);

    CHECK(run({"aggregate", "--in", ws.path("emb.tsv"), "--kg", ws.path("kg.nt"), "--out",
               ws.path("agg.tsv")},
              &out) == 0);
    CHECK(out.find("pipelines=12") != std::string::npos);
    CHECK(out.find("datasets=6") != std::string::npos);

    CHECK(run({"train-ppe", "--in", ws.path("agg.tsv"), "--corpus", ws.path("corpus.jsonl"),
               "--out", ws.path("models")},
              &out) == 0);
    CHECK(fs::exists(ws.path("models/ppe_regression.json")));
    CHECK(fs::exists(ws.path("models/ppe_classification.json")));
    CHECK(fs::exists(ws.path("models/ppe_bins.json")));

    CHECK(run({"eval-ppe", "--in", ws.path("agg.tsv"), "--corpus", ws.path("corpus.jsonl"),
               "--out", ws.path("reports"), "--scenarios", "unseen_pipelines"},
              &out) == 0);
    CHECK(out.find("unseen_pipelines") != std::string::npos);
    CHECK(fs::exists(ws.path("reports/ppe_unseen_pipelines.json")));

    CHECK(run({"eval-dpse", "--in", ws.path("agg.tsv"), "--corpus", ws.path("corpus.jsonl"),
               "--out", ws.path("reports")},
              &out) == 0);
    CHECK(out.find("hit rate") != std::string::npos);
    CHECK(fs::exists(ws.path("reports/dpse.json")));

    CHECK(run({"rank-dpse", "--in", ws.path("agg.tsv"), "--query", "synth/c0/d0", "--topk",
               "3"},
              &out) == 0);
    CHECK(out.rfind("1\t", 0) == 0);  // first line is rank 1
    CHECK(std::count(out.begin(), out.end(), '\n') == 3);

    CHECK(run({"report", "--in", ws.path("reports")}, &out) == 0);
    CHECK(fs::exists(ws.path("reports/evaluation_report.json")));
    auto merged = nlohmann::json::parse(mxtest::slurp(ws.path("reports/evaluation_report.json")));
    CHECK(merged["ppe"].size() == 1);
    CHECK(merged["dpse"].size() == 1);
    CHECK(merged["ppe"][0]["scenario"] == "unseen_pipelines");
}

TEST_CASE("embed is reproducible and leaves its inputs untouched") {
    CliWorkspace ws;
    BenchSpec spec;
    spec.n_dataset_clusters = 2;
    spec.datasets_per_cluster = 2;
    spec.n_pipeline_families = 2;
    spec.configs_per_family = 3;
    spec.sparsity = 1.0;
    save_bench_spec(spec, ws.path("spec.json"));
    REQUIRE(run({"gen-bench", "--spec", ws.path("spec.json"), "--out",
                 ws.path("corpus.jsonl")}) == 0);

    auto corpus_bytes = mxtest::slurp(ws.path("corpus.jsonl"));
    REQUIRE(run({"build-kg", "--in", ws.path("corpus.jsonl"), "--out", ws.path("kg.nt")}) == 0);
    CHECK(mxtest::slurp(ws.path("corpus.jsonl")) == corpus_bytes);

    auto kg_bytes = mxtest::slurp(ws.path("kg.nt"));
    auto embed_args = [&](const std::string& out_name, const std::string& seed) {
        return std::vector<std::string>{
            "embed", "--in", ws.path("kg.nt"), "--binnings", ws.path("binnings.json"),
            "--walks", ws.path("walks.txt"), "--dim", "8", "--epochs", "2",
            "--walks_per_entity", "2", "--walk_length", "6", "--seed", seed,
            "--out", ws.path(out_name)};
    };
    REQUIRE(run(embed_args("emb1.tsv", "7")) == 0);
    REQUIRE(run(embed_args("emb2.tsv", "7")) == 0);
    CHECK(mxtest::slurp(ws.path("emb1.tsv")) == mxtest::slurp(ws.path("emb2.tsv")));
    CHECK(mxtest::slurp(ws.path("kg.nt")) == kg_bytes);

    REQUIRE(run(embed_args("emb3.tsv", "9")) == 0);
    CHECK(mxtest::slurp(ws.path("emb1.tsv")) != mxtest::slurp(ws.path("emb3.tsv")));
}

TEST_CASE("config files feed defaults and explicit flags beat them") {
    CliWorkspace ws;
    write_file(ws.path("run.conf"),
               "# embedding settings\n"
               "dim = 8\n"
               "epochs = 2\n"
               "walks_per_entity = 2\n"
               "walk_length = 6\n"
               "seed = 7\n");

    BenchSpec spec;
    spec.n_dataset_clusters = 2;
    spec.datasets_per_cluster = 2;
    spec.n_pipeline_families = 2;
    spec.configs_per_family = 3;
    spec.sparsity = 1.0;
    save_bench_spec(spec, ws.path("spec.json"));
    REQUIRE(run({"gen-bench", "--spec", ws.path("spec.json"), "--out",
                 ws.path("corpus.jsonl")}) == 0);
    REQUIRE(run({"build-kg", "--in", ws.path("corpus.jsonl"), "--out", ws.path("kg.nt")}) == 0);

    REQUIRE(run({"embed", "--config", ws.path("run.conf"), "--in", ws.path("kg.nt"), "--out",
                 ws.path("emb_conf.tsv"), "--binnings", ws.path("b.json"), "--walks",
                 ws.path("w.txt")}) == 0);
    CHECK(load_embeddings(ws.path("emb_conf.tsv")).dim == 8);

    REQUIRE(run({"embed", "--config", ws.path("run.conf"), "--in", ws.path("kg.nt"), "--out",
                 ws.path("emb_flag.tsv"), "--binnings", ws.path("b.json"), "--walks",
                 ws.path("w.txt"), "--dim", "4"}) == 0);
    CHECK(load_embeddings(ws.path("emb_flag.tsv")).dim == 4);  // the flag wins

    write_file(ws.path("bad_key.conf"), "no_such_key = 1\n");
    CHECK(run({"embed", "--config", ws.path("bad_key.conf"), "--in", ws.path("kg.nt")}) == 1);
    write_file(ws.path("bad_value.conf"), "dim = soon\n");
    CHECK(run({"embed", "--config", ws.path("bad_value.conf"), "--in", ws.path("kg.nt")}) == 1);
    write_file(ws.path("bad_line.conf"), "dim 8\n");
    CHECK(run({"embed", "--config", ws.path("bad_line.conf"), "--in", ws.path("kg.nt")}) == 1);
    CHECK(run({"embed", "--config", ws.path("absent.conf"), "--in", ws.path("kg.nt")}) == 2);
}

TEST_CASE("usage, validation, and io failures map to distinct exit codes") {
    CliWorkspace ws;
    CHECK(run({}) == 1);                                   // no subcommand
    CHECK(run({"frobnicate"}) == 1);                       // unknown subcommand
    CHECK(run({"build-kg", "--no-such-flag", "x"}) == 1);  // unknown flag
    CHECK(run({"build-kg", "--in", ws.path("absent.jsonl")}) == 2);
    CHECK(run({"embed", "--in", ws.path("absent.nt")}) == 2);
    CHECK(run({"gen-bench", "--spec", ws.path("absent.json"), "--out",
               ws.path("c.jsonl")}) == 2);
    CHECK(run({"gen-bench", "--out", ws.path("c.jsonl"), "--sparsity"}) == 1);

    std::string out;
    CHECK(run({"--help"}, &out) == 0);
    CHECK(out.find("gen-bench") != std::string::npos);
    CHECK(out.find("eval-dpse") != std::string::npos);
}

TEST_CASE("rank-dpse validates its query and report refuses an empty merge") {
    CliWorkspace ws;
    BenchSpec spec;
    spec.n_dataset_clusters = 2;
    spec.datasets_per_cluster = 2;
    spec.n_pipeline_families = 2;
    spec.configs_per_family = 3;
    spec.sparsity = 1.0;
    save_bench_spec(spec, ws.path("spec.json"));
    REQUIRE(run({"gen-bench", "--spec", ws.path("spec.json"), "--out",
                 ws.path("corpus.jsonl")}) == 0);
    REQUIRE(run({"build-kg", "--in", ws.path("corpus.jsonl"), "--out", ws.path("kg.nt")}) == 0);
    REQUIRE(run({"embed", "--in", ws.path("kg.nt"), "--out", ws.path("emb.tsv"), "--binnings",
                 ws.path("b.json"), "--walks", ws.path("w.txt"), "--dim", "8", "--epochs",
                 "1", "--walks_per_entity", "2", "--walk_length", "6"}) == 0);
    REQUIRE(run({"aggregate", "--in", ws.path("emb.tsv"), "--kg", ws.path("kg.nt"), "--out",
                 ws.path("agg.tsv")}) == 0);

    CHECK(run({"rank-dpse", "--in", ws.path("agg.tsv")}) == 1);  // --query is required
    CHECK(run({"rank-dpse", "--in", ws.path("agg.tsv"), "--query", "nope"}) == 1);
    CHECK(run({"rank-dpse", "--in", ws.path("agg.tsv"), "--query", "synth/c0/d0",
               "--strategy", "bogus"}) == 1);

    std::string out;
    CHECK(run({"rank-dpse", "--in", ws.path("agg.tsv"), "--query", "synth/c0/d0", "--out",
               ws.path("ranked.tsv")},
              &out) == 0);
    CHECK(mxtest::slurp(ws.path("ranked.tsv")) == out);

    fs::create_directories(ws.path("empty_reports"));
    CHECK(run({"report", "--in", ws.path("empty_reports")}) == 1);
    CHECK(run({"report", "--in", ws.path("no_such_dir")}) == 2);
}

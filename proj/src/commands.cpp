#include "mx/commands.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mx/aggregate.hpp"
#include "mx/binning.hpp"
#include "mx/corpus.hpp"
#include "mx/evaltasks.hpp"
#include "mx/forest.hpp"
#include "mx/kg.hpp"
#include "mx/skipgram.hpp"
#include "mx/synthbench.hpp"
#include "mx/util.hpp"
#include "mx/walks.hpp"

namespace fs = std::filesystem;

namespace mx {

namespace {

std::string trim(const std::string& s) {
    auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream stream(s);
    while (std::getline(stream, item, ',')) {
        item = trim(item);
        if (!item.empty()) parts.push_back(item);
    }
    return parts;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
    throw ValidationError("config key '" + key + "': cannot parse value '" + value + "'");
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t out = 0;
    auto res = std::from_chars(value.data(), value.data() + value.size(), out);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size()) bad_value(key, value);
    return out;
}

std::size_t parse_size(const std::string& key, const std::string& value) {
    return static_cast<std::size_t>(parse_u64(key, value));
}

int parse_int(const std::string& key, const std::string& value) {
    int out = 0;
    auto res = std::from_chars(value.data(), value.data() + value.size(), out);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size()) bad_value(key, value);
    return out;
}

double parse_real(const std::string& key, const std::string& value) {
    double out = 0;
    if (!parse_double(value, out)) bad_value(key, value);
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    bad_value(key, value);
}

std::vector<std::size_t> parse_ks(const std::string& csv) {
    std::vector<std::size_t> ks;
    for (const auto& item : split_csv(csv)) {
        auto k = parse_size("ks", item);
        if (k == 0) throw ValidationError("config key 'ks': k must be positive");
        ks.push_back(k);
    }
    if (ks.empty()) throw ValidationError("config key 'ks': no values");
    return ks;
}

std::vector<PpeScenario> parse_scenarios(const std::string& csv) {
    std::vector<PpeScenario> scenarios;
    for (const auto& item : split_csv(csv)) {
        if (item == "unseen_datasets")
            scenarios.push_back(PpeScenario::kUnseenDatasets);
        else if (item == "unseen_pipelines")
            scenarios.push_back(PpeScenario::kUnseenPipelines);
        else
            throw ValidationError("config key 'scenarios': unknown scenario '" + item + "'");
    }
    if (scenarios.empty()) throw ValidationError("config key 'scenarios': no values");
    return scenarios;
}

std::vector<MetaFeatureCategory> parse_mf_subset(const std::string& value) {
    if (value == "all" || value.empty()) return {};
    std::vector<MetaFeatureCategory> subset;
    for (const auto& item : split_csv(value)) subset.push_back(mf_category_from_string(item));
    return subset;
}

DpseStrategy strategy_from_string(const std::string& s) {
    if (s == "var") return DpseStrategy::kVar;
    if (s == "pip") return DpseStrategy::kPip;
    if (s == "comb") return DpseStrategy::kComb;
    throw ValidationError("unknown strategy '" + s + "' (expected var, pip, or comb)");
}

PpeOptions ppe_options_from(const RunConfig& config) {
    PpeOptions opt;
    opt.split_ratio = config.split_ratio;
    opt.seed = config.seed;
    opt.min_support = config.min_support;
    opt.grid_search = config.grid_search;
    opt.cv_folds = config.cv_folds;
    opt.workers = config.workers;
    opt.mf_subset = parse_mf_subset(config.mf_subset);
    return opt;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << text;
    out.flush();
    if (!out) throw IoError("write to '" + path + "' failed");
}

const std::string& pick(const std::string& override_path, const std::string& fallback) {
    return override_path.empty() ? fallback : override_path;
}

}  // namespace

const std::vector<std::string>& run_config_keys() {
    static const std::vector<std::string> keys = {
        "spec",       "corpus",    "kg",          "binnings",
        "walks",      "embeddings", "aggregates", "models",
        "reports",    "dim",       "window",      "negatives",
        "epochs",     "walks_per_entity", "walk_length", "min_count",
        "initial_lr", "bins_per_property", "lof_k", "lof_threshold",
        "metric",     "scenarios", "ks",          "similarity_threshold",
        "mf_p",       "mf_subset", "split_ratio", "min_support",
        "grid_search", "cv_folds", "timeout_ratio", "seed",
        "workers"};
    return keys;
}

void set_config_key(RunConfig& config, const std::string& key, const std::string& value) {
    if (key == "spec") config.spec = value;
    else if (key == "corpus") config.corpus = value;
    else if (key == "kg") config.kg = value;
    else if (key == "binnings") config.binnings = value;
    else if (key == "walks") config.walks = value;
    else if (key == "embeddings") config.embeddings = value;
    else if (key == "aggregates") config.aggregates = value;
    else if (key == "models") config.models = value;
    else if (key == "reports") config.reports = value;
    else if (key == "dim") config.dim = parse_size(key, value);
    else if (key == "window") config.window = parse_size(key, value);
    else if (key == "negatives") config.negatives = parse_size(key, value);
    else if (key == "epochs") config.epochs = parse_size(key, value);
    else if (key == "walks_per_entity") config.walks_per_entity = parse_size(key, value);
    else if (key == "walk_length") config.walk_length = parse_size(key, value);
    else if (key == "min_count") config.min_count = parse_size(key, value);
    else if (key == "initial_lr") config.initial_lr = parse_real(key, value);
    else if (key == "bins_per_property") config.bins_per_property = parse_size(key, value);
    else if (key == "lof_k") config.lof_k = parse_size(key, value);
    else if (key == "lof_threshold") config.lof_threshold = parse_real(key, value);
    else if (key == "metric") config.metric = value;
    else if (key == "scenarios") config.scenarios = value;
    else if (key == "ks") config.ks = value;
    else if (key == "similarity_threshold") config.similarity_threshold = parse_real(key, value);
    else if (key == "mf_p") config.mf_p = parse_real(key, value);
    else if (key == "mf_subset") config.mf_subset = value;
    else if (key == "split_ratio") config.split_ratio = parse_real(key, value);
    else if (key == "min_support") config.min_support = parse_size(key, value);
    else if (key == "grid_search") config.grid_search = parse_bool(key, value);
    else if (key == "cv_folds") config.cv_folds = parse_int(key, value);
    else if (key == "timeout_ratio") config.timeout_ratio = parse_real(key, value);
    else if (key == "seed") config.seed = parse_u64(key, value);
    else if (key == "workers") config.workers = parse_int(key, value);
    else throw ValidationError("unknown config key '" + key + "'");
    config.explicit_keys.insert(key);
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    RunConfig config;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError(path + ":" + std::to_string(lineno) +
                                  ": expected 'key = value'");
        set_config_key(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return config;
}

void cmd_gen_bench(const RunConfig& config, const CommandArgs& args, std::ostream& out) {
    BenchSpec spec;
    if (!config.spec.empty()) spec = load_bench_spec(config.spec);
    if (config.spec.empty() || config.was_set("seed")) spec.seed = config.seed;
    auto bench = generate_corpus(spec);
    for (const auto& w : bench.warnings) log_warn(w);
    if (config.timeout_ratio > 0.0) {
        auto flipped = apply_timeout_rule(bench.corpus.evaluations, bench.corpus.pipelines,
                                          config.timeout_ratio);
        log_info("timeout rule invalidated " + std::to_string(flipped) + " evaluations");
    }
    const std::string& path = pick(args.out, config.corpus);
    save_corpus(bench.corpus, path);
    out << "datasets=" << bench.corpus.datasets.size()
        << " pipelines=" << bench.corpus.pipelines.size()
        << " evaluations=" << bench.corpus.evaluations.size() << " -> " << path << "\n";
}

void cmd_build_kg(const RunConfig& config, const CommandArgs& args, std::ostream& out) {
    auto corpus = load_corpus(pick(args.in, config.corpus));
    auto kg = build_kg(corpus);
    const std::string& path = pick(args.out, config.kg);
    export_ntriples(kg, path);
    auto stats = kg_stats(kg);
    out << "entities=" << stats.entities << " predicates=" << stats.predicates
        << " triples=" << stats.triples
        << " attribute_predicates=" << stats.attribute_predicates
        << " literals=" << stats.literals << " -> " << path << "\n";
}

void cmd_embed(const RunConfig& config, const CommandArgs& args, std::ostream& out) {
    auto kg = import_ntriples(pick(args.in, config.kg));
    auto stripped = strip_performance_literals(kg);

    BinningConfig bin_config;
    bin_config.bins_per_property = config.bins_per_property;
    bin_config.lof_k = config.lof_k;
    bin_config.lof_threshold = config.lof_threshold;
    auto binnings = fit_bins(stripped, bin_config);
    save_binnings(binnings, config.binnings);
    BinApplyStats bin_stats;
    auto binned = apply_binning(stripped, binnings, &bin_stats);

    auto walks = generate_walks(binned, config.walks_per_entity, config.walk_length, config.seed);
    save_walks(walks, config.walks);

    TrainConfig train_config;
    train_config.dim = config.dim;
    train_config.window = config.window;
    train_config.negatives = config.negatives;
    train_config.epochs = config.epochs;
    train_config.walks_per_entity = config.walks_per_entity;
    train_config.walk_length = config.walk_length;
    train_config.min_count = config.min_count;
    train_config.initial_lr = config.initial_lr;
    train_config.seed = config.seed;
    train_config.workers = static_cast<std::size_t>(std::max(1, config.workers));
    TrainStats train_stats;
    auto table = train_skipgram(walks, train_config, &train_stats);
    const std::string& path = pick(args.out, config.embeddings);
    save_embeddings(table, path);

    out << "binned=" << bin_stats.replaced << " walks=" << walks.size()
        << " vocab=" << train_stats.vocab_size << " dim=" << table.dim << " final_loss="
        << repr_double(train_stats.epoch_loss.empty() ? 0.0 : train_stats.epoch_loss.back())
        << " -> " << path << "\n";
}

void cmd_aggregate(const RunConfig& config, const CommandArgs& args, std::ostream& out) {
    auto kg = import_ntriples(config.kg);
    auto table = load_embeddings(pick(args.in, config.embeddings));
    auto agg = aggregate_all(kg, table);
    const std::string& path = pick(args.out, config.aggregates);
    save_aggregated(agg, path);
    out << "pipelines=" << agg.pipelines.size() << " datasets=" << agg.datasets.size()
        << " dim=" << agg.dim << " -> " << path << "\n";
}

void cmd_train_ppe(const RunConfig& config, const CommandArgs& args, std::ostream& out) {
    auto corpus = load_corpus(config.corpus);
    auto agg = load_aggregated(pick(args.in, config.aggregates));
    auto artifacts =
        train_ppe_full(corpus, agg, Metric::parse(config.metric), ppe_options_from(config));

    const std::string& dir = pick(args.out, config.models);
    fs::create_directories(dir);
    save_model(artifacts.regression, dir + "/ppe_regression.json");
    save_model(artifacts.classification, dir + "/ppe_classification.json");
    nlohmann::json bins;
    bins["metric"] = config.metric;
    bins["b1"] = artifacts.bins.b1;
    bins["b2"] = artifacts.bins.b2;
    bins["degenerate"] = artifacts.bins.degenerate;
    bins["n_rows"] = artifacts.n_rows;
    write_text(dir + "/ppe_bins.json", bins.dump(2) + "\n");
    out << "rows=" << artifacts.n_rows << " features=" << artifacts.feature_layout.size()
        << " -> " << dir << "\n";
}

void cmd_eval_ppe(const RunConfig& config, const CommandArgs& args, std::ostream& out) {
    auto corpus = load_corpus(config.corpus);
    auto agg = load_aggregated(pick(args.in, config.aggregates));
    auto metric = Metric::parse(config.metric);
    auto options = ppe_options_from(config);

    const std::string& dir = pick(args.out, config.reports);
    fs::create_directories(dir);
    std::vector<PpeReport> reports;
    for (auto scenario : parse_scenarios(config.scenarios)) {
        auto report = run_ppe_scenario(corpus, agg, scenario, metric, options);
        write_text(dir + "/ppe_" + to_string(scenario) + ".json",
                   ppe_report_json(report).dump(2) + "\n");
        reports.push_back(std::move(report));
    }
    out << ppe_report_text(reports);
}

void cmd_rank_dpse(const RunConfig& config, const CommandArgs& args, std::ostream& out) {
    if (args.query.empty()) throw ValidationError("rank-dpse needs --query <dataset-id>");
    auto agg = load_aggregated(pick(args.in, config.aggregates));
    auto ranked = rank_dpse(args.query, agg, strategy_from_string(args.strategy));
    std::ostringstream lines;
    for (std::size_t r = 0; r < ranked.size() && r < args.topk; ++r)
        lines << (r + 1) << "\t" << ranked[r].dataset_id << "\t"
              << repr_double(ranked[r].score) << "\n";
    out << lines.str();
    if (!args.out.empty()) write_text(args.out, lines.str());
}

void cmd_eval_dpse(const RunConfig& config, const CommandArgs& args, std::ostream& out) {
    auto corpus = load_corpus(config.corpus);
    auto agg = load_aggregated(pick(args.in, config.aggregates));
    DpseOptions options;
    options.ks = parse_ks(config.ks);
    options.similarity_threshold = config.similarity_threshold;
    options.mf_p = config.mf_p;
    options.metric = Metric::parse(config.metric);
    auto report = run_dpse(corpus, agg, options);

    const std::string& dir = pick(args.out, config.reports);
    fs::create_directories(dir);
    write_text(dir + "/dpse.json", dpse_report_json(report).dump(2) + "\n");
    out << dpse_report_text(report);
}

void cmd_report(const RunConfig& config, const CommandArgs& args, std::ostream& out) {
    const std::string& dir = pick(args.in, config.reports);
    if (!fs::is_directory(dir)) throw IoError("report directory '" + dir + "' does not exist");

    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        auto name = entry.path().filename().string();
        if (name.size() > 5 && name.substr(name.size() - 5) == ".json" &&
            name != "evaluation_report.json")
            names.push_back(name);
    }
    std::sort(names.begin(), names.end());

    nlohmann::json merged;
    merged["ppe"] = nlohmann::json::array();
    merged["dpse"] = nlohmann::json::array();
    for (const auto& name : names) {
        auto parsed = nlohmann::json::parse(read_text(dir + "/" + name));
        if (name.rfind("ppe", 0) == 0)
            merged["ppe"].push_back(std::move(parsed));
        else if (name.rfind("dpse", 0) == 0)
            merged["dpse"].push_back(std::move(parsed));
        else
            log_debug("report: skipping unrecognized file " + name);
    }
    if (merged["ppe"].empty() && merged["dpse"].empty())
        throw ValidationError("no task reports to merge in '" + dir + "'");

    std::string path = args.out.empty() ? dir + "/evaluation_report.json" : args.out;
    write_text(path, merged.dump(2) + "\n");
    out << "merged " << merged["ppe"].size() << " ppe and " << merged["dpse"].size()
        << " dpse reports -> " << path << "\n";
}

int run_cli(const std::vector<std::string>& args, std::ostream& out) {
    CLI::App app{"metadata knowledge-graph toolkit for pipeline selection experiments"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "flat 'key = value' config file");

    std::map<std::string, std::string> flag_values;
    for (const auto& key : run_config_keys())
        app.add_option_function<std::string>(
            "--" + key, [&flag_values, key](const std::string& v) { flag_values[key] = v; },
            "config key " + key);

    CommandArgs cargs;
    auto with_io = [&cargs](CLI::App* sub) {
        sub->add_option("--in", cargs.in, "input path override");
        sub->add_option("--out", cargs.out, "output path override");
        sub->fallthrough();
        return sub;
    };
    auto* sub_gen = app.add_subcommand("gen-bench", "generate a synthetic experiment corpus");
    sub_gen->add_option("--out", cargs.out, "output corpus path");
    sub_gen->fallthrough();
    auto* sub_kg = with_io(app.add_subcommand("build-kg", "compile a corpus into a graph"));
    auto* sub_embed =
        with_io(app.add_subcommand("embed", "bin literals, walk the graph, train vectors"));
    auto* sub_agg =
        with_io(app.add_subcommand("aggregate", "pool token vectors per pipeline and dataset"));
    auto* sub_train =
        with_io(app.add_subcommand("train-ppe", "fit performance predictors on all pairs"));
    auto* sub_eval_ppe =
        with_io(app.add_subcommand("eval-ppe", "run the split protocols and score predictors"));
    auto* sub_rank = with_io(app.add_subcommand("rank-dpse", "rank datasets against a query"));
    sub_rank->add_option("--query", cargs.query, "query dataset id")->required();
    sub_rank->add_option("--strategy", cargs.strategy, "var, pip, or comb");
    sub_rank->add_option("--topk", cargs.topk, "rows to print");
    auto* sub_eval_dpse =
        with_io(app.add_subcommand("eval-dpse", "score similarity search against ground truth"));
    auto* sub_report =
        with_io(app.add_subcommand("report", "merge per-task reports into one file"));

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        log_msg(LogLevel::kError, e.what());
        return 1;
    }

    try {
        RunConfig config;
        std::set<std::string> file_keys;
        if (!config_path.empty()) {
            config = load_run_config(config_path);
            file_keys = config.explicit_keys;
            log_info("loaded config file " + config_path);
        }
        for (const auto& key : run_config_keys()) {
            auto it = flag_values.find(key);
            if (it == flag_values.end()) continue;
            if (file_keys.count(key))
                log_info("flag --" + key + "=" + it->second + " overrides the config file");
            set_config_key(config, key, it->second);
        }

        if (sub_gen->parsed()) cmd_gen_bench(config, cargs, out);
        else if (sub_kg->parsed()) cmd_build_kg(config, cargs, out);
        else if (sub_embed->parsed()) cmd_embed(config, cargs, out);
        else if (sub_agg->parsed()) cmd_aggregate(config, cargs, out);
        else if (sub_train->parsed()) cmd_train_ppe(config, cargs, out);
        else if (sub_eval_ppe->parsed()) cmd_eval_ppe(config, cargs, out);
        else if (sub_rank->parsed()) cmd_rank_dpse(config, cargs, out);
        else if (sub_eval_dpse->parsed()) cmd_eval_dpse(config, cargs, out);
        else if (sub_report->parsed()) cmd_report(config, cargs, out);
        return 0;
    } catch (const IoError& e) {
        log_msg(LogLevel::kError, e.what());
        return 2;
    } catch (const std::exception& e) {
        log_msg(LogLevel::kError, e.what());
        return 1;
    }
}

}  // namespace mx

#pragma once

#include <cstdint>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

namespace mx {

// One flat key per tunable. Config files assign them as `key = value` lines;
// a flag of the same name (`--key value`) beats the file, and the file beats
// the defaults below.
struct RunConfig {
    // artifact paths
    std::string spec;  // bench spec json; empty means built-in defaults
    std::string corpus = "corpus.jsonl";
    std::string kg = "kg.nt";
    std::string binnings = "binnings.json";
    std::string walks = "walks.txt";
    std::string embeddings = "embeddings.tsv";
    std::string aggregates = "aggregates.tsv";
    std::string models = "models";
    std::string reports = "reports";

    // embedding training
    std::size_t dim = 100;
    std::size_t window = 5;
    std::size_t negatives = 5;
    std::size_t epochs = 10;
    std::size_t walks_per_entity = 10;
    std::size_t walk_length = 20;
    std::size_t min_count = 0;
    double initial_lr = 0.025;

    // numeric-literal binning
    std::size_t bins_per_property = 10;
    std::size_t lof_k = 20;
    double lof_threshold = 1.5;

    // evaluation protocols
    std::string metric = "accuracy";
    std::string scenarios = "unseen_datasets,unseen_pipelines";
    std::string ks = "1,2,5";
    double similarity_threshold = 0.8;
    double mf_p = 2.0;
    std::string mf_subset = "all";
    double split_ratio = 0.7;
    std::size_t min_support = 50;
    bool grid_search = false;
    int cv_folds = 10;
    double timeout_ratio = 0.0;  // gen-bench post-pass; 0 disables

    std::uint64_t seed = 42;
    int workers = 1;

    std::set<std::string> explicit_keys;  // keys assigned by file or flag

    bool was_set(const std::string& key) const { return explicit_keys.count(key) > 0; }
};

// Recognized keys, in a fixed order. Every entry doubles as a flag name.
const std::vector<std::string>& run_config_keys();

// Assigns one key from its text form. Unknown keys and unparsable values
// raise ValidationError.
void set_config_key(RunConfig& config, const std::string& key, const std::string& value);

// `key = value` lines; '#' starts a comment, blank lines are skipped.
RunConfig load_run_config(const std::string& path);

// Subcommand arguments that are not config keys.
struct CommandArgs {
    std::string in;     // overrides the command's primary input path
    std::string out;    // overrides the command's primary output path
    std::string query;  // rank-dpse: query dataset id
    std::string strategy = "comb";
    std::size_t topk = 5;
};

void cmd_gen_bench(const RunConfig& config, const CommandArgs& args, std::ostream& out);
void cmd_build_kg(const RunConfig& config, const CommandArgs& args, std::ostream& out);
void cmd_embed(const RunConfig& config, const CommandArgs& args, std::ostream& out);
void cmd_aggregate(const RunConfig& config, const CommandArgs& args, std::ostream& out);
void cmd_train_ppe(const RunConfig& config, const CommandArgs& args, std::ostream& out);
void cmd_eval_ppe(const RunConfig& config, const CommandArgs& args, std::ostream& out);
void cmd_rank_dpse(const RunConfig& config, const CommandArgs& args, std::ostream& out);
void cmd_eval_dpse(const RunConfig& config, const CommandArgs& args, std::ostream& out);
void cmd_report(const RunConfig& config, const CommandArgs& args, std::ostream& out);

// Full command-line handling (args without the program name). Returns the
// process exit code: 0 success, 1 validation or usage failure, 2 I/O failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out);

}  // namespace mx

#include "mx/skipgram.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "mx/util.hpp"

namespace mx {

void TrainConfig::check() const {
    if (dim < 1 || window < 1 || epochs < 1 || walks_per_entity < 1 || walk_length < 1)
        throw ValidationError("train config values must be positive");
    if (initial_lr <= 0) throw ValidationError("initial_lr must be positive");
    if (workers < 1) throw ValidationError("workers must be >= 1");
}

std::span<const double> EmbeddingTable::vec(const std::string& token) const {
    auto it = index.find(token);
    if (it == index.end()) throw ValidationError("token not in embedding vocabulary: " + token);
    return row(it->second);
}

namespace {

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

// ln(1 + e^x) without overflow.
double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

}  // namespace

double sg_pair_loss_grad(std::span<const double> center, std::span<const double> context,
                         int label, std::span<double> grad_center,
                         std::span<double> grad_context) {
    if (center.size() != context.size() || center.size() != grad_center.size() ||
        center.size() != grad_context.size())
        throw ValidationError("sg_pair_loss_grad: dimension mismatch");
    double s = 0;
    for (std::size_t i = 0; i < center.size(); ++i) s += center[i] * context[i];
    // loss = -label ln σ(s) - (1-label) ln σ(-s); dloss/ds = σ(s) - label
    double coeff = sigmoid(s) - static_cast<double>(label);
    for (std::size_t i = 0; i < center.size(); ++i) {
        grad_center[i] = coeff * context[i];
        grad_context[i] = coeff * center[i];
    }
    return label ? softplus(-s) : softplus(s);
}

namespace {

struct NoiseTable {
    std::vector<double> cumulative;  // over vocab order, weights count^0.75

    std::size_t sample(Rng& rng) const {
        double r = rng.next_real() * cumulative.back();
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
        if (it == cumulative.end()) --it;
        return static_cast<std::size_t>(it - cumulative.begin());
    }
};

struct Shared {
    std::size_t dim;
    std::vector<double> input;
    std::vector<double> output;
    NoiseTable noise;
    const std::vector<std::vector<std::uint32_t>>* encoded;
    std::size_t total_pairs_all_epochs;
    double lr0, lr_min;
    std::atomic<std::uint64_t> pair_counter{0};
};

// One worker's pass over its walk shard for one epoch. Returns (loss sum,
// positive pair count).
std::pair<double, std::size_t> run_shard(Shared& sh, const TrainConfig& cfg,
                                         std::size_t worker, Rng& rng) {
    const std::size_t dim = sh.dim;
    std::vector<double> neu1e(dim);
    double loss_sum = 0;
    std::size_t pairs = 0;

    for (std::size_t wi = worker; wi < sh.encoded->size(); wi += cfg.workers) {
        const auto& toks = (*sh.encoded)[wi];
        for (std::size_t i = 0; i < toks.size(); ++i) {
            std::size_t lo = i >= cfg.window ? i - cfg.window : 0;
            std::size_t hi = std::min(toks.size(), i + cfg.window + 1);
            for (std::size_t j = lo; j < hi; ++j) {
                if (j == i) continue;
                std::uint64_t t = sh.pair_counter.fetch_add(1, std::memory_order_relaxed);
                double frac = static_cast<double>(t) /
                              static_cast<double>(sh.total_pairs_all_epochs);
                double lr = std::max(sh.lr0 - (sh.lr0 - sh.lr_min) * frac, sh.lr_min);

                const std::uint32_t c = toks[i];
                const std::uint32_t o = toks[j];
                double* u = sh.input.data() + static_cast<std::size_t>(c) * dim;
                std::fill(neu1e.begin(), neu1e.end(), 0.0);
                for (std::size_t d = 0; d <= cfg.negatives; ++d) {
                    std::size_t target;
                    int label;
                    if (d == 0) {
                        target = o;
                        label = 1;
                    } else {
                        target = sh.noise.sample(rng);
                        if (target == o) continue;
                        label = 0;
                    }
                    double* v = sh.output.data() + target * dim;
                    double s = 0;
                    for (std::size_t k = 0; k < dim; ++k) s += u[k] * v[k];
                    loss_sum += label ? softplus(-s) : softplus(s);
                    double g = (static_cast<double>(label) - sigmoid(s)) * lr;
                    for (std::size_t k = 0; k < dim; ++k) neu1e[k] += g * v[k];
                    for (std::size_t k = 0; k < dim; ++k) v[k] += g * u[k];
                }
                for (std::size_t k = 0; k < dim; ++k) u[k] += neu1e[k];
                ++pairs;
            }
        }
    }
    return {loss_sum, pairs};
}

}  // namespace

EmbeddingTable train_skipgram(const std::vector<Walk>& walks, const TrainConfig& config,
                              TrainStats* stats) {
    config.check();
    if (walks.empty()) throw ValidationError("empty walk corpus");

    // Vocabulary: every token with count >= min_count, sorted.
    std::map<std::string, std::size_t> counts;
    for (const auto& w : walks)
        for (const auto& t : w.tokens) ++counts[t];
    EmbeddingTable table;
    table.dim = config.dim;
    for (const auto& [tok, n] : counts)
        if (n >= config.min_count) table.vocab.push_back(tok);
    if (table.vocab.empty()) throw ValidationError("empty vocabulary after min_count filter");
    table.index.reserve(table.vocab.size());
    for (std::size_t i = 0; i < table.vocab.size(); ++i) table.index[table.vocab[i]] = i;

    // Below-min_count tokens drop out of the stream before windowing.
    std::vector<std::vector<std::uint32_t>> encoded;
    encoded.reserve(walks.size());
    std::size_t pairs_per_epoch = 0;
    for (const auto& w : walks) {
        std::vector<std::uint32_t> toks;
        toks.reserve(w.tokens.size());
        for (const auto& t : w.tokens) {
            auto it = table.index.find(t);
            if (it != table.index.end()) toks.push_back(static_cast<std::uint32_t>(it->second));
        }
        for (std::size_t i = 0; i < toks.size(); ++i) {
            std::size_t lo = i >= config.window ? i - config.window : 0;
            std::size_t hi = std::min(toks.size(), i + config.window + 1);
            pairs_per_epoch += hi - lo - 1;
        }
        encoded.push_back(std::move(toks));
    }

    Shared sh;
    sh.dim = config.dim;
    sh.encoded = &encoded;
    sh.lr0 = config.initial_lr;
    sh.lr_min = config.initial_lr * 1e-4;
    sh.total_pairs_all_epochs = std::max<std::size_t>(pairs_per_epoch * config.epochs, 1);
    sh.input.resize(table.vocab.size() * config.dim);
    sh.output.assign(table.vocab.size() * config.dim, 0.0);
    Rng init_rng(derive_seed(config.seed, 0xA11CE));
    double half = 0.5 / static_cast<double>(config.dim);
    for (auto& x : sh.input) x = init_rng.next_real(-half, half);

    sh.noise.cumulative.resize(table.vocab.size());
    double acc = 0;
    for (std::size_t i = 0; i < table.vocab.size(); ++i) {
        acc += std::pow(static_cast<double>(counts.at(table.vocab[i])), 0.75);
        sh.noise.cumulative[i] = acc;
    }

    TrainStats local;
    local.pairs_per_epoch = pairs_per_epoch;
    local.vocab_size = table.vocab.size();

    if (config.workers == 1) {
        Rng rng(derive_seed(config.seed, 0xC0FFEE));
        for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
            auto [loss, pairs] = run_shard(sh, config, 0, rng);
            local.epoch_loss.push_back(pairs ? loss / static_cast<double>(pairs) : 0.0);
        }
    } else {
        for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
            std::vector<std::thread> threads;
            std::vector<std::pair<double, std::size_t>> results(config.workers);
            for (std::size_t w = 0; w < config.workers; ++w) {
                threads.emplace_back([&, w] {
                    Rng rng(derive_seed(config.seed, 0xC0FFEE + 31 * w + epoch));
                    results[w] = run_shard(sh, config, w, rng);
                });
            }
            for (auto& t : threads) t.join();
            double loss = 0;
            std::size_t pairs = 0;
            for (auto& [l, p] : results) {
                loss += l;
                pairs += p;
            }
            local.epoch_loss.push_back(pairs ? loss / static_cast<double>(pairs) : 0.0);
        }
    }

    table.input = std::move(sh.input);
    table.output = std::move(sh.output);
    if (stats) *stats = std::move(local);
    return table;
}

double cosine(std::span<const double> a, std::span<const double> b, bool* degenerate) {
    if (a.size() != b.size()) throw ValidationError("cosine: dimension mismatch");
    if (degenerate) *degenerate = false;
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0 || nb == 0) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

void save_embeddings(const EmbeddingTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "dim=" << table.dim << '\n';
    for (std::size_t i = 0; i < table.vocab.size(); ++i) {
        out << table.vocab[i];
        auto v = table.row(i);
        for (double x : v) out << '\t' << repr_double_9sig(x);
        out << '\n';
    }
    if (!out) throw IoError("write to '" + path + "' failed");
}

EmbeddingTable load_embeddings(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || !line.starts_with("dim="))
        throw ValidationError(path + ":1: expected dim=<d> header");
    EmbeddingTable table;
    double dim_val = 0;
    if (!parse_double(line.substr(4), dim_val) || dim_val < 1)
        throw ValidationError(path + ":1: bad dimension");
    table.dim = static_cast<std::size_t>(dim_val);

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string tok;
        if (!std::getline(ss, tok, '\t'))
            throw ValidationError(path + ":" + std::to_string(line_no) + ": missing token");
        std::string field;
        std::vector<double> vals;
        while (std::getline(ss, field, '\t')) {
            double v = 0;
            if (!parse_double(field, v))
                throw ValidationError(path + ":" + std::to_string(line_no) + ": bad number '" +
                                      field + "'");
            vals.push_back(v);
        }
        if (vals.size() != table.dim)
            throw ValidationError(path + ":" + std::to_string(line_no) + ": expected " +
                                  std::to_string(table.dim) + " components, got " +
                                  std::to_string(vals.size()));
        table.index[tok] = table.vocab.size();
        table.vocab.push_back(tok);
        table.input.insert(table.input.end(), vals.begin(), vals.end());
    }
    table.output.assign(table.input.size(), 0.0);
    return table;
}

}  // namespace mx

#include "mx/binning.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "json.hpp"
#include "mx/util.hpp"

namespace mx {

using nlohmann::json;

std::vector<double> lof_scores_1d(const std::vector<double>& values, std::size_t k) {
    const std::size_t n = values.size();
    if (k < 1) throw ValidationError("lof needs k >= 1");
    if (n < k + 1) throw ValidationError("lof needs at least k+1 values");
    constexpr double kInf = std::numeric_limits<double>::infinity();

    // k-distance and neighborhood per point (all points within k-distance,
    // self excluded).
    std::vector<double> kdist(n);
    std::vector<std::vector<std::size_t>> nbrs(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> d;
        d.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) d.push_back(std::abs(values[i] - values[j]));
        std::nth_element(d.begin(), d.begin() + (k - 1), d.end());
        kdist[i] = d[k - 1];
        for (std::size_t j = 0; j < n; ++j)
            if (j != i && std::abs(values[i] - values[j]) <= kdist[i]) nbrs[i].push_back(j);
    }

    // Local reachability density; a neighborhood at distance zero means
    // infinite density.
    std::vector<double> lrd(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0;
        for (std::size_t j : nbrs[i]) sum += std::max(kdist[j], std::abs(values[i] - values[j]));
        lrd[i] = sum == 0 ? kInf : static_cast<double>(nbrs[i].size()) / sum;
    }

    std::vector<double> lof(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0;
        for (std::size_t j : nbrs[i]) {
            if (std::isinf(lrd[j]) && std::isinf(lrd[i])) sum += 1.0;
            else if (std::isinf(lrd[i])) sum += 0.0;
            else if (std::isinf(lrd[j])) { sum = kInf; break; }
            else sum += lrd[j] / lrd[i];
        }
        lof[i] = std::isinf(sum) ? kInf : sum / static_cast<double>(nbrs[i].size());
    }
    return lof;
}

BinningMap fit_bins(const KnowledgeGraph& kg, const BinningConfig& config) {
    if (config.bins_per_property < 1) throw ValidationError("bins_per_property must be >= 1");
    std::map<std::string, std::vector<double>> per_pred;
    for (const auto& t : kg.triples)
        if (t.object.is_literal && t.object.lit.type == Literal::kNumber)
            per_pred[t.predicate].push_back(t.object.lit.number);

    BinningMap out;
    for (auto& [predicate, values] : per_pred) {
        PropertyBinning b;
        b.predicate = predicate;

        std::vector<double> kept = values;
        if (values.size() >= config.lof_k + 1) {
            auto lof = lof_scores_1d(values, config.lof_k);
            std::set<double> deleted;
            kept.clear();
            for (std::size_t i = 0; i < values.size(); ++i) {
                if (lof[i] > config.lof_threshold) deleted.insert(values[i]);
                else kept.push_back(values[i]);
            }
            if (kept.empty()) {
                // Nothing survived; keep everything rather than fitting a
                // binning with no range.
                log_warn("lof deleted every value under " + predicate + "; keeping all");
                kept = values;
                deleted.clear();
            }
            b.deleted_values.assign(deleted.begin(), deleted.end());
        }

        auto [mn, mx_] = std::minmax_element(kept.begin(), kept.end());
        b.kept_min = *mn;
        b.kept_max = *mx_;
        if (b.kept_min == b.kept_max) {
            b.bin_count = 1;
            b.edges = {b.kept_min, b.kept_max};
        } else {
            b.bin_count = config.bins_per_property;
            b.edges.resize(b.bin_count + 1);
            double width = (b.kept_max - b.kept_min) / static_cast<double>(b.bin_count);
            for (std::size_t i = 0; i <= b.bin_count; ++i)
                b.edges[i] = b.kept_min + width * static_cast<double>(i);
            b.edges.back() = b.kept_max;  // guard against rounding drift
        }
        out[predicate] = std::move(b);
    }
    return out;
}

std::size_t bin_index(const PropertyBinning& b, double value, bool* clamped) {
    if (clamped) *clamped = false;
    if (b.bin_count == 1) {
        if (clamped && value != b.kept_min) *clamped = true;
        return 0;
    }
    if (value <= b.kept_min) {
        if (clamped && value < b.kept_min) *clamped = true;
        return 0;
    }
    if (value >= b.kept_max) {
        if (clamped && value > b.kept_max) *clamped = true;
        return b.bin_count - 1;
    }
    double width = (b.kept_max - b.kept_min) / static_cast<double>(b.bin_count);
    auto idx = static_cast<std::size_t>((value - b.kept_min) / width);
    if (idx >= b.bin_count) idx = b.bin_count - 1;
    // Floating division can land one bin off the edge list; nudge to match.
    if (value < b.edges[idx] && idx > 0) --idx;
    else if (value > b.edges[idx + 1] && idx + 1 < b.bin_count) ++idx;
    return idx;
}

namespace {

std::string predicate_localname(const std::string& predicate) {
    auto pos = predicate.find(':');
    return pos == std::string::npos ? predicate : predicate.substr(pos + 1);
}

}  // namespace

KnowledgeGraph apply_binning(const KnowledgeGraph& kg, const BinningMap& binnings,
                             BinApplyStats* stats) {
    BinApplyStats local;
    KnowledgeGraph out;
    out.node_type = kg.node_type;
    for (const auto& t : kg.triples) {
        if (!t.object.is_literal || t.object.lit.type != Literal::kNumber) {
            out.triples.push_back(t);
            continue;
        }
        auto it = binnings.find(t.predicate);
        if (it == binnings.end()) {
            out.triples.push_back(t);
            continue;
        }
        const PropertyBinning& b = it->second;
        double v = t.object.lit.number;
        if (std::binary_search(b.deleted_values.begin(), b.deleted_values.end(), v)) {
            ++local.removed;
            continue;
        }
        bool clamped = false;
        std::size_t idx = bin_index(b, v, &clamped);
        if (clamped) ++local.clamped;
        std::string bin = bin_iri(predicate_localname(t.predicate), idx);
        out.node_type[bin] = NodeType::kOther;
        out.triples.push_back({t.subject, t.predicate, Term::node(bin)});
        ++local.replaced;
    }
    out.canonicalize();
    if (stats) *stats = local;
    return out;
}

void save_binnings(const BinningMap& binnings, const std::string& path) {
    json j = json::object();
    for (const auto& [predicate, b] : binnings) {
        json e;
        e["bin_count"] = b.bin_count;
        e["edges"] = b.edges;
        e["kept_range"] = {b.kept_min, b.kept_max};
        e["deleted_values"] = b.deleted_values;
        j[predicate] = e;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

BinningMap load_binnings(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ValidationError(path + ": " + e.what());
    }
    BinningMap out;
    for (const auto& [predicate, e] : j.items()) {
        PropertyBinning b;
        b.predicate = predicate;
        b.bin_count = e.at("bin_count").get<std::size_t>();
        b.edges = e.at("edges").get<std::vector<double>>();
        auto range = e.at("kept_range").get<std::vector<double>>();
        if (range.size() != 2) throw ValidationError("kept_range must have two entries");
        b.kept_min = range[0];
        b.kept_max = range[1];
        b.deleted_values = e.at("deleted_values").get<std::vector<double>>();
        if (b.edges.size() != b.bin_count + 1)
            throw ValidationError("edges length must be bin_count+1 under " + predicate);
        out[predicate] = std::move(b);
    }
    return out;
}

}  // namespace mx

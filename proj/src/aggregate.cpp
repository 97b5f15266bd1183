#include "mx/aggregate.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "mx/util.hpp"

namespace mx {

namespace {

std::vector<double> mean_of_tokens(const EmbeddingTable& table,
                                   const std::vector<std::string>& tokens,
                                   const std::string& what) {
    std::vector<double> sum(table.dim, 0.0);
    std::size_t n = 0;
    for (const auto& tok : tokens) {
        if (!table.has(tok)) continue;
        auto v = table.vec(tok);
        for (std::size_t i = 0; i < table.dim; ++i) sum[i] += v[i];
        ++n;
    }
    if (n == 0) throw ValidationError("no embedded vectors for " + what);
    for (auto& x : sum) x /= static_cast<double>(n);
    return sum;
}

}  // namespace

PipelineEmbedding pipeline_embedding(const KnowledgeGraph& kg, const EmbeddingTable& table,
                                     const std::string& pipeline_id) {
    auto methods = pipeline_method_nodes(kg, pipeline_id);
    if (methods.empty())
        throw ValidationError("pipeline '" + pipeline_id + "' has no method nodes");
    return {pipeline_id,
            mean_of_tokens(table, methods, "methods of pipeline '" + pipeline_id + "'")};
}

std::vector<double> dataset_var_embedding(const KnowledgeGraph& kg, const EmbeddingTable& table,
                                          const std::string& dataset_id) {
    auto entities = dataset_entity_nodes(kg, dataset_id);
    if (entities.empty())
        throw ValidationError("dataset '" + dataset_id + "' has no data entities");
    return mean_of_tokens(table, entities, "data entities of dataset '" + dataset_id + "'");
}

std::optional<std::vector<double>> dataset_pip_embedding(const KnowledgeGraph& kg,
                                                         const EmbeddingTable& table,
                                                         const std::string& dataset_id) {
    auto pips = dataset_pipeline_nodes(kg, dataset_id);
    if (pips.empty()) return std::nullopt;
    std::vector<double> sum(table.dim, 0.0);
    for (const auto& pip_iri : pips) {
        // IRI back to id: the helper returned mx:pipeline/<encoded id> nodes.
        const std::string id_part = pip_iri.substr(std::string("mx:pipeline/").size());
        auto pe = pipeline_embedding(kg, table, id_part);
        for (std::size_t i = 0; i < table.dim; ++i) sum[i] += pe.vector[i];
    }
    for (auto& x : sum) x /= static_cast<double>(pips.size());
    return sum;
}

std::vector<double> dataset_comb_embedding(const std::vector<double>& de_var,
                                           const std::vector<double>& de_pip) {
    if (de_var.size() != de_pip.size())
        throw ValidationError("combined embedding needs equal dimensions");
    std::vector<double> out(de_var.size());
    for (std::size_t i = 0; i < de_var.size(); ++i) out[i] = 0.5 * (de_var[i] + de_pip[i]);
    return out;
}

AggregatedEmbeddings aggregate_all(const KnowledgeGraph& kg, const EmbeddingTable& table) {
    AggregatedEmbeddings out;
    out.dim = table.dim;

    // Collect ids from node types; IRIs are mx:<family>/<encoded id>.
    std::vector<std::string> dataset_ids, pipeline_ids;
    for (const auto& [iri, ty] : kg.node_type) {
        if (ty == NodeType::kDataset)
            dataset_ids.push_back(iri.substr(std::string("mx:dataset/").size()));
        else if (iri.starts_with("mx:pipeline/"))
            pipeline_ids.push_back(iri.substr(std::string("mx:pipeline/").size()));
    }
    std::sort(dataset_ids.begin(), dataset_ids.end());
    std::sort(pipeline_ids.begin(), pipeline_ids.end());

    for (const auto& id : pipeline_ids) out.pipelines[id] = pipeline_embedding(kg, table, id);

    for (const auto& id : dataset_ids) {
        DatasetEmbedding de;
        de.dataset_id = id;
        de.de_var = dataset_var_embedding(kg, table, id);
        de.de_pip = dataset_pip_embedding(kg, table, id);
        if (de.de_pip) de.de_comb = dataset_comb_embedding(de.de_var, *de.de_pip);
        out.datasets[id] = std::move(de);
    }
    return out;
}

namespace {

void write_row(std::ofstream& out, const std::string& key, const std::vector<double>& v) {
    if (key.find('\t') != std::string::npos || key.find('\n') != std::string::npos)
        throw ValidationError("aggregated key contains tab or newline: " + key);
    out << key;
    for (double x : v) out << '\t' << repr_double_9sig(x);
    out << '\n';
}

}  // namespace

void save_aggregated(const AggregatedEmbeddings& agg, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "dim=" << agg.dim << '\n';
    // Map order is already sorted; datasets first, then pipelines.
    for (const auto& [id, de] : agg.datasets) {
        write_row(out, "dataset:" + id + ":var", de.de_var);
        if (de.de_pip) write_row(out, "dataset:" + id + ":pip", *de.de_pip);
        if (de.de_comb) write_row(out, "dataset:" + id + ":comb", *de.de_comb);
    }
    for (const auto& [id, pe] : agg.pipelines) write_row(out, "pipeline:" + id, pe.vector);
    if (!out) throw IoError("write to '" + path + "' failed");
}

AggregatedEmbeddings load_aggregated(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || !line.starts_with("dim="))
        throw ValidationError(path + ":1: expected dim=<d> header");
    AggregatedEmbeddings agg;
    double dim_val = 0;
    if (!parse_double(line.substr(4), dim_val) || dim_val < 1)
        throw ValidationError(path + ":1: bad dimension");
    agg.dim = static_cast<std::size_t>(dim_val);

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string key, field;
        std::getline(ss, key, '\t');
        std::vector<double> vals;
        while (std::getline(ss, field, '\t')) {
            double v = 0;
            if (!parse_double(field, v))
                throw ValidationError(path + ":" + std::to_string(line_no) + ": bad number");
            vals.push_back(v);
        }
        if (vals.size() != agg.dim)
            throw ValidationError(path + ":" + std::to_string(line_no) +
                                  ": wrong component count");
        if (key.starts_with("pipeline:")) {
            std::string id = key.substr(9);
            agg.pipelines[id] = {id, std::move(vals)};
        } else if (key.starts_with("dataset:")) {
            std::string rest = key.substr(8);
            auto pos = rest.rfind(':');
            if (pos == std::string::npos)
                throw ValidationError(path + ":" + std::to_string(line_no) +
                                      ": dataset key lacks a view suffix");
            std::string id = rest.substr(0, pos);
            std::string view = rest.substr(pos + 1);
            auto& de = agg.datasets[id];
            de.dataset_id = id;
            if (view == "var") de.de_var = std::move(vals);
            else if (view == "pip") de.de_pip = std::move(vals);
            else if (view == "comb") de.de_comb = std::move(vals);
            else
                throw ValidationError(path + ":" + std::to_string(line_no) +
                                      ": unknown view '" + view + "'");
        } else {
            throw ValidationError(path + ":" + std::to_string(line_no) + ": unknown key '" +
                                  key + "'");
        }
    }
    return agg;
}

}  // namespace mx

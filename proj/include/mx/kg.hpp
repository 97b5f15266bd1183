#pragma once

// Knowledge graph built from an experiment corpus: typed nodes, a fixed
// 12-predicate vocabulary, and an N-Triples-style serialization. Triples are
// kept canonically sorted and duplicate-free so equal corpora produce
// byte-equal exports.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mx/corpus.hpp"

namespace mx {

enum class NodeType { kDataset, kDataEntity, kTask, kMethod, kHyperparameter, kMetaFeature, kOther };

namespace pred {
inline const std::string kBelongsTo = "mx:belongsTo";
inline const std::string kHasMetaFeature = "mx:hasMetaFeature";
inline const std::string kHasValue = "mx:hasValue";
inline const std::string kEvaluatedOn = "mx:evaluatedOn";
inline const std::string kHasTask = "mx:hasTask";
inline const std::string kHasNextTask = "mx:hasNextTask";
inline const std::string kImplements = "mx:implements";
inline const std::string kHasParameter = "mx:hasParameter";
inline const std::string kHasInput = "mx:hasInput";
inline const std::string kHasOutput = "mx:hasOutput";
inline const std::string kHasTag = "mx:hasTag";
inline const std::string kHasPerformanceValue = "mx:hasPerformanceValue";

/// All twelve, sorted.
const std::vector<std::string>& vocabulary();
}  // namespace pred

struct Literal {
    enum Type { kNumber, kString, kBoolean };
    Type type = kString;
    double number = 0.0;
    std::string text;
    bool flag = false;

    static Literal num(double v);
    static Literal str(std::string s);
    static Literal boolean(bool b);

    /// Plain token form, also used in walks ("0.25", "StandardScaler", "true").
    std::string lexical() const;

    bool operator==(const Literal& rhs) const;
    bool operator<(const Literal& rhs) const;
};

/// Object position of a triple: an entity IRI or a literal.
struct Term {
    bool is_literal = false;
    std::string iri;
    Literal lit;

    static Term node(std::string iri);
    static Term literal(Literal l);

    std::string token() const { return is_literal ? lit.lexical() : iri; }

    bool operator==(const Term& rhs) const;
    bool operator<(const Term& rhs) const;
};

struct Triple {
    std::string subject;
    std::string predicate;
    Term object;

    bool operator==(const Triple& rhs) const;
    bool operator<(const Triple& rhs) const;
};

struct KnowledgeGraph {
    // Sorted and unique once canonicalize() has run; build_kg, apply_binning
    // and import_ntriples all return canonical graphs.
    std::vector<Triple> triples;
    std::map<std::string, NodeType> node_type;

    void add(Triple t) { triples.push_back(std::move(t)); }
    void canonicalize();

    /// Sorted distinct IRIs appearing in subject or object position.
    std::vector<std::string> entities() const;

    /// Objects of (subject, predicate, ?) via binary search; canonical only.
    std::vector<Term> objects_of(const std::string& subject, const std::string& predicate) const;
};

// IRI builders, one per node family. The family prefix doubles as the node
// type marker when a graph is read back from disk.
std::string dataset_iri(const std::string& dataset_id);
std::string dataentity_iri(const std::string& dataset_id, const std::string& variable);
std::string metafeature_iri(const std::string& dataset_id, const std::string& feature);
std::string pipeline_iri(const std::string& pipeline_id);
std::string task_iri(const std::string& pipeline_id, int step);
std::string method_iri(const std::string& operator_name, const std::string& pipeline_id, int step);
std::string hyperparam_iri(const std::string& pipeline_id, int step, const std::string& name);
std::string bin_iri(const std::string& predicate_localname, std::size_t index);

NodeType node_type_from_iri(const std::string& iri);

/// Corpus → graph. Datasets contribute Dataset/DataEntity/MetaFeature nodes
/// with their literals; pipelines contribute Pipeline/Task/Method/
/// Hyperparameter nodes, the task chain, first-task inputs (feature data
/// entities) and last-task output (the target). A pipeline's
/// source_performance becomes its mx:hasPerformanceValue literal; benchmark
/// evaluation records never enter the graph.
KnowledgeGraph build_kg(const ExperimentCorpus& corpus);

/// Drops every mx:hasPerformanceValue triple; everything else is untouched.
KnowledgeGraph strip_performance_literals(const KnowledgeGraph& kg);

/// One triple per line, canonically sorted; import ∘ export is the identity.
void export_ntriples(const KnowledgeGraph& kg, const std::string& path);
KnowledgeGraph import_ntriples(const std::string& path);

struct KgStats {
    std::size_t entities = 0;
    std::size_t predicates = 0;
    std::size_t triples = 0;
    std::size_t attribute_predicates = 0;  // predicates with at least one literal object
    std::size_t literals = 0;              // distinct literal values
};

KgStats kg_stats(const KnowledgeGraph& kg);

/// Method nodes of a pipeline (those implementing its tasks), sorted.
std::vector<std::string> pipeline_method_nodes(const KnowledgeGraph& kg,
                                               const std::string& pipeline_id);

/// DataEntity nodes of a dataset, sorted.
std::vector<std::string> dataset_entity_nodes(const KnowledgeGraph& kg,
                                              const std::string& dataset_id);

/// Pipeline nodes linked to a dataset via mx:evaluatedOn, sorted.
std::vector<std::string> dataset_pipeline_nodes(const KnowledgeGraph& kg,
                                                const std::string& dataset_id);

}  // namespace mx

#include "mx/kg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

#include "mx/util.hpp"

namespace mx {

namespace pred {
const std::vector<std::string>& vocabulary() {
    static const std::vector<std::string> v = [] {
        std::vector<std::string> p = {kBelongsTo, kHasMetaFeature, kHasValue, kEvaluatedOn,
                                      kHasTask, kHasNextTask, kImplements, kHasParameter,
                                      kHasInput, kHasOutput, kHasTag, kHasPerformanceValue};
        std::sort(p.begin(), p.end());
        return p;
    }();
    return v;
}
}  // namespace pred

Literal Literal::num(double v) {
    if (!std::isfinite(v)) throw ValidationError("literal numbers must be finite");
    Literal l;
    l.type = kNumber;
    l.number = v;
    return l;
}

Literal Literal::str(std::string s) {
    Literal l;
    l.type = kString;
    l.text = std::move(s);
    return l;
}

Literal Literal::boolean(bool b) {
    Literal l;
    l.type = kBoolean;
    l.flag = b;
    return l;
}

std::string Literal::lexical() const {
    switch (type) {
        case kNumber: return repr_double(number);
        case kString: return text;
        case kBoolean: return flag ? "true" : "false";
    }
    throw Error("bad Literal type");
}

bool Literal::operator==(const Literal& rhs) const {
    if (type != rhs.type) return false;
    switch (type) {
        case kNumber: return number == rhs.number;
        case kString: return text == rhs.text;
        case kBoolean: return flag == rhs.flag;
    }
    return false;
}

bool Literal::operator<(const Literal& rhs) const {
    if (type != rhs.type) return type < rhs.type;
    switch (type) {
        case kNumber: return number < rhs.number;
        case kString: return text < rhs.text;
        case kBoolean: return flag < rhs.flag;
    }
    return false;
}

Term Term::node(std::string iri) {
    Term t;
    t.is_literal = false;
    t.iri = std::move(iri);
    return t;
}

Term Term::literal(Literal l) {
    Term t;
    t.is_literal = true;
    t.lit = std::move(l);
    return t;
}

bool Term::operator==(const Term& rhs) const {
    if (is_literal != rhs.is_literal) return false;
    return is_literal ? lit == rhs.lit : iri == rhs.iri;
}

bool Term::operator<(const Term& rhs) const {
    if (is_literal != rhs.is_literal) return is_literal < rhs.is_literal;  // IRIs before literals
    return is_literal ? lit < rhs.lit : iri < rhs.iri;
}

bool Triple::operator==(const Triple& rhs) const {
    return subject == rhs.subject && predicate == rhs.predicate && object == rhs.object;
}

bool Triple::operator<(const Triple& rhs) const {
    if (subject != rhs.subject) return subject < rhs.subject;
    if (predicate != rhs.predicate) return predicate < rhs.predicate;
    return object < rhs.object;
}

void KnowledgeGraph::canonicalize() {
    std::sort(triples.begin(), triples.end());
    triples.erase(std::unique(triples.begin(), triples.end()), triples.end());
}

std::vector<std::string> KnowledgeGraph::entities() const {
    std::set<std::string> seen;
    for (const auto& t : triples) {
        seen.insert(t.subject);
        if (!t.object.is_literal) seen.insert(t.object.iri);
    }
    return {seen.begin(), seen.end()};
}

std::vector<Term> KnowledgeGraph::objects_of(const std::string& subject,
                                             const std::string& predicate) const {
    Triple lo{subject, predicate, Term::node("")};
    auto it = std::lower_bound(triples.begin(), triples.end(), lo);
    std::vector<Term> out;
    for (; it != triples.end() && it->subject == subject && it->predicate == predicate; ++it)
        out.push_back(it->object);
    return out;
}

// ---- IRIs ------------------------------------------------------------------

std::string dataset_iri(const std::string& id) { return "mx:dataset/" + iri_encode(id); }

std::string dataentity_iri(const std::string& id, const std::string& variable) {
    return "mx:dataentity/" + iri_encode(id) + "/" + iri_encode(variable);
}

std::string metafeature_iri(const std::string& id, const std::string& feature) {
    return "mx:metafeature/" + iri_encode(id) + "/" + iri_encode(feature);
}

std::string pipeline_iri(const std::string& id) { return "mx:pipeline/" + iri_encode(id); }

std::string task_iri(const std::string& id, int step) {
    return "mx:task/" + iri_encode(id) + "/step" + std::to_string(step);
}

std::string method_iri(const std::string& op, const std::string& id, int step) {
    return "mx:method/" + iri_encode(op) + "/" + iri_encode(id) + "/step" + std::to_string(step);
}

std::string hyperparam_iri(const std::string& id, int step, const std::string& name) {
    return "mx:hyperparam/" + iri_encode(id) + "/step" + std::to_string(step) + "/" +
           iri_encode(name);
}

std::string bin_iri(const std::string& predicate_localname, std::size_t index) {
    return "mx:bin/" + iri_encode(predicate_localname) + "/" + std::to_string(index);
}

NodeType node_type_from_iri(const std::string& iri) {
    if (iri.starts_with("mx:dataset/")) return NodeType::kDataset;
    if (iri.starts_with("mx:dataentity/")) return NodeType::kDataEntity;
    if (iri.starts_with("mx:task/")) return NodeType::kTask;
    if (iri.starts_with("mx:method/")) return NodeType::kMethod;
    if (iri.starts_with("mx:hyperparam/")) return NodeType::kHyperparameter;
    if (iri.starts_with("mx:metafeature/")) return NodeType::kMetaFeature;
    return NodeType::kOther;
}

// ---- construction ----------------------------------------------------------

KnowledgeGraph build_kg(const ExperimentCorpus& corpus) {
    validate_corpus(corpus);
    KnowledgeGraph kg;

    auto touch = [&](const std::string& iri) { kg.node_type[iri] = node_type_from_iri(iri); };

    for (const auto& d : corpus.datasets) {
        const std::string ds = dataset_iri(d.id);
        touch(ds);
        if (!d.name.empty()) kg.add({ds, pred::kHasValue, Term::literal(Literal::str(d.name))});
        if (!d.description.empty())
            kg.add({ds, pred::kHasValue, Term::literal(Literal::str(d.description))});
        for (const auto& tag : d.tags)
            kg.add({ds, pred::kHasTag, Term::literal(Literal::str(tag))});
        kg.add({ds, pred::kHasTag, Term::literal(Literal::str(to_string(d.task_kind)))});

        for (const auto& v : d.variables) {
            const std::string de = dataentity_iri(d.id, v.name);
            touch(de);
            kg.add({de, pred::kBelongsTo, Term::node(ds)});
            // The variable name literal is what lets datasets with shared
            // vocabularies meet in walk space.
            kg.add({de, pred::kHasValue, Term::literal(Literal::str(v.name))});
            kg.add({de, pred::kHasTag, Term::literal(Literal::str(to_string(v.kind)))});
            kg.add({de, pred::kHasTag, Term::literal(Literal::str(to_string(v.role)))});
        }

        if (d.meta_features) {
            const auto& mf = *d.meta_features;
            for (std::size_t i = 0; i < mf.names.size(); ++i) {
                if (std::isnan(mf.values[i])) continue;  // unimputed hole, not a fact
                const std::string node = metafeature_iri(d.id, mf.names[i]);
                touch(node);
                kg.add({ds, pred::kHasMetaFeature, Term::node(node)});
                kg.add({node, pred::kHasValue, Term::literal(Literal::num(mf.values[i]))});
                kg.add({node, pred::kHasTag, Term::literal(Literal::str(mf.names[i]))});
            }
        }
    }

    for (const auto& p : corpus.pipelines) {
        const std::string pip = pipeline_iri(p.id);
        touch(pip);
        kg.add({pip, pred::kEvaluatedOn, Term::node(dataset_iri(p.origin_dataset))});
        if (p.source_performance)
            kg.add({pip, pred::kHasPerformanceValue,
                    Term::literal(Literal::num(*p.source_performance))});

        const DatasetDescriptor* origin = corpus.find_dataset(p.origin_dataset);
        std::string prev_task;
        for (const auto& s : p.steps) {
            const std::string task = task_iri(p.id, s.position);
            const std::string method = method_iri(s.operator_name, p.id, s.position);
            touch(task);
            touch(method);
            kg.add({pip, pred::kHasTask, Term::node(task)});
            kg.add({task, pred::kHasTag, Term::literal(Literal::str(to_string(s.step_kind)))});
            if (!prev_task.empty()) kg.add({prev_task, pred::kHasNextTask, Term::node(task)});
            prev_task = task;

            kg.add({method, pred::kImplements, Term::node(task)});
            kg.add({method, pred::kHasValue, Term::literal(Literal::str(s.operator_name))});

            for (const auto& h : s.hyperparameters) {
                const std::string hp = hyperparam_iri(p.id, s.position, h.name);
                touch(hp);
                kg.add({method, pred::kHasParameter, Term::node(hp)});
                kg.add({hp, pred::kHasTag, Term::literal(Literal::str(h.name))});
                if (std::holds_alternative<double>(h.value))
                    kg.add({hp, pred::kHasValue, Term::literal(Literal::num(std::get<double>(h.value)))});
                else if (std::holds_alternative<std::string>(h.value))
                    kg.add({hp, pred::kHasValue, Term::literal(Literal::str(std::get<std::string>(h.value)))});
                else if (std::holds_alternative<bool>(h.value))
                    kg.add({hp, pred::kHasValue, Term::literal(Literal::boolean(std::get<bool>(h.value)))});
                // null-valued hyperparameters carry only their name tag
            }
        }

        // Feature entities feed the first task; the target leaves the last.
        if (origin != nullptr && !p.steps.empty()) {
            const std::string first = task_iri(p.id, 0);
            const std::string last = task_iri(p.id, p.steps.back().position);
            for (const auto& v : origin->variables) {
                const std::string de = dataentity_iri(origin->id, v.name);
                if (v.role == VarRole::kFeature)
                    kg.add({first, pred::kHasInput, Term::node(de)});
                else
                    kg.add({last, pred::kHasOutput, Term::node(de)});
            }
        }
    }

    kg.canonicalize();
    return kg;
}

KnowledgeGraph strip_performance_literals(const KnowledgeGraph& kg) {
    KnowledgeGraph out;
    out.node_type = kg.node_type;
    for (const auto& t : kg.triples)
        if (t.predicate != pred::kHasPerformanceValue) out.triples.push_back(t);
    out.canonicalize();
    return out;
}

// ---- serialization ---------------------------------------------------------

namespace {

std::string escape_literal(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '"': out += "\\\""; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    return out;
}

std::string term_ntriples(const Term& t) {
    if (!t.is_literal) return "<" + t.iri + ">";
    const Literal& l = t.lit;
    switch (l.type) {
        case Literal::kNumber:
            return "\"" + repr_double(l.number) + "\"^^<xsd:double>";
        case Literal::kBoolean:
            return std::string("\"") + (l.flag ? "true" : "false") + "\"^^<xsd:boolean>";
        case Literal::kString:
            return "\"" + escape_literal(l.text) + "\"";
    }
    throw Error("bad Literal type");
}

struct LineParser {
    const std::string& line;
    std::size_t pos = 0;

    explicit LineParser(const std::string& l) : line(l) {}

    void skip_ws() {
        while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    }

    std::string parse_iri() {
        skip_ws();
        if (pos >= line.size() || line[pos] != '<') throw ValidationError("expected '<'");
        std::size_t end = line.find('>', pos);
        if (end == std::string::npos) throw ValidationError("unterminated IRI");
        std::string iri = line.substr(pos + 1, end - pos - 1);
        pos = end + 1;
        if (iri.empty()) throw ValidationError("empty IRI");
        return iri;
    }

    Term parse_object() {
        skip_ws();
        if (pos < line.size() && line[pos] == '<') return Term::node(parse_iri());
        if (pos >= line.size() || line[pos] != '"')
            throw ValidationError("expected IRI or literal object");
        ++pos;
        std::string text;
        while (pos < line.size() && line[pos] != '"') {
            char c = line[pos];
            if (c == '\\') {
                if (pos + 1 >= line.size()) throw ValidationError("dangling escape");
                char n = line[pos + 1];
                if (n == 'n') text += '\n';
                else if (n == 'r') text += '\r';
                else if (n == 't') text += '\t';
                else if (n == '"') text += '"';
                else if (n == '\\') text += '\\';
                else throw ValidationError("unknown escape sequence");
                pos += 2;
            } else {
                text += c;
                ++pos;
            }
        }
        if (pos >= line.size()) throw ValidationError("unterminated literal");
        ++pos;  // closing quote
        if (pos + 1 < line.size() && line[pos] == '^' && line[pos + 1] == '^') {
            pos += 2;
            std::string dt = parse_iri();
            if (dt == "xsd:double") {
                double v = 0;
                if (!parse_double(text, v)) throw ValidationError("bad numeric literal '" + text + "'");
                return Term::literal(Literal::num(v));
            }
            if (dt == "xsd:boolean") {
                if (text != "true" && text != "false")
                    throw ValidationError("boolean literal must be true or false");
                return Term::literal(Literal::boolean(text == "true"));
            }
            throw ValidationError("unknown literal datatype '" + dt + "'");
        }
        return Term::literal(Literal::str(text));
    }

    void expect_dot() {
        skip_ws();
        if (pos >= line.size() || line[pos] != '.') throw ValidationError("expected '.'");
        ++pos;
        skip_ws();
        if (pos != line.size()) throw ValidationError("trailing characters after '.'");
    }
};

}  // namespace

void export_ntriples(const KnowledgeGraph& kg, const std::string& path) {
    auto sorted = kg;
    sorted.canonicalize();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    for (const auto& t : sorted.triples)
        out << '<' << t.subject << "> <" << t.predicate << "> " << term_ntriples(t.object)
            << " .\n";
    if (!out) throw IoError("write to '" + path + "' failed");
}

KnowledgeGraph import_ntriples(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    KnowledgeGraph kg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            LineParser p(line);
            Triple t;
            t.subject = p.parse_iri();
            t.predicate = p.parse_iri();
            t.object = p.parse_object();
            p.expect_dot();
            kg.node_type[t.subject] = node_type_from_iri(t.subject);
            if (!t.object.is_literal)
                kg.node_type[t.object.iri] = node_type_from_iri(t.object.iri);
            kg.add(std::move(t));
        } catch (const ValidationError& e) {
            throw ValidationError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    kg.canonicalize();
    return kg;
}

KgStats kg_stats(const KnowledgeGraph& kg) {
    KgStats st;
    st.triples = kg.triples.size();
    std::set<std::string> entities, predicates, attr_preds;
    std::set<std::pair<int, std::string>> literals;
    for (const auto& t : kg.triples) {
        entities.insert(t.subject);
        predicates.insert(t.predicate);
        if (t.object.is_literal) {
            attr_preds.insert(t.predicate);
            literals.insert({static_cast<int>(t.object.lit.type), t.object.lit.lexical()});
        } else {
            entities.insert(t.object.iri);
        }
    }
    st.entities = entities.size();
    st.predicates = predicates.size();
    st.attribute_predicates = attr_preds.size();
    st.literals = literals.size();
    return st;
}

// ---- navigation helpers ----------------------------------------------------

std::vector<std::string> pipeline_method_nodes(const KnowledgeGraph& kg,
                                               const std::string& pipeline_id) {
    const std::string pip = pipeline_iri(pipeline_id);
    std::set<std::string> tasks;
    for (const auto& t : kg.objects_of(pip, pred::kHasTask))
        if (!t.is_literal) tasks.insert(t.iri);
    std::vector<std::string> methods;
    for (const auto& t : kg.triples) {
        if (t.predicate != pred::kImplements || t.object.is_literal) continue;
        if (tasks.count(t.object.iri)) methods.push_back(t.subject);
    }
    std::sort(methods.begin(), methods.end());
    return methods;
}

std::vector<std::string> dataset_entity_nodes(const KnowledgeGraph& kg,
                                              const std::string& dataset_id) {
    const std::string ds = dataset_iri(dataset_id);
    std::vector<std::string> out;
    for (const auto& t : kg.triples)
        if (t.predicate == pred::kBelongsTo && !t.object.is_literal && t.object.iri == ds)
            out.push_back(t.subject);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> dataset_pipeline_nodes(const KnowledgeGraph& kg,
                                                const std::string& dataset_id) {
    const std::string ds = dataset_iri(dataset_id);
    std::vector<std::string> out;
    for (const auto& t : kg.triples)
        if (t.predicate == pred::kEvaluatedOn && !t.object.is_literal && t.object.iri == ds)
            out.push_back(t.subject);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace mx

#include "qgraph/surgery.hpp"

#include "qgraph/errors.hpp"
#include "qgraph/graph_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

namespace qgraph {

namespace {

const PermInvariantCondition& coupled_condition_at(const ConditionMap& conditions,
                                                   const std::string& v) {
    auto it = conditions.find(v);
    if (it == conditions.end()) throw SurgeryError("vertex '" + v + "' has no condition");
    const auto* perm = std::get_if<PermInvariantCondition>(&it->second);
    if (!perm)
        throw SurgeryError("vertex '" + v +
                           "' carries a general condition; surgery endpoints must be "
                           "permutation invariant");
    if (!kind_is_coupled(perm->kind))
        throw SurgeryError("vertex '" + v + "' has decoupled '" +
                           kind_name(perm->kind) + "' conditions (no natural extension)");
    return *perm;
}

std::string fresh_id(const std::set<std::string>& taken, const std::string& prefix) {
    for (int i = 1;; ++i) {
        std::string candidate = prefix + std::to_string(i);
        if (!taken.count(candidate)) return candidate;
    }
}

std::set<std::string> edge_ids(const MetricGraph& graph) {
    std::set<std::string> ids;
    for (const Edge& e : graph.edges()) ids.insert(e.id);
    return ids;
}

std::set<std::string> vertex_ids(const MetricGraph& graph) {
    return {graph.vertices().begin(), graph.vertices().end()};
}

void validate_new_edge(double length, const EdgePotential& potential) {
    if (!(length > 0.0) || !std::isfinite(length))
        throw SurgeryError("new edge length must be positive");
    if (potential.samples.empty()) throw SurgeryError("new edge potential has no samples");
    for (double q : potential.samples)
        if (!std::isfinite(q)) throw SurgeryError("new edge potential sample is not finite");
}

/// Classification family used by the joining theorems.
enum class Family { TypeI, TypeII, TypeIIIa, TypeIIIb };

Family family_of(const PermInvariantCondition& cond, const std::string& v) {
    switch (cond.kind) {
        case ConditionKind::Kirchhoff:
        case ConditionKind::Delta:
            return Family::TypeI;
        case ConditionKind::AntiKirchhoff:
        case ConditionKind::DeltaPrime:
            return Family::TypeII;
        case ConditionKind::Type3a:
            return Family::TypeIIIa;
        case ConditionKind::Type3b:
            return Family::TypeIIIb;
        default:
            throw SurgeryError("vertex '" + v + "' has decoupled '" + kind_name(cond.kind) +
                               "' conditions; joining is undefined");
    }
}

double family_coefficient(const PermInvariantCondition& cond) {
    // Kirchhoff participates as alpha = 0, anti-Kirchhoff as beta = 0.
    if (cond.kind == ConditionKind::Kirchhoff || cond.kind == ConditionKind::AntiKirchhoff)
        return 0.0;
    return cond.coefficient;
}

}  // namespace

const char* direction_name(Direction d) {
    switch (d) {
        case Direction::NonIncreasing: return "non-increasing";
        case Direction::NonDecreasing: return "non-decreasing";
        case Direction::NoGuarantee: return "no-guarantee";
    }
    return "?";
}

SurgeryResult attach_edge(const MetricGraph& graph, const ConditionMap& conditions,
                          const std::string& v1, const std::string& v2, double length,
                          const EdgePotential& potential) {
    if (v1 == v2) throw SurgeryError("attach-edge endpoints must be distinct vertices");
    if (!graph.has_vertex(v1)) throw SurgeryError("unknown vertex '" + v1 + "'");
    if (!graph.has_vertex(v2)) throw SurgeryError("unknown vertex '" + v2 + "'");
    validate_new_edge(length, potential);

    const PermInvariantCondition c1 = coupled_condition_at(conditions, v1);
    const PermInvariantCondition c2 = coupled_condition_at(conditions, v2);

    std::vector<Edge> edges = graph.edges();
    Edge extra;
    extra.id = fresh_id(edge_ids(graph), "e");
    extra.tail = v1;
    extra.head = v2;
    extra.length = length;
    extra.potential = potential;
    edges.push_back(std::move(extra));

    SurgeryResult result;
    result.graph = MetricGraph::create(graph.vertices(), std::move(edges));
    result.conditions = conditions;
    result.conditions[v1] = natural_extension(c1, result.graph.degree(v1));
    result.conditions[v2] = natural_extension(c2, result.graph.degree(v2));
    return result;
}

SurgeryResult attach_pendant(const MetricGraph& graph, const ConditionMap& conditions,
                             const std::string& v1, double length,
                             const EdgePotential& potential,
                             const PermInvariantCondition& new_condition) {
    if (!graph.has_vertex(v1)) throw SurgeryError("unknown vertex '" + v1 + "'");
    validate_new_edge(length, potential);
    new_condition.validate();
    const PermInvariantCondition c1 = coupled_condition_at(conditions, v1);

    const std::string v2 = fresh_id(vertex_ids(graph), "p");
    std::vector<std::string> vertices = graph.vertices();
    vertices.push_back(v2);

    std::vector<Edge> edges = graph.edges();
    Edge extra;
    extra.id = fresh_id(edge_ids(graph), "e");
    extra.tail = v1;
    extra.head = v2;
    extra.length = length;
    extra.potential = potential;
    edges.push_back(std::move(extra));

    SurgeryResult result;
    result.graph = MetricGraph::create(std::move(vertices), std::move(edges));
    result.conditions = conditions;
    result.conditions[v1] = natural_extension(c1, result.graph.degree(v1));
    result.conditions[v2] = new_condition;
    return result;
}

SurgeryResult join_vertices(const MetricGraph& graph, const ConditionMap& conditions,
                            const std::string& v1, const std::string& v2) {
    if (v1 == v2) throw SurgeryError("join endpoints must be distinct vertices");
    if (!graph.has_vertex(v1)) throw SurgeryError("unknown vertex '" + v1 + "'");
    if (!graph.has_vertex(v2)) throw SurgeryError("unknown vertex '" + v2 + "'");

    auto get = [&conditions](const std::string& v) -> const PermInvariantCondition& {
        auto it = conditions.find(v);
        if (it == conditions.end()) throw SurgeryError("vertex '" + v + "' has no condition");
        const auto* perm = std::get_if<PermInvariantCondition>(&it->second);
        if (!perm)
            throw SurgeryError("vertex '" + v +
                               "' carries a general condition; joining needs permutation-"
                               "invariant conditions");
        return *perm;
    };
    const PermInvariantCondition c1 = get(v1);
    const PermInvariantCondition c2 = get(v2);
    const Family f1 = family_of(c1, v1);
    const Family f2 = family_of(c2, v2);
    if (f1 != f2)
        throw SurgeryError("cannot join '" + std::string(kind_name(c1.kind)) + "' with '" +
                           kind_name(c2.kind) + "': different condition families");

    PermInvariantCondition merged;
    switch (f1) {
        case Family::TypeI: {
            const double alpha = family_coefficient(c1) + family_coefficient(c2);
            merged = alpha == 0.0 ? PermInvariantCondition{ConditionKind::Kirchhoff, 0.0}
                                  : PermInvariantCondition{ConditionKind::Delta, alpha};
            break;
        }
        case Family::TypeII: {
            const double beta = family_coefficient(c1) + family_coefficient(c2);
            merged = beta == 0.0 ? PermInvariantCondition{ConditionKind::AntiKirchhoff, 0.0}
                                 : PermInvariantCondition{ConditionKind::DeltaPrime, beta};
            break;
        }
        case Family::TypeIIIa:
        case Family::TypeIIIb:
            if (c1.coefficient != c2.coefficient)
                throw SurgeryError(std::string("joining '") + kind_name(c1.kind) +
                                   "' vertices requires equal coefficients");
            merged = c1;
            break;
    }

    // The edge set is unchanged; incidences of v2 are redirected to v1,
    // which plays the role of the joined vertex.
    std::vector<std::string> vertices;
    for (const std::string& v : graph.vertices())
        if (v != v2) vertices.push_back(v);
    std::vector<Edge> edges = graph.edges();
    for (Edge& e : edges) {
        if (e.tail == v2) e.tail = v1;
        if (e.head == v2) e.head = v1;
    }

    SurgeryResult result;
    result.graph = MetricGraph::create(std::move(vertices), std::move(edges));
    result.conditions = conditions;
    result.conditions.erase(v2);
    result.conditions[v1] = merged;
    return result;
}

SurgeryResult apply_surgery(const MetricGraph& graph, const ConditionMap& conditions,
                            const SurgeryOp& op) {
    return std::visit(
        [&](const auto& o) -> SurgeryResult {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, AttachEdge>)
                return attach_edge(graph, conditions, o.v1, o.v2, o.length, o.potential);
            else if constexpr (std::is_same_v<T, AttachPendant>)
                return attach_pendant(graph, conditions, o.v1, o.length, o.potential,
                                      o.new_condition);
            else
                return join_vertices(graph, conditions, o.v1, o.v2);
        },
        op);
}

namespace {

bool in_zero_extension_class(ConditionKind kind) {
    return kind == ConditionKind::AntiKirchhoff || kind == ConditionKind::DeltaPrime ||
           kind == ConditionKind::Type3a;
}

/// Is the pendant condition a delta/Robin condition (at degree one these
/// coincide), and what is its strength? Kirchhoff and Neumann count as
/// alpha = 0.
std::optional<double> robin_strength(const PermInvariantCondition& cond) {
    switch (cond.kind) {
        case ConditionKind::Kirchhoff:
        case ConditionKind::Neumann:
            return 0.0;
        case ConditionKind::Delta:
        case ConditionKind::Robin:
            return cond.coefficient;
        default:
            return std::nullopt;
    }
}

DirectionVerdict attach_edge_direction(const AttachEdge& op, const ConditionMap& conditions) {
    const PermInvariantCondition c1 = coupled_condition_at(conditions, op.v1);
    const PermInvariantCondition c2 = coupled_condition_at(conditions, op.v2);
    if (in_zero_extension_class(c1.kind) && in_zero_extension_class(c2.kind))
        return {Direction::NonIncreasing, "attach-edge",
                "both endpoints of anti-Kirchhoff/delta'/type3a class; holds for any new-edge "
                "potential"};
    std::string notes = "endpoint class admits counterexamples (delta/Kirchhoff lens)";
    if (c1.kind == ConditionKind::Type3b || c2.kind == ConditionKind::Type3b)
        notes = "type3b endpoint: no monotonicity statement and no known counterexample";
    return {Direction::NoGuarantee, "attach-edge", notes};
}

DirectionVerdict attach_pendant_direction(const AttachPendant& op,
                                          const ConditionMap& conditions) {
    const PermInvariantCondition c1 = coupled_condition_at(conditions, op.v1);
    if (in_zero_extension_class(c1.kind))
        return {Direction::NonIncreasing, "attach-pendant",
                "endpoint of anti-Kirchhoff/delta'/type3a class; any pendant condition"};
    const auto strength = robin_strength(op.new_condition);
    const double q_integral = op.potential.integral(op.length);
    if (strength && *strength <= 0.0 && q_integral <= 0.0)
        return {Direction::NonIncreasing, "attach-pendant",
                "delta/Robin pendant with nonpositive strength and nonpositive potential "
                "integral"};
    std::string notes = strength ? "pendant strength or potential integral positive"
                                 : "pendant condition is not delta/Robin";
    return {Direction::NoGuarantee, "attach-pendant", notes};
}

DirectionVerdict join_direction(const JoinVertices& op, const ConditionMap& conditions) {
    auto get = [&conditions](const std::string& v) {
        auto it = conditions.find(v);
        if (it == conditions.end()) throw SurgeryError("vertex '" + v + "' has no condition");
        const auto* perm = std::get_if<PermInvariantCondition>(&it->second);
        if (!perm) throw SurgeryError("vertex '" + v + "' carries a general condition");
        return *perm;
    };
    const PermInvariantCondition c1 = get(op.v1);
    const PermInvariantCondition c2 = get(op.v2);
    const Family f1 = family_of(c1, op.v1);
    const Family f2 = family_of(c2, op.v2);
    if (f1 != f2)
        throw SurgeryError("join endpoints belong to different condition families");

    switch (f1) {
        case Family::TypeI:
            return {Direction::NonDecreasing, "join-type-I", "delta strengths add"};
        case Family::TypeII: {
            const double b1 = family_coefficient(c1);
            const double b2 = family_coefficient(c2);
            const double b0 = b1 + b2;
            if (b1 * b2 == 0.0)
                return {Direction::NonIncreasing, "join-type-II(vi)",
                        "at least one anti-Kirchhoff endpoint"};
            if (b1 > 0.0 && b2 > 0.0)
                return {Direction::NonIncreasing, "join-type-II(i)", "both strengths positive"};
            if (b1 < 0.0 && b2 < 0.0)
                return {Direction::NonDecreasing, "join-type-II(ii)", "both strengths negative"};
            if (b0 > 0.0)
                return {Direction::NonDecreasing, "join-type-II(iii)",
                        "mixed signs, positive merged strength"};
            if (b0 < 0.0)
                return {Direction::NonIncreasing, "join-type-II(iv)",
                        "mixed signs, negative merged strength"};
            return {Direction::NonDecreasing, "join-type-II(v)",
                    "mixed signs, merged strength zero"};
        }
        case Family::TypeIIIa:
            if (c1.coefficient != c2.coefficient)
                throw SurgeryError("joining type3a vertices requires equal coefficients");
            return {Direction::NonIncreasing, "join-type-IIIa", "equal coefficients"};
        case Family::TypeIIIb:
            if (c1.coefficient != c2.coefficient)
                throw SurgeryError("joining type3b vertices requires equal coefficients");
            if (c1.coefficient > 0.0)
                return {Direction::NonDecreasing, "join-type-IIIb", "positive coefficient"};
            return {Direction::NonIncreasing, "join-type-IIIb", "negative coefficient"};
    }
    throw SurgeryError("unreachable join family");
}

}  // namespace

DirectionVerdict expected_direction(const SurgeryOp& op, const MetricGraph& graph,
                                    const ConditionMap& conditions) {
    return std::visit(
        [&](const auto& o) -> DirectionVerdict {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, AttachEdge>) {
                if (!graph.has_vertex(o.v1) || !graph.has_vertex(o.v2))
                    throw SurgeryError("unknown surgery endpoint");
                return attach_edge_direction(o, conditions);
            } else if constexpr (std::is_same_v<T, AttachPendant>) {
                if (!graph.has_vertex(o.v1)) throw SurgeryError("unknown surgery endpoint");
                return attach_pendant_direction(o, conditions);
            } else {
                if (!graph.has_vertex(o.v1) || !graph.has_vertex(o.v2))
                    throw SurgeryError("unknown surgery endpoint");
                return join_direction(o, conditions);
            }
        },
        op);
}

namespace {

std::vector<std::string> split_ws(const std::string& text) {
    std::vector<std::string> tokens;
    std::istringstream in(text);
    std::string t;
    while (in >> t) tokens.push_back(t);
    return tokens;
}

EdgePotential parse_potential_value(const std::string& v) {
    EdgePotential p;
    p.samples.clear();
    std::size_t pos = 0;
    while (pos <= v.size()) {
        auto comma = v.find(',', pos);
        std::string piece = v.substr(pos, comma == std::string::npos ? comma : comma - pos);
        try {
            std::size_t used = 0;
            p.samples.push_back(std::stod(piece, &used));
            if (used != piece.size()) throw std::invalid_argument(piece);
        } catch (const std::exception&) {
            throw ParseError("bad potential sample '" + piece + "'");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return p;
}

double parse_length_value(const std::string& v) {
    try {
        std::size_t used = 0;
        double len = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return len;
    } catch (const std::exception&) {
        throw ParseError("bad length '" + v + "'");
    }
}

}  // namespace

SurgeryOp parse_surgery(const std::string& text) {
    auto tokens = split_ws(text);
    if (tokens.empty()) throw ParseError("empty surgery description");
    const std::string& verb = tokens[0];

    auto keyvalue = [&](std::size_t i) -> std::pair<std::string, std::string> {
        auto eq = tokens[i].find('=');
        if (eq == std::string::npos)
            throw ParseError("expected key=value, got '" + tokens[i] + "'");
        return {tokens[i].substr(0, eq), tokens[i].substr(eq + 1)};
    };

    if (verb == "attach-edge") {
        if (tokens.size() < 4) throw ParseError("usage: attach-edge V1 V2 length=L [q=...]");
        AttachEdge op;
        op.v1 = tokens[1];
        op.v2 = tokens[2];
        bool has_length = false;
        for (std::size_t i = 3; i < tokens.size(); ++i) {
            auto [k, v] = keyvalue(i);
            if (k == "length") {
                op.length = parse_length_value(v);
                has_length = true;
            } else if (k == "q") {
                op.potential = parse_potential_value(v);
            } else {
                throw ParseError("unexpected key '" + k + "' in attach-edge");
            }
        }
        if (!has_length) throw ParseError("attach-edge requires length=L");
        return op;
    }
    if (verb == "attach-pendant") {
        if (tokens.size() < 3)
            throw ParseError("usage: attach-pendant V1 length=L cond=TYPE[:coef] [q=...]");
        AttachPendant op;
        op.v1 = tokens[1];
        bool has_length = false, has_cond = false;
        for (std::size_t i = 2; i < tokens.size(); ++i) {
            auto [k, v] = keyvalue(i);
            if (k == "length") {
                op.length = parse_length_value(v);
                has_length = true;
            } else if (k == "cond") {
                op.new_condition = parse_condition_token(v);
                has_cond = true;
            } else if (k == "q") {
                op.potential = parse_potential_value(v);
            } else {
                throw ParseError("unexpected key '" + k + "' in attach-pendant");
            }
        }
        if (!has_length) throw ParseError("attach-pendant requires length=L");
        if (!has_cond) throw ParseError("attach-pendant requires cond=TYPE[:coef]");
        return op;
    }
    if (verb == "join") {
        if (tokens.size() != 3) throw ParseError("usage: join V1 V2");
        return JoinVertices{tokens[1], tokens[2]};
    }
    throw ParseError("unknown surgery '" + verb + "' (expected attach-edge, attach-pendant or "
                     "join)");
}

std::string surgery_description(const SurgeryOp& op) {
    std::ostringstream out;
    char buf[64];
    auto fmt = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    std::visit(
        [&](const auto& o) {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, AttachEdge>) {
                out << "attach-edge " << o.v1 << ' ' << o.v2 << " length=" << fmt(o.length);
                if (!o.potential.is_zero()) {
                    out << " q=";
                    for (std::size_t i = 0; i < o.potential.samples.size(); ++i)
                        out << (i ? "," : "") << fmt(o.potential.samples[i]);
                }
            } else if constexpr (std::is_same_v<T, AttachPendant>) {
                out << "attach-pendant " << o.v1 << " length=" << fmt(o.length)
                    << " cond=" << condition_token(o.new_condition);
                if (!o.potential.is_zero()) {
                    out << " q=";
                    for (std::size_t i = 0; i < o.potential.samples.size(); ++i)
                        out << (i ? "," : "") << fmt(o.potential.samples[i]);
                }
            } else {
                out << "join " << o.v1 << ' ' << o.v2;
            }
        },
        op);
    return out.str();
}

}  // namespace qgraph

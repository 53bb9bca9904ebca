#ifndef QGRAPH_SURGERY_HPP
#define QGRAPH_SURGERY_HPP

#include "qgraph/metric_graph.hpp"
#include "qgraph/vertex_conditions.hpp"

#include <string>
#include <variant>

namespace qgraph {

struct AttachEdge {
    std::string v1;
    std::string v2;
    double length = 1.0;
    EdgePotential potential{};
};

struct AttachPendant {
    std::string v1;
    double length = 1.0;
    EdgePotential potential{};
    PermInvariantCondition new_condition{ConditionKind::Kirchhoff, 0.0};
};

struct JoinVertices {
    std::string v1;
    std::string v2;
};

using SurgeryOp = std::variant<AttachEdge, AttachPendant, JoinVertices>;

enum class Direction { NonIncreasing, NonDecreasing, NoGuarantee };

const char* direction_name(Direction d);

/// Theorem-predicted eigenvalue direction for a surgery, with the theorem
/// tag and the hypothesis facts that produced it. A pure function of the
/// endpoint conditions, the variant and the sign data.
struct DirectionVerdict {
    Direction direction = Direction::NoGuarantee;
    std::string theorem;
    std::string notes;
};

struct SurgeryResult {
    MetricGraph graph;
    ConditionMap conditions;
};

/// Appends an edge (tail v1, head v2) and replaces both endpoint
/// conditions by their natural extension at degree + 1. Endpoints must
/// carry coupled permutation-invariant conditions.
SurgeryResult attach_edge(const MetricGraph& graph, const ConditionMap& conditions,
                          const std::string& v1, const std::string& v2, double length,
                          const EdgePotential& potential = {});

/// Adds a fresh degree-one vertex joined to v1 by a new edge; v1's
/// condition is naturally extended and new_condition installed at the new
/// vertex.
SurgeryResult attach_pendant(const MetricGraph& graph, const ConditionMap& conditions,
                             const std::string& v1, double length,
                             const EdgePotential& potential,
                             const PermInvariantCondition& new_condition);

/// Joins v1 and v2 into a single vertex (keeping v1's id); the edge set is
/// untouched. Conditions must belong to the same classification family:
/// type I merges to a delta of strength alpha1 + alpha2 (Kirchhoff when the
/// sum is zero), type II to a delta' of strength beta1 + beta2
/// (anti-Kirchhoff when zero), type III requires equal coefficients.
SurgeryResult join_vertices(const MetricGraph& graph, const ConditionMap& conditions,
                            const std::string& v1, const std::string& v2);

/// Applies any surgery op.
SurgeryResult apply_surgery(const MetricGraph& graph, const ConditionMap& conditions,
                            const SurgeryOp& op);

/// The eigenvalue direction guaranteed by the theorems, or NoGuarantee.
DirectionVerdict expected_direction(const SurgeryOp& op, const MetricGraph& graph,
                                    const ConditionMap& conditions);

/// Parses a surgery description:
///   attach-edge V1 V2 length=L [q=...]
///   attach-pendant V1 length=L cond=TYPE[:coef] [q=...]
///   join V1 V2
SurgeryOp parse_surgery(const std::string& text);
std::string surgery_description(const SurgeryOp& op);

}  // namespace qgraph

#endif

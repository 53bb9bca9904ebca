#ifndef QGRAPH_GRAPH_IO_HPP
#define QGRAPH_GRAPH_IO_HPP

#include "qgraph/metric_graph.hpp"
#include "qgraph/vertex_conditions.hpp"

#include <iosfwd>
#include <string>
#include <utility>

namespace qgraph {

struct ParsedGraph {
    MetricGraph graph;
    ConditionMap conditions;
};

/// Parses the section-based graph description:
///
///   [vertices]
///   NAME TYPE [key=value ...]
///   [edges]
///   NAME TAIL HEAD length=REAL [q=REAL | q=R1,R2,...]
///
/// '#' starts a comment. Throws ParseError with line/column on bad input.
ParsedGraph parse_graph(const std::string& text);
ParsedGraph parse_graph_file(const std::string& path);

/// Inverse of parse_graph: emits a document that parses back to an
/// identical graph and condition map (declaration order preserved).
std::string serialize_graph(const MetricGraph& graph, const ConditionMap& conditions);

/// Condition token as used in vertex lines and surgery strings, e.g.
/// "delta:1.5" or "kirchhoff". Throws ParseError (no position info).
PermInvariantCondition parse_condition_token(const std::string& token);
std::string condition_token(const PermInvariantCondition& cond);

}  // namespace qgraph

#endif

#ifndef QGRAPH_METRIC_GRAPH_HPP
#define QGRAPH_METRIC_GRAPH_HPP

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace qgraph {

/// Piecewise-constant potential on an edge, sampled on a uniform partition
/// of [0, L]. A single sample means a constant potential.
struct EdgePotential {
    std::vector<double> samples{0.0};

    bool is_zero() const;
    /// Exact integral over the edge for edge length `length`.
    double integral(double length) const;

    bool operator==(const EdgePotential&) const = default;
};

/// Oriented edge: identified with [0, length], tail at 0, head at length.
/// tail == head is allowed (loop).
struct Edge {
    std::string id;
    std::string tail;
    std::string head;
    double length = 1.0;
    EdgePotential potential{};

    bool operator==(const Edge&) const = default;
};

/// Which endpoint of an edge meets a vertex.
enum class EdgeEnd { Tail, Head };

struct Incidence {
    std::size_t edge_index;  // index into MetricGraph::edges()
    EdgeEnd end;

    bool operator==(const Incidence&) const = default;
};

/// Ordered list of incidences at one vertex. The order fixes the
/// enumeration used for boundary-value and outward-derivative vectors:
/// tail ends first, then head ends, each group sorted by edge id.
/// A loop contributes one tail and one head entry.
struct VertexBoundaryMap {
    std::string vertex;
    std::vector<Incidence> entries;

    std::size_t degree() const { return entries.size(); }
};

/// Finite compact metric graph. Immutable after construction; loops and
/// parallel edges are allowed. Vertex and edge ids are unique, lengths
/// strictly positive and finite, potential samples finite.
class MetricGraph {
public:
    MetricGraph() = default;

    /// Validates all invariants; throws std::invalid_argument on violation.
    static MetricGraph create(std::vector<std::string> vertices, std::vector<Edge> edges);

    const std::vector<std::string>& vertices() const { return vertices_; }
    const std::vector<Edge>& edges() const { return edges_; }

    bool has_vertex(const std::string& id) const { return vertex_index_.count(id) > 0; }
    std::size_t vertex_index(const std::string& id) const;
    std::size_t edge_index(const std::string& id) const;

    /// Number of edge endpoints meeting v; a loop counts twice.
    std::size_t degree(const std::string& v) const;

    VertexBoundaryMap boundary_map(const std::string& v) const;

    double total_length() const;
    std::size_t connected_components() const;

    bool operator==(const MetricGraph& other) const {
        return vertices_ == other.vertices_ && edges_ == other.edges_;
    }

private:
    std::vector<std::string> vertices_;
    std::vector<Edge> edges_;
    std::map<std::string, std::size_t> vertex_index_;
    std::map<std::string, std::size_t> edge_index_;
};

}  // namespace qgraph

#endif

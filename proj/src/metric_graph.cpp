#include "qgraph/metric_graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qgraph {

bool EdgePotential::is_zero() const {
    return std::all_of(samples.begin(), samples.end(), [](double q) { return q == 0.0; });
}

double EdgePotential::integral(double length) const {
    double sum = std::accumulate(samples.begin(), samples.end(), 0.0);
    return sum * length / static_cast<double>(samples.size());
}

MetricGraph MetricGraph::create(std::vector<std::string> vertices, std::vector<Edge> edges) {
    MetricGraph g;
    g.vertices_ = std::move(vertices);
    g.edges_ = std::move(edges);

    for (std::size_t i = 0; i < g.vertices_.size(); ++i) {
        auto [it, inserted] = g.vertex_index_.emplace(g.vertices_[i], i);
        if (!inserted) throw std::invalid_argument("duplicate vertex id '" + g.vertices_[i] + "'");
    }
    for (std::size_t i = 0; i < g.edges_.size(); ++i) {
        const Edge& e = g.edges_[i];
        auto [it, inserted] = g.edge_index_.emplace(e.id, i);
        if (!inserted) throw std::invalid_argument("duplicate edge id '" + e.id + "'");
        if (!(e.length > 0.0) || !std::isfinite(e.length))
            throw std::invalid_argument("edge '" + e.id + "' has nonpositive or nonfinite length");
        if (!g.vertex_index_.count(e.tail))
            throw std::invalid_argument("edge '" + e.id + "' references unknown vertex '" + e.tail + "'");
        if (!g.vertex_index_.count(e.head))
            throw std::invalid_argument("edge '" + e.id + "' references unknown vertex '" + e.head + "'");
        if (e.potential.samples.empty())
            throw std::invalid_argument("edge '" + e.id + "' has an empty potential");
        for (double q : e.potential.samples)
            if (!std::isfinite(q))
                throw std::invalid_argument("edge '" + e.id + "' has a nonfinite potential sample");
    }
    return g;
}

std::size_t MetricGraph::vertex_index(const std::string& id) const {
    auto it = vertex_index_.find(id);
    if (it == vertex_index_.end()) throw std::invalid_argument("unknown vertex '" + id + "'");
    return it->second;
}

std::size_t MetricGraph::edge_index(const std::string& id) const {
    auto it = edge_index_.find(id);
    if (it == edge_index_.end()) throw std::invalid_argument("unknown edge '" + id + "'");
    return it->second;
}

std::size_t MetricGraph::degree(const std::string& v) const {
    vertex_index(v);  // validates
    std::size_t d = 0;
    for (const Edge& e : edges_) {
        if (e.tail == v) ++d;
        if (e.head == v) ++d;
    }
    return d;
}

VertexBoundaryMap MetricGraph::boundary_map(const std::string& v) const {
    vertex_index(v);  // validates
    VertexBoundaryMap bm;
    bm.vertex = v;

    std::vector<std::size_t> tails, heads;
    for (std::size_t i = 0; i < edges_.size(); ++i) {
        if (edges_[i].tail == v) tails.push_back(i);
        if (edges_[i].head == v) heads.push_back(i);
    }
    auto by_id = [this](std::size_t a, std::size_t b) { return edges_[a].id < edges_[b].id; };
    std::sort(tails.begin(), tails.end(), by_id);
    std::sort(heads.begin(), heads.end(), by_id);

    for (std::size_t i : tails) bm.entries.push_back({i, EdgeEnd::Tail});
    for (std::size_t i : heads) bm.entries.push_back({i, EdgeEnd::Head});
    return bm;
}

double MetricGraph::total_length() const {
    double sum = 0.0;
    for (const Edge& e : edges_) sum += e.length;
    return sum;
}

std::size_t MetricGraph::connected_components() const {
    std::vector<std::size_t> parent(vertices_.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const Edge& e : edges_) {
        std::size_t a = find(vertex_index_.at(e.tail));
        std::size_t b = find(vertex_index_.at(e.head));
        if (a != b) parent[a] = b;
    }
    std::size_t count = 0;
    for (std::size_t i = 0; i < parent.size(); ++i)
        if (find(i) == i) ++count;
    return count;
}

}  // namespace qgraph

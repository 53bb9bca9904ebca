#ifndef QGRAPH_FEM_HPP
#define QGRAPH_FEM_HPP

#include "qgraph/metric_graph.hpp"
#include "qgraph/vertex_conditions.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace qgraph {

/// Uniform piecewise-linear mesh: cells_per_edge[i] cells on edge i of the
/// graph the mesh was built for. Cell counts are multiples of the edge's
/// potential sample count, so element quadrature is exact.
struct Mesh {
    std::vector<int> cells_per_edge;

    std::size_t total_dofs() const;
    /// Cell counts doubled; the coarse P1 space is a subspace of the fine one.
    Mesh refined() const;
};

/// n_e = ceil(L_e / h_target), raised to the smallest multiple of the
/// potential sample count (and at least 1).
Mesh build_mesh(const MetricGraph& graph, double h_target);

/// Global degree-of-freedom layout for (graph, mesh): per-edge node blocks
/// of size n_e + 1 in edge order.
struct DofLayout {
    std::vector<std::size_t> edge_offset;
    std::size_t total = 0;

    std::size_t node(std::size_t edge, int local) const {
        return edge_offset[edge] + static_cast<std::size_t>(local);
    }
    std::size_t boundary_dof(const Incidence& inc, const Mesh& mesh) const {
        return inc.end == EdgeEnd::Tail
                   ? node(inc.edge_index, 0)
                   : node(inc.edge_index, mesh.cells_per_edge[inc.edge_index]);
    }
};

DofLayout dof_layout(const MetricGraph& graph, const Mesh& mesh);

/// Discretized quadratic form: stiffness+potential+vertex-term matrix A,
/// mass matrix B, and orthonormal null-space basis T of the form-domain
/// constraint rows. The reduced pencil is (T^t A T) x = lambda (T^t B T) x.
struct DiscreteProblem {
    Eigen::MatrixXd stiffness;   // A, symmetric
    Eigen::MatrixXd mass;        // B, symmetric positive definite
    Eigen::MatrixXd null_basis;  // T, orthonormal columns
    Mesh mesh;

    std::size_t full_dim() const { return static_cast<std::size_t>(stiffness.rows()); }
    std::size_t reduced_dim() const { return static_cast<std::size_t>(null_basis.cols()); }
};

/// Assembles P1 stiffness/mass plus the vertex boundary matrices, and the
/// constraint null-space basis (per-vertex QR, rank tolerance 1e-12).
/// Conditions must be real-valued; every vertex needs a condition.
DiscreteProblem assemble(const MetricGraph& graph, const ConditionMap& conditions,
                         const Mesh& mesh);

struct MeshInfo {
    std::vector<int> cells_per_edge;
    double h_max = 0.0;
    std::size_t full_dim = 0;
    std::size_t reduced_dim = 0;
    int levels = 1;
};

/// Ascending eigenvalues with per-value discretization-error estimates and
/// multiplicity clusters (relative gap < 1e-6 * (1 + |lambda|)).
struct Spectrum {
    std::vector<double> eigenvalues;
    std::vector<double> error_estimates;
    std::vector<int> clusters;  // 1-based cluster index per eigenvalue
    MeshInfo mesh;

    std::size_t size() const { return eigenvalues.size(); }
    /// CSV with header "k,lambda,error_estimate,cluster".
    std::string to_csv() const;
};

/// The k smallest eigenvalues of the reduced pencil. Every returned pair
/// satisfies ||A x - lambda B x|| / ||x|| <= residual_tol in the reduced
/// space; a violation raises SolverError, as do k > reduced dimension and
/// a mass matrix that fails Cholesky. k = 0 yields an empty Spectrum.
Spectrum solve_spectrum(const DiscreteProblem& problem, std::size_t k,
                        double residual_tol = 1e-8);

/// Solves on meshes h0, h0/2, ... (levels >= 2), Richardson-extrapolates
/// each eigenvalue at order 2 and reports |last - extrapolated| as the
/// error estimate.
Spectrum refine_and_extrapolate(const MetricGraph& graph, const ConditionMap& conditions,
                                std::size_t k, int levels, double h0,
                                double residual_tol = 1e-8);

/// Assigns 1-based cluster indices by the relative-gap rule.
std::vector<int> cluster_eigenvalues(const std::vector<double>& eigenvalues);

}  // namespace qgraph

#endif

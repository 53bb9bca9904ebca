#include "qgraph/fem.hpp"

#include "qgraph/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace qgraph {

namespace {

constexpr double kRankTol = 1e-12;
constexpr double kClusterTol = 1e-6;

int round_up_to_multiple(int n, int m) { return ((n + m - 1) / m) * m; }

Eigen::MatrixXd real_part_checked(const Eigen::MatrixXcd& m, const std::string& what) {
    if (m.size() > 0 && m.imag().cwiseAbs().maxCoeff() > 1e-12)
        throw SolverError(what + " has complex entries; the FEM path supports real-valued "
                                 "vertex conditions only");
    return m.real();
}

struct VertexData {
    VertexBoundaryMap bmap;
    std::vector<std::size_t> dofs;     // global boundary dofs, trace order
    Eigen::MatrixXd boundary;          // d x d vertex term
    Eigen::MatrixXd constraints;       // rows x d
};

VertexData vertex_data(const MetricGraph& graph, const ConditionMap& conditions,
                       const Mesh& mesh, const DofLayout& layout, const std::string& v) {
    auto it = conditions.find(v);
    if (it == conditions.end())
        throw std::invalid_argument("vertex '" + v + "' has no condition");

    VertexData data;
    data.bmap = graph.boundary_map(v);
    const std::size_t d = data.bmap.degree();
    if (d == 0) throw std::invalid_argument("vertex '" + v + "' has no incident edges");
    for (const Incidence& inc : data.bmap.entries)
        data.dofs.push_back(layout.boundary_dof(inc, mesh));

    if (const auto* perm = std::get_if<PermInvariantCondition>(&it->second)) {
        data.boundary = boundary_matrix(*perm, d);
        data.constraints = form_constraints(*perm, d);
    } else {
        const auto& gen = std::get<GeneralCondition>(it->second);
        if (gen.degree() != d)
            throw std::invalid_argument("condition at '" + v + "' has degree " +
                                        std::to_string(gen.degree()) + ", vertex has degree " +
                                        std::to_string(d));
        gen.validate();
        data.boundary = real_part_checked(boundary_matrix(gen), "condition at '" + v + "'");
        data.constraints =
            real_part_checked(form_constraints(gen), "condition at '" + v + "'");
    }
    return data;
}

/// Orthonormal basis of the null space of `rows` via column-pivoted QR of
/// rows^t: the trailing columns of Q are orthogonal to the row space.
Eigen::MatrixXd null_space_basis(const Eigen::MatrixXd& rows) {
    const Eigen::Index d = rows.cols();
    if (rows.rows() == 0) return Eigen::MatrixXd::Identity(d, d);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(rows.transpose());
    qr.setThreshold(kRankTol);
    const Eigen::Index rank = qr.rank();
    Eigen::MatrixXd q = qr.householderQ();
    return q.rightCols(d - rank);
}

}  // namespace

std::size_t Mesh::total_dofs() const {
    std::size_t n = 0;
    for (int c : cells_per_edge) n += static_cast<std::size_t>(c) + 1;
    return n;
}

Mesh Mesh::refined() const {
    Mesh fine;
    fine.cells_per_edge.reserve(cells_per_edge.size());
    for (int c : cells_per_edge) fine.cells_per_edge.push_back(2 * c);
    return fine;
}

Mesh build_mesh(const MetricGraph& graph, double h_target) {
    if (!(h_target > 0.0)) throw std::invalid_argument("h_target must be positive");
    Mesh mesh;
    for (const Edge& e : graph.edges()) {
        int n = std::max(1, static_cast<int>(std::ceil(e.length / h_target - 1e-12)));
        n = round_up_to_multiple(n, static_cast<int>(e.potential.samples.size()));
        mesh.cells_per_edge.push_back(n);
    }
    return mesh;
}

DofLayout dof_layout(const MetricGraph& graph, const Mesh& mesh) {
    if (mesh.cells_per_edge.size() != graph.edges().size())
        throw std::invalid_argument("mesh does not cover the graph");
    DofLayout layout;
    for (int c : mesh.cells_per_edge) {
        layout.edge_offset.push_back(layout.total);
        layout.total += static_cast<std::size_t>(c) + 1;
    }
    return layout;
}

DiscreteProblem assemble(const MetricGraph& graph, const ConditionMap& conditions,
                         const Mesh& mesh) {
    const DofLayout layout = dof_layout(graph, mesh);
    const auto n = static_cast<Eigen::Index>(layout.total);

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);

    for (std::size_t ei = 0; ei < graph.edges().size(); ++ei) {
        const Edge& edge = graph.edges()[ei];
        const int cells = mesh.cells_per_edge[ei];
        if (cells < 1 || cells % static_cast<int>(edge.potential.samples.size()) != 0)
            throw std::invalid_argument("mesh does not cover the graph");
        const double h = edge.length / cells;
        const int per_sample = cells / static_cast<int>(edge.potential.samples.size());
        for (int c = 0; c < cells; ++c) {
            const auto i = static_cast<Eigen::Index>(layout.node(ei, c));
            const double q = edge.potential.samples[static_cast<std::size_t>(c / per_sample)];
            const double s = 1.0 / h;
            const double m = h / 6.0;
            a(i, i) += s + q * 2.0 * m;
            a(i, i + 1) += -s + q * m;
            a(i + 1, i) += -s + q * m;
            a(i + 1, i + 1) += s + q * 2.0 * m;
            b(i, i) += 2.0 * m;
            b(i, i + 1) += m;
            b(i + 1, i) += m;
            b(i + 1, i + 1) += 2.0 * m;
        }
    }

    std::vector<std::size_t> col_of_dof(layout.total, layout.total);
    std::vector<VertexData> vdata;
    for (const std::string& v : graph.vertices()) {
        VertexData data = vertex_data(graph, conditions, mesh, layout, v);
        const std::size_t d = data.dofs.size();
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                a(static_cast<Eigen::Index>(data.dofs[i]),
                  static_cast<Eigen::Index>(data.dofs[j])) += data.boundary(i, j);
        vdata.push_back(std::move(data));
    }

    // Constraint rows of distinct vertices touch disjoint dofs, so the null
    // space factors into per-vertex blocks plus identity columns elsewhere.
    std::vector<std::pair<const VertexData*, Eigen::MatrixXd>> blocks;
    std::size_t reduced = 0;
    std::vector<bool> constrained(layout.total, false);
    for (const VertexData& data : vdata) {
        if (data.constraints.rows() == 0) continue;
        Eigen::MatrixXd basis = null_space_basis(data.constraints);
        for (std::size_t dof : data.dofs) constrained[dof] = true;
        reduced += static_cast<std::size_t>(basis.cols());
        blocks.emplace_back(&data, std::move(basis));
    }
    std::size_t free_dofs = 0;
    for (bool c : constrained)
        if (!c) ++free_dofs;

    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(free_dofs + reduced));
    Eigen::Index col = 0;
    for (std::size_t dof = 0; dof < layout.total; ++dof)
        if (!constrained[dof]) t(static_cast<Eigen::Index>(dof), col++) = 1.0;
    for (const auto& [data, basis] : blocks)
        for (Eigen::Index j = 0; j < basis.cols(); ++j, ++col)
            for (std::size_t i = 0; i < data->dofs.size(); ++i)
                t(static_cast<Eigen::Index>(data->dofs[i]), col) = basis(static_cast<Eigen::Index>(i), j);

    DiscreteProblem problem{std::move(a), std::move(b), std::move(t), mesh};
    Eigen::LLT<Eigen::MatrixXd> llt(problem.mass);
    if (llt.info() != Eigen::Success) throw SolverError("mass matrix is not positive definite");
    return problem;
}

std::vector<int> cluster_eigenvalues(const std::vector<double>& eigenvalues) {
    std::vector<int> clusters(eigenvalues.size());
    int current = 0;
    for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
        if (i == 0 ||
            eigenvalues[i] - eigenvalues[i - 1] >= kClusterTol * (1.0 + std::abs(eigenvalues[i])))
            ++current;
        clusters[i] = current;
    }
    return clusters;
}

Spectrum solve_spectrum(const DiscreteProblem& problem, std::size_t k, double residual_tol) {
    Spectrum spectrum;
    spectrum.mesh.cells_per_edge = problem.mesh.cells_per_edge;
    spectrum.mesh.full_dim = problem.full_dim();
    spectrum.mesh.reduced_dim = problem.reduced_dim();
    if (k == 0) return spectrum;
    if (k > problem.reduced_dim())
        throw SolverError("requested " + std::to_string(k) + " eigenvalues, reduced dimension is " +
                          std::to_string(problem.reduced_dim()));

    const Eigen::MatrixXd& t = problem.null_basis;
    Eigen::MatrixXd ar = t.transpose() * problem.stiffness * t;
    Eigen::MatrixXd br = t.transpose() * problem.mass * t;
    ar = 0.5 * (ar + ar.transpose()).eval();
    br = 0.5 * (br + br.transpose()).eval();

    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(ar, br);
    if (solver.info() != Eigen::Success)
        throw SolverError("generalized eigensolve failed (mass matrix not positive definite?)");

    for (std::size_t i = 0; i < k; ++i) {
        const double lambda = solver.eigenvalues()(static_cast<Eigen::Index>(i));
        Eigen::VectorXd x = solver.eigenvectors().col(static_cast<Eigen::Index>(i));
        const double residual = (ar * x - lambda * br * x).norm() / x.norm();
        if (!(residual <= residual_tol))
            throw SolverError("eigenpair residual " + std::to_string(residual) +
                              " exceeds tolerance");
        spectrum.eigenvalues.push_back(lambda);
        spectrum.error_estimates.push_back(0.0);
    }
    spectrum.clusters = cluster_eigenvalues(spectrum.eigenvalues);
    return spectrum;
}

Spectrum refine_and_extrapolate(const MetricGraph& graph, const ConditionMap& conditions,
                                std::size_t k, int levels, double h0, double residual_tol) {
    if (levels < 2) throw std::invalid_argument("extrapolation needs at least 2 levels");

    Mesh mesh = build_mesh(graph, h0);
    std::vector<Spectrum> solved;
    for (int level = 0; level < levels; ++level) {
        solved.push_back(solve_spectrum(assemble(graph, conditions, mesh), k, residual_tol));
        if (level + 1 < levels) mesh = mesh.refined();
    }

    const Spectrum& fine = solved.back();
    const Spectrum& prev = solved[solved.size() - 2];
    Spectrum result;
    result.mesh = fine.mesh;
    result.mesh.levels = levels;
    for (std::size_t ei = 0; ei < graph.edges().size(); ++ei)
        result.mesh.h_max = std::max(result.mesh.h_max, graph.edges()[ei].length /
                                                            result.mesh.cells_per_edge[ei]);
    std::vector<std::pair<double, double>> values;  // (extrapolated, estimate)
    for (std::size_t i = 0; i < k; ++i) {
        const double diff = fine.eigenvalues[i] - prev.eigenvalues[i];
        const double extrapolated = fine.eigenvalues[i] + diff / 3.0;
        values.emplace_back(extrapolated, std::abs(fine.eigenvalues[i] - extrapolated));
    }
    std::stable_sort(values.begin(), values.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [lambda, estimate] : values) {
        result.eigenvalues.push_back(lambda);
        result.error_estimates.push_back(estimate);
    }
    result.clusters = cluster_eigenvalues(result.eigenvalues);
    return result;
}

std::string Spectrum::to_csv() const {
    std::ostringstream out;
    out << "k,lambda,error_estimate,cluster\n";
    char buf[128];
    for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.15g,%.15g,%d\n", i + 1, eigenvalues[i],
                      error_estimates[i], clusters[i]);
        out << buf;
    }
    return out.str();
}

}  // namespace qgraph

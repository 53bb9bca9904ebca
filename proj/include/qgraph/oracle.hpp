#ifndef QGRAPH_ORACLE_HPP
#define QGRAPH_ORACLE_HPP

#include "qgraph/metric_graph.hpp"
#include "qgraph/vertex_conditions.hpp"

#include <Eigen/Dense>

#include <vector>

namespace qgraph {
namespace oracle {

/// Boundary condition for the single-interval closed forms.
struct IntervalBc {
    enum class Kind { Dirichlet, Neumann, Robin } kind = Kind::Neumann;
    double alpha = 0.0;  // Robin only: outward derivative = alpha * value
};

/// First k eigenvalues of -f'' on [0, L] with the given endpoint
/// conditions. Neumann-Neumann and Dirichlet-Dirichlet use the closed
/// forms; every other pair is solved from the explicit transcendental
/// characteristic function by scan-and-bisect to 1e-12.
std::vector<double> interval_eigenvalues(double length, IntervalBc left, IntervalBc right,
                                         std::size_t k);

enum class LoopCoupling { Periodic, Antiperiodic };

/// Laplacian eigenvalues on a circle of the given circumference: periodic
/// gives 0 then doubled (2 pi j / L)^2, antiperiodic gives doubled
/// ((2j - 1) pi / L)^2.
std::vector<double> loop_eigenvalues(double total_length, LoopCoupling coupling, std::size_t k);

/// Smallest eigenvalue of -f'' on [0, 1] with a Robin condition of
/// strength alpha at 0 and Neumann at 1: the root of sqrt(l) tan(sqrt(l))
/// = alpha for alpha > 0, zero for alpha = 0, and the negative eigenvalue
/// from the hyperbolic branch for alpha < 0. Bisection to 1e-12.
double robin_root(double alpha);

struct SecularOptions {
    double grid_step = 1e-3;       // scan resolution in the spectral parameter t
    double t_min = -50.0;          // lambda = -t^2 side: searches down to -(t_min)^2
    double initial_t_cap = 40.0;   // first scan window; grows until k roots are found
    double max_t_cap = 2000.0;     // hard cap; fewer than k roots below it is an error
    double root_tol = 1e-12;       // bisection/refinement tolerance in t
    double singular_tol = 1e-8;    // relative sigma_min threshold for accepting a root
};

/// Exact eigenvalue system for a small zero-potential graph: per edge
/// f_e = a_e c(lambda, x) + b_e s(lambda, x) with the entire-function basis
/// c = cos(sqrt(lambda) x), s = sin(sqrt(lambda) x)/sqrt(lambda), and one
/// condition row per vertex-incidence. Eigenvalues are the zeros of the
/// determinant, parametrized by t with lambda = t |t|.
class SecularProblem {
public:
    SecularProblem(const MetricGraph& graph, const ConditionMap& conditions);

    /// Condition matrix at spectral parameter lambda.
    Eigen::MatrixXd matrix_at(double lambda) const;
    /// Determinant at t (rows normalized; zeros are eigenvalues).
    double det_at(double t) const;
    /// Smallest singular value at t (row-normalized matrix).
    double sigma_min_at(double t) const;

    std::size_t dimension() const { return 2 * lengths_.size(); }
    double total_length() const;

private:
    struct VertexBlock {
        std::vector<Incidence> entries;
        Eigen::MatrixXd u_dirichlet;  // orthonormal basis columns of ran P_D
        Eigen::MatrixXd u_neumann;    //   "    of ran P_N
        Eigen::MatrixXd u_robin;      //   "    of ran P_R
        Eigen::MatrixXd lambda;       // real coupling matrix
    };

    std::vector<double> lengths_;
    std::vector<VertexBlock> vertices_;
};

/// First k eigenvalues of the zero-potential graph (at most 3 edges) by
/// scanning the secular determinant and bisecting sign changes; touching
/// zeros are refined by minimizing sigma_min and emitted with their
/// multiplicity. Throws SolverError when fewer than k eigenvalues exist
/// below the scan cap or when the determinant vanishes identically.
std::vector<double> secular_eigenvalues(const MetricGraph& graph, const ConditionMap& conditions,
                                        std::size_t k, const SecularOptions& options = {});

}  // namespace oracle
}  // namespace qgraph

#endif

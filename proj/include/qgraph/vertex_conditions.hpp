#ifndef QGRAPH_VERTEX_CONDITIONS_HPP
#define QGRAPH_VERTEX_CONDITIONS_HPP

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <variant>

namespace qgraph {

/// Permutation-invariant vertex condition kinds. The coupled kinds
/// (Kirchhoff..Type3b) never decouple the vertex; the remaining three are
/// the degenerate decoupled boundary conditions.
enum class ConditionKind {
    Kirchhoff,      // I(a):  continuity, sum of outward derivatives = 0
    Delta,          // I(b):  continuity, sum of outward derivatives = alpha * f(v)
    AntiKirchhoff,  // II(a): outward derivatives equal, sum of values = 0
    DeltaPrime,     // II(b): outward derivatives equal, sum of values = beta * f'(v)
    Type3a,         // III(a): sum of values = 0, derivative jumps = C * value jumps
    Type3b,         // III(b): sum of derivatives = 0, value jumps = D * derivative jumps
    Dirichlet,      // decoupled: all values zero
    Neumann,        // decoupled: all outward derivatives zero
    Robin,          // decoupled: outward derivative = alpha * value, per endpoint
};

const char* kind_name(ConditionKind kind);
bool kind_has_coefficient(ConditionKind kind);
/// True for the six kinds that couple the incident edges (I(a)..III(b)).
bool kind_is_coupled(ConditionKind kind);

/// A permutation-invariant condition: a kind plus its real interaction
/// coefficient (alpha, beta, C or D; unused for Kirchhoff, anti-Kirchhoff,
/// Dirichlet, Neumann). The representation is degree-independent.
struct PermInvariantCondition {
    ConditionKind kind = ConditionKind::Kirchhoff;
    double coefficient = 0.0;

    /// Throws std::invalid_argument when the coefficient rules are violated
    /// (Delta/DeltaPrime/Type3a/Type3b require a nonzero coefficient).
    void validate() const;

    bool operator==(const PermInvariantCondition&) const = default;
};

/// General local self-adjoint vertex condition as a projection triple
/// (P_D, P_N, P_R) with coupling operator Lambda on ran P_R, stored as a
/// d x d Hermitian matrix vanishing off that range.
struct GeneralCondition {
    Eigen::MatrixXcd p_dirichlet;
    Eigen::MatrixXcd p_neumann;
    Eigen::MatrixXcd p_robin;
    Eigen::MatrixXcd lambda;

    std::size_t degree() const { return static_cast<std::size_t>(p_dirichlet.rows()); }

    /// Checks projection, orthogonality, completeness and Lambda invariants
    /// (tolerance 1e-12); throws std::invalid_argument on violation.
    void validate() const;

    /// Max absolute imaginary entry over all four matrices.
    double max_imag() const;
};

using VertexCondition = std::variant<PermInvariantCondition, GeneralCondition>;
using ConditionMap = std::map<std::string, VertexCondition>;

/// Rank-one averaging projection P_d (all entries 1/d).
Eigen::MatrixXd averaging_projection(std::size_t d);
/// Complement Q_d = I - P_d.
Eigen::MatrixXd complement_projection(std::size_t d);

/// Realizes a permutation-invariant condition at degree d as a projection
/// triple with coupling operator. Throws on invalid coefficient or d == 0.
GeneralCondition projection_matrices(const PermInvariantCondition& cond, std::size_t d);

/// Inverse of projection_matrices where one exists: recognizes the
/// projections among {0, P_d, Q_d, I} (tolerance 1e-10) and recovers the
/// coefficient from Lambda's constant. Returns nullopt when the triple is
/// not permutation invariant. At degree 1 several kinds coincide; the
/// coupled kinds win, in classification order.
std::optional<PermInvariantCondition> classify(const GeneralCondition& g);

/// The natural extension to a higher degree keeps the kind and the
/// interaction coefficient; the degree dependence lives in
/// projection_matrices. Decoupled kinds have no natural extension and are
/// rejected with SurgeryError.
PermInvariantCondition natural_extension(const PermInvariantCondition& cond,
                                         std::size_t new_degree);

/// Linear constraint rows on the boundary-value vector F(v) defining the
/// form domain at the vertex. Canonical shapes: consecutive differences
/// for continuity, a single all-ones row for a sum condition, identity
/// rows for decoupled Dirichlet, no rows otherwise.
Eigen::MatrixXd form_constraints(const PermInvariantCondition& cond, std::size_t d);
/// For a general condition: orthonormal rows spanning ran P_D.
Eigen::MatrixXcd form_constraints(const GeneralCondition& g);

/// Hermitian d x d boundary matrix M with <M F, F> equal to the vertex
/// contribution of the quadratic form. Returned unconditionally (no
/// constraint check); real for every permutation-invariant kind.
Eigen::MatrixXd boundary_matrix(const PermInvariantCondition& cond, std::size_t d);
Eigen::MatrixXcd boundary_matrix(const GeneralCondition& g);

/// Scalar vertex contribution of the quadratic form, evaluated on a trace
/// ordered by the vertex boundary map. Checks the form-domain constraints
/// (tolerance 1e-10) and throws std::invalid_argument on violation.
double form_contribution(const PermInvariantCondition& cond, const Eigen::VectorXcd& trace);
double form_contribution(const GeneralCondition& g, const Eigen::VectorXcd& trace);

}  // namespace qgraph

#endif

#include "qgraph/vertex_conditions.hpp"

#include "qgraph/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace qgraph {

namespace {

constexpr double kValidateTol = 1e-12;
constexpr double kRecognizeTol = 1e-10;
constexpr double kConstraintTol = 1e-10;

double max_abs(const Eigen::MatrixXcd& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

bool is_zero_matrix(const Eigen::MatrixXcd& m, double tol) { return max_abs(m) <= tol; }

bool matrices_close(const Eigen::MatrixXcd& a, const Eigen::MatrixXd& b, double tol) {
    return max_abs(a - b.cast<std::complex<double>>()) <= tol;
}

/// Orthonormal basis of the range of a Hermitian projection, as columns.
Eigen::MatrixXcd projection_range_basis(const Eigen::MatrixXcd& p) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(p);
    std::size_t rank = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()(i) > 0.5) ++rank;
    return es.eigenvectors().rightCols(rank);
}

}  // namespace

const char* kind_name(ConditionKind kind) {
    switch (kind) {
        case ConditionKind::Kirchhoff: return "kirchhoff";
        case ConditionKind::Delta: return "delta";
        case ConditionKind::AntiKirchhoff: return "antikirchhoff";
        case ConditionKind::DeltaPrime: return "deltaprime";
        case ConditionKind::Type3a: return "type3a";
        case ConditionKind::Type3b: return "type3b";
        case ConditionKind::Dirichlet: return "dirichlet";
        case ConditionKind::Neumann: return "neumann";
        case ConditionKind::Robin: return "robin";
    }
    return "?";
}

bool kind_has_coefficient(ConditionKind kind) {
    switch (kind) {
        case ConditionKind::Delta:
        case ConditionKind::DeltaPrime:
        case ConditionKind::Type3a:
        case ConditionKind::Type3b:
        case ConditionKind::Robin:
            return true;
        default:
            return false;
    }
}

bool kind_is_coupled(ConditionKind kind) {
    switch (kind) {
        case ConditionKind::Dirichlet:
        case ConditionKind::Neumann:
        case ConditionKind::Robin:
            return false;
        default:
            return true;
    }
}

void PermInvariantCondition::validate() const {
    const bool needs_nonzero = kind == ConditionKind::Delta || kind == ConditionKind::DeltaPrime ||
                               kind == ConditionKind::Type3a || kind == ConditionKind::Type3b;
    if (needs_nonzero && coefficient == 0.0)
        throw std::invalid_argument(std::string(kind_name(kind)) +
                                    " requires a nonzero coefficient");
    if (kind_has_coefficient(kind) && !std::isfinite(coefficient))
        throw std::invalid_argument(std::string(kind_name(kind)) + " coefficient is not finite");
}

void GeneralCondition::validate() const {
    const Eigen::Index d = p_dirichlet.rows();
    if (d == 0) throw std::invalid_argument("general condition has degree 0");
    for (const auto* p : {&p_dirichlet, &p_neumann, &p_robin, &lambda}) {
        if (p->rows() != d || p->cols() != d)
            throw std::invalid_argument("general condition matrices must all be d x d");
    }
    for (const auto* p : {&p_dirichlet, &p_neumann, &p_robin}) {
        if (max_abs(*p - p->adjoint().eval()) > kValidateTol)
            throw std::invalid_argument("projection is not Hermitian");
        if (max_abs(*p * *p - *p) > kValidateTol)
            throw std::invalid_argument("projection is not idempotent");
    }
    if (max_abs(p_dirichlet * p_neumann) > kValidateTol ||
        max_abs(p_dirichlet * p_robin) > kValidateTol ||
        max_abs(p_neumann * p_robin) > kValidateTol)
        throw std::invalid_argument("projection ranges are not mutually orthogonal");
    Eigen::MatrixXcd sum = p_dirichlet + p_neumann + p_robin;
    if (max_abs(sum - Eigen::MatrixXcd::Identity(d, d)) > kValidateTol)
        throw std::invalid_argument("projections do not sum to the identity");

    if (max_abs(lambda - lambda.adjoint().eval()) > kValidateTol)
        throw std::invalid_argument("Lambda is not Hermitian");
    if (max_abs(lambda - p_robin * lambda * p_robin) > kValidateTol)
        throw std::invalid_argument("Lambda does not vanish off ran P_R");
    if (max_abs(lambda * p_robin - p_robin * lambda) > kValidateTol)
        throw std::invalid_argument("Lambda does not commute with P_R");

    Eigen::MatrixXcd basis = projection_range_basis(p_robin);
    if (basis.cols() > 0) {
        Eigen::MatrixXcd restricted = basis.adjoint() * lambda * basis;
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(restricted);
        if (svd.singularValues().minCoeff() <= 1e-12)
            throw std::invalid_argument("Lambda is not invertible on ran P_R");
    }
}

double GeneralCondition::max_imag() const {
    double m = 0.0;
    for (const auto* p : {&p_dirichlet, &p_neumann, &p_robin, &lambda})
        if (p->size() > 0) m = std::max(m, p->imag().cwiseAbs().maxCoeff());
    return m;
}

Eigen::MatrixXd averaging_projection(std::size_t d) {
    if (d == 0) throw std::invalid_argument("degree must be positive");
    return Eigen::MatrixXd::Constant(d, d, 1.0 / static_cast<double>(d));
}

Eigen::MatrixXd complement_projection(std::size_t d) {
    return Eigen::MatrixXd::Identity(d, d) - averaging_projection(d);
}

GeneralCondition projection_matrices(const PermInvariantCondition& cond, std::size_t d) {
    cond.validate();
    if (d == 0) throw std::invalid_argument("degree must be positive");
    const Eigen::MatrixXd p = averaging_projection(d);
    const Eigen::MatrixXd q = complement_projection(d);
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(d, d);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
    const double dd = static_cast<double>(d);

    GeneralCondition g;
    auto set = [&g](const Eigen::MatrixXd& pd, const Eigen::MatrixXd& pn,
                    const Eigen::MatrixXd& pr, const Eigen::MatrixXd& lam) {
        g.p_dirichlet = pd;
        g.p_neumann = pn;
        g.p_robin = pr;
        g.lambda = lam;
    };

    switch (cond.kind) {
        case ConditionKind::Kirchhoff:
            set(q, p, zero, zero);
            break;
        case ConditionKind::Delta:
            set(q, zero, p, (cond.coefficient / dd) * p);
            break;
        case ConditionKind::AntiKirchhoff:
            set(p, q, zero, zero);
            break;
        case ConditionKind::DeltaPrime:
            set(zero, q, p, (dd / cond.coefficient) * p);
            break;
        case ConditionKind::Type3a:
            set(p, zero, q, cond.coefficient * q);
            break;
        case ConditionKind::Type3b:
            set(zero, p, q, (1.0 / cond.coefficient) * q);
            break;
        case ConditionKind::Dirichlet:
            set(id, zero, zero, zero);
            break;
        case ConditionKind::Neumann:
            set(zero, id, zero, zero);
            break;
        case ConditionKind::Robin:
            set(zero, zero, id, cond.coefficient * id);
            break;
    }
    return g;
}

namespace {

enum class ProjShape { Zero, Averaging, Complement, Identity, Other };

ProjShape recognize(const Eigen::MatrixXcd& m) {
    const std::size_t d = static_cast<std::size_t>(m.rows());
    if (is_zero_matrix(m, kRecognizeTol)) return ProjShape::Zero;
    if (matrices_close(m, Eigen::MatrixXd::Identity(d, d), kRecognizeTol))
        return ProjShape::Identity;
    if (matrices_close(m, averaging_projection(d), kRecognizeTol)) return ProjShape::Averaging;
    if (matrices_close(m, complement_projection(d), kRecognizeTol)) return ProjShape::Complement;
    return ProjShape::Other;
}

/// Lambda restricted to ran P_R must act as a real constant; recovers it.
std::optional<double> lambda_constant(const Eigen::MatrixXcd& lambda,
                                      const Eigen::MatrixXd& p_robin, std::size_t rank) {
    if (rank == 0) return 0.0;
    std::complex<double> c = lambda.trace() / static_cast<double>(rank);
    if (std::abs(c.imag()) > kRecognizeTol) return std::nullopt;
    if (max_abs(lambda - c.real() * p_robin.cast<std::complex<double>>()) > kRecognizeTol)
        return std::nullopt;
    return c.real();
}

}  // namespace

std::optional<PermInvariantCondition> classify(const GeneralCondition& g) {
    const std::size_t d = g.degree();
    const double dd = static_cast<double>(d);
    const ProjShape pd = recognize(g.p_dirichlet);
    const ProjShape pn = recognize(g.p_neumann);
    const ProjShape pr = recognize(g.p_robin);
    if (pd == ProjShape::Other || pn == ProjShape::Other || pr == ProjShape::Other)
        return std::nullopt;

    // Note that P_1 = I and Q_1 = 0, so at degree one several kinds share a
    // triple; we report the first match in classification order I(a)..III(b),
    // then the decoupled kinds.
    auto matches = [&](ProjShape sd, ProjShape sn, ProjShape sr) {
        auto same = [d](ProjShape have, ProjShape want) {
            if (have == want) return true;
            if (d == 1) {
                // At d = 1 the averaging projection is the identity and its
                // complement is zero.
                if (want == ProjShape::Averaging) return have == ProjShape::Identity;
                if (want == ProjShape::Complement) return have == ProjShape::Zero;
            }
            return false;
        };
        return same(pd, sd) && same(pn, sn) && same(pr, sr);
    };

    auto robin_rank = [&](ProjShape shape) -> std::size_t {
        switch (shape) {
            case ProjShape::Zero: return 0;
            case ProjShape::Averaging: return 1;
            case ProjShape::Complement: return d - 1;
            case ProjShape::Identity: return d;
            default: return 0;
        }
    };

    auto constant = [&](const Eigen::MatrixXd& pr_exact, std::size_t rank) {
        return lambda_constant(g.lambda, pr_exact, rank);
    };

    using K = ConditionKind;
    // I(a): (Q, P, 0)
    if (matches(ProjShape::Complement, ProjShape::Averaging, ProjShape::Zero))
        if (is_zero_matrix(g.lambda, kRecognizeTol)) return PermInvariantCondition{K::Kirchhoff, 0.0};
    // I(b): (Q, 0, P), Lambda = alpha/d
    if (matches(ProjShape::Complement, ProjShape::Zero, ProjShape::Averaging))
        if (auto c = constant(averaging_projection(d), 1); c && *c * dd != 0.0)
            return PermInvariantCondition{K::Delta, *c * dd};
    // II(a): (P, Q, 0)
    if (matches(ProjShape::Averaging, ProjShape::Complement, ProjShape::Zero))
        if (is_zero_matrix(g.lambda, kRecognizeTol))
            return PermInvariantCondition{K::AntiKirchhoff, 0.0};
    // II(b): (0, Q, P), Lambda = d/beta
    if (matches(ProjShape::Zero, ProjShape::Complement, ProjShape::Averaging))
        if (auto c = constant(averaging_projection(d), 1); c && *c != 0.0)
            return PermInvariantCondition{K::DeltaPrime, dd / *c};
    // III(a): (P, 0, Q), Lambda = C. Unreachable at d = 1 (II(a) matches first).
    if (d > 1 && matches(ProjShape::Averaging, ProjShape::Zero, ProjShape::Complement))
        if (auto c = constant(complement_projection(d), robin_rank(ProjShape::Complement));
            c && *c != 0.0)
            return PermInvariantCondition{K::Type3a, *c};
    // III(b): (0, P, Q), Lambda = 1/D. Unreachable at d = 1 (I(a) matches first).
    if (d > 1 && matches(ProjShape::Zero, ProjShape::Averaging, ProjShape::Complement))
        if (auto c = constant(complement_projection(d), robin_rank(ProjShape::Complement));
            c && *c != 0.0)
            return PermInvariantCondition{K::Type3b, 1.0 / *c};
    // Decoupled kinds.
    if (pd == ProjShape::Identity && is_zero_matrix(g.lambda, kRecognizeTol))
        return PermInvariantCondition{K::Dirichlet, 0.0};
    if (pn == ProjShape::Identity && is_zero_matrix(g.lambda, kRecognizeTol))
        return PermInvariantCondition{K::Neumann, 0.0};
    if (pr == ProjShape::Identity)
        if (auto c = constant(Eigen::MatrixXd::Identity(d, d), d))
            return PermInvariantCondition{K::Robin, *c};
    return std::nullopt;
}

PermInvariantCondition natural_extension(const PermInvariantCondition& cond,
                                         std::size_t new_degree) {
    cond.validate();
    if (!kind_is_coupled(cond.kind))
        throw SurgeryError(std::string("no natural extension for decoupled '") +
                           kind_name(cond.kind) + "' conditions");
    if (new_degree == 0) throw std::invalid_argument("degree must be positive");
    return cond;  // kind and interaction strength are degree-independent
}

Eigen::MatrixXd form_constraints(const PermInvariantCondition& cond, std::size_t d) {
    cond.validate();
    if (d == 0) throw std::invalid_argument("degree must be positive");
    const auto dn = static_cast<Eigen::Index>(d);
    switch (cond.kind) {
        case ConditionKind::Kirchhoff:
        case ConditionKind::Delta: {
            // continuity: F_j - F_{j+1} = 0
            Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(dn - 1, dn);
            for (Eigen::Index j = 0; j + 1 < dn; ++j) {
                rows(j, j) = 1.0;
                rows(j, j + 1) = -1.0;
            }
            return rows;
        }
        case ConditionKind::AntiKirchhoff:
        case ConditionKind::Type3a:
            return Eigen::MatrixXd::Ones(1, dn);
        case ConditionKind::Dirichlet:
            return Eigen::MatrixXd::Identity(dn, dn);
        default:
            return Eigen::MatrixXd::Zero(0, dn);
    }
}

Eigen::MatrixXcd form_constraints(const GeneralCondition& g) {
    return projection_range_basis(g.p_dirichlet).adjoint();
}

Eigen::MatrixXd boundary_matrix(const PermInvariantCondition& cond, std::size_t d) {
    cond.validate();
    if (d == 0) throw std::invalid_argument("degree must be positive");
    const double dd = static_cast<double>(d);
    switch (cond.kind) {
        case ConditionKind::Delta:
            return (cond.coefficient / dd) * averaging_projection(d);
        case ConditionKind::DeltaPrime:
            return (dd / cond.coefficient) * averaging_projection(d);
        case ConditionKind::Type3a:
            return cond.coefficient * complement_projection(d);
        case ConditionKind::Type3b:
            return (1.0 / cond.coefficient) * complement_projection(d);
        case ConditionKind::Robin:
            return cond.coefficient * Eigen::MatrixXd::Identity(d, d);
        default:
            return Eigen::MatrixXd::Zero(d, d);
    }
}

Eigen::MatrixXcd boundary_matrix(const GeneralCondition& g) {
    return g.p_robin * g.lambda * g.p_robin;
}

namespace {

void check_constraints(const Eigen::MatrixXcd& rows, const Eigen::VectorXcd& trace) {
    if (rows.rows() == 0) return;
    const double scale = 1.0 + trace.norm();
    double worst = (rows * trace).cwiseAbs().maxCoeff();
    if (worst > kConstraintTol * scale)
        throw std::invalid_argument("trace violates the vertex form-domain constraints");
}

}  // namespace

double form_contribution(const PermInvariantCondition& cond, const Eigen::VectorXcd& trace) {
    const std::size_t d = static_cast<std::size_t>(trace.size());
    check_constraints(form_constraints(cond, d).cast<std::complex<double>>(), trace);
    const double dd = static_cast<double>(d);
    const std::complex<double> sum = trace.sum();
    switch (cond.kind) {
        case ConditionKind::Delta:
            return cond.coefficient * std::norm(trace(0));
        case ConditionKind::DeltaPrime:
            return std::norm(sum) / cond.coefficient;
        case ConditionKind::Type3a:
            return cond.coefficient * trace.squaredNorm();
        case ConditionKind::Type3b:
            return (trace.squaredNorm() - std::norm(sum) / dd) / cond.coefficient;
        case ConditionKind::Robin:
            return cond.coefficient * trace.squaredNorm();
        default:
            return 0.0;
    }
}

double form_contribution(const GeneralCondition& g, const Eigen::VectorXcd& trace) {
    check_constraints(form_constraints(g), trace);
    const Eigen::VectorXcd pf = g.p_robin * trace;
    return (g.lambda * pf).dot(pf).real();
}

}  // namespace qgraph

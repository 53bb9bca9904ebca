#include "qgraph/oracle.hpp"

#include "qgraph/errors.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qgraph {
namespace oracle {

namespace {

constexpr double kPi = std::numbers::pi;

/// Entire-function solution basis of -f'' = lambda f:
///   c(lambda, x) = cos(sqrt(lambda) x)   (cosh for lambda < 0)
///   s(lambda, x) = sin(sqrt(lambda) x) / sqrt(lambda)   (sinh/..., x at 0)
/// with c' = -lambda s and s' = c.
double basis_c(double lambda, double x) {
    const double z = lambda * x * x;
    if (std::abs(z) < 1e-8) return 1.0 - z / 2.0 + z * z / 24.0;
    if (lambda > 0.0) return std::cos(std::sqrt(lambda) * x);
    return std::cosh(std::sqrt(-lambda) * x);
}

double basis_s(double lambda, double x) {
    const double z = lambda * x * x;
    if (std::abs(z) < 1e-8) return x * (1.0 - z / 6.0 + z * z / 120.0);
    if (lambda > 0.0) {
        const double r = std::sqrt(lambda);
        return std::sin(r * x) / r;
    }
    const double r = std::sqrt(-lambda);
    return std::sinh(r * x) / r;
}

double lambda_of(double t) { return t * std::abs(t); }

/// Generic scan-and-bisect root finder for a continuous real function of
/// the spectral parameter t (lambda = t|t|). Returns roots in ascending
/// order; only sign changes are detected (simple zeros).
template <typename F>
std::vector<double> scan_sign_changes(F&& f, double t_lo, double t_hi, double step, double tol) {
    std::vector<double> roots;
    const long n = std::lround(std::ceil((t_hi - t_lo) / step));
    double prev_t = t_lo;
    double prev_v = f(prev_t);
    for (long i = 1; i <= n; ++i) {
        const double t = std::min(t_lo + static_cast<double>(i) * step, t_hi);
        const double v = f(t);
        if (prev_v == 0.0) {
            roots.push_back(prev_t);
        } else if (v != 0.0 && std::signbit(v) != std::signbit(prev_v)) {
            double a = prev_t, b = t, fa = prev_v;
            while (b - a > tol) {
                const double m = 0.5 * (a + b);
                const double fm = f(m);
                if (fm == 0.0) {
                    a = b = m;
                    break;
                }
                if (std::signbit(fm) == std::signbit(fa)) {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            roots.push_back(0.5 * (a + b));
        }
        prev_t = t;
        prev_v = v;
    }
    if (prev_v == 0.0) roots.push_back(prev_t);
    return roots;
}

}  // namespace

std::vector<double> interval_eigenvalues(double length, IntervalBc left, IntervalBc right,
                                         std::size_t k) {
    if (!(length > 0.0)) throw std::invalid_argument("length must be positive");
    std::vector<double> out;
    using Kind = IntervalBc::Kind;

    if (left.kind == Kind::Neumann && right.kind == Kind::Neumann) {
        for (std::size_t j = 1; j <= k; ++j)
            out.push_back(std::pow((static_cast<double>(j) - 1.0) * kPi / length, 2));
        return out;
    }
    if (left.kind == Kind::Dirichlet && right.kind == Kind::Dirichlet) {
        for (std::size_t j = 1; j <= k; ++j)
            out.push_back(std::pow(static_cast<double>(j) * kPi / length, 2));
        return out;
    }

    // Transcendental characteristic: pick (a, b) from the left condition,
    // evaluate the right condition on f = a c + b s.
    double a = 1.0, b = 0.0;
    switch (left.kind) {
        case Kind::Dirichlet: a = 0.0; b = 1.0; break;
        case Kind::Neumann: a = 1.0; b = 0.0; break;
        case Kind::Robin: a = 1.0; b = left.alpha; break;
    }
    auto chi = [&](double t) {
        const double lambda = lambda_of(t);
        const double c = basis_c(lambda, length);
        const double s = basis_s(lambda, length);
        const double value = a * c + b * s;
        const double deriv = -lambda * a * s + b * c;  // f'(L)
        switch (right.kind) {
            case Kind::Dirichlet: return value;
            case Kind::Neumann: return deriv;
            case Kind::Robin: return -deriv - right.alpha * value;
        }
        return 0.0;
    };

    double cap = 20.0;
    const double t_lo = -60.0;
    while (true) {
        auto roots = scan_sign_changes(chi, t_lo, cap, 1e-3, 1e-12);
        if (roots.size() >= k) {
            for (std::size_t i = 0; i < k; ++i) out.push_back(lambda_of(roots[i]));
            return out;
        }
        cap *= 1.5;
        if (cap > 4000.0)
            throw SolverError("interval oracle: could not locate enough eigenvalues");
    }
}

std::vector<double> loop_eigenvalues(double total_length, LoopCoupling coupling, std::size_t k) {
    if (!(total_length > 0.0)) throw std::invalid_argument("total length must be positive");
    std::vector<double> out;
    if (coupling == LoopCoupling::Periodic) {
        if (k >= 1) out.push_back(0.0);
        for (std::size_t j = 1; out.size() < k; ++j) {
            const double lambda = std::pow(2.0 * kPi * static_cast<double>(j) / total_length, 2);
            out.push_back(lambda);
            if (out.size() < k) out.push_back(lambda);
        }
    } else {
        for (std::size_t j = 1; out.size() < k; ++j) {
            const double lambda =
                std::pow((2.0 * static_cast<double>(j) - 1.0) * kPi / total_length, 2);
            out.push_back(lambda);
            if (out.size() < k) out.push_back(lambda);
        }
    }
    return out;
}

double robin_root(double alpha) {
    if (alpha == 0.0) return 0.0;
    if (alpha > 0.0) {
        // u tan u = alpha on (0, pi/2)
        auto g = [alpha](double u) { return u * std::tan(u) - alpha; };
        double lo = 1e-12, hi = kPi / 2.0 * (1.0 - 1e-14);
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (g(mid) < 0.0 ? lo : hi) = mid;
        }
        const double u = 0.5 * (lo + hi);
        return u * u;
    }
    // u tanh u = -alpha on (0, inf); eigenvalue is -u^2
    auto g = [alpha](double u) { return u * std::tanh(u) + alpha; };
    double lo = 0.0, hi = -alpha + 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) < 0.0 ? lo : hi) = mid;
    }
    const double u = 0.5 * (lo + hi);
    return -u * u;
}

namespace {

Eigen::MatrixXd real_projection_basis(const Eigen::MatrixXcd& p, const std::string& what) {
    if (p.size() > 0 && p.imag().cwiseAbs().maxCoeff() > 1e-12)
        throw SolverError(what + ": the secular oracle supports real conditions only");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.real());
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()(i) > 0.5) ++rank;
    return es.eigenvectors().rightCols(rank);
}

}  // namespace

SecularProblem::SecularProblem(const MetricGraph& graph, const ConditionMap& conditions) {
    if (graph.edges().size() > 3)
        throw std::invalid_argument("secular oracle supports at most 3 edges");
    if (graph.edges().empty()) throw std::invalid_argument("graph has no edges");
    for (const Edge& e : graph.edges()) {
        if (!e.potential.is_zero())
            throw std::invalid_argument("secular oracle requires zero potentials");
        lengths_.push_back(e.length);
    }

    for (const std::string& v : graph.vertices()) {
        auto it = conditions.find(v);
        if (it == conditions.end())
            throw std::invalid_argument("vertex '" + v + "' has no condition");
        VertexBoundaryMap bmap = graph.boundary_map(v);
        GeneralCondition gen;
        if (const auto* perm = std::get_if<PermInvariantCondition>(&it->second))
            gen = projection_matrices(*perm, bmap.degree());
        else
            gen = std::get<GeneralCondition>(it->second);
        if (gen.degree() != bmap.degree())
            throw std::invalid_argument("condition degree mismatch at vertex '" + v + "'");
        gen.validate();
        if (gen.max_imag() > 1e-12)
            throw SolverError("vertex '" + v +
                              "': the secular oracle supports real conditions only");

        VertexBlock block;
        block.entries = bmap.entries;
        block.u_dirichlet = real_projection_basis(gen.p_dirichlet, "vertex '" + v + "'");
        block.u_neumann = real_projection_basis(gen.p_neumann, "vertex '" + v + "'");
        block.u_robin = real_projection_basis(gen.p_robin, "vertex '" + v + "'");
        block.lambda = gen.lambda.real();
        vertices_.push_back(std::move(block));
    }
}

double SecularProblem::total_length() const {
    double sum = 0.0;
    for (double l : lengths_) sum += l;
    return sum;
}

Eigen::MatrixXd SecularProblem::matrix_at(double lambda) const {
    const auto dim = static_cast<Eigen::Index>(dimension());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::Index row = 0;
    for (const VertexBlock& block : vertices_) {
        const auto d = static_cast<Eigen::Index>(block.entries.size());
        // Trace matrices: F(v) = values * coeffs, F'(v) = derivs * coeffs.
        Eigen::MatrixXd values = Eigen::MatrixXd::Zero(d, dim);
        Eigen::MatrixXd derivs = Eigen::MatrixXd::Zero(d, dim);
        for (Eigen::Index i = 0; i < d; ++i) {
            const Incidence& inc = block.entries[static_cast<std::size_t>(i)];
            const auto ca = static_cast<Eigen::Index>(2 * inc.edge_index);
            const auto cb = ca + 1;
            if (inc.end == EdgeEnd::Tail) {
                values(i, ca) = 1.0;
                derivs(i, cb) = 1.0;
            } else {
                const double len = lengths_[inc.edge_index];
                const double c = basis_c(lambda, len);
                const double s = basis_s(lambda, len);
                values(i, ca) = c;
                values(i, cb) = s;
                derivs(i, ca) = lambda * s;  // outward: -f'(L)
                derivs(i, cb) = -c;
            }
        }
        auto put = [&m, &row](const Eigen::MatrixXd& rows) {
            m.block(row, 0, rows.rows(), rows.cols()) = rows;
            row += rows.rows();
        };
        if (block.u_dirichlet.cols() > 0) put(block.u_dirichlet.transpose() * values);
        if (block.u_neumann.cols() > 0) put(block.u_neumann.transpose() * derivs);
        if (block.u_robin.cols() > 0)
            put(block.u_robin.transpose() * (derivs - block.lambda * values));
    }
    return m;
}

namespace {

/// Rows scaled to unit norm; keeps determinant zeros and sign structure.
Eigen::MatrixXd normalize_rows(Eigen::MatrixXd m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double norm = m.row(i).norm();
        if (norm > 1e-280) m.row(i) /= norm;
    }
    return m;
}

}  // namespace

double SecularProblem::det_at(double t) const {
    return normalize_rows(matrix_at(lambda_of(t))).determinant();
}

double SecularProblem::sigma_min_at(double t) const {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(normalize_rows(matrix_at(lambda_of(t))));
    return svd.singularValues().minCoeff();
}

namespace {

struct Root {
    double t;
    int multiplicity;
};

int multiplicity_at(const SecularProblem& problem, double t, double tol) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(normalize_rows(problem.matrix_at(lambda_of(t))));
    const auto& sv = svd.singularValues();
    const double threshold = tol * std::max(1.0, sv.maxCoeff());
    int count = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) < threshold) ++count;
    return count;
}

/// Deep in the hyperbolic regime the row-normalized system degenerates and
/// sigma_min decays to zero over whole intervals; a genuine eigenvalue is an
/// isolated dip instead. Requires sigma_min to recover by three orders of
/// magnitude a few grid steps away.
bool isolated_root(const SecularProblem& problem, double t, double step) {
    const double s0 = problem.sigma_min_at(t);
    const double side =
        std::max(problem.sigma_min_at(t - 5.0 * step), problem.sigma_min_at(t + 5.0 * step));
    return s0 < 1e-3 * side;
}

/// Golden-section minimization of sigma_min on [a, b].
double minimize_sigma(const SecularProblem& problem, double a, double b, double tol) {
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - phi * (b - a);
    double x2 = a + phi * (b - a);
    double f1 = problem.sigma_min_at(x1);
    double f2 = problem.sigma_min_at(x2);
    while (b - a > tol) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = problem.sigma_min_at(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = problem.sigma_min_at(x2);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

std::vector<double> secular_eigenvalues(const MetricGraph& graph, const ConditionMap& conditions,
                                        std::size_t k, const SecularOptions& options) {
    SecularProblem problem(graph, conditions);
    if (k == 0) return {};

    const double step = options.grid_step;

    // In the hyperbolic regime the normalized determinant decays like
    // exp(-2|t| L_min) and eventually underflows; below that point roots are
    // not resolvable in double precision. Clamp the scan floor where a
    // coarse probe still sees structure.
    double t_floor = 0.0;
    for (double t = 0.0; t >= options.t_min; t -= 0.5) {
        const double magnitude = std::max({std::abs(problem.det_at(t)),
                                           std::abs(problem.det_at(t - 0.13)),
                                           std::abs(problem.det_at(t - 0.29))});
        if (magnitude < 1e-10) break;
        t_floor = t - 0.5;
    }
    const long i_lo = std::lround(std::floor(std::max(t_floor, options.t_min) / step));

    std::vector<Root> roots;
    double det_scale = 0.0;

    auto add_root = [&](double t, int mult) {
        for (Root& r : roots)
            if (std::abs(r.t - t) < 10.0 * options.root_tol + 1e-9) {
                r.multiplicity = std::max(r.multiplicity, mult);
                return;
            }
        roots.push_back({t, mult});
    };

    // Scans [i_from, i_to] * step; keeps one grid value of lookback so that
    // window extensions join seamlessly.
    auto scan_window = [&](long i_from, long i_to) {
        double prev2 = 0.0, prev1 = 0.0;
        bool have2 = false, have1 = false;
        for (long i = i_from; i <= i_to; ++i) {
            const double t = static_cast<double>(i) * step;
            const double v = problem.det_at(t);
            det_scale = std::max(det_scale, std::abs(v));
            if (have1 && prev1 != 0.0 && v != 0.0 && std::signbit(v) != std::signbit(prev1)) {
                // simple (odd-multiplicity) zero: bisect
                double a = t - step, b = t, fa = prev1;
                while (b - a > options.root_tol) {
                    const double m = 0.5 * (a + b);
                    const double fm = problem.det_at(m);
                    if (fm == 0.0) {
                        a = b = m;
                        break;
                    }
                    if (std::signbit(fm) == std::signbit(fa)) {
                        a = m;
                        fa = fm;
                    } else {
                        b = m;
                    }
                }
                const double root = 0.5 * (a + b);
                if (isolated_root(problem, root, step))
                    add_root(root,
                             std::max(1, multiplicity_at(problem, root, options.singular_tol)));
            } else if (have2 && std::abs(prev1) <= std::abs(prev2) &&
                       std::abs(prev1) < std::abs(v) &&
                       std::abs(prev1) <= 0.05 * std::max(det_scale, 1e-12) &&
                       (prev1 == 0.0 || std::signbit(prev1) == std::signbit(prev2))) {
                // |det| has a small local minimum without a sign change:
                // candidate touching zero (even multiplicity). Confirmed by
                // minimizing sigma_min; smooth nonzero dips are rejected there.
                const double refined =
                    minimize_sigma(problem, t - 2.0 * step, t, options.root_tol);
                const int mult = multiplicity_at(problem, refined, options.singular_tol);
                if (mult > 0 && isolated_root(problem, refined, step)) add_root(refined, mult);
            }
            prev2 = prev1;
            have2 = have1;
            prev1 = v;
            have1 = true;
        }
    };

    double cap = options.initial_t_cap;
    long i_hi = std::lround(std::ceil(cap / step));
    scan_window(i_lo, i_hi);
    if (det_scale < 1e-10)
        throw SolverError("secular determinant vanishes identically on the scan grid");
    auto total = [&roots]() {
        std::size_t n = 0;
        for (const Root& r : roots) n += static_cast<std::size_t>(r.multiplicity);
        return n;
    };
    while (total() < k) {
        if (cap >= options.max_t_cap)
            throw SolverError("secular oracle: fewer than " + std::to_string(k) +
                              " eigenvalues below the scan cap");
        const long i_prev = i_hi;
        cap = std::min(cap * 1.5, options.max_t_cap);
        i_hi = std::lround(std::ceil(cap / step));
        scan_window(i_prev - 2, i_hi);
    }

    std::sort(roots.begin(), roots.end(), [](const Root& a, const Root& b) { return a.t < b.t; });
    std::vector<double> out;
    for (const Root& r : roots)
        for (int m = 0; m < r.multiplicity && out.size() < k; ++m)
            out.push_back(lambda_of(r.t));
    return out;
}

}  // namespace oracle
}  // namespace qgraph

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qgraph/errors.hpp"
#include "qgraph/fem.hpp"
#include "qgraph/graph_io.hpp"
#include "qgraph/oracle.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace qgraph;

namespace {

constexpr double kPi = std::numbers::pi;

ParsedGraph interval(const std::string& left, const std::string& right) {
    return parse_graph("[vertices]\nv1 " + left + "\nv2 " + right +
                       "\n[edges]\ne1 v1 v2 length=1\n");
}

/// Independent evaluation of the quadratic form on the P1 function with
/// nodal values x: exact cell integrals plus the vertex contributions.
double evaluate_form(const ParsedGraph& parsed, const Mesh& mesh, const Eigen::VectorXd& x) {
    const DofLayout layout = dof_layout(parsed.graph, mesh);
    double total = 0.0;
    for (std::size_t ei = 0; ei < parsed.graph.edges().size(); ++ei) {
        const Edge& e = parsed.graph.edges()[ei];
        const int cells = mesh.cells_per_edge[ei];
        const double h = e.length / cells;
        const int per_sample = cells / static_cast<int>(e.potential.samples.size());
        for (int c = 0; c < cells; ++c) {
            const double a = x(static_cast<Eigen::Index>(layout.node(ei, c)));
            const double b = x(static_cast<Eigen::Index>(layout.node(ei, c + 1)));
            const double q = e.potential.samples[static_cast<std::size_t>(c / per_sample)];
            total += (b - a) * (b - a) / h;
            total += q * h * (a * a + a * b + b * b) / 3.0;
        }
    }
    for (const std::string& v : parsed.graph.vertices()) {
        const VertexBoundaryMap bm = parsed.graph.boundary_map(v);
        Eigen::VectorXcd trace(static_cast<Eigen::Index>(bm.degree()));
        for (std::size_t i = 0; i < bm.degree(); ++i)
            trace(static_cast<Eigen::Index>(i)) =
                x(static_cast<Eigen::Index>(layout.boundary_dof(bm.entries[i], mesh)));
        const auto& cond = std::get<PermInvariantCondition>(parsed.conditions.at(v));
        total += form_contribution(cond, trace);
    }
    return total;
}

}  // namespace

TEST_CASE("build_mesh: ceiling rule and sample-multiple rounding") {
    auto one = parse_graph("[vertices]\na kirchhoff\nb kirchhoff\n[edges]\ne a b length=1\n");
    CHECK(build_mesh(one.graph, 0.25).cells_per_edge == std::vector<int>{4});
    CHECK(build_mesh(one.graph, 0.3).cells_per_edge == std::vector<int>{4});
    CHECK(build_mesh(one.graph, 10.0).cells_per_edge == std::vector<int>{1});

    auto sampled = parse_graph(
        "[vertices]\na kirchhoff\nb kirchhoff\n[edges]\ne a b length=1 q=1,2,3\n");
    CHECK(build_mesh(sampled.graph, 0.25).cells_per_edge == std::vector<int>{6});

    CHECK_THROWS_AS(build_mesh(one.graph, 0.0), std::invalid_argument);
}

TEST_CASE("assemble: textbook interval matrices, no constraints") {
    auto parsed = interval("neumann", "neumann");
    Mesh mesh{{2}};
    auto problem = assemble(parsed.graph, parsed.conditions, mesh);

    Eigen::MatrixXd a(3, 3), b(3, 3);
    a << 2, -2, 0, -2, 4, -2, 0, -2, 2;                      // (1/h), h = 1/2
    b << 2, 1, 0, 1, 4, 1, 0, 1, 2;
    b *= 1.0 / 12.0;                                          // h/6
    CHECK((problem.stiffness - a).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((problem.mass - b).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((problem.null_basis - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("assemble: Dirichlet ends reduce to the interior dof") {
    auto parsed = interval("dirichlet", "dirichlet");
    auto problem = assemble(parsed.graph, parsed.conditions, Mesh{{2}});
    REQUIRE(problem.reduced_dim() == 1);
    Eigen::VectorXd t = problem.null_basis.col(0).cwiseAbs();
    CHECK(t(0) == 0.0);
    CHECK(t(1) == 1.0);
    CHECK(t(2) == 0.0);
}

TEST_CASE("assemble: delta strength lands on the boundary diagonal") {
    auto plain = interval("neumann", "neumann");
    auto withdelta = interval("delta alpha=2.5", "neumann");
    auto pa = assemble(plain.graph, plain.conditions, Mesh{{2}});
    auto pb = assemble(withdelta.graph, withdelta.conditions, Mesh{{2}});
    Eigen::MatrixXd diff = pb.stiffness - pa.stiffness;
    CHECK(diff(0, 0) == doctest::Approx(2.5));
    diff(0, 0) = 0.0;
    CHECK(diff.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("assemble: symmetry, definite mass, annihilated constraints") {
    auto parsed = parse_graph(
        "[vertices]\nv1 deltaprime beta=-1.5\nv2 antikirchhoff\nv3 type3a C=2\n"
        "[edges]\ne1 v1 v2 length=1 q=0.5,-0.25\ne2 v2 v3 length=0.75\ne3 v3 v1 length=0.5\n");
    auto problem = assemble(parsed.graph, parsed.conditions, build_mesh(parsed.graph, 0.1));
    const double scale = problem.stiffness.cwiseAbs().maxCoeff();
    CHECK((problem.stiffness - problem.stiffness.transpose()).cwiseAbs().maxCoeff() <=
          1e-12 * scale);
    CHECK((problem.mass - problem.mass.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((problem.null_basis.transpose() * problem.null_basis -
           Eigen::MatrixXd::Identity(problem.reduced_dim(), problem.reduced_dim()))
              .cwiseAbs()
              .maxCoeff() <= 1e-13);
    // two sum constraints: one at v2, one at v3
    CHECK(problem.reduced_dim() == problem.full_dim() - 2);

    Eigen::LLT<Eigen::MatrixXd> llt(problem.mass);
    CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("assemble rejects complex-valued conditions") {
    // loop at v1 so the vertex has degree 2; P_D projects onto span{(1, i)}
    auto parsed = parse_graph("[vertices]\nv1 neumann\n[edges]\ne1 v1 v1 length=1\n");
    Eigen::VectorXcd u(2);
    u << std::complex<double>(1, 0) / std::sqrt(2.0), std::complex<double>(0, 1) / std::sqrt(2.0);
    GeneralCondition g;
    g.p_dirichlet = u * u.adjoint();
    g.p_neumann = Eigen::MatrixXcd::Identity(2, 2) - g.p_dirichlet;
    g.p_robin = Eigen::MatrixXcd::Zero(2, 2);
    g.lambda = Eigen::MatrixXcd::Zero(2, 2);
    g.validate();
    ConditionMap conditions = parsed.conditions;
    conditions["v1"] = g;
    CHECK_THROWS_AS(assemble(parsed.graph, conditions, Mesh{{4}}), SolverError);

    // a real general condition assembles fine
    GeneralCondition real_g = projection_matrices({ConditionKind::Kirchhoff, 0.0}, 2);
    conditions["v1"] = real_g;
    auto problem = assemble(parsed.graph, conditions, Mesh{{4}});
    auto ring = solve_spectrum(problem, 3);
    // Kirchhoff loop of length 1 is the periodic circle
    CHECK(std::abs(ring.eigenvalues[0]) <= 1e-8);
    CHECK(ring.eigenvalues[1] == doctest::Approx(4.0 * kPi * kPi).epsilon(0.05));
}

TEST_CASE("solve: Neumann interval eigenvalues converge to (k-1)^2 pi^2") {
    auto parsed = interval("neumann", "neumann");
    auto problem = assemble(parsed.graph, parsed.conditions, build_mesh(parsed.graph, 1.0 / 200));
    auto spectrum = solve_spectrum(problem, 3);
    CHECK(std::abs(spectrum.eigenvalues[0]) <= 1e-8);
    CHECK(spectrum.eigenvalues[1] == doctest::Approx(kPi * kPi).epsilon(1e-3));
    CHECK(spectrum.eigenvalues[2] == doctest::Approx(4.0 * kPi * kPi).epsilon(1e-3));
}

TEST_CASE("solve: anti-Kirchhoff interval is Dirichlet") {
    auto parsed = interval("antikirchhoff", "antikirchhoff");
    auto problem = assemble(parsed.graph, parsed.conditions, build_mesh(parsed.graph, 1.0 / 200));
    auto spectrum = solve_spectrum(problem, 2);
    CHECK(spectrum.eigenvalues[0] == doctest::Approx(kPi * kPi).epsilon(1e-3));
    CHECK(spectrum.eigenvalues[1] == doctest::Approx(4.0 * kPi * kPi).epsilon(1e-3));
}

TEST_CASE("solve: Robin ground state matches the oracle root") {
    auto parsed = interval("robin alpha=1", "neumann");
    auto problem = assemble(parsed.graph, parsed.conditions, build_mesh(parsed.graph, 1.0 / 200));
    auto spectrum = solve_spectrum(problem, 1);
    CHECK(std::abs(spectrum.eigenvalues[0] - oracle::robin_root(1.0)) <= 1e-4);
}

TEST_CASE("solve: k bounds and the empty request") {
    auto parsed = interval("dirichlet", "dirichlet");
    auto problem = assemble(parsed.graph, parsed.conditions, Mesh{{2}});
    CHECK(solve_spectrum(problem, 0).size() == 0);
    CHECK_THROWS_AS(solve_spectrum(problem, 2), SolverError);
}

TEST_CASE("eigenvalues decrease under mesh refinement") {
    auto parsed = parse_graph(
        "[vertices]\nv1 delta alpha=-1\nv2 deltaprime beta=2\n[edges]\n"
        "e1 v1 v2 length=1\ne2 v1 v2 length=0.6 q=1,-2\n");
    Mesh coarse = build_mesh(parsed.graph, 0.2);
    Mesh fine = coarse.refined();
    auto sc = solve_spectrum(assemble(parsed.graph, parsed.conditions, coarse), 5);
    auto sf = solve_spectrum(assemble(parsed.graph, parsed.conditions, fine), 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(sf.eigenvalues[i] <= sc.eigenvalues[i] + 1e-10);
}

TEST_CASE("nonnegative data gives a nonnegative spectrum") {
    auto parsed = parse_graph(
        "[vertices]\nv1 delta alpha=0.5\nv2 type3a C=1\nv3 dirichlet\n[edges]\n"
        "e1 v1 v2 length=1 q=0.5\ne2 v2 v3 length=0.75 q=0,1\ne3 v1 v1 length=0.5\n");
    auto problem = assemble(parsed.graph, parsed.conditions, build_mesh(parsed.graph, 0.1));
    auto spectrum = solve_spectrum(problem, 6);
    CHECK(spectrum.eigenvalues[0] >= -1e-10);
}

TEST_CASE("Kirchhoff Laplacian: zero ground state, multiplicity = components") {
    auto parsed = parse_graph(
        "[vertices]\na kirchhoff\nb kirchhoff\nc kirchhoff\nd kirchhoff\n[edges]\n"
        "e1 a b length=1\ne2 a b length=0.5\ne3 c d length=0.8\n");
    REQUIRE(parsed.graph.connected_components() == 2);
    auto problem = assemble(parsed.graph, parsed.conditions, build_mesh(parsed.graph, 0.1));
    auto spectrum = solve_spectrum(problem, 4);
    CHECK(std::abs(spectrum.eigenvalues[0]) <= 1e-8);
    int zero_cluster = 0;
    for (std::size_t i = 0; i < spectrum.size(); ++i)
        if (spectrum.clusters[i] == spectrum.clusters[0]) ++zero_cluster;
    CHECK(zero_cluster == 2);
}

TEST_CASE("reduced quadratic form equals the exact form of the P1 function") {
    auto parsed = parse_graph(
        "[vertices]\nv1 delta alpha=1.5\nv2 antikirchhoff\nv3 type3b D=2\n[edges]\n"
        "e1 v1 v2 length=1 q=0.5,-1\ne2 v2 v3 length=0.5\ne3 v3 v1 length=0.75 q=2\n");
    Mesh mesh = build_mesh(parsed.graph, 0.2);
    auto problem = assemble(parsed.graph, parsed.conditions, mesh);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
        Eigen::VectorXd y(problem.reduced_dim());
        for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = u(rng);
        const Eigen::VectorXd x = problem.null_basis * y;
        const double quadratic = y.dot(problem.null_basis.transpose() * problem.stiffness *
                                       problem.null_basis * y);
        const double exact = evaluate_form(parsed, mesh, x);
        CHECK(quadratic == doctest::Approx(exact).epsilon(1e-12));
    }
}

TEST_CASE("convergence order is two") {
    auto parsed = interval("neumann", "neumann");
    double errors[3];
    int n = 20;
    for (int level = 0; level < 3; ++level, n *= 2) {
        Mesh mesh{{n}};
        auto spectrum = solve_spectrum(assemble(parsed.graph, parsed.conditions, mesh), 3);
        errors[level] = spectrum.eigenvalues[1] - kPi * kPi;
        CHECK(errors[level] > 0.0);  // conforming elements approach from above
    }
    const double rate1 = std::log2(errors[0] / errors[1]);
    const double rate2 = std::log2(errors[1] / errors[2]);
    CHECK(rate1 == doctest::Approx(2.0).epsilon(0.1));
    CHECK(rate2 == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("refine_and_extrapolate sharpens the interval eigenvalues") {
    auto parsed = interval("neumann", "neumann");
    auto spectrum = refine_and_extrapolate(parsed.graph, parsed.conditions, 3, 2, 1.0 / 64);
    CHECK(std::abs(spectrum.eigenvalues[1] - kPi * kPi) <= 1e-6);
    CHECK(std::abs(spectrum.eigenvalues[2] - 4.0 * kPi * kPi) <= 2e-5);
    // the zero eigenvalue is exact on every level, so its estimate vanishes
    CHECK(std::abs(spectrum.eigenvalues[0]) <= 1e-10);
    CHECK(spectrum.error_estimates[0] <= 1e-12);
    CHECK(spectrum.mesh.levels == 2);

    auto robin = interval("robin alpha=1", "neumann");
    auto ext = refine_and_extrapolate(robin.graph, robin.conditions, 1, 2, 1.0 / 64);
    CHECK(std::abs(ext.eigenvalues[0] - oracle::robin_root(1.0)) <= 1e-6);

    CHECK_THROWS_AS(refine_and_extrapolate(parsed.graph, parsed.conditions, 1, 1, 0.1),
                    std::invalid_argument);
}

TEST_CASE("spectrum CSV format") {
    Spectrum s;
    s.eigenvalues = {0.0, 9.87};
    s.error_estimates = {0.0, 1e-6};
    s.clusters = {1, 2};
    CHECK(s.to_csv() == "k,lambda,error_estimate,cluster\n1,0,0,1\n2,9.87,1e-06,2\n");
}

TEST_CASE("clustering groups nearly equal eigenvalues") {
    auto clusters = cluster_eigenvalues({1.0, 1.0 + 1e-9, 2.0, 2.0, 3.0});
    CHECK(clusters == std::vector<int>{1, 1, 2, 2, 3});
}

#include "qgraph/verify.hpp"

#include "qgraph/errors.hpp"
#include "qgraph/graph_io.hpp"
#include "qgraph/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

namespace qgraph {

namespace {

std::string format_row(std::size_t k, const ComparisonRow& row) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%zu,%.15g,%.15g,%.15g,%d\n", k, row.lambda_before,
                  row.lambda_after, row.diff, row.pass ? 1 : 0);
    return buf;
}

}  // namespace

ComparisonReport compare_spectra(const Spectrum& before, const Spectrum& after,
                                 const DirectionVerdict& verdict, double slack) {
    if (before.size() != after.size())
        throw std::invalid_argument("mismatched eigenvalue counts: " +
                                    std::to_string(before.size()) + " vs " +
                                    std::to_string(after.size()));
    ComparisonReport report;
    report.verdict = verdict;

    bool all_up = true, all_down = true;
    for (std::size_t i = 0; i < before.size(); ++i) {
        ComparisonRow row;
        row.lambda_before = before.eigenvalues[i];
        row.lambda_after = after.eigenvalues[i];
        row.diff = row.lambda_after - row.lambda_before;
        const double tol = slack * (1.0 + std::abs(row.lambda_before));
        switch (verdict.direction) {
            case Direction::NonIncreasing: row.pass = row.diff <= tol; break;
            case Direction::NonDecreasing: row.pass = row.diff >= -tol; break;
            case Direction::NoGuarantee: row.pass = true; break;
        }
        if (row.diff > tol) all_down = false;
        if (row.diff < -tol) all_up = false;
        report.pass = report.pass && row.pass;
        report.rows.push_back(row);
    }
    if (all_up && all_down)
        report.observed = "equal";
    else if (all_down)
        report.observed = "non-increasing";
    else if (all_up)
        report.observed = "non-decreasing";
    else
        report.observed = "mixed";
    return report;
}

std::string ComparisonReport::to_csv() const {
    std::string out = "k,lambda_before,lambda_after,diff,pass\n";
    for (std::size_t i = 0; i < rows.size(); ++i) out += format_row(i + 1, rows[i]);
    return out;
}

std::string ComparisonReport::to_text() const {
    std::ostringstream out;
    out << "surgery:   " << surgery << "\n"
        << "predicted: " << direction_name(verdict.direction) << " [" << verdict.theorem << "]\n"
        << "observed:  " << observed << "\n"
        << "result:    " << (pass ? "pass" : "FAIL") << "\n";
    char buf[160];
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "  k=%-3zu before=%- 18.10g after=%- 18.10g diff=%- .3e %s\n",
                      i + 1, rows[i].lambda_before, rows[i].lambda_after, rows[i].diff,
                      rows[i].pass ? "ok" : "FAIL");
        out << buf;
    }
    return out.str();
}

namespace {

bool is_join(const SurgeryOp& op) { return std::holds_alternative<JoinVertices>(op); }

}  // namespace

ComparisonReport run_surgery_case(const MetricGraph& graph, const ConditionMap& conditions,
                                  const SurgeryOp& op, std::size_t k, MeshPolicy policy,
                                  double slack) {
    SurgeryResult after = apply_surgery(graph, conditions, op);
    DirectionVerdict verdict = expected_direction(op, graph, conditions);

    Mesh mesh_before = build_mesh(graph, policy.h_target);
    for (int attempt = 0;; ++attempt) {
        Mesh mesh_after;
        if (is_join(op)) {
            // joining leaves the edge set untouched: identical mesh
            mesh_after = mesh_before;
        } else {
            // attach: old edges keep their cells, the new edge gets its own
            Mesh new_part = build_mesh(after.graph, policy.h_target);
            mesh_after = mesh_before;
            for (int refine = 0; refine < attempt; ++refine)
                new_part = new_part.refined();
            mesh_after.cells_per_edge.push_back(new_part.cells_per_edge.back());
        }

        DiscreteProblem pb = assemble(graph, conditions, mesh_before);
        DiscreteProblem pa = assemble(after.graph, after.conditions, mesh_after);
        if (pb.reduced_dim() < k || pa.reduced_dim() < k) {
            if (attempt > 24) throw SolverError("cannot reach the requested eigenvalue count");
            mesh_before = mesh_before.refined();
            continue;
        }

        Spectrum sb = solve_spectrum(pb, k);
        Spectrum sa = solve_spectrum(pa, k);
        ComparisonReport report = compare_spectra(sb, sa, verdict, slack);
        report.surgery = surgery_description(op);
        report.nested_meshes = true;
        return report;
    }
}

const char* branch_name(SuiteBranch branch) {
    switch (branch) {
        case SuiteBranch::AttachEdgeCoupled: return "attach-edge";
        case SuiteBranch::PendantZeroExtension: return "attach-pendant-coupled";
        case SuiteBranch::PendantRobin: return "attach-pendant-robin";
        case SuiteBranch::JoinTypeI: return "join-type-I";
        case SuiteBranch::JoinTypeII: return "join-type-II";
        case SuiteBranch::JoinTypeIIIa: return "join-type-IIIa";
        case SuiteBranch::JoinTypeIIIbPositive: return "join-type-IIIb-pos";
        case SuiteBranch::JoinTypeIIIbNegative: return "join-type-IIIb-neg";
    }
    return "?";
}

const std::vector<SuiteBranch>& all_branches() {
    static const std::vector<SuiteBranch> branches = {
        SuiteBranch::AttachEdgeCoupled,  SuiteBranch::PendantZeroExtension,
        SuiteBranch::PendantRobin,       SuiteBranch::JoinTypeI,
        SuiteBranch::JoinTypeII,         SuiteBranch::JoinTypeIIIa,
        SuiteBranch::JoinTypeIIIbPositive, SuiteBranch::JoinTypeIIIbNegative,
    };
    return branches;
}

namespace {

/// Deterministic helpers on top of mt19937_64; distribution code is ours so
/// that seeds reproduce across standard libraries.
struct Rng {
    std::mt19937_64 eng;

    explicit Rng(std::uint64_t seed) : eng(seed) {}

    double u01() { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }
    double range(double lo, double hi) { return lo + (hi - lo) * u01(); }
    std::uint64_t below(std::uint64_t n) { return eng() % n; }
    bool flip() { return (eng() & 1) != 0; }

    double magnitude(const RandomParams& p) { return range(p.coeff_min_abs, p.coeff_max_abs); }
    double signed_coeff(const RandomParams& p) { return flip() ? magnitude(p) : -magnitude(p); }
};

EdgePotential random_potential(Rng& rng, const RandomParams& p, bool nonnegative) {
    EdgePotential pot;
    pot.samples.clear();
    const int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(p.max_potential_samples)));
    for (int i = 0; i < n; ++i) {
        double q = rng.range(-p.potential_max_abs, p.potential_max_abs);
        if (nonnegative) q = std::abs(q);
        pot.samples.push_back(q);
    }
    return pot;
}

/// Any condition, any signs (used away from the surgery endpoints).
PermInvariantCondition random_condition_any(Rng& rng, const RandomParams& p) {
    switch (rng.below(9)) {
        case 0: return {ConditionKind::Kirchhoff, 0.0};
        case 1: return {ConditionKind::Delta, rng.signed_coeff(p)};
        case 2: return {ConditionKind::AntiKirchhoff, 0.0};
        case 3: return {ConditionKind::DeltaPrime, rng.signed_coeff(p)};
        case 4: return {ConditionKind::Type3a, rng.signed_coeff(p)};
        case 5: return {ConditionKind::Type3b, rng.signed_coeff(p)};
        case 6: return {ConditionKind::Dirichlet, 0.0};
        case 7: return {ConditionKind::Neumann, 0.0};
        default: return {ConditionKind::Robin, rng.signed_coeff(p)};
    }
}

/// Conditions whose vertex terms are positive semidefinite, so that with
/// q >= 0 the whole spectrum is nonnegative.
PermInvariantCondition random_condition_nonnegative(Rng& rng, const RandomParams& p) {
    switch (rng.below(9)) {
        case 0: return {ConditionKind::Kirchhoff, 0.0};
        case 1: return {ConditionKind::Delta, rng.magnitude(p)};
        case 2: return {ConditionKind::AntiKirchhoff, 0.0};
        case 3: return {ConditionKind::DeltaPrime, rng.magnitude(p)};
        case 4: return {ConditionKind::Type3a, rng.magnitude(p)};
        case 5: return {ConditionKind::Type3b, rng.magnitude(p)};
        case 6: return {ConditionKind::Dirichlet, 0.0};
        case 7: return {ConditionKind::Neumann, 0.0};
        default: return {ConditionKind::Robin, rng.magnitude(p)};
    }
}

struct GraphDraw {
    MetricGraph graph;
    std::vector<std::string> vertices;
};

/// Random connected multigraph (loops allowed) where every vertex has at
/// least one incident edge; potentials drawn per edge.
GraphDraw random_graph(Rng& rng, const RandomParams& p, bool nonnegative_q) {
    const int nv = 2 + static_cast<int>(rng.below(3));
    std::vector<std::string> vertices;
    for (int i = 1; i <= nv; ++i) vertices.push_back("v" + std::to_string(i));

    std::vector<Edge> edges;
    int next_edge = 1;
    auto add_edge = [&](const std::string& a, const std::string& b) {
        Edge e;
        e.id = "e" + std::to_string(next_edge++);
        e.tail = a;
        e.head = b;
        e.length = rng.range(p.min_length, p.max_length);
        e.potential = random_potential(rng, p, nonnegative_q);
        edges.push_back(std::move(e));
    };
    for (int i = 0; i + 1 < nv; ++i) add_edge(vertices[i], vertices[i + 1]);
    const int extra_cap = std::max(0, p.max_edges - (nv - 1));
    const int extra = static_cast<int>(rng.below(static_cast<std::uint64_t>(extra_cap) + 1));
    for (int i = 0; i < extra; ++i) {
        const auto a = rng.below(static_cast<std::uint64_t>(nv));
        const auto b = rng.below(static_cast<std::uint64_t>(nv));
        add_edge(vertices[a], vertices[b]);
    }

    GraphDraw draw;
    draw.graph = MetricGraph::create(vertices, std::move(edges));
    draw.vertices = std::move(vertices);
    return draw;
}

std::string join_case_label(double b1, double b2) {
    if (b1 * b2 == 0.0) return "(vi)";
    if (b1 > 0.0 && b2 > 0.0) return "(i)";
    if (b1 < 0.0 && b2 < 0.0) return "(ii)";
    const double b0 = b1 + b2;
    if (b0 > 0.0) return "(iii)";
    if (b0 < 0.0) return "(iv)";
    return "(v)";
}

}  // namespace

RandomInstance random_instance(std::uint64_t seed, SuiteBranch branch,
                               const RandomParams& params) {
    Rng rng(seed * 0x9E3779B97F4A7C15ull + 0x2545F4914F6CDD1Dull +
            static_cast<std::uint64_t>(branch));
    const bool nonnegative = branch == SuiteBranch::PendantRobin;
    GraphDraw draw = random_graph(rng, params, nonnegative);

    RandomInstance inst;
    inst.case_label = "-";
    ConditionMap conditions;
    for (const std::string& v : draw.vertices)
        conditions[v] = nonnegative ? random_condition_nonnegative(rng, params)
                                    : random_condition_any(rng, params);

    auto coupled_endpoint = [&rng, &params]() -> PermInvariantCondition {
        switch (rng.below(3)) {
            case 0: return {ConditionKind::AntiKirchhoff, 0.0};
            case 1: return {ConditionKind::DeltaPrime, rng.signed_coeff(params)};
            default: return {ConditionKind::Type3a, rng.signed_coeff(params)};
        }
    };

    const std::string v1 = draw.vertices[0];
    const std::string v2 = draw.vertices[1];

    switch (branch) {
        case SuiteBranch::AttachEdgeCoupled: {
            conditions[v1] = coupled_endpoint();
            conditions[v2] = coupled_endpoint();
            AttachEdge op;
            op.v1 = v1;
            op.v2 = v2;
            op.length = rng.range(params.min_length, params.max_length);
            op.potential = random_potential(rng, params, false);
            inst.op = op;
            break;
        }
        case SuiteBranch::PendantZeroExtension: {
            conditions[v1] = coupled_endpoint();
            AttachPendant op;
            op.v1 = v1;
            op.length = rng.range(params.min_length, params.max_length);
            op.potential = random_potential(rng, params, false);
            // any degree-one condition is admissible here
            op.new_condition = random_condition_any(rng, params);
            if (op.new_condition.kind == ConditionKind::Type3a ||
                op.new_condition.kind == ConditionKind::Type3b)
                op.new_condition = {ConditionKind::Dirichlet, 0.0};
            inst.op = op;
            break;
        }
        case SuiteBranch::PendantRobin: {
            switch (rng.below(3)) {
                case 0: conditions[v1] = PermInvariantCondition{ConditionKind::Kirchhoff, 0.0}; break;
                case 1: conditions[v1] = PermInvariantCondition{ConditionKind::Delta, rng.magnitude(params)}; break;
                default: conditions[v1] = PermInvariantCondition{ConditionKind::Type3b, rng.magnitude(params)}; break;
            }
            AttachPendant op;
            op.v1 = v1;
            op.length = rng.range(params.min_length, params.max_length);
            op.potential = random_potential(rng, params, false);
            if (op.potential.integral(op.length) > 0.0)
                for (double& q : op.potential.samples) q = -q;
            const double alpha = rng.flip() ? 0.0 : -rng.magnitude(params);
            op.new_condition = alpha == 0.0 ? PermInvariantCondition{ConditionKind::Kirchhoff, 0.0}
                                            : PermInvariantCondition{ConditionKind::Robin, alpha};
            inst.op = op;
            break;
        }
        case SuiteBranch::JoinTypeI: {
            auto draw_type1 = [&]() -> PermInvariantCondition {
                return rng.flip() ? PermInvariantCondition{ConditionKind::Kirchhoff, 0.0}
                                  : PermInvariantCondition{ConditionKind::Delta,
                                                           rng.signed_coeff(params)};
            };
            conditions[v1] = draw_type1();
            conditions[v2] = draw_type1();
            inst.op = JoinVertices{v1, v2};
            break;
        }
        case SuiteBranch::JoinTypeII: {
            double b1 = 0.0, b2 = 0.0;
            switch (seed % 6) {
                case 0: b1 = rng.magnitude(params); b2 = rng.magnitude(params); break;
                case 1: b1 = -rng.magnitude(params); b2 = -rng.magnitude(params); break;
                case 2: {  // mixed signs, positive sum
                    b1 = rng.magnitude(params);
                    b2 = -rng.range(params.coeff_min_abs * 0.25, b1 * 0.75);
                    break;
                }
                case 3: {  // mixed signs, negative sum
                    b1 = -rng.magnitude(params);
                    b2 = rng.range(params.coeff_min_abs * 0.25, -b1 * 0.75);
                    break;
                }
                case 4: {  // mixed signs, zero sum
                    b1 = rng.magnitude(params);
                    b2 = -b1;
                    break;
                }
                default: {  // at least one anti-Kirchhoff
                    b1 = 0.0;
                    b2 = rng.flip() ? 0.0 : rng.signed_coeff(params);
                    break;
                }
            }
            auto type2 = [](double beta) -> PermInvariantCondition {
                return beta == 0.0 ? PermInvariantCondition{ConditionKind::AntiKirchhoff, 0.0}
                                   : PermInvariantCondition{ConditionKind::DeltaPrime, beta};
            };
            conditions[v1] = type2(b1);
            conditions[v2] = type2(b2);
            inst.case_label = join_case_label(b1, b2);
            inst.op = JoinVertices{v1, v2};
            break;
        }
        case SuiteBranch::JoinTypeIIIa: {
            const double c = rng.signed_coeff(params);
            conditions[v1] = PermInvariantCondition{ConditionKind::Type3a, c};
            conditions[v2] = PermInvariantCondition{ConditionKind::Type3a, c};
            inst.op = JoinVertices{v1, v2};
            break;
        }
        case SuiteBranch::JoinTypeIIIbPositive:
        case SuiteBranch::JoinTypeIIIbNegative: {
            double d = rng.magnitude(params);
            if (branch == SuiteBranch::JoinTypeIIIbNegative) d = -d;
            conditions[v1] = PermInvariantCondition{ConditionKind::Type3b, d};
            conditions[v2] = PermInvariantCondition{ConditionKind::Type3b, d};
            inst.op = JoinVertices{v1, v2};
            break;
        }
    }

    inst.graph = std::move(draw.graph);
    inst.conditions = std::move(conditions);
    return inst;
}

SuiteSummary run_suite(const SuiteParams& params) {
    SuiteSummary summary;
    if (params.seeds <= 0 || params.pool.empty()) return summary;

    const std::size_t total =
        params.pool.size() * static_cast<std::size_t>(params.seeds);
    summary.cases.resize(total);

    parallel_for(total, params.jobs, [&](std::size_t index) {
        const SuiteBranch branch = params.pool[index / static_cast<std::size_t>(params.seeds)];
        const std::uint64_t seed = index % static_cast<std::size_t>(params.seeds);
        SuiteCase result;
        result.branch = branch;
        result.seed = seed;
        try {
            RandomInstance inst = random_instance(seed, branch, params.random);
            result.case_label = inst.case_label;
            result.graph_file = serialize_graph(inst.graph, inst.conditions);
            result.surgery = surgery_description(inst.op);
            result.report = run_surgery_case(inst.graph, inst.conditions, inst.op, params.k,
                                             params.mesh, params.slack);
            result.pass = result.report.pass;
        } catch (const std::exception& ex) {
            result.error = ex.what();
            result.pass = false;
        }
        summary.cases[index] = std::move(result);
    });

    for (const SuiteCase& c : summary.cases) (c.pass ? summary.passes : summary.failures) += 1;
    return summary;
}

std::string SuiteSummary::to_csv() const {
    std::string out = "seed,theorem,case,k,lambda_before,lambda_after,diff,pass\n";
    char buf[200];
    for (const SuiteCase& c : cases) {
        for (std::size_t i = 0; i < c.report.rows.size(); ++i) {
            const ComparisonRow& row = c.report.rows[i];
            std::snprintf(buf, sizeof(buf), "%llu,%s,%s,%zu,%.15g,%.15g,%.15g,%d\n",
                          static_cast<unsigned long long>(c.seed), branch_name(c.branch),
                          c.case_label.c_str(), i + 1, row.lambda_before, row.lambda_after,
                          row.diff, row.pass ? 1 : 0);
            out += buf;
        }
        if (!c.error.empty()) {
            std::snprintf(buf, sizeof(buf), "%llu,%s,%s,0,nan,nan,nan,0\n",
                          static_cast<unsigned long long>(c.seed), branch_name(c.branch),
                          c.case_label.c_str());
            out += buf;
        }
    }
    return out;
}

std::string SuiteSummary::to_text() const {
    std::ostringstream out;
    std::map<std::string, std::pair<int, int>> tally;  // theorem -> (pass, fail)
    for (const SuiteCase& c : cases) {
        auto& t = tally[branch_name(c.branch)];
        (c.pass ? t.first : t.second) += 1;
    }
    out << "suite: " << cases.size() << " cases, " << passes << " passed, " << failures
        << " failed\n";
    for (const auto& [name, counts] : tally)
        out << "  " << name << ": " << counts.first << " pass, " << counts.second << " fail\n";
    for (const SuiteCase& c : cases) {
        if (c.pass) continue;
        out << "FAIL " << branch_name(c.branch) << " seed=" << c.seed;
        if (!c.error.empty()) out << " error: " << c.error;
        out << "\n  surgery: " << c.surgery << "\n  graph:\n";
        std::istringstream lines(c.graph_file);
        std::string line;
        while (std::getline(lines, line)) out << "    " << line << "\n";
    }
    return out.str();
}

}  // namespace qgraph

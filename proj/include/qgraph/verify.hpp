#ifndef QGRAPH_VERIFY_HPP
#define QGRAPH_VERIFY_HPP

#include "qgraph/fem.hpp"
#include "qgraph/metric_graph.hpp"
#include "qgraph/surgery.hpp"
#include "qgraph/vertex_conditions.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qgraph {

struct ComparisonRow {
    double lambda_before = 0.0;
    double lambda_after = 0.0;
    double diff = 0.0;
    bool pass = true;
};

/// Before/after spectral comparison for one surgery.
struct ComparisonReport {
    std::string surgery;
    DirectionVerdict verdict;
    std::vector<ComparisonRow> rows;
    bool pass = true;
    bool nested_meshes = false;
    std::string observed;  // direction actually seen in the data

    /// CSV with header "k,lambda_before,lambda_after,diff,pass".
    std::string to_csv() const;
    std::string to_text() const;
};

/// Index-wise check of the predicted direction with absolute-plus-relative
/// slack: NonIncreasing passes iff lambda_after <= lambda_before +
/// slack * (1 + |lambda_before|) for every index, NonDecreasing is
/// symmetric, NoGuarantee always passes and records the observed direction.
/// The spectra must have the same length.
ComparisonReport compare_spectra(const Spectrum& before, const Spectrum& after,
                                 const DirectionVerdict& verdict, double slack);

struct MeshPolicy {
    double h_target = 0.25;
};

/// Applies the surgery and compares the first k discrete eigenvalues on
/// nested meshes: attach operations reuse the original mesh verbatim and
/// mesh the new edge independently; joins use the identical mesh on both
/// sides. On such meshes the theorem inequalities hold exactly, up to
/// eigensolver round-off absorbed by the slack.
ComparisonReport run_surgery_case(const MetricGraph& graph, const ConditionMap& conditions,
                                  const SurgeryOp& op, std::size_t k, MeshPolicy policy = {},
                                  double slack = 1e-8);

/// Theorem branches exercised by the randomized suite.
enum class SuiteBranch {
    AttachEdgeCoupled,     // attach-edge, endpoints anti-Kirchhoff/delta'/type3a
    PendantZeroExtension,  // pendant at anti-Kirchhoff/delta'/type3a, any tip condition
    PendantRobin,          // pendant at Kirchhoff/delta/type3b, Robin tip <= 0, int q <= 0
    JoinTypeI,
    JoinTypeII,            // all six sign cases
    JoinTypeIIIa,
    JoinTypeIIIbPositive,
    JoinTypeIIIbNegative,
};

const char* branch_name(SuiteBranch branch);
const std::vector<SuiteBranch>& all_branches();

struct RandomParams {
    int max_edges = 5;
    double min_length = 0.5;
    double max_length = 1.5;
    double coeff_min_abs = 0.2;
    double coeff_max_abs = 2.0;
    int max_potential_samples = 3;
    double potential_max_abs = 0.75;
};

struct RandomInstance {
    MetricGraph graph;
    ConditionMap conditions;
    SurgeryOp op;
    std::string case_label;  // "(i)".."(vi)" for type II joins, "-" otherwise
};

/// Reproducible random instance whose surgery satisfies the hypotheses of
/// the branch's theorem (family matching, coefficient signs, potential
/// signs). For the PendantRobin branch the whole instance is drawn with
/// nonnegative potentials and vertex terms so the unperturbed spectrum is
/// nonnegative, which the constant-extension comparison needs.
RandomInstance random_instance(std::uint64_t seed, SuiteBranch branch,
                               const RandomParams& params = {});

struct SuiteParams {
    std::vector<SuiteBranch> pool = all_branches();
    int seeds = 200;
    std::size_t k = 5;
    MeshPolicy mesh{};
    double slack = 1e-8;
    RandomParams random{};
    int jobs = 1;
};

struct SuiteCase {
    SuiteBranch branch;
    std::uint64_t seed = 0;
    std::string case_label;
    ComparisonReport report;
    std::string graph_file;  // serialized instance, for replay
    std::string surgery;
    std::string error;  // nonempty when the case raised an exception
    bool pass = true;
};

struct SuiteSummary {
    std::vector<SuiteCase> cases;
    int passes = 0;
    int failures = 0;

    /// CSV with header "seed,theorem,case,k,lambda_before,lambda_after,diff,pass".
    std::string to_csv() const;
    std::string to_text() const;
};

/// Runs seeds x pool cases, deterministically ordered by (branch, seed).
SuiteSummary run_suite(const SuiteParams& params);

}  // namespace qgraph

#endif

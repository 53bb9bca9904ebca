#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qgraph/errors.hpp"
#include "qgraph/graph_io.hpp"
#include "qgraph/surgery.hpp"

#include <cmath>
#include <random>

using namespace qgraph;

namespace {

ParsedGraph interval(const std::string& left, const std::string& right) {
    return parse_graph("[vertices]\nv1 " + left + "\nv2 " + right +
                       "\n[edges]\ne1 v1 v2 length=1\n");
}

const PermInvariantCondition& perm_at(const ConditionMap& m, const std::string& v) {
    return std::get<PermInvariantCondition>(m.at(v));
}

}  // namespace

TEST_CASE("attach_edge builds the lens and extends conditions naturally") {
    auto parsed = interval("delta alpha=1", "kirchhoff");
    auto result = attach_edge(parsed.graph, parsed.conditions, "v1", "v2", 0.1);

    CHECK(result.graph.edges().size() == 2);
    CHECK(result.graph.total_length() == doctest::Approx(1.1));
    CHECK(result.graph.degree("v1") == 2);
    CHECK(result.graph.degree("v2") == 2);
    const Edge& extra = result.graph.edges()[1];
    CHECK(extra.tail == "v1");
    CHECK(extra.head == "v2");
    CHECK(extra.length == 0.1);

    CHECK(perm_at(result.conditions, "v1") == PermInvariantCondition{ConditionKind::Delta, 1.0});
    CHECK(perm_at(result.conditions, "v2") ==
          PermInvariantCondition{ConditionKind::Kirchhoff, 0.0});

    // type preservation under natural extension, seen through classify
    auto reclassified = classify(projection_matrices(perm_at(result.conditions, "v1"), 2));
    REQUIRE(reclassified.has_value());
    CHECK(reclassified->kind == ConditionKind::Delta);
    CHECK(reclassified->coefficient == doctest::Approx(1.0));
}

TEST_CASE("attach_edge: anti-Kirchhoff lens") {
    auto parsed = interval("antikirchhoff", "antikirchhoff");
    auto result = attach_edge(parsed.graph, parsed.conditions, "v1", "v2", 0.5);
    CHECK(perm_at(result.conditions, "v1").kind == ConditionKind::AntiKirchhoff);
    CHECK(perm_at(result.conditions, "v2").kind == ConditionKind::AntiKirchhoff);
}

TEST_CASE("attach_edge rejections") {
    auto parsed = interval("robin alpha=1", "kirchhoff");
    CHECK_THROWS_AS(attach_edge(parsed.graph, parsed.conditions, "v1", "v2", 0.5), SurgeryError);

    auto ok = interval("kirchhoff", "kirchhoff");
    CHECK_THROWS_AS(attach_edge(ok.graph, ok.conditions, "v1", "v1", 0.5), SurgeryError);
    CHECK_THROWS_AS(attach_edge(ok.graph, ok.conditions, "v1", "nope", 0.5), SurgeryError);
    CHECK_THROWS_AS(attach_edge(ok.graph, ok.conditions, "v1", "v2", 0.0), SurgeryError);

    ConditionMap with_general = ok.conditions;
    with_general["v1"] = projection_matrices({ConditionKind::Kirchhoff, 0.0}, 1);
    CHECK_THROWS_AS(attach_edge(ok.graph, with_general, "v1", "v2", 0.5), SurgeryError);
}

TEST_CASE("attach_pendant adds a degree-one vertex") {
    auto parsed = interval("kirchhoff", "kirchhoff");
    auto result = attach_pendant(parsed.graph, parsed.conditions, "v2", 1.0, {},
                                 {ConditionKind::Kirchhoff, 0.0});
    CHECK(result.graph.vertices().size() == 3);
    CHECK(result.graph.edges().size() == 2);
    CHECK(result.graph.degree("v2") == 2);
    const std::string& tip = result.graph.vertices().back();
    CHECK(result.graph.degree(tip) == 1);
    CHECK(perm_at(result.conditions, tip).kind == ConditionKind::Kirchhoff);

    // Robin pendant with negative strength is admissible on a delta vertex
    auto delta = interval("delta alpha=1", "kirchhoff");
    CHECK_NOTHROW(attach_pendant(delta.graph, delta.conditions, "v1", 0.5, {},
                                 {ConditionKind::Robin, -0.5}));

    // pendant onto a decoupled vertex has no natural extension
    auto dirichlet = interval("dirichlet", "kirchhoff");
    CHECK_THROWS_AS(attach_pendant(dirichlet.graph, dirichlet.conditions, "v1", 1.0, {},
                                   {ConditionKind::Kirchhoff, 0.0}),
                    SurgeryError);
}

TEST_CASE("join merges type I strengths additively") {
    auto path = parse_graph(
        "[vertices]\nv1 delta alpha=1\nv2 kirchhoff\nv3 delta alpha=2\n[edges]\n"
        "e1 v1 v2 length=1\ne2 v2 v3 length=1\n");
    auto result = join_vertices(path.graph, path.conditions, "v1", "v3");
    CHECK(perm_at(result.conditions, "v1") == PermInvariantCondition{ConditionKind::Delta, 3.0});
    CHECK(result.graph.edges().size() == 2);
    CHECK(result.graph.total_length() == doctest::Approx(2.0));
    CHECK(result.graph.degree("v1") == 2);
    CHECK(!result.graph.has_vertex("v3"));

    // delta(1) + delta(-1) cancels to Kirchhoff
    auto sym = parse_graph(
        "[vertices]\nv1 delta alpha=1\nv2 kirchhoff\nv3 delta alpha=-1\n[edges]\n"
        "e1 v1 v2 length=1\ne2 v2 v3 length=1\n");
    auto merged = join_vertices(sym.graph, sym.conditions, "v1", "v3");
    CHECK(perm_at(merged.conditions, "v1").kind == ConditionKind::Kirchhoff);
}

TEST_CASE("join merges type II strengths, zero sum gives anti-Kirchhoff") {
    auto path = parse_graph(
        "[vertices]\nv1 deltaprime beta=1\nv2 kirchhoff\nv3 deltaprime beta=-1\n[edges]\n"
        "e1 v1 v2 length=1\ne2 v2 v3 length=1\n");
    auto result = join_vertices(path.graph, path.conditions, "v1", "v3");
    CHECK(perm_at(result.conditions, "v1").kind == ConditionKind::AntiKirchhoff);

    auto mixed = parse_graph(
        "[vertices]\nv1 antikirchhoff\nv2 kirchhoff\nv3 deltaprime beta=2\n[edges]\n"
        "e1 v1 v2 length=1\ne2 v2 v3 length=1\n");
    auto merged = join_vertices(mixed.graph, mixed.conditions, "v1", "v3");
    CHECK(perm_at(merged.conditions, "v1") ==
          PermInvariantCondition{ConditionKind::DeltaPrime, 2.0});
}

TEST_CASE("join type III requires equal coefficients") {
    auto path = parse_graph(
        "[vertices]\nv1 type3a C=2\nv2 kirchhoff\nv3 type3a C=3\n[edges]\n"
        "e1 v1 v2 length=1\ne2 v2 v3 length=1\n");
    CHECK_THROWS_AS(join_vertices(path.graph, path.conditions, "v1", "v3"), SurgeryError);

    auto equal = parse_graph(
        "[vertices]\nv1 type3b D=-2\nv2 kirchhoff\nv3 type3b D=-2\n[edges]\n"
        "e1 v1 v2 length=1\ne2 v2 v3 length=1\n");
    auto result = join_vertices(equal.graph, equal.conditions, "v1", "v3");
    CHECK(perm_at(result.conditions, "v1") ==
          PermInvariantCondition{ConditionKind::Type3b, -2.0});
}

TEST_CASE("join rejects mismatched families and decoupled conditions") {
    auto mixed = interval("delta alpha=1", "deltaprime beta=1");
    CHECK_THROWS_AS(join_vertices(mixed.graph, mixed.conditions, "v1", "v2"), SurgeryError);
    auto dec = interval("dirichlet", "dirichlet");
    CHECK_THROWS_AS(join_vertices(dec.graph, dec.conditions, "v1", "v2"), SurgeryError);
    auto ok = interval("kirchhoff", "kirchhoff");
    CHECK_THROWS_AS(join_vertices(ok.graph, ok.conditions, "v1", "v1"), SurgeryError);
}

TEST_CASE("joining interval endpoints forms a loop (anti-periodic ring)") {
    auto parsed = interval("antikirchhoff", "antikirchhoff");
    auto result = join_vertices(parsed.graph, parsed.conditions, "v1", "v2");
    CHECK(result.graph.vertices().size() == 1);
    CHECK(result.graph.edges().size() == 1);
    CHECK(result.graph.edges()[0].tail == result.graph.edges()[0].head);
    CHECK(result.graph.degree("v1") == 2);
    CHECK(perm_at(result.conditions, "v1").kind == ConditionKind::AntiKirchhoff);
}

TEST_CASE("expected_direction: attach-edge") {
    auto dp = interval("deltaprime beta=1", "deltaprime beta=-3");
    auto verdict = expected_direction(AttachEdge{"v1", "v2", 0.5, {}}, dp.graph, dp.conditions);
    CHECK(verdict.direction == Direction::NonIncreasing);

    auto lens = interval("delta alpha=1", "kirchhoff");
    auto none = expected_direction(AttachEdge{"v1", "v2", 0.1, {}}, lens.graph, lens.conditions);
    CHECK(none.direction == Direction::NoGuarantee);

    auto open = interval("type3b D=1", "antikirchhoff");
    auto iiib = expected_direction(AttachEdge{"v1", "v2", 0.5, {}}, open.graph, open.conditions);
    CHECK(iiib.direction == Direction::NoGuarantee);
    CHECK(iiib.notes.find("no known counterexample") != std::string::npos);

    // a potential on the new edge does not change the guaranteed class
    EdgePotential q{{1.0, -0.5}};
    auto withq = expected_direction(AttachEdge{"v1", "v2", 0.5, q}, dp.graph, dp.conditions);
    CHECK(withq.direction == Direction::NonIncreasing);
}

TEST_CASE("expected_direction: attach-pendant") {
    auto ak = interval("antikirchhoff", "kirchhoff");
    CHECK(expected_direction(
              AttachPendant{"v1", 1.0, {}, {ConditionKind::Dirichlet, 0.0}}, ak.graph,
              ak.conditions)
              .direction == Direction::NonIncreasing);
    CHECK(expected_direction(AttachPendant{"v1", 1.0, {}, {ConditionKind::Robin, 5.0}}, ak.graph,
                             ak.conditions)
              .direction == Direction::NonIncreasing);

    auto kir = interval("kirchhoff", "kirchhoff");
    CHECK(expected_direction(AttachPendant{"v1", 1.0, {}, {ConditionKind::Robin, -0.5}},
                             kir.graph, kir.conditions)
              .direction == Direction::NonIncreasing);
    CHECK(expected_direction(AttachPendant{"v1", 1.0, {}, {ConditionKind::Kirchhoff, 0.0}},
                             kir.graph, kir.conditions)
              .direction == Direction::NonIncreasing);
    CHECK(expected_direction(AttachPendant{"v1", 1.0, {}, {ConditionKind::Robin, 1.0}},
                             kir.graph, kir.conditions)
              .direction == Direction::NoGuarantee);
    CHECK(expected_direction(AttachPendant{"v1", 1.0, {}, {ConditionKind::Dirichlet, 0.0}},
                             kir.graph, kir.conditions)
              .direction == Direction::NoGuarantee);

    // nonpositive potential integral keeps the guarantee, positive loses it
    EdgePotential qneg{{-1.0, 0.5}};
    CHECK(expected_direction(AttachPendant{"v1", 1.0, qneg, {ConditionKind::Kirchhoff, 0.0}},
                             kir.graph, kir.conditions)
              .direction == Direction::NonIncreasing);
    EdgePotential qpos{{1.0, -0.5}};
    CHECK(expected_direction(AttachPendant{"v1", 1.0, qpos, {ConditionKind::Kirchhoff, 0.0}},
                             kir.graph, kir.conditions)
              .direction == Direction::NoGuarantee);
}

TEST_CASE("expected_direction: join cases") {
    auto make = [](const std::string& c1, const std::string& c2) {
        return parse_graph("[vertices]\nv1 " + c1 + "\nv2 kirchhoff\nv3 " + c2 +
                           "\n[edges]\ne1 v1 v2 length=1\ne2 v2 v3 length=1\n");
    };
    auto dir = [](const ParsedGraph& g) {
        return expected_direction(JoinVertices{"v1", "v3"}, g.graph, g.conditions);
    };

    CHECK(dir(make("delta alpha=1", "delta alpha=2")).direction == Direction::NonDecreasing);
    CHECK(dir(make("kirchhoff", "delta alpha=-5")).direction == Direction::NonDecreasing);

    auto i = dir(make("deltaprime beta=1", "deltaprime beta=2"));
    CHECK(i.direction == Direction::NonIncreasing);
    CHECK(i.theorem == "join-type-II(i)");
    auto ii = dir(make("deltaprime beta=-1", "deltaprime beta=-2"));
    CHECK(ii.direction == Direction::NonDecreasing);
    CHECK(ii.theorem == "join-type-II(ii)");
    auto iii = dir(make("deltaprime beta=3", "deltaprime beta=-1"));
    CHECK(iii.direction == Direction::NonDecreasing);
    CHECK(iii.theorem == "join-type-II(iii)");
    auto iv = dir(make("deltaprime beta=1", "deltaprime beta=-2"));
    CHECK(iv.direction == Direction::NonIncreasing);
    CHECK(iv.theorem == "join-type-II(iv)");
    auto v = dir(make("deltaprime beta=1", "deltaprime beta=-1"));
    CHECK(v.direction == Direction::NonDecreasing);
    CHECK(v.theorem == "join-type-II(v)");
    auto vi = dir(make("antikirchhoff", "deltaprime beta=2"));
    CHECK(vi.direction == Direction::NonIncreasing);
    CHECK(vi.theorem == "join-type-II(vi)");

    CHECK(dir(make("type3a C=2", "type3a C=2")).direction == Direction::NonIncreasing);
    CHECK(dir(make("type3b D=0.5", "type3b D=0.5")).direction == Direction::NonDecreasing);
    CHECK(dir(make("type3b D=-0.5", "type3b D=-0.5")).direction == Direction::NonIncreasing);
}

TEST_CASE("expected_direction is symmetric in the endpoints") {
    auto g = parse_graph(
        "[vertices]\nv1 deltaprime beta=2\nv2 kirchhoff\nv3 deltaprime beta=-3\n[edges]\n"
        "e1 v1 v2 length=1\ne2 v2 v3 length=1\n");
    auto a = expected_direction(JoinVertices{"v1", "v3"}, g.graph, g.conditions);
    auto b = expected_direction(JoinVertices{"v3", "v1"}, g.graph, g.conditions);
    CHECK(a.direction == b.direction);

    auto ae1 = expected_direction(AttachEdge{"v1", "v3", 1.0, {}}, g.graph, g.conditions);
    auto ae2 = expected_direction(AttachEdge{"v3", "v1", 1.0, {}}, g.graph, g.conditions);
    CHECK(ae1.direction == ae2.direction);
}

TEST_CASE("elementary inequality: r|a+b|^2 <= p|a|^2 + q|b|^2") {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> comp(-1.0, 1.0);
    std::uniform_real_distribution<double> expo(-3.0, 3.0);
    for (int trial = 0; trial < 10000; ++trial) {
        const std::complex<double> a(comp(rng), comp(rng));
        const std::complex<double> b(comp(rng), comp(rng));
        const double p = std::pow(10.0, expo(rng));
        const double q = std::pow(10.0, expo(rng));
        const double r = p * q / (p + q);
        CHECK(r * std::norm(a + b) <= p * std::norm(a) + q * std::norm(b) + 1e-12);
    }
}

TEST_CASE("surgery strings parse and round trip") {
    auto op1 = parse_surgery("attach-edge v1 v2 length=0.1");
    REQUIRE(std::holds_alternative<AttachEdge>(op1));
    CHECK(std::get<AttachEdge>(op1).length == 0.1);
    CHECK(surgery_description(op1) == "attach-edge v1 v2 length=0.10000000000000001");

    auto op2 = parse_surgery("attach-pendant v1 length=1 cond=robin:-0.5 q=-1,0");
    REQUIRE(std::holds_alternative<AttachPendant>(op2));
    const auto& pendant = std::get<AttachPendant>(op2);
    CHECK(pendant.new_condition.kind == ConditionKind::Robin);
    CHECK(pendant.new_condition.coefficient == -0.5);
    CHECK(pendant.potential.samples == std::vector<double>{-1.0, 0.0});

    auto op3 = parse_surgery("join v1 v2");
    CHECK(std::holds_alternative<JoinVertices>(op3));

    auto reparsed = parse_surgery(surgery_description(op2));
    CHECK(std::get<AttachPendant>(reparsed).new_condition.coefficient == -0.5);

    CHECK_THROWS_AS(parse_surgery("detach v1"), ParseError);
    CHECK_THROWS_AS(parse_surgery("attach-edge v1 v2"), ParseError);
    CHECK_THROWS_AS(parse_surgery("attach-pendant v1 length=1"), ParseError);
    CHECK_THROWS_AS(parse_surgery("join v1"), ParseError);
    CHECK_THROWS_AS(parse_surgery(""), ParseError);
}

TEST_CASE("apply_surgery dispatches and keeps bookkeeping invariants") {
    auto parsed = parse_graph(
        "[vertices]\nv1 deltaprime beta=1\nv2 antikirchhoff\nv3 type3a C=1\n[edges]\n"
        "e1 v1 v2 length=1\ne2 v2 v3 length=0.5\ne3 v3 v1 length=0.25\n");
    const double length_before = parsed.graph.total_length();
    const std::size_t edges_before = parsed.graph.edges().size();

    auto attached = apply_surgery(parsed.graph, parsed.conditions,
                                  parse_surgery("attach-edge v1 v3 length=2"));
    CHECK(attached.graph.edges().size() == edges_before + 1);
    CHECK(attached.graph.total_length() == doctest::Approx(length_before + 2.0));

    auto joined = apply_surgery(parsed.graph, parsed.conditions, parse_surgery("join v1 v2"));
    CHECK(joined.graph.edges().size() == edges_before);
    CHECK(joined.graph.total_length() == doctest::Approx(length_before));
    CHECK(joined.graph.degree("v1") ==
          parsed.graph.degree("v1") + parsed.graph.degree("v2"));
}

#include "qgraph/graph_io.hpp"

#include "qgraph/errors.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

namespace qgraph {

namespace {

struct Token {
    std::string text;
    int column;  // 1-based
};

std::vector<Token> tokenize(const std::string& line) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        if (std::isspace(static_cast<unsigned char>(line[i]))) {
            ++i;
            continue;
        }
        if (line[i] == '#') break;
        std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])) &&
               line[i] != '#')
            ++i;
        tokens.push_back({line.substr(start, i - start), static_cast<int>(start) + 1});
    }
    return tokens;
}

double parse_real(const std::string& s, int line, int col) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("expected a real number, got '" + s + "'", line, col);
    }
}

std::optional<ConditionKind> kind_from_name(const std::string& name) {
    for (ConditionKind k :
         {ConditionKind::Kirchhoff, ConditionKind::Delta, ConditionKind::AntiKirchhoff,
          ConditionKind::DeltaPrime, ConditionKind::Type3a, ConditionKind::Type3b,
          ConditionKind::Dirichlet, ConditionKind::Neumann, ConditionKind::Robin})
        if (name == kind_name(k)) return k;
    return std::nullopt;
}

const char* coefficient_key(ConditionKind kind) {
    switch (kind) {
        case ConditionKind::Delta:
        case ConditionKind::Robin:
            return "alpha";
        case ConditionKind::DeltaPrime:
            return "beta";
        case ConditionKind::Type3a:
            return "C";
        case ConditionKind::Type3b:
            return "D";
        default:
            return nullptr;
    }
}

PermInvariantCondition condition_from_tokens(const std::vector<Token>& tokens, std::size_t first,
                                             int line) {
    const Token& type_tok = tokens[first];
    auto kind = kind_from_name(type_tok.text);
    if (!kind)
        throw ParseError("unknown condition type '" + type_tok.text + "'", line, type_tok.column);

    PermInvariantCondition cond{*kind, 0.0};
    const char* key = coefficient_key(*kind);
    bool has_coeff = false;
    for (std::size_t i = first + 1; i < tokens.size(); ++i) {
        const Token& t = tokens[i];
        auto eq = t.text.find('=');
        if (eq == std::string::npos)
            throw ParseError("expected key=value, got '" + t.text + "'", line, t.column);
        std::string k = t.text.substr(0, eq);
        std::string v = t.text.substr(eq + 1);
        if (key == nullptr || k != key)
            throw ParseError("unexpected key '" + k + "' for condition type '" + type_tok.text +
                                 "'",
                             line, t.column);
        cond.coefficient = parse_real(v, line, t.column + static_cast<int>(eq) + 1);
        has_coeff = true;
    }
    if (key != nullptr && !has_coeff && *kind != ConditionKind::Robin)
        throw ParseError("condition type '" + type_tok.text + "' requires " + key + "=...", line,
                         type_tok.column);
    try {
        cond.validate();
    } catch (const std::exception& ex) {
        throw ParseError(ex.what(), line, type_tok.column);
    }
    return cond;
}

}  // namespace

ParsedGraph parse_graph(const std::string& text) {
    enum class Section { None, Vertices, Edges } section = Section::None;
    std::vector<std::string> vertex_ids;
    std::vector<Edge> edges;
    ConditionMap conditions;

    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto tokens = tokenize(line);
        if (tokens.empty()) continue;
        if (tokens[0].text == "[vertices]") {
            section = Section::Vertices;
            continue;
        }
        if (tokens[0].text == "[edges]") {
            section = Section::Edges;
            continue;
        }
        if (tokens[0].text.front() == '[')
            throw ParseError("unknown section '" + tokens[0].text + "'", lineno,
                             tokens[0].column);

        if (section == Section::Vertices) {
            if (tokens.size() < 2)
                throw ParseError("vertex '" + tokens[0].text + "' is missing a condition", lineno,
                                 tokens[0].column);
            const std::string& name = tokens[0].text;
            if (conditions.count(name))
                throw ParseError("duplicate vertex id '" + name + "'", lineno, tokens[0].column);
            vertex_ids.push_back(name);
            conditions[name] = condition_from_tokens(tokens, 1, lineno);
        } else if (section == Section::Edges) {
            if (tokens.size() < 4)
                throw ParseError("edge line needs NAME TAIL HEAD length=...", lineno,
                                 tokens[0].column);
            Edge e;
            e.id = tokens[0].text;
            e.tail = tokens[1].text;
            e.head = tokens[2].text;
            bool has_length = false;
            for (std::size_t i = 3; i < tokens.size(); ++i) {
                const Token& t = tokens[i];
                auto eq = t.text.find('=');
                if (eq == std::string::npos)
                    throw ParseError("expected key=value, got '" + t.text + "'", lineno, t.column);
                std::string k = t.text.substr(0, eq);
                std::string v = t.text.substr(eq + 1);
                int vcol = t.column + static_cast<int>(eq) + 1;
                if (k == "length") {
                    e.length = parse_real(v, lineno, vcol);
                    has_length = true;
                } else if (k == "q") {
                    e.potential.samples.clear();
                    std::size_t pos = 0;
                    while (pos <= v.size()) {
                        auto comma = v.find(',', pos);
                        std::string piece =
                            v.substr(pos, comma == std::string::npos ? comma : comma - pos);
                        e.potential.samples.push_back(
                            parse_real(piece, lineno, vcol + static_cast<int>(pos)));
                        if (comma == std::string::npos) break;
                        pos = comma + 1;
                    }
                } else {
                    throw ParseError("unexpected key '" + k + "' in edge line", lineno, t.column);
                }
            }
            if (!has_length)
                throw ParseError("edge '" + e.id + "' is missing length=...", lineno,
                                 tokens[0].column);
            if (!(e.length > 0.0) || !std::isfinite(e.length))
                throw ParseError("edge '" + e.id + "' has nonpositive length", lineno,
                                 tokens[0].column);
            bool tail_known = conditions.count(e.tail) > 0;
            if (!tail_known || !conditions.count(e.head)) {
                const std::string& bad = tail_known ? e.head : e.tail;
                const Token& t = tail_known ? tokens[2] : tokens[1];
                throw ParseError("unknown vertex '" + bad + "'", lineno, t.column);
            }
            edges.push_back(std::move(e));
        } else {
            throw ParseError("content before any [vertices]/[edges] section", lineno,
                             tokens[0].column);
        }
    }

    MetricGraph graph;
    try {
        graph = MetricGraph::create(std::move(vertex_ids), std::move(edges));
    } catch (const std::exception& ex) {
        throw ParseError(ex.what());
    }
    for (const std::string& v : graph.vertices())
        if (graph.degree(v) == 0)
            throw ParseError("vertex '" + v + "' has no incident edges");
    return {std::move(graph), std::move(conditions)};
}

ParsedGraph parse_graph_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open graph file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_graph(buf.str());
}

namespace {

std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string serialize_graph(const MetricGraph& graph, const ConditionMap& conditions) {
    std::ostringstream out;
    out << "[vertices]\n";
    for (const std::string& v : graph.vertices()) {
        auto it = conditions.find(v);
        if (it == conditions.end())
            throw std::invalid_argument("vertex '" + v + "' has no condition");
        const auto* perm = std::get_if<PermInvariantCondition>(&it->second);
        if (!perm)
            throw std::invalid_argument("vertex '" + v +
                                        "' has a general condition; not representable in the "
                                        "graph file format");
        out << v << ' ' << kind_name(perm->kind);
        if (const char* key = coefficient_key(perm->kind)) out << ' ' << key << '=' << format_real(perm->coefficient);
        out << '\n';
    }
    out << "[edges]\n";
    for (const Edge& e : graph.edges()) {
        out << e.id << ' ' << e.tail << ' ' << e.head << " length=" << format_real(e.length);
        if (!e.potential.is_zero() || e.potential.samples.size() > 1) {
            out << " q=";
            for (std::size_t i = 0; i < e.potential.samples.size(); ++i) {
                if (i) out << ',';
                out << format_real(e.potential.samples[i]);
            }
        }
        out << '\n';
    }
    return out.str();
}

PermInvariantCondition parse_condition_token(const std::string& token) {
    auto colon = token.find(':');
    std::string name = token.substr(0, colon);
    auto kind = kind_from_name(name);
    if (!kind) throw ParseError("unknown condition type '" + name + "'");
    PermInvariantCondition cond{*kind, 0.0};
    const char* key = coefficient_key(*kind);
    if (colon != std::string::npos) {
        if (key == nullptr)
            throw ParseError("condition type '" + name + "' takes no coefficient");
        cond.coefficient = parse_real(token.substr(colon + 1), 0, 0);
    } else if (key != nullptr && *kind != ConditionKind::Robin) {
        throw ParseError("condition type '" + name + "' requires a coefficient, e.g. '" + name +
                         ":1'");
    }
    try {
        cond.validate();
    } catch (const std::exception& ex) {
        throw ParseError(ex.what());
    }
    return cond;
}

std::string condition_token(const PermInvariantCondition& cond) {
    std::string s = kind_name(cond.kind);
    if (kind_has_coefficient(cond.kind)) s += ":" + format_real(cond.coefficient);
    return s;
}

}  // namespace qgraph

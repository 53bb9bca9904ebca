#include "qgraph/errors.hpp"
#include "qgraph/fem.hpp"
#include "qgraph/graph_io.hpp"
#include "qgraph/oracle.hpp"
#include "qgraph/parallel.hpp"
#include "qgraph/surgery.hpp"
#include "qgraph/verify.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitParse = 2;
constexpr int kExitSolver = 3;
constexpr int kExitSurgery = 4;

int log_level() {
    const char* env = std::getenv("QGRAPH_LOG");
    if (!env) return 0;
    std::string v = env;
    if (v == "0" || v == "quiet" || v.empty()) return 0;
    if (v == "2" || v == "debug") return 2;
    return 1;
}

void log_info(const std::string& message) {
    if (log_level() >= 1) std::cerr << "[qgraph] " << message << "\n";
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path);
    if (!out) throw qgraph::SolverError("cannot open output file '" + path + "'");
    out << content;
}

qgraph::Spectrum compute_spectrum(const qgraph::ParsedGraph& parsed, std::size_t k, double h,
                                  int levels) {
    if (k == 0) return {};
    if (levels <= 1) {
        auto problem = qgraph::assemble(parsed.graph, parsed.conditions,
                                        qgraph::build_mesh(parsed.graph, h));
        return qgraph::solve_spectrum(problem, k);
    }
    return qgraph::refine_and_extrapolate(parsed.graph, parsed.conditions, k, levels, h);
}

struct SweepRange {
    std::vector<double> values;
};

SweepRange parse_sweep_values(const std::string& values_arg, const std::string& range_arg) {
    SweepRange range;
    if (!values_arg.empty()) {
        std::istringstream in(values_arg);
        std::string piece;
        while (std::getline(in, piece, ','))
            if (!piece.empty()) range.values.push_back(std::stod(piece));
        return range;
    }
    if (!range_arg.empty()) {
        double lo = 0, step = 0, hi = 0;
        if (std::sscanf(range_arg.c_str(), "%lf:%lf:%lf", &lo, &step, &hi) != 3 || step <= 0)
            throw qgraph::ParseError("bad --range, expected lo:step:hi with step > 0");
        for (double v = lo; v <= hi + 1e-12; v += step) range.values.push_back(v);
    }
    return range;
}

std::vector<qgraph::SuiteBranch> parse_pool(const std::string& pool_arg) {
    if (pool_arg.empty()) return qgraph::all_branches();
    std::vector<qgraph::SuiteBranch> pool;
    std::istringstream in(pool_arg);
    std::string name;
    while (std::getline(in, name, ',')) {
        bool found = false;
        for (qgraph::SuiteBranch b : qgraph::all_branches())
            if (name == qgraph::branch_name(b)) {
                pool.push_back(b);
                found = true;
            }
        if (!found) throw qgraph::ParseError("unknown suite branch '" + name + "'");
    }
    return pool;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spectra of Schrodinger operators on compact metric graphs, "
                 "graph surgery, and eigenvalue-monotonicity verification"};
    app.set_help_flag("--help", "print help and exit");  // frees -h for --h
    app.require_subcommand(1);

    std::string graph_path, out_path = "-";
    std::size_t k = 10;
    double h_target = 1.0 / 200.0;
    int levels = 2;
    double slack = 1e-8;
    int jobs = 1;

    auto add_common = [&](CLI::App* cmd, bool with_levels) {
        cmd->add_option("--k", k, "number of eigenvalues");
        cmd->add_option("--h", h_target, "target mesh width");
        if (with_levels) cmd->add_option("--levels", levels, "refinement levels (>= 2 extrapolates)");
        cmd->add_option("--out", out_path, "output path ('-' for stdout)");
    };

    auto* cmd_spectrum = app.add_subcommand("spectrum", "eigenvalues of a graph file");
    cmd_spectrum->add_option("graph", graph_path, "graph description file")->required();
    add_common(cmd_spectrum, true);

    auto* cmd_surgery =
        app.add_subcommand("surgery", "apply a surgery and compare spectra on nested meshes");
    std::vector<std::string> surgery_tokens;
    cmd_surgery->add_option("graph", graph_path, "graph description file")->required();
    cmd_surgery->add_option("op", surgery_tokens, "surgery, e.g. attach-edge v1 v2 length=0.1")
        ->required();
    cmd_surgery->add_option("--slack", slack, "direction-check slack");
    add_common(cmd_surgery, false);

    auto* cmd_verify = app.add_subcommand("verify", "randomized theorem-backed property suite");
    int seeds = 200;
    std::string pool_arg, fail_dir;
    std::size_t verify_k = 5;
    double verify_h = 0.25;
    cmd_verify->add_option("--seeds", seeds, "seeds per branch");
    cmd_verify->add_option("--k", verify_k, "eigenvalues compared per case");
    cmd_verify->add_option("--h", verify_h, "target mesh width");
    cmd_verify->add_option("--slack", slack, "direction-check slack");
    cmd_verify->add_option("--jobs", jobs, "concurrent cases");
    cmd_verify->add_option("--pool", pool_arg, "comma-separated branch names");
    cmd_verify->add_option("--fail-dir", fail_dir, "directory for failing graph files");
    cmd_verify->add_option("--out", out_path, "output path ('-' for stdout)");

    auto* cmd_sweep = app.add_subcommand("sweep", "spectrum after a surgery over a parameter range");
    std::string surgery_arg, param = "length", values_arg, range_arg;
    bool gnuplot = false;
    cmd_sweep->add_option("graph", graph_path, "graph description file")->required();
    cmd_sweep->add_option("--surgery", surgery_arg, "surgery without the swept key, e.g. "
                                                    "'attach-edge v1 v2'")
        ->required();
    cmd_sweep->add_option("--param", param, "swept parameter (length)");
    cmd_sweep->add_option("--values", values_arg, "comma-separated parameter values");
    cmd_sweep->add_option("--range", range_arg, "lo:step:hi");
    cmd_sweep->add_option("--jobs", jobs, "concurrent sweep points");
    cmd_sweep->add_flag("--gnuplot-friendly", gnuplot, "order columns k,value,lambda");
    add_common(cmd_sweep, true);

    auto* cmd_oracle = app.add_subcommand("oracle", "exact eigenvalues via the secular system");
    cmd_oracle->add_option("graph", graph_path, "graph description file")->required();
    add_common(cmd_oracle, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (cmd_spectrum->parsed()) {
            auto parsed = qgraph::parse_graph_file(graph_path);
            log_info("solving spectrum of " + graph_path);
            auto spectrum = compute_spectrum(parsed, k, h_target, levels);
            write_output(out_path, spectrum.to_csv());
            return kExitOk;
        }

        if (cmd_surgery->parsed()) {
            auto parsed = qgraph::parse_graph_file(graph_path);
            std::string text = std::accumulate(
                surgery_tokens.begin(), surgery_tokens.end(), std::string(),
                [](std::string acc, const std::string& t) {
                    return acc.empty() ? t : std::move(acc) + " " + t;
                });
            auto op = qgraph::parse_surgery(text);
            auto report = qgraph::run_surgery_case(parsed.graph, parsed.conditions, op, k,
                                                   qgraph::MeshPolicy{h_target}, slack);
            write_output(out_path, report.to_csv());
            std::cerr << report.to_text();
            return report.pass ? kExitOk : kExitViolation;
        }

        if (cmd_verify->parsed()) {
            qgraph::SuiteParams params;
            params.pool = parse_pool(pool_arg);
            params.seeds = seeds;
            params.k = verify_k;
            params.mesh.h_target = verify_h;
            params.slack = slack;
            params.jobs = jobs;
            log_info("running suite: " + std::to_string(params.pool.size()) + " branches x " +
                     std::to_string(seeds) + " seeds");
            auto summary = qgraph::run_suite(params);
            write_output(out_path, summary.to_csv());
            std::cerr << summary.to_text();
            if (!fail_dir.empty()) {
                std::filesystem::create_directories(fail_dir);
                for (const auto& c : summary.cases) {
                    if (c.pass) continue;
                    std::string name = std::string(qgraph::branch_name(c.branch)) + "_seed" +
                                       std::to_string(c.seed) + ".qg";
                    std::ofstream out(std::filesystem::path(fail_dir) / name);
                    out << "# surgery: " << c.surgery << "\n" << c.graph_file;
                }
            }
            return summary.failures == 0 ? kExitOk : kExitViolation;
        }

        if (cmd_sweep->parsed()) {
            if (param != "length")
                throw qgraph::SurgeryError("only --param length is supported");
            auto parsed = qgraph::parse_graph_file(graph_path);
            auto values = parse_sweep_values(values_arg, range_arg).values;
            std::vector<std::string> blocks(values.size());
            qgraph::parallel_for(values.size(), jobs, [&](std::size_t i) {
                char buf[64];
                std::snprintf(buf, sizeof(buf), "%.17g", values[i]);
                auto op = qgraph::parse_surgery(surgery_arg + " length=" + buf);
                auto after = qgraph::apply_surgery(parsed.graph, parsed.conditions, op);
                auto spectrum = compute_spectrum({after.graph, after.conditions}, k, h_target, levels);
                std::string block;
                char line[128];
                for (std::size_t j = 0; j < spectrum.size(); ++j) {
                    if (gnuplot)
                        std::snprintf(line, sizeof(line), "%zu,%.15g,%.15g\n", j + 1, values[i],
                                      spectrum.eigenvalues[j]);
                    else
                        std::snprintf(line, sizeof(line), "%.15g,%zu,%.15g\n", values[i], j + 1,
                                      spectrum.eigenvalues[j]);
                    block += line;
                }
                blocks[i] = std::move(block);
            });
            std::string csv = gnuplot ? "k,value,lambda\n" : "value,k,lambda\n";
            for (const std::string& b : blocks) csv += b;
            write_output(out_path, csv);
            return kExitOk;
        }

        if (cmd_oracle->parsed()) {
            auto parsed = qgraph::parse_graph_file(graph_path);
            auto values = qgraph::oracle::secular_eigenvalues(parsed.graph, parsed.conditions, k);
            qgraph::Spectrum spectrum;
            spectrum.eigenvalues = values;
            spectrum.error_estimates.assign(values.size(), 0.0);
            spectrum.clusters = qgraph::cluster_eigenvalues(values);
            write_output(out_path, spectrum.to_csv());
            return kExitOk;
        }
    } catch (const qgraph::ParseError& ex) {
        std::cerr << "parse error: " << ex.what() << "\n";
        return kExitParse;
    } catch (const qgraph::SurgeryError& ex) {
        std::cerr << "surgery error: " << ex.what() << "\n";
        return kExitSurgery;
    } catch (const qgraph::SolverError& ex) {
        std::cerr << "solver error: " << ex.what() << "\n";
        return kExitSolver;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitSolver;
    }
    return kExitOk;
}

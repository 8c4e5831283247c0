// graphfill: generate graphs, run and replay single dispersal
// simulations, sweep sizes or door counts, and fuzz the protocols under
// randomized schedules.
#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "graphfill/experiment.hpp"

using namespace graphfill;

namespace {

uint64_t env_base_seed() {
    if (const char* s = std::getenv("GRAPHFILL_SEED")) return std::strtoull(s, nullptr, 10);
    return 1;
}

Graph load_graph_file(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw std::runtime_error("cannot open graph file " + path);
    return load_graph(in);
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out.good()) throw std::runtime_error("cannot write " + path);
    out << text;
}

PolicyConfig make_policy(const std::string& name, const std::string& phase, uint64_t seed,
                         int stutter) {
    PolicyConfig p;
    if (name == "fsync") p.kind = PolicyConfig::Kind::Fsync;
    else if (name == "roundrobin") p.kind = PolicyConfig::Kind::RoundRobin;
    else if (name == "random") p.kind = PolicyConfig::Kind::RandomAsync;
    else throw CLI::ValidationError("--policy", "unknown policy " + name);
    if (phase == "atomic") p.phase = PolicyConfig::Phase::Atomic;
    else if (phase == "split") p.phase = PolicyConfig::Phase::Split;
    else throw CLI::ValidationError("--phase-mode", "unknown phase mode " + phase);
    p.seed = seed;
    p.max_stutter = stutter;
    return p;
}

std::string raw_csv_path(const std::string& out) {
    auto dot = out.rfind('.');
    if (dot == std::string::npos) return out + "_raw";
    return out.substr(0, dot) + "_raw" + out.substr(dot);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"uniform dispersal on graphs: simulator and verification harness"};
    app.require_subcommand(1);
    app.set_config("--config", "", "experiment config file (key = value lines)");

    std::string protocol = "pack", topology = "line", policy = "fsync", phase_mode = "atomic";
    std::string out_path, trace_path, graph_file;
    int n = 10, k = 1, seeds = 50, n_min = 0, n_max = 0, n_step = 10, max_stutter = 2;
    int fuzz_max_n = 40, fuzz_max_k = 4;
    long long fuzz_runs = 1000;
    uint64_t seed = env_base_seed();
    double cap_mult = 4.0;
    bool small_preset = false;
    std::string doors_list;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--protocol", protocol, "pack|block|priority|pack-abp");
        cmd->add_option("--k", k, "door count");
        cmd->add_option("--seed", seed, "base seed (or env GRAPHFILL_SEED)");
        cmd->add_option("--policy", policy, "fsync|roundrobin|random");
        cmd->add_option("--phase-mode", phase_mode, "atomic|split");
        cmd->add_option("--cap-mult", cap_mult, "round cap multiplier");
        cmd->add_option("--max-stutter", max_stutter, "extra random activations per round");
        cmd->add_option("--out", out_path, "output path (default stdout)");
        cmd->add_option("--trace", trace_path, "trace file path");
    };

    CLI::App* gen = app.add_subcommand("gen", "generate a graph file");
    std::string gen_topology;
    int gen_n = 0, gen_k = 1;
    gen->add_option("topology", gen_topology, "line|star|delaunay")->required();
    gen->add_option("n", gen_n, "vertex count")->required();
    gen->add_option("k", gen_k, "door count (delaunay only)");
    gen->add_option("--seed", seed, "generator seed");
    gen->add_option("--out", out_path, "output path (default stdout)");

    CLI::App* runc = app.add_subcommand("run", "run one simulation and report");
    add_common(runc);
    runc->add_option("--topology", topology, "line|star|delaunay|file");
    runc->add_option("--n", n, "vertex count");
    runc->add_option("--graph", graph_file, "graph file (topology=file)");

    CLI::App* sweep = app.add_subcommand("sweep", "mean fsync cycles over sizes or door counts");
    add_common(sweep);
    sweep->add_option("--topology", topology, "line|star|delaunay");
    sweep->add_option("--n", n, "fixed size for door sweeps");
    sweep->add_option("--n-min", n_min, "first size");
    sweep->add_option("--n-max", n_max, "last size");
    sweep->add_option("--n-step", n_step, "size step");
    sweep->add_option("--seeds", seeds, "random graphs per point");
    sweep->add_option("--doors", doors_list, "comma list of door counts (switches to a door sweep)");
    sweep->add_flag("--small", small_preset, "door sweep preset at n=200");

    CLI::App* fuzzc = app.add_subcommand("fuzz", "randomized schedules on random small graphs");
    add_common(fuzzc);
    fuzzc->add_option("--runs", fuzz_runs, "number of runs");
    fuzzc->add_option("--max-n", fuzz_max_n, "largest graph");
    fuzzc->add_option("--max-k", fuzz_max_k, "largest door count (priority)");

    CLI::App* replay = app.add_subcommand("replay", "re-drive a recorded trace and verify");
    replay->add_option("--graph", graph_file, "graph file")->required();
    replay->add_option("--protocol", protocol, "pack|block|priority");
    replay->add_option("--trace", trace_path, "trace file")->required();
    replay->add_option("--cap-mult", cap_mult, "round cap multiplier");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            auto topo = topology_from_name(gen_topology);
            if (!topo || *topo == Topology::File)
                throw std::runtime_error("gen: topology must be line|star|delaunay");
            Graph g = make_topology(*topo, gen_n, gen_k, seed);
            write_text(out_path, graph_to_string(g));
            return 0;
        }

        if (*runc) {
            Graph g;
            if (topology == "file" || !graph_file.empty()) {
                g = load_graph_file(graph_file);
            } else {
                auto topo = topology_from_name(topology);
                if (!topo) throw std::runtime_error("run: unknown topology " + topology);
                g = make_topology(*topo, n, k, seed);
            }
            auto rep = validate(g);
            if (!rep.ok()) {
                for (const auto& i : rep.issues) std::cerr << "invalid graph: " << i.message << "\n";
                return 2;
            }
            auto proto = protocol_from_name(protocol);
            if (!proto) throw std::runtime_error("unknown protocol " + protocol);
            RunLimits limits;
            limits.cap_mult = cap_mult;
            limits.record_trace = !trace_path.empty();
            RunResult r = run(g, *proto, make_policy(policy, phase_mode, seed, max_stutter), limits);
            std::ostringstream report;
            write_run_report(r, g.delta, static_cast<int>(g.doors.size()), report);
            write_text(out_path, report.str());
            if (!trace_path.empty()) {
                std::ofstream tf(trace_path, std::ios::binary);
                write_trace(r.trace, tf);
            }
            if (r.cap_exceeded) {
                std::cerr << "round cap exceeded\n";
                return 2;
            }
            if (!r.ok()) {
                for (const auto& v : r.metrics.violations)
                    std::cerr << "monitor " << v.monitor << ": " << v.detail << "\n";
                return 1;
            }
            return 0;
        }

        if (*sweep) {
            auto proto = protocol_from_name(protocol);
            if (!proto) throw std::runtime_error("unknown protocol " + protocol);
            SweepResult result;
            if (!doors_list.empty()) {
                std::vector<int> doors;
                std::stringstream ss(doors_list);
                std::string item;
                while (std::getline(ss, item, ',')) doors.push_back(std::stoi(item));
                int size = small_preset ? 200 : n;
                result = sweep_doors(*proto, size, doors, seeds, seed);
            } else {
                if (n_min <= 0 || n_max < n_min) throw std::runtime_error("sweep: need --n-min/--n-max");
                std::vector<int> sizes;
                for (int i = n_min; i <= n_max; i += n_step) sizes.push_back(i);
                auto topo = topology_from_name(topology);
                if (!topo || *topo == Topology::File)
                    throw std::runtime_error("sweep: topology must be line|star|delaunay");
                result = sweep_sizes(*topo, *proto, sizes, k, seeds, seed);
            }
            std::ostringstream csv, raw;
            write_sweep_csv(result, csv);
            write_sweep_raw_csv(result, raw);
            write_text(out_path, csv.str());
            if (!out_path.empty() && out_path != "-") write_text(raw_csv_path(out_path), raw.str());
            return 0;
        }

        if (*fuzzc) {
            auto proto = protocol_from_name(protocol);
            if (!proto) throw std::runtime_error("unknown protocol " + protocol);
            FuzzReport rep = fuzz(*proto, fuzz_runs, fuzz_max_n, fuzz_max_k, seed);
            std::cout << "runs: " << rep.runs << "\n";
            std::cout << "failures: " << rep.failures << "\n";
            std::cout << "max_rounds: " << rep.max_rounds << "\n";
            std::cout << "worst_bound_ratio: " << format_mean(rep.worst_bound_ratio) << "\n";
            if (rep.first_failure) {
                const auto& c = *rep.first_failure;
                std::cout << "counterexample: n=" << c.n << " k=" << c.k
                          << " graph_seed=" << c.graph_seed << " policy_seed=" << c.policy.seed
                          << " detail=" << rep.failure_detail << "\n";
                if (!trace_path.empty()) {
                    std::ofstream tf(trace_path, std::ios::binary);
                    write_trace(rep.failure_trace, tf);
                    std::cout << "trace: " << trace_path << "\n";
                }
                return 1;
            }
            return 0;
        }

        if (*replay) {
            Graph g = load_graph_file(graph_file);
            auto proto = protocol_from_name(protocol);
            if (!proto) throw std::runtime_error("unknown protocol " + protocol);
            std::ifstream tf(trace_path);
            if (!tf.good()) throw std::runtime_error("cannot open trace " + trace_path);
            PolicyConfig p;
            p.kind = PolicyConfig::Kind::Trace;
            p.replay = read_trace(tf);
            RunLimits limits;
            limits.cap_mult = cap_mult;
            RunResult r = run(g, *proto, p, limits);
            std::ostringstream report;
            write_run_report(r, g.delta, static_cast<int>(g.doors.size()), report);
            std::cout << report.str();
            return r.ok() ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

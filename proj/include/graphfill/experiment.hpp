#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "graphfill/delaunay.hpp"
#include "graphfill/engine.hpp"
#include "graphfill/graph.hpp"

namespace graphfill {

enum class Topology : uint8_t { Line, Star, Delaunay, File };

inline std::optional<Topology> topology_from_name(const std::string& s) {
    if (s == "line") return Topology::Line;
    if (s == "star") return Topology::Star;
    if (s == "delaunay") return Topology::Delaunay;
    if (s == "file") return Topology::File;
    return std::nullopt;
}

inline Graph make_topology(Topology t, int n, int k, uint64_t seed) {
    switch (t) {
        case Topology::Line: return gen_line(n);
        case Topology::Star: return gen_star(n);
        case Topology::Delaunay: return gen_delaunay(n, k, seed);
        case Topology::File: throw std::invalid_argument("make_topology: file topology needs a path");
    }
    throw std::logic_error("make_topology");
}

// FSYNC cycles to termination; throws when the run misbehaves so sweep
// data can never silently include broken runs.
inline long long fsync_cycles(const Graph& g, Protocol proto, const RunLimits& limits = {}) {
    RunResult r = run(g, proto, PolicyConfig::fsync(), limits);
    if (!r.ok()) {
        std::string what = "run failed:";
        for (const auto& v : r.metrics.violations) what += " " + v.monitor;
        if (!r.all_finished) what += " (did not finish)";
        throw std::runtime_error(what);
    }
    return r.metrics.rounds;
}

struct SweepRow {
    long long x = 0;
    double mean = 0.0;
    std::vector<long long> raw;  // one value per seed
};

struct SweepResult {
    std::vector<SweepRow> rows;
};

// Mean FSYNC cycles per size over `seeds` generated graphs (or a single
// deterministic run for the seedless topologies).
inline SweepResult sweep_sizes(Topology topo, Protocol proto, const std::vector<int>& sizes, int k,
                               int seeds, uint64_t base_seed) {
    SweepResult out;
    for (int n : sizes) {
        SweepRow row;
        row.x = n;
        const int reps = (topo == Topology::Delaunay) ? seeds : 1;
        for (int s = 0; s < reps; ++s) {
            Graph g = make_topology(topo, n, k, detail::mix_seed(base_seed, static_cast<uint64_t>(n) * 1000 + s));
            row.raw.push_back(fsync_cycles(g, proto));
        }
        double sum = 0;
        for (long long v : row.raw) sum += static_cast<double>(v);
        row.mean = sum / static_cast<double>(row.raw.size());
        out.rows.push_back(std::move(row));
    }
    return out;
}

// Mean FSYNC cycles at fixed n while the door count varies.
inline SweepResult sweep_doors(Protocol proto, int n, const std::vector<int>& door_counts, int seeds,
                               uint64_t base_seed) {
    SweepResult out;
    for (int k : door_counts) {
        SweepRow row;
        row.x = k;
        for (int s = 0; s < seeds; ++s) {
            Graph g = gen_delaunay(n, k, detail::mix_seed(base_seed, static_cast<uint64_t>(k) * 1000 + s));
            row.raw.push_back(fsync_cycles(g, proto));
        }
        double sum = 0;
        for (long long v : row.raw) sum += static_cast<double>(v);
        row.mean = sum / static_cast<double>(row.raw.size());
        out.rows.push_back(std::move(row));
    }
    return out;
}

inline std::string format_mean(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

// Plot input: header a,b then one x,mean row per sweep point.
inline void write_sweep_csv(const SweepResult& r, std::ostream& os) {
    os << "a,b\n";
    for (const auto& row : r.rows) os << row.x << "," << format_mean(row.mean) << "\n";
}

inline void write_sweep_raw_csv(const SweepResult& r, std::ostream& os) {
    os << "a,seed,b\n";
    for (const auto& row : r.rows)
        for (size_t s = 0; s < row.raw.size(); ++s)
            os << row.x << "," << s << "," << row.raw[s] << "\n";
}

struct LinearFit {
    double slope = 0;
    double intercept = 0;
    double r2 = 0;
};

inline LinearFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
    const size_t n = xs.size();
    if (n < 2 || ys.size() != n) throw std::invalid_argument("fit_line: need matching points");
    double sx = 0, sy = 0;
    for (size_t i = 0; i < n; ++i) {
        sx += xs[i];
        sy += ys[i];
    }
    const double mx = sx / static_cast<double>(n), my = sy / static_cast<double>(n);
    double sxx = 0, sxy = 0, syy = 0;
    for (size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0;
    for (size_t i = 0; i < n; ++i) {
        double e = ys[i] - (f.slope * xs[i] + f.intercept);
        ss_res += e * e;
    }
    f.r2 = syy > 0 ? 1.0 - ss_res / syy : 1.0;
    return f;
}

struct FuzzCase {
    Topology topo = Topology::Line;
    int n = 0;
    int k = 1;
    uint64_t graph_seed = 0;
    Protocol proto = Protocol::Pack;
    PolicyConfig policy;
};

struct FuzzReport {
    long long runs = 0;
    long long failures = 0;
    long long max_rounds = 0;
    double worst_bound_ratio = 0;  // rounds / proven bound, worst over runs
    std::optional<FuzzCase> first_failure;
    std::vector<TraceEvent> failure_trace;
    std::string failure_detail;
};

// Randomized small-world runs under adversarial schedules. Reports the
// worst rounds-to-bound ratio and stops at the first violation with a
// size-minimized reproduction.
inline FuzzReport fuzz(Protocol proto, long long runs, int max_n, int max_k, uint64_t seed,
                       Simulation::StepFn override_step = nullptr) {
    FuzzReport rep;
    std::mt19937_64 rng(seed);
    auto run_case = [&](const FuzzCase& c, bool record) -> RunResult {
        Graph g = make_topology(c.topo, c.n, c.k, c.graph_seed);
        RunLimits limits;
        limits.record_trace = record;
        Simulation sim(g, c.proto, limits);
        if (override_step) sim.set_step_override(override_step);
        return run_simulation(sim, c.policy);
    };
    for (long long i = 0; i < runs; ++i) {
        FuzzCase c;
        c.proto = proto;
        const bool multi = proto == Protocol::Priority && max_k >= 2;
        c.k = multi ? 2 + static_cast<int>(rng() % static_cast<uint64_t>(max_k - 1)) : 1;
        switch (rng() % 3) {
            case 0: c.topo = Topology::Line; break;
            case 1: c.topo = Topology::Star; break;
            default: c.topo = Topology::Delaunay; break;
        }
        if (c.k >= 2) c.topo = Topology::Delaunay;
        int min_n = c.topo == Topology::Delaunay ? 3 + c.k : (c.topo == Topology::Star ? 2 : 1);
        c.n = min_n + static_cast<int>(rng() % static_cast<uint64_t>(std::max(1, max_n - min_n + 1)));
        c.graph_seed = rng();
        bool split = proto != Protocol::PackAbp && (rng() & 1);
        c.policy = PolicyConfig::random_async(rng(), split ? PolicyConfig::Phase::Split
                                                           : PolicyConfig::Phase::Atomic,
                                              static_cast<int>(rng() % 4));
        RunResult r = run_case(c, false);
        ++rep.runs;
        rep.max_rounds = std::max(rep.max_rounds, r.metrics.rounds);
        long long bound = proto == Protocol::Pack || proto == Protocol::PackAbp
                              ? pack_round_bound(c.n)
                              : block_round_bound(c.n);
        rep.worst_bound_ratio = std::max(rep.worst_bound_ratio,
                                         static_cast<double>(r.metrics.rounds) / static_cast<double>(bound));
        if (!r.ok()) {
            ++rep.failures;
            // Shrink: try the same schedule on smaller instances.
            FuzzCase best = c;
            for (int n = c.n - 1; n >= min_n; --n) {
                FuzzCase smaller = c;
                smaller.n = n;
                try {
                    if (!run_case(smaller, false).ok()) best = smaller;
                } catch (const std::exception&) {
                    break;
                }
            }
            rep.first_failure = best;
            RunResult detail = run_case(best, true);
            rep.failure_trace = detail.trace;
            std::string d;
            for (const auto& v : detail.metrics.violations) d += v.monitor + " (" + v.detail + "); ";
            if (!detail.all_finished && detail.metrics.violations.empty()) d = "did not terminate";
            rep.failure_detail = d;
            break;
        }
    }
    return rep;
}

// Plain text config mirroring the CLI flags; later keys win, CLI
// overrides file values.
struct ExperimentConfig {
    std::string protocol = "pack";
    std::string topology = "line";
    int n = 10;
    int n_min = 0;      // sweeps: inclusive range with step
    int n_max = 0;
    int n_step = 1;
    int k = 1;
    int seeds = 50;
    uint64_t seed = 1;
    std::string policy = "fsync";
    std::string phase_mode = "atomic";
    double cap_mult = 4.0;
    int max_stutter = 2;
    std::string out;
    std::string trace_path;
    std::string graph_file;
};

inline void apply_config_line(ExperimentConfig& c, const std::string& key, const std::string& value) {
    if (key == "protocol") c.protocol = value;
    else if (key == "topology") c.topology = value;
    else if (key == "n") c.n = std::stoi(value);
    else if (key == "n_min") c.n_min = std::stoi(value);
    else if (key == "n_max") c.n_max = std::stoi(value);
    else if (key == "n_step") c.n_step = std::stoi(value);
    else if (key == "k") c.k = std::stoi(value);
    else if (key == "seeds") c.seeds = std::stoi(value);
    else if (key == "seed") c.seed = std::stoull(value);
    else if (key == "policy") c.policy = value;
    else if (key == "phase_mode") c.phase_mode = value;
    else if (key == "cap_mult") c.cap_mult = std::stod(value);
    else if (key == "max_stutter") c.max_stutter = std::stoi(value);
    else if (key == "out") c.out = value;
    else if (key == "trace") c.trace_path = value;
    else if (key == "graph") c.graph_file = value;
    else throw std::runtime_error("config: unknown key '" + key + "'");
}

inline ExperimentConfig load_config(std::istream& is) {
    ExperimentConfig c;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw std::runtime_error("config: expected key = value: " + line);
        auto trim = [](std::string s) {
            size_t a = s.find_first_not_of(" \t");
            size_t b = s.find_last_not_of(" \t");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        apply_config_line(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return c;
}

}  // namespace graphfill

#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace graphfill {

// Undirected simple graph. adj[v] is the fixed cyclic order of v's
// neighbors; it never changes after construction. doors lists the entry
// vertices in priority rank order (rank 1 = doors[0] = highest priority).
// delta is the degree bound the robots are configured with; it must be
// at least the actual maximum degree.
struct Graph {
    std::vector<std::vector<int>> adj;
    std::vector<int> doors;
    int delta = 1;

    int n() const { return static_cast<int>(adj.size()); }
    int degree(int v) const { return static_cast<int>(adj[static_cast<size_t>(v)].size()); }
    bool has_vertex(int v) const { return v >= 0 && v < n(); }

    int max_degree() const {
        int m = 0;
        for (const auto& nb : adj) m = std::max(m, static_cast<int>(nb.size()));
        return m;
    }

    bool is_door(int v) const {
        return std::find(doors.begin(), doors.end(), v) != doors.end();
    }

    // 1-based rank of a door vertex, 0 if v is not a door.
    int door_rank(int v) const {
        for (size_t i = 0; i < doors.size(); ++i)
            if (doors[i] == v) return static_cast<int>(i) + 1;
        return 0;
    }

    bool operator==(const Graph& o) const {
        return adj == o.adj && doors == o.doors;
    }
};

struct ValidationIssue {
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    bool ok() const { return issues.empty(); }
};

inline ValidationReport validate(const Graph& g) {
    ValidationReport rep;
    auto add = [&rep](const std::string& m) { rep.issues.push_back({m}); };
    const int n = g.n();
    if (n == 0) {
        add("graph has no vertices");
        return rep;
    }
    for (int v = 0; v < n; ++v) {
        std::vector<int> seen;
        for (int u : g.adj[static_cast<size_t>(v)]) {
            if (u < 0 || u >= n) {
                add("vertex " + std::to_string(v) + " lists out-of-range neighbor " + std::to_string(u));
                continue;
            }
            if (u == v) add("self-loop at vertex " + std::to_string(v));
            if (std::find(seen.begin(), seen.end(), u) != seen.end())
                add("vertex " + std::to_string(v) + " lists neighbor " + std::to_string(u) + " more than once");
            seen.push_back(u);
            const auto& back = g.adj[static_cast<size_t>(u)];
            if (std::find(back.begin(), back.end(), v) == back.end())
                add("edge symmetry violation between " + std::to_string(v) + " and " + std::to_string(u));
        }
        if (g.degree(v) > g.delta)
            add("vertex " + std::to_string(v) + " degree " + std::to_string(g.degree(v)) +
                " exceeds configured bound " + std::to_string(g.delta));
    }
    if (g.doors.empty()) add("graph has no door vertex");
    for (int d : g.doors) {
        if (d < 0 || d >= n) {
            add("door id " + std::to_string(d) + " out of range");
            continue;
        }
        // A door must have degree 1; the one-vertex graph has no edge to give it.
        if (!(g.degree(d) == 1 || (n == 1 && g.degree(d) == 0)))
            add("door " + std::to_string(d) + " has degree " + std::to_string(g.degree(d)) + ", expected 1");
    }
    // Connectivity by BFS from vertex 0.
    std::vector<char> vis(static_cast<size_t>(n), 0);
    std::queue<int> q;
    q.push(0);
    vis[0] = 1;
    int reached = 1;
    while (!q.empty()) {
        int v = q.front();
        q.pop();
        for (int u : g.adj[static_cast<size_t>(v)]) {
            if (u >= 0 && u < n && !vis[static_cast<size_t>(u)]) {
                vis[static_cast<size_t>(u)] = 1;
                ++reached;
                q.push(u);
            }
        }
    }
    if (reached != n) add("graph is not connected (" + std::to_string(reached) + " of " + std::to_string(n) + " reachable)");
    return rep;
}

// Adds a degree-1 vertex attached to v and registers it as a door. The new
// neighbor goes at the end of v's cyclic order so existing direction
// indices keep their meaning.
inline Graph attach_auxiliary_door(const Graph& g, int v) {
    if (!g.has_vertex(v)) throw std::invalid_argument("attach_auxiliary_door: no vertex " + std::to_string(v));
    Graph out = g;
    const int d = out.n();
    out.adj.emplace_back(std::vector<int>{v});
    out.adj[static_cast<size_t>(v)].push_back(d);
    out.doors.push_back(d);
    out.delta = std::max(out.delta, out.max_degree());
    return out;
}

// The cyclic order at v cut at `entry`: rotated to start just past entry,
// with entry itself removed. Without an entry (a robot that has never
// moved) the full cyclic order is returned.
inline std::vector<int> linear_order(const Graph& g, int v, std::optional<int> entry) {
    if (!g.has_vertex(v)) throw std::invalid_argument("linear_order: no vertex " + std::to_string(v));
    const auto& cyc = g.adj[static_cast<size_t>(v)];
    if (!entry.has_value()) return cyc;
    auto it = std::find(cyc.begin(), cyc.end(), *entry);
    if (it == cyc.end())
        throw std::invalid_argument("linear_order: " + std::to_string(*entry) + " is not adjacent to " + std::to_string(v));
    std::vector<int> out;
    out.reserve(cyc.size() - 1);
    size_t start = static_cast<size_t>(it - cyc.begin());
    for (size_t i = 1; i < cyc.size(); ++i)
        out.push_back(cyc[(start + i) % cyc.size()]);
    return out;
}

// Rooted view of v's surroundings. Depth-1 entries follow v's cyclic
// order; at radius 2 every depth-1 vertex carries its own cyclic
// neighbor list with the edge back to v marked. Only the simulation
// engine sees the vertex ids in here; protocol code gets directions and
// payloads, never identities.
struct LocalView {
    struct Around {
        int vertex;
        bool is_back;  // edge returns to the root
    };
    struct Depth1 {
        int vertex;
        std::vector<Around> around;  // empty at radius 1
    };
    int root = 0;
    int radius = 1;
    std::vector<Depth1> slots;
};

inline LocalView local_view(const Graph& g, int v, int radius) {
    if (radius != 1 && radius != 2) throw std::invalid_argument("local_view: radius must be 1 or 2");
    if (!g.has_vertex(v)) throw std::invalid_argument("local_view: no vertex " + std::to_string(v));
    LocalView view;
    view.root = v;
    view.radius = radius;
    for (int u : g.adj[static_cast<size_t>(v)]) {
        LocalView::Depth1 d1;
        d1.vertex = u;
        if (radius == 2) {
            for (int w : g.adj[static_cast<size_t>(u)])
                d1.around.push_back({w, w == v});
        }
        view.slots.push_back(std::move(d1));
    }
    return view;
}

// Path v0..v(n-1); the door is v0.
inline Graph gen_line(int n) {
    if (n < 1) throw std::invalid_argument("gen_line: n must be >= 1");
    Graph g;
    g.adj.assign(static_cast<size_t>(n), {});
    for (int i = 0; i + 1 < n; ++i) {
        g.adj[static_cast<size_t>(i)].push_back(i + 1);
        g.adj[static_cast<size_t>(i + 1)].push_back(i);
    }
    for (auto& nb : g.adj) std::sort(nb.begin(), nb.end());
    g.doors = {0};
    g.delta = std::max(1, g.max_degree());
    return g;
}

// Center v0 joined to every other vertex; the door is the leaf v1.
inline Graph gen_star(int n) {
    if (n < 2) throw std::invalid_argument("gen_star: n must be >= 2");
    Graph g;
    g.adj.assign(static_cast<size_t>(n), {});
    for (int i = 1; i < n; ++i) {
        g.adj[0].push_back(i);
        g.adj[static_cast<size_t>(i)].push_back(0);
    }
    g.doors = {1};
    g.delta = std::max(1, g.max_degree());
    return g;
}

// Text format, round-trips exactly:
//   n <count>
//   doors <id> <id> ...
//   adj <v> <n1> <n2> ...        one line per vertex, cyclic order
inline void save_graph(const Graph& g, std::ostream& os) {
    os << "n " << g.n() << "\n";
    os << "doors";
    for (int d : g.doors) os << " " << d;
    os << "\n";
    for (int v = 0; v < g.n(); ++v) {
        os << "adj " << v;
        for (int u : g.adj[static_cast<size_t>(v)]) os << " " << u;
        os << "\n";
    }
}

inline std::string graph_to_string(const Graph& g) {
    std::ostringstream ss;
    save_graph(g, ss);
    return ss.str();
}

inline Graph load_graph(std::istream& is) {
    Graph g;
    std::string line;
    int n = -1;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "n") {
            if (!(ls >> n) || n < 0) throw std::runtime_error("graph file: bad vertex count");
            g.adj.assign(static_cast<size_t>(n), {});
        } else if (tag == "doors") {
            int d;
            while (ls >> d) g.doors.push_back(d);
        } else if (tag == "adj") {
            int v;
            if (!(ls >> v) || n < 0 || v < 0 || v >= n) throw std::runtime_error("graph file: bad adj line");
            int u;
            while (ls >> u) g.adj[static_cast<size_t>(v)].push_back(u);
        } else {
            throw std::runtime_error("graph file: unknown line tag '" + tag + "'");
        }
    }
    if (n < 0) throw std::runtime_error("graph file: missing 'n' line");
    g.delta = std::max(1, g.max_degree());
    return g;
}

inline Graph load_graph_string(const std::string& s) {
    std::istringstream ss(s);
    return load_graph(ss);
}

}  // namespace graphfill

#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <set>
#include <stdexcept>
#include <vector>

#include "graphfill/graph.hpp"

namespace graphfill {

// Points live on a 2^20 integer grid inside the unit square so the
// orientation and in-circle predicates can be evaluated exactly in
// 128-bit integers. A zero sign from either predicate marks a degenerate
// (collinear or cocircular) configuration and the offending point is
// resampled.
struct GridPoint {
    int64_t x = 0;
    int64_t y = 0;
    bool operator==(const GridPoint& o) const { return x == o.x && y == o.y; }
    bool operator<(const GridPoint& o) const { return x < o.x || (x == o.x && y < o.y); }
};

constexpr int64_t kGridSize = int64_t{1} << 20;

inline int sign_of(__int128 v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }

// >0 when a,b,c turn counterclockwise.
inline int orient(const GridPoint& a, const GridPoint& b, const GridPoint& c) {
    __int128 det = static_cast<__int128>(b.x - a.x) * (c.y - a.y) -
                   static_cast<__int128>(b.y - a.y) * (c.x - a.x);
    return sign_of(det);
}

// >0 when d lies strictly inside the circumcircle of ccw triangle a,b,c.
inline int in_circle(const GridPoint& a, const GridPoint& b, const GridPoint& c, const GridPoint& d) {
    __int128 adx = a.x - d.x, ady = a.y - d.y;
    __int128 bdx = b.x - d.x, bdy = b.y - d.y;
    __int128 cdx = c.x - d.x, cdy = c.y - d.y;
    __int128 ad2 = adx * adx + ady * ady;
    __int128 bd2 = bdx * bdx + bdy * bdy;
    __int128 cd2 = cdx * cdx + cdy * cdy;
    __int128 det = adx * (bdy * cd2 - cdy * bd2) - ady * (bdx * cd2 - cdx * bd2) +
                   ad2 * (bdx * cdy - cdx * bdy);
    return sign_of(det);
}

struct Triangle {
    int a, b, c;
};

namespace detail {

struct DegenerateInsert {};

// One Bowyer-Watson insertion pass. Throws DegenerateInsert when the new
// point produces an exactly-zero predicate anywhere it matters.
inline void bw_insert(std::vector<Triangle>& tris, const std::vector<GridPoint>& pts, int pi) {
    const GridPoint& p = pts[static_cast<size_t>(pi)];
    std::vector<Triangle> keep;
    std::vector<std::array<int, 2>> boundary;
    auto push_edge = [&boundary](int u, int v) {
        // Edges shared by two bad triangles cancel; boundary edges survive.
        for (size_t i = 0; i < boundary.size(); ++i) {
            if (boundary[i][0] == v && boundary[i][1] == u) {
                boundary.erase(boundary.begin() + static_cast<long>(i));
                return;
            }
        }
        boundary.push_back({u, v});
    };
    for (const Triangle& t : tris) {
        int s = in_circle(pts[static_cast<size_t>(t.a)], pts[static_cast<size_t>(t.b)],
                          pts[static_cast<size_t>(t.c)], p);
        if (s == 0) throw DegenerateInsert{};
        if (s > 0) {
            push_edge(t.a, t.b);
            push_edge(t.b, t.c);
            push_edge(t.c, t.a);
        } else {
            keep.push_back(t);
        }
    }
    if (boundary.empty()) throw DegenerateInsert{};  // point coincides or lies on an edge
    for (const auto& e : boundary) {
        int o = orient(pts[static_cast<size_t>(e[0])], pts[static_cast<size_t>(e[1])], p);
        if (o == 0) throw DegenerateInsert{};
        Triangle t{e[0], e[1], pi};
        if (o < 0) std::swap(t.a, t.b);
        keep.push_back(t);
    }
    tris = std::move(keep);
}

}  // namespace detail

// Delaunay triangulation of distinct grid points in general position.
// Returns triangles over the input indices. Throws std::invalid_argument
// on degenerate input (collinear/cocircular quadruples or duplicates);
// callers that sample random points resample instead.
inline std::vector<Triangle> triangulate(const std::vector<GridPoint>& pts) {
    if (pts.size() < 3) throw std::invalid_argument("triangulate: need at least 3 points");
    std::vector<GridPoint> all = pts;
    const int n = static_cast<int>(pts.size());
    // Super-triangle comfortably containing the grid.
    all.push_back({-4 * kGridSize, -4 * kGridSize});
    all.push_back({8 * kGridSize, -4 * kGridSize});
    all.push_back({kGridSize / 2, 8 * kGridSize});
    std::vector<Triangle> tris{{n, n + 1, n + 2}};
    if (orient(all[static_cast<size_t>(n)], all[static_cast<size_t>(n + 1)], all[static_cast<size_t>(n + 2)]) <= 0)
        throw std::logic_error("triangulate: super-triangle orientation");
    try {
        for (int i = 0; i < n; ++i) detail::bw_insert(tris, all, i);
    } catch (const detail::DegenerateInsert&) {
        throw std::invalid_argument("triangulate: degenerate point configuration");
    }
    std::vector<Triangle> out;
    for (const Triangle& t : tris)
        if (t.a < n && t.b < n && t.c < n) out.push_back(t);
    // At least one interior triangle exists unless the input was
    // collinear in a way no zero predicate caught.
    if (out.empty()) throw std::invalid_argument("triangulate: degenerate point configuration");
    return out;
}

inline std::vector<GridPoint> sample_distinct_points(std::mt19937_64& rng, int count) {
    std::set<GridPoint> seen;
    std::vector<GridPoint> pts;
    while (static_cast<int>(pts.size()) < count) {
        GridPoint p{static_cast<int64_t>(rng() >> 44), static_cast<int64_t>(rng() >> 44)};
        if (seen.insert(p).second) pts.push_back(p);
    }
    return pts;
}

// Random Delaunay graph: n-k interior points triangulated, then k door
// points each attached as a degree-1 vertex to the Euclidean-nearest
// interior vertex (ties to the lower id). Cyclic orders are ascending
// vertex id. Deterministic per seed.
inline Graph gen_delaunay(int n, int k, uint64_t seed) {
    if (k < 1) throw std::invalid_argument("gen_delaunay: k must be >= 1");
    if (n < 3 + k) throw std::invalid_argument("gen_delaunay: n must be >= 3 + k");
    const int interior = n - k;
    std::mt19937_64 rng(seed);
    std::vector<GridPoint> pts = sample_distinct_points(rng, interior);
    std::vector<Triangle> tris;
    bool done = false;
    for (int attempt = 0; attempt < 100 && !done; ++attempt) {
        try {
            tris = triangulate(pts);
            done = true;
        } catch (const std::invalid_argument&) {
            // Resample one point and retry; degeneracies have measure zero.
            std::set<GridPoint> seen(pts.begin(), pts.end());
            size_t victim = static_cast<size_t>(rng() % pts.size());
            seen.erase(pts[victim]);
            GridPoint p;
            do {
                p = {static_cast<int64_t>(rng() >> 44), static_cast<int64_t>(rng() >> 44)};
            } while (!seen.insert(p).second);
            pts[victim] = p;
        }
    }
    if (!done) throw std::runtime_error("gen_delaunay: retry budget exhausted on degenerate input");

    Graph g;
    g.adj.assign(static_cast<size_t>(n), {});
    std::set<std::array<int, 2>> edges;
    for (const Triangle& t : tris) {
        auto add = [&edges](int u, int v) {
            edges.insert({std::min(u, v), std::max(u, v)});
        };
        add(t.a, t.b);
        add(t.b, t.c);
        add(t.c, t.a);
    }
    for (const auto& e : edges) {
        g.adj[static_cast<size_t>(e[0])].push_back(e[1]);
        g.adj[static_cast<size_t>(e[1])].push_back(e[0]);
    }
    // Door points: nearest interior vertex by exact squared distance.
    std::vector<GridPoint> door_pts = sample_distinct_points(rng, k);
    for (int j = 0; j < k; ++j) {
        const GridPoint& dp = door_pts[static_cast<size_t>(j)];
        int best = 0;
        __int128 best_d2 = -1;
        for (int v = 0; v < interior; ++v) {
            __int128 dx = pts[static_cast<size_t>(v)].x - dp.x;
            __int128 dy = pts[static_cast<size_t>(v)].y - dp.y;
            __int128 d2 = dx * dx + dy * dy;
            if (best_d2 < 0 || d2 < best_d2) {
                best_d2 = d2;
                best = v;
            }
        }
        int door_id = interior + j;
        g.adj[static_cast<size_t>(door_id)].push_back(best);
        g.adj[static_cast<size_t>(best)].push_back(door_id);
        g.doors.push_back(door_id);
    }
    for (auto& nb : g.adj) std::sort(nb.begin(), nb.end());
    g.delta = std::max(1, g.max_degree());
    return g;
}

}  // namespace graphfill

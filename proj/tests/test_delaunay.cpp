#include <catch2/catch_amalgamated.hpp>

#include <queue>
#include <set>

#include "graphfill/delaunay.hpp"

using namespace graphfill;

namespace {

// Brute-force empty-circumcircle oracle, independent of the incremental
// construction: every triangle's circumcircle must contain no other
// input point strictly inside.
bool delaunay_property_holds(const std::vector<GridPoint>& pts, const std::vector<Triangle>& tris) {
    for (const auto& t : tris) {
        GridPoint a = pts[static_cast<size_t>(t.a)];
        GridPoint b = pts[static_cast<size_t>(t.b)];
        GridPoint c = pts[static_cast<size_t>(t.c)];
        if (orient(a, b, c) < 0) std::swap(b, c);
        for (size_t p = 0; p < pts.size(); ++p) {
            if (static_cast<int>(p) == t.a || static_cast<int>(p) == t.b || static_cast<int>(p) == t.c)
                continue;
            if (in_circle(a, b, c, pts[p]) > 0) return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("triangle of three points") {
    Graph g = gen_delaunay(4, 1, 42);
    REQUIRE(g.n() == 4);
    CHECK(g.doors.size() == 1);
    CHECK(g.degree(g.doors[0]) == 1);
    // 3 interior points form one triangle plus the door edge.
    int edges = 0;
    for (int v = 0; v < g.n(); ++v) edges += g.degree(v);
    CHECK(edges / 2 == 4);
    CHECK(validate(g).ok());
}

TEST_CASE("empty circumcircle property on random inputs") {
    for (uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        std::mt19937_64 rng(seed);
        auto pts = sample_distinct_points(rng, 40);
        auto tris = triangulate(pts);
        REQUIRE_FALSE(tris.empty());
        CHECK(delaunay_property_holds(pts, tris));
    }
}

TEST_CASE("same seed gives identical graphs") {
    Graph a = gen_delaunay(30, 2, 7);
    Graph b = gen_delaunay(30, 2, 7);
    CHECK(a == b);
    Graph c = gen_delaunay(30, 2, 8);
    CHECK_FALSE(a == c);
}

TEST_CASE("generated delaunay graphs validate, are planar and connected") {
    for (uint64_t seed : {11ULL, 12ULL}) {
        Graph g = gen_delaunay(60, 3, seed);
        CHECK(validate(g).ok());
        long long edges = 0;
        for (int v = 0; v < g.n(); ++v) edges += g.degree(v);
        edges /= 2;
        CHECK(edges <= 3LL * g.n() - 6);  // planarity bound
        CHECK(g.doors.size() == 3);
        for (int d : g.doors) CHECK(g.degree(d) == 1);
    }
}

TEST_CASE("preconditions") {
    CHECK_THROWS_AS(gen_delaunay(3, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(gen_delaunay(10, 0, 1), std::invalid_argument);
    std::vector<GridPoint> two{{0, 0}, {5, 5}};
    CHECK_THROWS_AS(triangulate(two), std::invalid_argument);
    // Collinear points are degenerate by construction.
    std::vector<GridPoint> collinear{{0, 0}, {10, 10}, {20, 20}};
    CHECK_THROWS_AS(triangulate(collinear), std::invalid_argument);
}

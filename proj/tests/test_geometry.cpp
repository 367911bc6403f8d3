#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "rmkit/geometry.hpp"
#include "rmkit/rng.hpp"

using namespace rmkit;

TEST(Polygon, RectIsCounterClockwiseWithArea) {
    const Polygon r = rect_polygon({1, 2}, {4, 3});
    EXPECT_DOUBLE_EQ(signed_area(r), 3.0);
    EXPECT_TRUE(is_simple(r));
    EXPECT_TRUE(is_convex(r));
}

TEST(Polygon, BowtieIsNotSimple) {
    const Polygon bow{{0, 0}, {1, 1}, {1, 0}, {0, 1}};
    EXPECT_FALSE(is_simple(bow));
}

TEST(Polygon, PointInPolygonConcave) {
    // L shape
    const Polygon l{{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}};
    EXPECT_TRUE(point_in_polygon({0.5, 1.5}, l));
    EXPECT_TRUE(point_in_polygon({1.5, 0.5}, l));
    EXPECT_FALSE(point_in_polygon({1.5, 1.5}, l));
    EXPECT_FALSE(is_convex(l));
}

TEST(Polygon, IntersectionAreaOfOffsetSquares) {
    const Polygon a = rect_polygon({0, 0}, {2, 2});
    const Polygon b = rect_polygon({1, 1}, {3, 3});
    EXPECT_NEAR(intersection_area(a, b), 1.0, 1e-12);
    const Polygon c = rect_polygon({2, 0}, {3, 1});  // shares an edge
    EXPECT_NEAR(intersection_area(a, c), 0.0, 1e-12);
}

TEST(Polygon, IntersectionAreaConcaveMatchesSampling) {
    const Polygon l{{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}};
    const Polygon sq = rect_polygon({0.5, 0.5}, {1.5, 1.5});
    // Midpoint-rule count over a fine lattice.
    const int n = 400;
    int hits = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const Vec2 p{0.5 + (i + 0.5) / n, 0.5 + (j + 0.5) / n};
            if (point_in_polygon(p, l)) ++hits;
        }
    }
    EXPECT_NEAR(intersection_area(l, sq), static_cast<double>(hits) / (n * n), 1e-2);
    EXPECT_NEAR(intersection_area(l, sq), 0.75, 1e-12);
}

TEST(Polygon, TriangulationCoversArea) {
    const Polygon l{{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}};
    double area = 0.0;
    for (const auto& t : triangulate(l)) area += signed_area(Polygon(t.begin(), t.end()));
    EXPECT_NEAR(area, 3.0, 1e-12);
}

TEST(Segment, ClipThroughSquare) {
    const Polygon sq = rect_polygon({1, -1}, {2, 1});
    const auto c = clip_segment_convex({0, 0}, {4, 0}, sq, 0.0);
    ASSERT_TRUE(c.has_value());
    EXPECT_NEAR(c->t_in, 0.25, 1e-12);
    EXPECT_NEAR(c->t_out, 0.5, 1e-12);
    // The polygon is grown by the tolerance on every side.
    const auto g = clip_segment_convex({0, 0}, {4, 0}, sq, 0.1);
    ASSERT_TRUE(g.has_value());
    EXPECT_NEAR(g->t_in, 0.225, 1e-12);
    EXPECT_NEAR(g->t_out, 0.525, 1e-12);
    EXPECT_FALSE(clip_segment_convex({0, 2}, {4, 2}, sq, 1e-9).has_value());
}

TEST(Segment, DistanceToPolygon) {
    const Polygon sq = rect_polygon({0, 0}, {1, 1});
    EXPECT_NEAR(point_polygon_distance({2, 0.5}, sq), 1.0, 1e-12);
    EXPECT_NEAR(point_polygon_distance({2, 2}, sq), std::sqrt(2.0), 1e-12);
}

TEST(Rng, SameSeedSameStream) {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, DerivedSeedsDependOnEveryKey) {
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 100; ++i) {
        seen.insert(derive_seed(7, std::string_view("scene"), i));
        seen.insert(derive_seed(7, std::string_view("tx"), i));
    }
    EXPECT_EQ(seen.size(), 200u);
    EXPECT_EQ(derive_seed(1, std::string_view("a"), 3), derive_seed(1, std::string_view("a"), 3));
}

TEST(Rng, UniformMomentsAndRange) {
    Rng r(3);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
        sq += u * u;
    }
    EXPECT_NEAR(sum / n, 0.5, 5e-3);
    EXPECT_NEAR(sq / n - (sum / n) * (sum / n), 1.0 / 12.0, 2e-3);
}

TEST(Rng, NormalMoments) {
    Rng r(9);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal();
        sum += x;
        sq += x * x;
    }
    EXPECT_NEAR(sum / n, 0.0, 1e-2);
    EXPECT_NEAR(sq / n, 1.0, 1e-2);
}

TEST(Rng, UniformIntIsInclusiveAndUnbiased) {
    Rng r(5);
    std::array<int, 6> counts{};
    for (int i = 0; i < 60000; ++i) {
        const auto v = r.uniform_int(0, 5);
        ASSERT_GE(v, 0);
        ASSERT_LE(v, 5);
        ++counts[static_cast<std::size_t>(v)];
    }
    for (int c : counts) EXPECT_NEAR(c, 10000, 400);
}

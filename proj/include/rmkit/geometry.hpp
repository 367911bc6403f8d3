#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace rmkit {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend constexpr Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
    friend constexpr bool operator==(Vec2, Vec2) = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend constexpr Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
    friend constexpr Vec3 operator*(Vec3 a, double s) { return {s * a.x, s * a.y, s * a.z}; }
    friend constexpr bool operator==(Vec3, Vec3) = default;
};

constexpr double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
constexpr Vec2 xy(Vec3 a) { return {a.x, a.y}; }

/// Axis-aligned rectangle in the x-y plane.
struct Rect {
    Vec2 min;
    Vec2 max;

    double width() const { return max.x - min.x; }
    double depth() const { return max.y - min.y; }
    bool contains(Vec2 p, double tol = 0.0) const {
        return p.x >= min.x - tol && p.x <= max.x + tol && p.y >= min.y - tol && p.y <= max.y + tol;
    }
    bool strictly_contains(Vec2 p) const {
        return p.x > min.x && p.x < max.x && p.y > min.y && p.y < max.y;
    }
    bool overlaps(const Rect& o, double tol = 0.0) const {
        return min.x <= o.max.x + tol && o.min.x <= max.x + tol && min.y <= o.max.y + tol &&
               o.min.y <= max.y + tol;
    }
    friend bool operator==(const Rect&, const Rect&) = default;
};

using Polygon = std::vector<Vec2>;

/// Counter-clockwise rectangle polygon.
inline Polygon rect_polygon(Vec2 lo, Vec2 hi) {
    return {{lo.x, lo.y}, {hi.x, lo.y}, {hi.x, hi.y}, {lo.x, hi.y}};
}

inline double signed_area(const Polygon& poly) {
    double a = 0.0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        a += cross(poly[i], poly[(i + 1) % n]);
    }
    return 0.5 * a;
}

inline Rect bounding_box(const Polygon& poly) {
    Rect r{{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()},
           {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()}};
    for (const auto& p : poly) {
        r.min.x = std::min(r.min.x, p.x);
        r.min.y = std::min(r.min.y, p.y);
        r.max.x = std::max(r.max.x, p.x);
        r.max.y = std::max(r.max.y, p.y);
    }
    return r;
}

inline Polygon translated(const Polygon& poly, Vec2 offset) {
    Polygon out;
    out.reserve(poly.size());
    for (const auto& p : poly) out.push_back(p + offset);
    return out;
}

namespace detail {

inline int orientation(Vec2 a, Vec2 b, Vec2 c, double tol) {
    const double v = cross(b - a, c - a);
    if (v > tol) return 1;
    if (v < -tol) return -1;
    return 0;
}

inline bool on_segment(Vec2 a, Vec2 b, Vec2 p, double tol) {
    return std::min(a.x, b.x) - tol <= p.x && p.x <= std::max(a.x, b.x) + tol &&
           std::min(a.y, b.y) - tol <= p.y && p.y <= std::max(a.y, b.y) + tol;
}

}  // namespace detail

/// Closed segment intersection test (touching counts).
inline bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d, double tol = 1e-12) {
    const int o1 = detail::orientation(a, b, c, tol);
    const int o2 = detail::orientation(a, b, d, tol);
    const int o3 = detail::orientation(c, d, a, tol);
    const int o4 = detail::orientation(c, d, b, tol);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && detail::on_segment(a, b, c, tol)) return true;
    if (o2 == 0 && detail::on_segment(a, b, d, tol)) return true;
    if (o3 == 0 && detail::on_segment(c, d, a, tol)) return true;
    if (o4 == 0 && detail::on_segment(c, d, b, tol)) return true;
    return false;
}

/// True when no two non-adjacent edges touch and adjacent edges share only their vertex.
inline bool is_simple(const Polygon& poly) {
    const std::size_t n = poly.size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = poly[i];
        const Vec2 b = poly[(i + 1) % n];
        if (a == b) return false;
        for (std::size_t j = i + 1; j < n; ++j) {
            const Vec2 c = poly[j];
            const Vec2 d = poly[(j + 1) % n];
            const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
            if (adjacent) {
                // Adjacent edges must not fold back onto each other.
                const Vec2 shared = (j == i + 1) ? b : a;
                const Vec2 p = (j == i + 1) ? a : b;
                const Vec2 q = (j == i + 1) ? d : c;
                if (detail::orientation(p, shared, q, 0.0) == 0 && dot(p - shared, q - shared) > 0.0) {
                    return false;
                }
                continue;
            }
            if (segments_intersect(a, b, c, d, 0.0)) return false;
        }
    }
    return true;
}

inline bool is_convex(const Polygon& poly) {
    const std::size_t n = poly.size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i) {
        if (cross(poly[(i + 1) % n] - poly[i], poly[(i + 2) % n] - poly[(i + 1) % n]) < 0.0) {
            return false;
        }
    }
    return true;
}

/// Even-odd crossing test. Points exactly on the boundary may land on either side.
inline bool point_in_polygon(Vec2 p, const Polygon& poly) {
    bool inside = false;
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2 a = poly[i];
        const Vec2 b = poly[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < x_cross) inside = !inside;
        }
    }
    return inside;
}

inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    const Vec2 ab = b - a;
    const double len2 = dot(ab, ab);
    double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return norm(p - (a + t * ab));
}

/// Distance from a point to a filled polygon; zero inside.
inline double point_polygon_distance(Vec2 p, const Polygon& poly) {
    if (point_in_polygon(p, poly)) return 0.0;
    double d = std::numeric_limits<double>::infinity();
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        d = std::min(d, point_segment_distance(p, poly[i], poly[(i + 1) % n]));
    }
    return d;
}

/// Ear-clipping triangulation of a simple counter-clockwise polygon.
inline std::vector<std::array<Vec2, 3>> triangulate(const Polygon& poly) {
    std::vector<std::array<Vec2, 3>> tris;
    std::vector<std::size_t> idx(poly.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::size_t guard = 0;
    while (idx.size() > 3 && guard < 10 * poly.size() * poly.size()) {
        ++guard;
        bool clipped = false;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const Vec2 a = poly[idx[(k + idx.size() - 1) % idx.size()]];
            const Vec2 b = poly[idx[k]];
            const Vec2 c = poly[idx[(k + 1) % idx.size()]];
            if (cross(b - a, c - b) <= 0.0) continue;
            bool contains_other = false;
            for (std::size_t m = 0; m < idx.size() && !contains_other; ++m) {
                const Vec2 p = poly[idx[m]];
                if (p == a || p == b || p == c) continue;
                contains_other = cross(b - a, p - a) >= 0.0 && cross(c - b, p - b) >= 0.0 &&
                                 cross(a - c, p - c) >= 0.0;
            }
            if (contains_other) continue;
            tris.push_back({a, b, c});
            idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(k));
            clipped = true;
            break;
        }
        if (!clipped) break;
    }
    if (idx.size() == 3) tris.push_back({poly[idx[0]], poly[idx[1]], poly[idx[2]]});
    return tris;
}

/// Sutherland-Hodgman clip of a convex CCW subject by a convex CCW clip polygon.
inline Polygon clip_convex(const Polygon& subject, const Polygon& clip) {
    Polygon out = subject;
    const std::size_t m = clip.size();
    for (std::size_t i = 0; i < m && !out.empty(); ++i) {
        const Vec2 a = clip[i];
        const Vec2 b = clip[(i + 1) % m];
        const Polygon in = std::move(out);
        out.clear();
        const std::size_t n = in.size();
        for (std::size_t j = 0; j < n; ++j) {
            const Vec2 p = in[j];
            const Vec2 q = in[(j + 1) % n];
            const double sp = cross(b - a, p - a);
            const double sq = cross(b - a, q - a);
            if (sp >= 0.0) out.push_back(p);
            if ((sp >= 0.0) != (sq >= 0.0)) {
                const double t = sp / (sp - sq);
                out.push_back(p + t * (q - p));
            }
        }
    }
    return out;
}

/// Convex pieces of a simple CCW polygon (the polygon itself when convex).
inline std::vector<Polygon> convex_pieces(const Polygon& poly) {
    if (is_convex(poly)) return {poly};
    std::vector<Polygon> out;
    for (const auto& t : triangulate(poly)) out.push_back({t[0], t[1], t[2]});
    return out;
}

/// Area of the intersection of two simple CCW polygons.
inline double intersection_area(const Polygon& a, const Polygon& b) {
    if (!bounding_box(a).overlaps(bounding_box(b))) return 0.0;
    double area = 0.0;
    for (const auto& pa : convex_pieces(a)) {
        for (const auto& pb : convex_pieces(b)) {
            const Polygon c = clip_convex(pa, pb);
            if (c.size() >= 3) area += std::abs(signed_area(c));
        }
    }
    return area;
}

/// Parametric span of a segment inside a convex CCW polygon.
struct ConvexClip {
    double t_in = 0.0;
    double t_out = 1.0;
    int edge_in = -1;   ///< polygon edge crossed on entry; -1 when the segment starts inside
    int edge_out = -1;  ///< polygon edge crossed on exit; -1 when the segment ends inside
};

/// Cyrus-Beck clip of p0->p1 against a convex CCW polygon grown by `tol`.
inline std::optional<ConvexClip> clip_segment_convex(Vec2 p0, Vec2 p1, const Polygon& poly, double tol) {
    ConvexClip c;
    const Vec2 d = p1 - p0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = poly[i];
        const Vec2 e = poly[(i + 1) % n] - a;
        const double len = norm(e);
        // Outward normal of a CCW edge.
        const Vec2 nrm{e.y / len, -e.x / len};
        const double dist0 = dot(p0 - a, nrm) - tol;  // > 0 means outside this half-plane
        const double rate = dot(d, nrm);
        if (rate == 0.0) {
            if (dist0 > 0.0) return std::nullopt;
            continue;
        }
        const double t = -dist0 / rate;
        if (rate < 0.0) {
            if (t > c.t_in) {
                c.t_in = t;
                c.edge_in = static_cast<int>(i);
            }
        } else if (t < c.t_out) {
            c.t_out = t;
            c.edge_out = static_cast<int>(i);
        }
        if (c.t_in > c.t_out) return std::nullopt;
    }
    return c;
}

}  // namespace rmkit

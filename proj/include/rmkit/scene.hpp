#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "rmkit/errors.hpp"
#include "rmkit/geometry.hpp"
#include "rmkit/material.hpp"

namespace rmkit {

enum class ObjectKind { wall, table, chair, radiator, lamp, cabinet, whiteboard, other };

inline std::string_view to_string(ObjectKind k) {
    switch (k) {
        case ObjectKind::wall: return "wall";
        case ObjectKind::table: return "table";
        case ObjectKind::chair: return "chair";
        case ObjectKind::radiator: return "radiator";
        case ObjectKind::lamp: return "lamp";
        case ObjectKind::cabinet: return "cabinet";
        case ObjectKind::whiteboard: return "whiteboard";
        case ObjectKind::other: return "other";
    }
    return "other";
}

inline ObjectKind object_kind_from_string(std::string_view s) {
    for (auto k : {ObjectKind::wall, ObjectKind::table, ObjectKind::chair, ObjectKind::radiator, ObjectKind::lamp,
                   ObjectKind::cabinet, ObjectKind::whiteboard, ObjectKind::other}) {
        if (to_string(k) == s) return k;
    }
    throw FormatError("unknown object kind '" + std::string(s) + "'");
}

/// Extruded polygon: footprint in x-y (CCW, meters) swept over [z_min, z_max].
struct SceneObject {
    int id = 0;
    Polygon footprint;
    double z_min = 0.0;
    double z_max = 1.0;
    Material material;
    ObjectKind kind = ObjectKind::other;

    friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

struct Transmitter {
    Vec3 position;
    double power_dbm = 0.0;
    double frequency_hz = 5.92e9;

    friend bool operator==(const Transmitter&, const Transmitter&) = default;
};

/// Provenance of a noisy copy.
struct PerturbationInfo {
    std::string base_scene_id;
    int copy_index = 0;
    double mean_offset_m = 0.0;
    std::vector<std::string> targets;

    friend bool operator==(const PerturbationInfo&, const PerturbationInfo&) = default;
};

struct Scene {
    std::string id;
    Rect bounds;  ///< room interior
    double room_height = 3.0;
    std::vector<SceneObject> walls;
    std::vector<SceneObject> furniture;
    std::vector<Transmitter> transmitters;
    std::uint64_t rng_seed = 0;
    std::optional<PerturbationInfo> perturbation;

    /// Walls first, then furniture.
    std::vector<const SceneObject*> solids() const {
        std::vector<const SceneObject*> out;
        out.reserve(walls.size() + furniture.size());
        for (const auto& w : walls) out.push_back(&w);
        for (const auto& f : furniture) out.push_back(&f);
        return out;
    }

    const std::string& base_id() const { return perturbation ? perturbation->base_scene_id : id; }

    friend bool operator==(const Scene&, const Scene&) = default;
};

inline constexpr int kMapPixels = 32;
inline constexpr double kMapPixelSize = 0.30;
inline constexpr double kMapExtent = kMapPixels * kMapPixelSize;  // 9.6 m
inline constexpr double kNoiseFloorDb = -71.0;
inline constexpr double kMaxPathLossDb = -12.0;

/// Pixel lattice of a radio map; (row, col) centers at origin + (col, row) * pixel_size.
struct MapGeometry {
    int rows = kMapPixels;
    int cols = kMapPixels;
    double pixel_size = kMapPixelSize;
    Vec2 origin{0.5 * kMapPixelSize, 0.5 * kMapPixelSize};
    double rx_height = 1.0;

    Vec2 pixel_center(int row, int col) const {
        return {origin.x + col * pixel_size, origin.y + row * pixel_size};
    }
    Rect extent() const {
        const double h = 0.5 * pixel_size;
        return {{origin.x - h, origin.y - h}, {origin.x - h + cols * pixel_size, origin.y - h + rows * pixel_size}};
    }
    /// Pixel containing a point, clamped to the lattice.
    std::pair<int, int> pixel_of(Vec2 p) const {
        const Rect e = extent();
        const int c = static_cast<int>(std::floor((p.x - e.min.x) / pixel_size));
        const int r = static_cast<int>(std::floor((p.y - e.min.y) / pixel_size));
        return {std::clamp(r, 0, rows - 1), std::clamp(c, 0, cols - 1)};
    }
    std::size_t size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
    std::size_t index(int row, int col) const {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(col);
    }

    friend bool operator==(const MapGeometry&, const MapGeometry&) = default;
};

/// Path-loss grid in dB. Invalid pixels hold the sentinel 0.
struct RadioMap {
    std::string id;
    MapGeometry geometry;
    std::vector<double> values;
    std::vector<std::uint8_t> valid;

    static RadioMap blank(const MapGeometry& g, std::string id = {}) {
        return {std::move(id), g, std::vector<double>(g.size(), 0.0), std::vector<std::uint8_t>(g.size(), 0)};
    }

    double at(int r, int c) const { return values[geometry.index(r, c)]; }
    double& at(int r, int c) { return values[geometry.index(r, c)]; }
    bool is_valid(int r, int c) const { return valid[geometry.index(r, c)] != 0; }
    std::size_t valid_count() const {
        return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
    }

    /// Same lattice and mask, values reset to the sentinel.
    RadioMap layout() const {
        RadioMap m = *this;
        std::fill(m.values.begin(), m.values.end(), 0.0);
        return m;
    }
};

/// Valid-pixel mask for a scene: pixel centers strictly inside the room interior.
inline std::vector<std::uint8_t> room_mask(const Scene& scene, const MapGeometry& g) {
    std::vector<std::uint8_t> mask(g.size(), 0);
    for (int r = 0; r < g.rows; ++r) {
        for (int c = 0; c < g.cols; ++c) {
            mask[g.index(r, c)] = scene.bounds.strictly_contains(g.pixel_center(r, c)) ? 1 : 0;
        }
    }
    return mask;
}

struct Observation {
    int row = 0;
    int col = 0;
    double path_loss_db = 0.0;
    friend bool operator==(const Observation&, const Observation&) = default;
};

struct ObservationSet {
    std::vector<Observation> entries;
    std::string source_map_id;
    friend bool operator==(const ObservationSet&, const ObservationSet&) = default;
};

/// Affine map of [lo, hi] dB onto [0, 1]; input clamped to the range.
inline double scale_to_unit(double pl_db, double lo = kNoiseFloorDb, double hi = kMaxPathLossDb) {
    if (!(lo < hi)) throw InvalidRange("scale range requires lo < hi");
    const double v = std::clamp(pl_db, lo, hi);
    return (v - lo) / (hi - lo);
}

inline double unscale_from_unit(double u, double lo = kNoiseFloorDb, double hi = kMaxPathLossDb) {
    if (!(lo < hi)) throw InvalidRange("scale range requires lo < hi");
    return lo + u * (hi - lo);
}

/// 3D distance from a point to an extruded object.
inline double distance_to_prism(Vec3 p, const SceneObject& o) {
    const double dxy = point_polygon_distance(xy(p), o.footprint);
    const double dz = p.z < o.z_min ? o.z_min - p.z : (p.z > o.z_max ? p.z - o.z_max : 0.0);
    return std::hypot(dxy, dz);
}

inline bool strictly_inside_prism(Vec3 p, const SceneObject& o) {
    return p.z > o.z_min && p.z < o.z_max && point_in_polygon(xy(p), o.footprint) &&
           point_polygon_distance(xy(p), o.footprint) == 0.0;
}

inline constexpr double kOverlapAreaTol = 1e-9;   // m^2
inline constexpr double kOverlapHeightTol = 1e-9;  // m

/// True when two solids overlap with positive area over a positive height span.
inline bool solids_overlap(const SceneObject& a, const SceneObject& b) {
    const double z_overlap = std::min(a.z_max, b.z_max) - std::max(a.z_min, b.z_min);
    if (z_overlap <= kOverlapHeightTol) return false;
    return intersection_area(a.footprint, b.footprint) > kOverlapAreaTol;
}

struct Violation {
    std::string rule;
    std::vector<int> object_ids;  ///< transmitter indices for Tx rules
    std::string message;
};

inline std::vector<Violation> validate_scene(const Scene& scene) {
    std::vector<Violation> out;
    auto add = [&](std::string rule, std::vector<int> ids, std::string msg) {
        out.push_back({std::move(rule), std::move(ids), std::move(msg)});
    };

    const Rect map_extent = MapGeometry{}.extent();
    if (!(scene.bounds.width() > 0.0 && scene.bounds.depth() > 0.0)) {
        add("bounds", {}, "room bounds are empty");
    }
    if (!map_extent.contains(scene.bounds.min, 1e-9) || !map_extent.contains(scene.bounds.max, 1e-9)) {
        add("bounds", {}, "room bounds exceed the 9.6 m map extent");
    }
    if (!(scene.room_height > 0.0)) add("bounds", {}, "room height must be positive");

    std::set<int> ids;
    const auto solids = scene.solids();
    for (std::size_t i = 0; i < solids.size(); ++i) {
        const SceneObject& o = *solids[i];
        const bool is_wall_list = i < scene.walls.size();
        if (!ids.insert(o.id).second) add("unique_id", {o.id}, "duplicate object id");
        if (is_wall_list != (o.kind == ObjectKind::wall)) {
            add("kind", {o.id}, is_wall_list ? "non-wall object in wall list" : "wall object in furniture list");
        }
        if (auto p = material_problem(o.material)) add("material", {o.id}, *p);
        if (o.footprint.size() < 3 || !is_simple(o.footprint)) {
            add("footprint", {o.id}, "footprint is not a simple polygon with >= 3 vertices");
        } else if (!(signed_area(o.footprint) > 0.0)) {
            add("footprint", {o.id}, "footprint must be counter-clockwise with positive area");
        }
        if (!(o.z_min >= 0.0 && o.z_min < o.z_max && o.z_max <= scene.room_height + 1e-12)) {
            add("height", {o.id}, "z range must satisfy 0 <= z_min < z_max <= room height");
        }
        if (!is_wall_list) {
            for (const auto& v : o.footprint) {
                if (!scene.bounds.contains(v, 1e-9)) {
                    add("containment", {o.id}, "furniture footprint leaves the wall interior");
                    break;
                }
            }
        }
    }

    for (std::size_t i = 0; i < solids.size(); ++i) {
        const Rect bi = bounding_box(solids[i]->footprint);
        for (std::size_t j = i + 1; j < solids.size(); ++j) {
            if (!bi.overlaps(bounding_box(solids[j]->footprint))) continue;
            if (solids_overlap(*solids[i], *solids[j])) {
                add("overlap", {solids[i]->id, solids[j]->id}, "solid objects overlap");
            }
        }
    }

    for (std::size_t t = 0; t < scene.transmitters.size(); ++t) {
        const Vec3 p = scene.transmitters[t].position;
        const int ti = static_cast<int>(t);
        if (!(scene.bounds.strictly_contains(xy(p)) && p.z > 0.0 && p.z < scene.room_height)) {
            add("tx_placement", {ti}, "transmitter outside the room interior");
            continue;
        }
        for (const auto* o : solids) {
            if (strictly_inside_prism(p, *o)) {
                add("tx_placement", {ti, o->id}, "transmitter inside a solid object");
            }
        }
        if (!(scene.transmitters[t].frequency_hz > 0.0)) add("tx_frequency", {ti}, "non-positive frequency");
    }
    return out;
}

}  // namespace rmkit

#pragma once

#include <algorithm>
#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rmkit/errors.hpp"
#include "rmkit/rng.hpp"
#include "rmkit/scene.hpp"

namespace rmkit {

/// Placement rules and dimension ranges for one furniture kind.
struct KindSpec {
    ObjectKind kind = ObjectKind::other;
    double weight = 1.0;
    ParamRange width;   ///< long side, meters
    ParamRange depth;   ///< short side, meters
    ParamRange z_min;
    ParamRange height;  ///< z_max - z_min
    bool against_wall = false;
    double ceiling_probability = 0.0;  ///< mounted under the ceiling instead of at z_min
    std::vector<std::pair<MaterialClass, double>> materials;  ///< class, weight
    ParamRange thickness{0.01, 0.05};
};

inline std::vector<KindSpec> default_catalog() {
    using MC = MaterialClass;
    return {
        {ObjectKind::table, 0.20, {1.2, 2.0}, {0.7, 1.0}, {0.70, 0.74}, {0.03, 0.05}, false, 0.0,
         {{MC::wood, 0.8}, {MC::metal, 0.1}, {MC::glass, 0.1}}, {0.01, 0.05}},
        {ObjectKind::chair, 0.25, {0.45, 0.55}, {0.45, 0.55}, {0.0, 0.0}, {0.85, 1.0}, false, 0.0,
         {{MC::wood, 0.6}, {MC::metal, 0.4}}, {0.01, 0.05}},
        {ObjectKind::radiator, 0.10, {0.6, 1.6}, {0.08, 0.12}, {0.10, 0.15}, {0.45, 0.65}, true, 0.0,
         {{MC::metal, 1.0}}, {0.01, 0.05}},
        {ObjectKind::lamp, 0.10, {0.25, 0.5}, {0.25, 0.5}, {0.0, 0.0}, {1.4, 1.8}, false, 0.5,
         {{MC::metal, 0.7}, {MC::glass, 0.3}}, {0.01, 0.05}},
        {ObjectKind::cabinet, 0.15, {0.8, 1.6}, {0.4, 0.6}, {0.0, 0.0}, {1.6, 2.2}, true, 0.0,
         {{MC::wood, 0.7}, {MC::metal, 0.3}}, {0.01, 0.05}},
        {ObjectKind::whiteboard, 0.08, {1.2, 2.4}, {0.03, 0.06}, {0.80, 0.90}, {1.0, 1.2}, true, 0.0,
         {{MC::metal, 0.5}, {MC::wood, 0.5}}, {0.01, 0.05}},
        {ObjectKind::other, 0.12, {0.3, 1.0}, {0.3, 1.0}, {0.0, 0.0}, {0.5, 1.2}, false, 0.0,
         {{MC::wood, 0.4}, {MC::glass, 0.2}, {MC::metal, 0.2}, {MC::concrete_drywall, 0.2}}, {0.01, 0.05}},
    };
}

struct GenConfig {
    std::uint64_t rng_seed = 1;
    std::string id_prefix = "scene";
    ParamRange room_width{4.0, 9.6};
    ParamRange room_depth{4.0, 9.6};
    ParamRange room_height{2.5, 3.2};
    std::pair<int, int> furniture_count{3, 12};
    int tx_per_scene = 5;
    ParamRange tx_height{1.0, 2.2};
    double tx_margin_m = 0.1;
    ParamRange wall_thickness{0.1, 0.3};
    ParamRange glass_thickness{0.01, 0.03};
    bool door = true;
    int max_windows = 2;
    double chair_snap_probability = 0.7;
    int object_retry_budget = 200;
    int scene_retry_budget = 20;
    std::vector<KindSpec> catalog = default_catalog();
    MaterialRanges material_ranges = default_material_ranges();
};

inline void check_gen_config(const GenConfig& c) {
    auto range_ok = [](ParamRange r) { return r.lo <= r.hi; };
    if (!range_ok(c.room_width) || !range_ok(c.room_depth) || !range_ok(c.room_height) || !range_ok(c.tx_height) ||
        !range_ok(c.wall_thickness)) {
        throw InvalidRange("generator ranges must be non-empty");
    }
    if (c.room_width.lo <= 0.0 || c.room_depth.lo <= 0.0 || c.room_width.hi > kMapExtent ||
        c.room_depth.hi > kMapExtent) {
        throw InvalidRange("room dimensions must lie within the 9.6 m map extent");
    }
    if (c.furniture_count.first < 0 || c.furniture_count.first > c.furniture_count.second) {
        throw InvalidRange("furniture count range invalid");
    }
    if (c.tx_per_scene < 1) throw InvalidRange("tx_per_scene must be >= 1");
    if (c.tx_height.lo <= c.tx_margin_m || c.tx_height.hi >= c.room_height.lo - c.tx_margin_m) {
        throw InvalidRange("transmitter heights must leave the placement margin to floor and ceiling");
    }
    if (c.wall_thickness.lo < kMinThickness || c.wall_thickness.hi > kMaxThickness) {
        throw InvalidRange("wall thickness outside material limits");
    }
    if (c.catalog.empty()) throw InvalidRange("empty object catalog");
}

namespace detail {

inline Material sample_material(Rng& rng, MaterialClass cls, const MaterialRanges& ranges, double thickness) {
    const auto& r = ranges[cls];
    Material m;
    m.name = std::string(to_string(cls));
    m.cls = cls;
    m.rel_permittivity = rng.uniform(r.rel_permittivity.lo, r.rel_permittivity.hi);
    m.conductivity = rng.uniform(r.conductivity.lo, r.conductivity.hi);
    m.thickness = thickness;
    return m;
}

template <class T>
const T& pick_weighted(Rng& rng, const std::vector<T>& items, double (*weight)(const T&)) {
    double total = 0.0;
    for (const auto& it : items) total += weight(it);
    double u = rng.uniform() * total;
    for (const auto& it : items) {
        u -= weight(it);
        if (u < 0.0) return it;
    }
    return items.back();
}

struct Opening {
    int side = 0;  // 0 south (y0), 1 north (y1), 2 west (x0), 3 east (x1)
    double start = 0.0;
    double end = 0.0;
    bool door = false;
    double sill = 0.0;
    double top = 0.0;
};

inline Polygon wall_piece(const Rect& b, double t, int side, double s0, double s1) {
    switch (side) {
        case 0: return rect_polygon({s0, b.min.y - t}, {s1, b.min.y});
        case 1: return rect_polygon({s0, b.max.y}, {s1, b.max.y + t});
        case 2: return rect_polygon({b.min.x - t, s0}, {b.min.x, s1});
        default: return rect_polygon({b.max.x, s0}, {b.max.x + t, s1});
    }
}

inline std::vector<SceneObject> build_walls(Rng& rng, const GenConfig& cfg, const Rect& b, double height,
                                            int& next_id) {
    const double t = rng.uniform(cfg.wall_thickness.lo, cfg.wall_thickness.hi);
    const Material wall_mat = sample_material(rng, MaterialClass::concrete_drywall, cfg.material_ranges, t);

    // Openings: interior span of each side, corners excluded.
    std::vector<Opening> openings;
    auto side_span = [&](int side) {
        return side < 2 ? std::pair{b.min.x, b.max.x} : std::pair{b.min.y, b.max.y};
    };
    auto try_place = [&](Opening o, double width) {
        const auto [lo, hi] = side_span(o.side);
        const double margin = 0.3;
        if (hi - lo < width + 2 * margin) return;
        for (int attempt = 0; attempt < 50; ++attempt) {
            const double s = rng.uniform(lo + margin, hi - margin - width);
            bool clash = false;
            for (const auto& e : openings) {
                if (e.side == o.side && s < e.end + margin && s + width > e.start - margin) clash = true;
            }
            if (!clash) {
                o.start = s;
                o.end = s + width;
                openings.push_back(o);
                return;
            }
        }
    };
    if (cfg.door) {
        Opening d;
        d.side = static_cast<int>(rng.uniform_int(0, 3));
        d.door = true;
        d.sill = 0.0;
        d.top = std::min(2.1, height - 0.2);
        try_place(d, rng.uniform(0.8, 1.0));
    }
    const int windows = cfg.max_windows > 0 ? static_cast<int>(rng.uniform_int(0, cfg.max_windows)) : 0;
    for (int w = 0; w < windows; ++w) {
        Opening o;
        o.side = static_cast<int>(rng.uniform_int(0, 3));
        o.sill = rng.uniform(0.8, 1.0);
        o.top = rng.uniform(2.0, std::min(2.2, height - 0.2));
        try_place(o, rng.uniform(0.8, 1.6));
    }

    std::vector<SceneObject> walls;
    auto add = [&](int side, double s0, double s1, double z0, double z1, const Material& m) {
        if (s1 - s0 <= 1e-9 || z1 - z0 <= 1e-9) return;
        walls.push_back({next_id++, wall_piece(b, t, side, s0, s1), z0, z1, m, ObjectKind::wall});
    };
    for (int side = 0; side < 4; ++side) {
        // West/east sides own the corner squares.
        double lo = side < 2 ? b.min.x : b.min.y - t;
        const double hi = side < 2 ? b.max.x : b.max.y + t;
        std::vector<Opening> here;
        for (const auto& o : openings) {
            if (o.side == side) here.push_back(o);
        }
        std::sort(here.begin(), here.end(), [](const Opening& a, const Opening& c) { return a.start < c.start; });
        for (const auto& o : here) {
            add(side, lo, o.start, 0.0, height, wall_mat);
            if (o.door) {
                add(side, o.start, o.end, o.top, height, wall_mat);
            } else {
                const double gt = rng.uniform(cfg.glass_thickness.lo, cfg.glass_thickness.hi);
                const Material glass = sample_material(rng, MaterialClass::glass, cfg.material_ranges, gt);
                add(side, o.start, o.end, 0.0, o.sill, wall_mat);
                add(side, o.start, o.end, o.sill, o.top, glass);
                add(side, o.start, o.end, o.top, height, wall_mat);
            }
            lo = o.end;
        }
        add(side, lo, hi, 0.0, height, wall_mat);
    }
    return walls;
}

inline bool fits(const SceneObject& cand, const Rect& bounds, const std::vector<SceneObject>& placed) {
    for (const auto& v : cand.footprint) {
        if (!bounds.contains(v, 1e-12)) return false;
    }
    const Rect cb = bounding_box(cand.footprint);
    for (const auto& p : placed) {
        if (!cb.overlaps(bounding_box(p.footprint))) continue;
        if (solids_overlap(cand, p)) return false;
    }
    return true;
}

/// One furniture instance of `spec` at a random valid pose; nullopt when the retry budget runs out.
inline std::optional<SceneObject> place_object(Rng& rng, const GenConfig& cfg, const KindSpec& spec, const Rect& b,
                                               double height, const std::vector<SceneObject>& placed, int id) {
    const double w = rng.uniform(spec.width.lo, spec.width.hi);
    const double d = rng.uniform(spec.depth.lo, spec.depth.hi);
    const double h = rng.uniform(spec.height.lo, spec.height.hi);
    double z0 = rng.uniform(spec.z_min.lo, spec.z_min.hi);
    double z1 = z0 + h;
    if (spec.ceiling_probability > 0.0 && rng.bernoulli(spec.ceiling_probability)) {
        const double hh = std::min(0.3, h);
        z1 = height;
        z0 = height - hh;
    }
    z1 = std::min(z1, height);
    const MaterialClass cls =
        pick_weighted<std::pair<MaterialClass, double>>(rng, spec.materials, [](const auto& m) { return m.second; })
            .first;
    const Material mat =
        sample_material(rng, cls, cfg.material_ranges, rng.uniform(spec.thickness.lo, spec.thickness.hi));
    for (int attempt = 0; attempt < cfg.object_retry_budget; ++attempt) {
        Vec2 lo;
        Vec2 size;
        if (spec.against_wall) {
            const int side = static_cast<int>(rng.uniform_int(0, 3));
            size = side < 2 ? Vec2{w, d} : Vec2{d, w};
            if (size.x > b.width() || size.y > b.depth()) continue;
            switch (side) {
                case 0: lo = {rng.uniform(b.min.x, b.max.x - size.x), b.min.y}; break;
                case 1: lo = {rng.uniform(b.min.x, b.max.x - size.x), b.max.y - size.y}; break;
                case 2: lo = {b.min.x, rng.uniform(b.min.y, b.max.y - size.y)}; break;
                default: lo = {b.max.x - size.x, rng.uniform(b.min.y, b.max.y - size.y)}; break;
            }
        } else {
            size = rng.bernoulli(0.5) ? Vec2{w, d} : Vec2{d, w};
            if (size.x > b.width() || size.y > b.depth()) continue;
            lo = {rng.uniform(b.min.x, b.max.x - size.x), rng.uniform(b.min.y, b.max.y - size.y)};
        }
        SceneObject o{id, rect_polygon(lo, lo + size), z0, z1, mat, spec.kind};
        if (fits(o, b, placed)) return o;
    }
    return std::nullopt;
}

/// Chair touching one long side of a table.
inline std::optional<SceneObject> snap_chair(Rng& rng, const GenConfig& cfg, const KindSpec& chair,
                                             const SceneObject& table, const Rect& b, double height,
                                             const std::vector<SceneObject>& placed, int id) {
    const Rect tb = bounding_box(table.footprint);
    const double s = rng.uniform(chair.width.lo, chair.width.hi);
    const double h = std::min(rng.uniform(chair.height.lo, chair.height.hi), height);
    const MaterialClass cls =
        pick_weighted<std::pair<MaterialClass, double>>(rng, chair.materials, [](const auto& m) { return m.second; })
            .first;
    const Material mat =
        sample_material(rng, cls, cfg.material_ranges, rng.uniform(chair.thickness.lo, chair.thickness.hi));
    const bool along_x = tb.width() >= tb.depth();
    for (int attempt = 0; attempt < 10; ++attempt) {
        const bool first_side = rng.bernoulli(0.5);
        Vec2 lo;
        if (along_x) {
            if (tb.width() < s) return std::nullopt;
            lo = {rng.uniform(tb.min.x, tb.max.x - s), first_side ? tb.min.y - s : tb.max.y};
        } else {
            if (tb.depth() < s) return std::nullopt;
            lo = {first_side ? tb.min.x - s : tb.max.x, rng.uniform(tb.min.y, tb.max.y - s)};
        }
        SceneObject o{id, rect_polygon(lo, lo + Vec2{s, s}), 0.0, h, mat, ObjectKind::chair};
        if (fits(o, b, placed)) return o;
    }
    return std::nullopt;
}

}  // namespace detail

/// Randomized furnished room; a pure function of (config, index).
inline Scene generate_scene(const GenConfig& config, std::int64_t index) {
    check_gen_config(config);
    Scene scene;
    scene.rng_seed = derive_seed(config.rng_seed, std::string_view("scene"), index);
    char buf[32];
    std::snprintf(buf, sizeof buf, "_%05lld", static_cast<long long>(index));
    scene.id = config.id_prefix + buf;
    Rng rng(scene.rng_seed);

    const double width = rng.uniform(config.room_width.lo, config.room_width.hi);
    const double depth = rng.uniform(config.room_depth.lo, config.room_depth.hi);
    scene.room_height = rng.uniform(config.room_height.lo, config.room_height.hi);
    const Vec2 lo{rng.uniform(0.0, kMapExtent - width), rng.uniform(0.0, kMapExtent - depth)};
    scene.bounds = {lo, lo + Vec2{width, depth}};
    int next_id = 0;
    scene.walls = detail::build_walls(rng, config, scene.bounds, scene.room_height, next_id);
    const int first_furniture_id = next_id;

    const KindSpec* chair_spec = nullptr;
    for (const auto& k : config.catalog) {
        if (k.kind == ObjectKind::chair) chair_spec = &k;
    }

    std::string failing_kind;
    for (int attempt = 0; attempt < config.scene_retry_budget; ++attempt) {
        std::vector<SceneObject> placed;
        int id = first_furniture_id;
        const auto target = static_cast<std::size_t>(
            rng.uniform_int(config.furniture_count.first, config.furniture_count.second));
        bool ok = true;
        while (placed.size() < target) {
            const KindSpec& spec =
                detail::pick_weighted<KindSpec>(rng, config.catalog, [](const KindSpec& k) { return k.weight; });
            auto obj = detail::place_object(rng, config, spec, scene.bounds, scene.room_height, placed, id);
            if (!obj) {
                failing_kind = std::string(to_string(spec.kind));
                ok = false;
                break;
            }
            placed.push_back(*obj);
            ++id;
            if (spec.kind == ObjectKind::table && chair_spec && rng.bernoulli(config.chair_snap_probability)) {
                const SceneObject table = placed.back();
                const int chairs = static_cast<int>(rng.uniform_int(1, 2));
                for (int c = 0; c < chairs && placed.size() < target; ++c) {
                    auto chair = detail::snap_chair(rng, config, *chair_spec, table, scene.bounds, scene.room_height,
                                                    placed, id);
                    if (chair) {
                        placed.push_back(*chair);
                        ++id;
                    }
                }
            }
        }
        if (!ok) continue;

        std::vector<Transmitter> txs;
        const Rect& b = scene.bounds;
        const double m = config.tx_margin_m;
        for (int t = 0; t < config.tx_per_scene && ok; ++t) {
            bool placed_tx = false;
            for (int k = 0; k < config.object_retry_budget && !placed_tx; ++k) {
                const Vec3 p{rng.uniform(b.min.x + m, b.max.x - m), rng.uniform(b.min.y + m, b.max.y - m),
                             rng.uniform(config.tx_height.lo, std::min(config.tx_height.hi, scene.room_height - m))};
                bool clear = true;
                for (const auto& o : placed) {
                    if (distance_to_prism(p, o) < m) {
                        clear = false;
                        break;
                    }
                }
                if (clear) {
                    txs.push_back({p, 0.0, 5.92e9});
                    placed_tx = true;
                }
            }
            if (!placed_tx) {
                failing_kind = "transmitter";
                ok = false;
            }
        }
        if (!ok) continue;
        scene.furniture = std::move(placed);
        scene.transmitters = std::move(txs);
        return scene;
    }
    throw GenerationExhausted(failing_kind);
}

inline std::vector<Scene> generate_dataset(const GenConfig& config, std::int64_t n_scenes) {
    if (n_scenes < 1) throw InvalidRange("n_scenes must be >= 1");
    std::vector<Scene> out;
    out.reserve(static_cast<std::size_t>(n_scenes));
    for (std::int64_t i = 0; i < n_scenes; ++i) out.push_back(generate_scene(config, i));
    return out;
}

}  // namespace rmkit

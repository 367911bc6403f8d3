#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <optional>
#include <thread>
#include <vector>

#include "rmkit/errors.hpp"
#include "rmkit/fresnel.hpp"
#include "rmkit/geometry.hpp"
#include "rmkit/scene.hpp"

namespace rmkit {

struct TraceConfig {
    int max_reflections = 3;
    int max_transmissions = 3;
    int max_diffractions = 1;  ///< values above 1 behave as 1
    double frequency_hz = 5.92e9;
    double noise_floor_db = kNoiseFloorDb;
    double rx_height_m = 1.0;
    double rx_grid_step_m = kMapPixelSize;
    /// Off by default: floor and ceiling are not part of the reflecting facet set.
    bool floor_ceiling_reflections = false;
    Material floor_material{"floor", MaterialClass::concrete_drywall, 5.0, 0.1, 0.2};
    Material ceiling_material{"ceiling", MaterialClass::concrete_drywall, 5.0, 0.1, 0.2};
    int threads = 0;  ///< 0 = hardware concurrency

    double wavelength() const { return kSpeedOfLight / frequency_hz; }

    MapGeometry map_geometry() const {
        MapGeometry g;
        g.pixel_size = rx_grid_step_m;
        g.origin = {0.5 * rx_grid_step_m, 0.5 * rx_grid_step_m};
        g.rx_height = rx_height_m;
        return g;
    }
};

inline void check_trace_config(const TraceConfig& c) {
    if (c.max_reflections < 0 || c.max_transmissions < 0 || c.max_diffractions < 0) {
        throw InvalidRange("interaction budgets must be non-negative");
    }
    if (!(c.noise_floor_db < 0.0)) throw InvalidRange("noise floor must be negative");
    if (!(c.frequency_hz > 0.0)) throw InvalidRange("frequency must be positive");
}

enum class InteractionKind { reflection, transmission, diffraction };

struct Interaction {
    InteractionKind kind = InteractionKind::reflection;
    int object_id = -1;  ///< -1 for floor (-1) / ceiling (-2) reflections
    int element = -1;    ///< footprint edge (reflection) or vertex (diffraction); -1 for transmission
    Vec3 point;
    double coefficient = 1.0;  ///< power factor of this interaction
};

struct PropagationPath {
    std::vector<Interaction> interactions;
    double total_length_m = 0.0;
    double power_gain = 0.0;
    int path_index = 0;

    int count(InteractionKind k) const {
        return static_cast<int>(std::count_if(interactions.begin(), interactions.end(),
                                              [k](const Interaction& i) { return i.kind == k; }));
    }
};

/// Free-space power gain (lambda / (4 pi L))^2.
inline double free_space_gain(double length_m, double wavelength_m) {
    const double a = wavelength_m / (4.0 * std::numbers::pi * length_m);
    return a * a;
}

/// Incoherent sum over paths in dB; an empty path set maps to the noise floor.
inline double path_loss(const std::vector<PropagationPath>& paths, double noise_floor_db = kNoiseFloorDb) {
    if (paths.empty()) return noise_floor_db;
    double sum = 0.0;
    for (const auto& p : paths) sum += p.power_gain;
    return 10.0 * std::log10(sum);
}

namespace detail {

inline constexpr double kGeomTol = 1e-9;      // visibility / containment tolerance, meters
inline constexpr double kEndpointGap = 1e-6;  // segment ends excluded from blockage tests, meters

struct PreparedObject {
    int id = 0;
    std::vector<Polygon> pieces;
    bool convex = true;
    Rect box;
    double z_min = 0.0;
    double z_max = 0.0;
    Material material;
    const SceneObject* source = nullptr;
};

struct Facet {
    Vec3 normal;
    double offset = 0.0;  ///< plane: dot(normal, p) == offset
    bool vertical = true;
    Vec2 a, b;            // vertical facets
    double z0 = 0.0, z1 = 0.0;
    Rect rect;            // horizontal facets
    int object = -1;      ///< index into prepared objects; -1 floor/ceiling
    int object_id = -1;
    int edge = -1;
    Material material;

    double side(Vec3 p) const { return dot(normal, p) - offset; }

    bool contains(Vec3 p) const {
        if (vertical) {
            if (p.z < z0 - kGeomTol || p.z > z1 + kGeomTol) return false;
            const Vec2 ab = b - a;
            const double s = dot(xy(p) - a, ab) / dot(ab, ab);
            const double slack = kGeomTol / norm(ab);
            return s >= -slack && s <= 1.0 + slack;
        }
        return rect.contains(xy(p), kGeomTol);
    }
};

struct ImageNode {
    Vec3 image;
    int facet = -1;
    int parent = -1;  ///< -1 for first-order images
    int depth = 1;
};

/// Crossing of one solid by a segment.
struct Crossing {
    int object = -1;
    double power = 1.0;
    Vec3 point;
};

/// Compact path record used while enumerating.
struct PathRecord {
    int interactions = 0;
    double length = 0.0;
    double gain = 0.0;
};

inline double clamp_angle(double cos_theta) {
    const double c = std::clamp(cos_theta, 0.0, 1.0);
    double a = std::acos(c);
    const double limit = std::numbers::pi / 2 - 1e-9;
    return a > limit ? limit : a;
}

}  // namespace detail

/// Deterministic 2.5D image-method tracer bound to one scene.
class Tracer {
public:
    /// Image tree of one transmitter position.
    struct Source {
        Vec3 position;
        std::vector<detail::ImageNode> nodes;
    };

    Tracer(const Scene& scene, TraceConfig config) : scene_(&scene), config_(std::move(config)) {
        check_trace_config(config_);
        wavelength_ = config_.wavelength();
        prepare_geometry();
    }

    const TraceConfig& config() const { return config_; }
    std::size_t facet_count() const { return facets_.size(); }

    Source prepare(Vec3 tx) const {
        Source src{tx, {}};
        if (config_.max_reflections <= 0) return src;
        grow(src, -1, tx, -1, 1);
        return src;
    }

    /// All propagation paths, ordered by (interaction count, length).
    std::vector<PropagationPath> trace(const Source& src, Vec3 rx) const {
        std::vector<PropagationPath> paths;
        // Gains that underflow (e.g. through metal) are not paths.
        enumerate(
            src, rx,
            [&](PropagationPath&& p) {
                if (p.power_gain > 0.0) paths.push_back(std::move(p));
            },
            true);
        std::stable_sort(paths.begin(), paths.end(), [](const PropagationPath& a, const PropagationPath& b) {
            if (a.interactions.size() != b.interactions.size()) return a.interactions.size() < b.interactions.size();
            return a.total_length_m < b.total_length_m;
        });
        for (std::size_t i = 0; i < paths.size(); ++i) paths[i].path_index = static_cast<int>(i);
        return paths;
    }

    /// Same value as path_loss(trace(src, rx)) without materialising interactions.
    double path_loss_db(const Source& src, Vec3 rx) const {
        std::vector<detail::PathRecord> recs;
        enumerate(src, rx,
                  [&](PropagationPath&& p) {
                      if (p.power_gain > 0.0)
                          recs.push_back({static_cast<int>(p.interactions.size()), p.total_length_m, p.power_gain});
                  },
                  false);
        if (recs.empty()) return config_.noise_floor_db;
        std::stable_sort(recs.begin(), recs.end(), [](const detail::PathRecord& a, const detail::PathRecord& b) {
            if (a.interactions != b.interactions) return a.interactions < b.interactions;
            return a.length < b.length;
        });
        double sum = 0.0;
        for (const auto& r : recs) sum += r.gain;
        return 10.0 * std::log10(sum);
    }

private:
    const Scene* scene_;
    TraceConfig config_;
    double wavelength_ = 0.0;
    std::vector<detail::PreparedObject> objects_;
    std::vector<detail::Facet> facets_;

    void prepare_geometry() {
        using detail::Facet;
        const auto solids = scene_->solids();
        for (const SceneObject* o : solids) {
            detail::PreparedObject p;
            p.id = o->id;
            p.convex = is_convex(o->footprint);
            p.pieces = convex_pieces(o->footprint);
            p.box = bounding_box(o->footprint);
            p.z_min = o->z_min;
            p.z_max = o->z_max;
            p.material = o->material;
            p.source = o;
            objects_.push_back(std::move(p));
        }
        for (std::size_t oi = 0; oi < solids.size(); ++oi) {
            const SceneObject& o = *solids[oi];
            const std::size_t n = o.footprint.size();
            for (std::size_t e = 0; e < n; ++e) {
                const Vec2 a = o.footprint[e];
                const Vec2 b = o.footprint[(e + 1) % n];
                const Vec2 d = b - a;
                const double len = norm(d);
                if (len <= 0.0) continue;
                const Vec2 nrm{d.y / len, -d.x / len};
                if (o.kind == ObjectKind::wall) {
                    // Only faces looking into the room interior reflect.
                    const Vec2 probe = 0.5 * (a + b) + 1e-6 * nrm;
                    if (!scene_->bounds.strictly_contains(probe)) continue;
                }
                Facet f;
                f.normal = {nrm.x, nrm.y, 0.0};
                f.offset = dot(nrm, a);
                f.vertical = true;
                f.a = a;
                f.b = b;
                f.z0 = o.z_min;
                f.z1 = o.z_max;
                f.object = static_cast<int>(oi);
                f.object_id = o.id;
                f.edge = static_cast<int>(e);
                f.material = o.material;
                facets_.push_back(f);
            }
        }
        if (config_.floor_ceiling_reflections) {
            Facet floor;
            floor.normal = {0.0, 0.0, 1.0};
            floor.offset = 0.0;
            floor.vertical = false;
            floor.rect = scene_->bounds;
            floor.object_id = -1;
            floor.material = config_.floor_material;
            facets_.push_back(floor);
            Facet ceiling = floor;
            ceiling.normal = {0.0, 0.0, -1.0};
            ceiling.offset = -scene_->room_height;
            ceiling.object_id = -2;
            ceiling.material = config_.ceiling_material;
            facets_.push_back(ceiling);
        }
    }

    static bool facet_faces(const detail::Facet& from, const detail::Facet& to) {
        if (!from.vertical || !to.vertical) return true;
        const double sa = dot(Vec2{from.normal.x, from.normal.y}, to.a) - from.offset;
        const double sb = dot(Vec2{from.normal.x, from.normal.y}, to.b) - from.offset;
        return sa > detail::kGeomTol || sb > detail::kGeomTol;
    }

    void grow(Source& src, int parent, Vec3 point, int parent_facet, int depth) const {
        for (std::size_t fi = 0; fi < facets_.size(); ++fi) {
            const int f = static_cast<int>(fi);
            if (f == parent_facet) continue;
            const detail::Facet& facet = facets_[fi];
            const double s = facet.side(point);
            if (s <= detail::kGeomTol) continue;
            if (parent_facet >= 0 && !facet_faces(facets_[static_cast<std::size_t>(parent_facet)], facet)) continue;
            const Vec3 image = point - (2.0 * s) * facet.normal;
            src.nodes.push_back({image, f, parent, depth});
            const int self = static_cast<int>(src.nodes.size()) - 1;
            if (depth < config_.max_reflections) grow(src, self, image, f, depth + 1);
        }
    }

    /// Crossings of the open segment a->b. Returns false once the budget overflows
    /// (unless `complete`, which gathers every crossing regardless).
    bool crossings(Vec3 a, Vec3 b, int skip_a, int skip_b, int budget, std::vector<detail::Crossing>& out,
                   bool complete = false) const {
        const Vec3 d = b - a;
        const double len = norm(d);
        if (len <= 0.0) return true;
        const double gap = detail::kEndpointGap / len;
        const Rect seg_box{{std::min(a.x, b.x), std::min(a.y, b.y)}, {std::max(a.x, b.x), std::max(a.y, b.y)}};
        for (std::size_t oi = 0; oi < objects_.size(); ++oi) {
            const auto& o = objects_[oi];
            const int idx = static_cast<int>(oi);
            if ((idx == skip_a || idx == skip_b) && o.convex) continue;
            if (!o.box.overlaps(seg_box, detail::kGeomTol)) continue;
            // z span of the segment inside [z_min, z_max].
            double tz_lo = 0.0, tz_hi = 1.0;
            bool z_entry = false, z_exit = false;
            if (d.z != 0.0) {
                double t0 = (o.z_min - detail::kGeomTol - a.z) / d.z;
                double t1 = (o.z_max + detail::kGeomTol - a.z) / d.z;
                if (t0 > t1) std::swap(t0, t1);
                if (t0 > tz_lo) {
                    tz_lo = t0;
                    z_entry = true;
                }
                if (t1 < tz_hi) {
                    tz_hi = t1;
                    z_exit = true;
                }
            } else if (a.z < o.z_min - detail::kGeomTol || a.z > o.z_max + detail::kGeomTol) {
                continue;
            }
            if (tz_lo > tz_hi) continue;

            bool hit = false;
            double lo_best = 2.0, hi_best = -1.0;
            Vec2 n_in{}, n_out{};
            bool in_side = false, out_side = false, in_cap = false, out_cap = false;
            for (const auto& piece : o.pieces) {
                auto c = clip_segment_convex(xy(a), xy(b), piece, detail::kGeomTol);
                if (!c) continue;
                double lo = std::max({c->t_in, tz_lo, gap});
                double hi = std::min({c->t_out, tz_hi, 1.0 - gap});
                if (lo > hi) continue;
                hit = true;
                if (lo < lo_best) {
                    lo_best = lo;
                    in_side = false;
                    in_cap = false;
                    if (lo > gap) {
                        if (c->t_in >= tz_lo && c->edge_in >= 0) {
                            in_side = true;
                            const Vec2 e = piece[(static_cast<std::size_t>(c->edge_in) + 1) % piece.size()] -
                                           piece[static_cast<std::size_t>(c->edge_in)];
                            n_in = (1.0 / norm(e)) * Vec2{e.y, -e.x};
                        } else if (z_entry) {
                            in_cap = true;
                        }
                    }
                }
                if (hi > hi_best) {
                    hi_best = hi;
                    out_side = false;
                    out_cap = false;
                    if (hi < 1.0 - gap) {
                        if (c->t_out <= tz_hi && c->edge_out >= 0) {
                            out_side = true;
                            const Vec2 e = piece[(static_cast<std::size_t>(c->edge_out) + 1) % piece.size()] -
                                           piece[static_cast<std::size_t>(c->edge_out)];
                            n_out = (1.0 / norm(e)) * Vec2{e.y, -e.x};
                        } else if (z_exit) {
                            out_cap = true;
                        }
                    }
                }
            }
            if (!hit) continue;

            auto interface_power = [&](bool side, bool cap, Vec2 n) {
                double cos_t = 0.0;
                if (side) cos_t = std::abs(d.x * n.x + d.y * n.y) / len;
                if (cap) cos_t = std::abs(d.z) / len;
                return fresnel_slab_coefficients(o.material, detail::clamp_angle(cos_t), config_.frequency_hz)
                    .transmission;
            };
            const bool has_in = in_side || in_cap;
            const bool has_out = out_side || out_cap;
            double power;
            if (has_in && has_out) {
                power = std::sqrt(interface_power(in_side, in_cap, n_in) * interface_power(out_side, out_cap, n_out));
            } else if (has_in) {
                power = interface_power(in_side, in_cap, n_in);
            } else if (has_out) {
                power = interface_power(out_side, out_cap, n_out);
            } else {
                power = fresnel_slab_coefficients(o.material, 0.0, config_.frequency_hz).transmission;
            }
            out.push_back({idx, power, a + lo_best * d});
            if (!complete && static_cast<int>(out.size()) > budget) return false;
        }
        return static_cast<int>(out.size()) <= budget;
    }

    template <class Sink>
    void enumerate(const Source& src, Vec3 rx, Sink&& sink, bool detailed) const {
        const Vec3 tx = src.position;
        if (norm(rx - tx) < 1e-9) throw DomainError("receiver coincides with transmitter");
        const int budget_t = config_.max_transmissions;
        std::vector<detail::Crossing> xs;

        auto add_transmissions = [&](PropagationPath& p, const std::vector<detail::Crossing>& list) {
            for (const auto& c : list) {
                p.power_gain *= c.power;
                if (detailed) {
                    p.interactions.push_back(
                        {InteractionKind::transmission, objects_[static_cast<std::size_t>(c.object)].id, -1, c.point,
                         c.power});
                } else {
                    p.interactions.push_back({});
                }
            }
        };

        // Line of sight; the full crossing list also seeds diffraction.
        std::vector<detail::Crossing> los;
        crossings(tx, rx, -1, -1, budget_t, los, true);
        const double direct = norm(rx - tx);
        if (static_cast<int>(los.size()) <= budget_t) {
            PropagationPath p;
            p.total_length_m = direct;
            p.power_gain = free_space_gain(direct, wavelength_);
            add_transmissions(p, los);
            sink(std::move(p));
        }

        // Specular reflections.
        std::vector<Vec3> pts;
        std::vector<int> chain;
        for (const auto& leaf : src.nodes) {
            pts.clear();
            chain.clear();
            Vec3 target = rx;
            const detail::ImageNode* node = &leaf;
            bool ok = true;
            while (node) {
                const detail::Facet& f = facets_[static_cast<std::size_t>(node->facet)];
                const double st = f.side(target);
                if (st <= detail::kGeomTol) {
                    ok = false;
                    break;
                }
                const double si = f.side(node->image);
                const double t = st / (st - si);
                const Vec3 hit = target + t * (node->image - target);
                if (!f.contains(hit)) {
                    ok = false;
                    break;
                }
                pts.push_back(hit);
                chain.push_back(node->facet);
                target = hit;
                node = node->parent >= 0 ? &src.nodes[static_cast<std::size_t>(node->parent)] : nullptr;
            }
            if (!ok) continue;
            // Source must see the first facet from its front.
            if (facets_[static_cast<std::size_t>(chain.back())].side(tx) <= detail::kGeomTol) continue;

            // pts/chain run receiver-side first; walk them from the transmitter.
            const std::size_t k = pts.size();
            PropagationPath p;
            p.power_gain = 1.0;
            Vec3 prev = tx;
            int prev_obj = -1;
            int used_t = 0;
            for (std::size_t i = 0; i <= k && ok; ++i) {
                const bool last = i == k;
                const Vec3 next = last ? rx : pts[k - 1 - i];
                const int next_facet = last ? -1 : chain[k - 1 - i];
                const int next_obj = last ? -1 : facets_[static_cast<std::size_t>(next_facet)].object;
                xs.clear();
                if (!crossings(prev, next, prev_obj, next_obj, budget_t - used_t, xs)) {
                    ok = false;
                    break;
                }
                used_t += static_cast<int>(xs.size());
                const Vec3 seg = next - prev;
                const double seg_len = norm(seg);
                p.total_length_m += seg_len;
                add_transmissions(p, xs);
                if (!last) {
                    const detail::Facet& f = facets_[static_cast<std::size_t>(next_facet)];
                    const double cos_t = std::abs(dot(seg, f.normal)) / seg_len;
                    const double r =
                        fresnel_slab_coefficients(f.material, detail::clamp_angle(cos_t), config_.frequency_hz)
                            .reflection;
                    p.power_gain *= r;
                    if (detailed) {
                        p.interactions.push_back({InteractionKind::reflection, f.object_id, f.edge, next, r});
                    } else {
                        p.interactions.push_back({});
                    }
                }
                prev = next;
                prev_obj = next_obj;
            }
            if (!ok || p.power_gain <= 0.0) continue;
            p.power_gain *= free_space_gain(p.total_length_m, wavelength_);
            sink(std::move(p));
        }

        // Single knife-edge diffraction around vertical edges of objects blocking the direct ray.
        if (config_.max_diffractions <= 0) return;
        std::vector<int> blockers;
        for (const auto& c : los) {
            if (std::find(blockers.begin(), blockers.end(), c.object) == blockers.end()) blockers.push_back(c.object);
        }
        std::sort(blockers.begin(), blockers.end());
        for (int bi : blockers) {
            const auto& o = objects_[static_cast<std::size_t>(bi)];
            const Polygon& fp = o.source->footprint;
            for (std::size_t v = 0; v < fp.size(); ++v) {
                const Vec2 edge = fp[v];
                const double d1h = norm(edge - xy(tx));
                const double d2h = norm(xy(rx) - edge);
                if (d1h + d2h <= 0.0) continue;
                const double z = tx.z + (rx.z - tx.z) * d1h / (d1h + d2h);
                if (z < o.z_min || z > o.z_max) continue;
                const Vec3 dpt{edge.x, edge.y, z};
                const double l1 = norm(dpt - tx);
                const double l2 = norm(rx - dpt);
                if (l1 <= 0.0 || l2 <= 0.0) continue;
                xs.clear();
                if (!crossings(tx, dpt, -1, -1, budget_t, xs)) continue;
                std::vector<detail::Crossing> xs2;
                if (!crossings(dpt, rx, -1, -1, budget_t - static_cast<int>(xs.size()), xs2)) continue;
                const double nu = fresnel_parameter(l1 + l2 - direct, wavelength_, true);
                const double loss = std::pow(10.0, -knife_edge_loss_db(nu) / 10.0);
                PropagationPath p;
                p.total_length_m = l1 + l2;
                p.power_gain = loss;
                add_transmissions(p, xs);
                if (detailed) {
                    p.interactions.push_back({InteractionKind::diffraction, o.id, static_cast<int>(v), dpt, loss});
                } else {
                    p.interactions.push_back({});
                }
                add_transmissions(p, xs2);
                if (p.power_gain <= 0.0) continue;
                p.power_gain *= free_space_gain(p.total_length_m, wavelength_);
                sink(std::move(p));
            }
        }
    }
};

inline std::vector<PropagationPath> trace_paths(const Scene& scene, const Transmitter& tx, Vec3 rx,
                                                const TraceConfig& config) {
    TraceConfig c = config;
    c.frequency_hz = tx.frequency_hz;
    const Tracer tracer(scene, c);
    return tracer.trace(tracer.prepare(tx.position), rx);
}

inline bool transmitter_inside_room(const Scene& scene, const Transmitter& tx) {
    return scene.bounds.strictly_contains(xy(tx.position)) && tx.position.z > 0.0 && tx.position.z < scene.room_height;
}

/// Ground-truth radio map for one transmitter: 32x32 grid at rx height, values
/// clamped to [noise floor, 0] on valid pixels, sentinel 0 elsewhere.
inline RadioMap trace_radio_map(const Scene& scene, const Transmitter& tx, const TraceConfig& config) {
    if (!transmitter_inside_room(scene, tx)) throw DomainError("transmitter outside the room");
    TraceConfig c = config;
    c.frequency_hz = tx.frequency_hz;
    const Tracer tracer(scene, c);
    const Tracer::Source src = tracer.prepare(tx.position);
    const MapGeometry g = c.map_geometry();
    RadioMap map = RadioMap::blank(g);
    map.valid = room_mask(scene, g);

    const int workers = std::max(1, c.threads > 0 ? c.threads : static_cast<int>(std::thread::hardware_concurrency()));
    std::atomic<int> next_row{0};
    auto work = [&] {
        for (int r = next_row++; r < g.rows; r = next_row++) {
            for (int col = 0; col < g.cols; ++col) {
                const std::size_t i = g.index(r, col);
                if (!map.valid[i]) continue;
                const Vec2 p = g.pixel_center(r, col);
                const Vec3 rx{p.x, p.y, g.rx_height};
                double pl = 0.0;
                if (norm(rx - tx.position) >= 1e-9) pl = tracer.path_loss_db(src, rx);
                map.values[i] = std::clamp(pl, c.noise_floor_db, 0.0);
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    return map;
}

}  // namespace rmkit

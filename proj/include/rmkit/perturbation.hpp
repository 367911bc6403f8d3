#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "rmkit/errors.hpp"
#include "rmkit/rng.hpp"
#include "rmkit/scene.hpp"

namespace rmkit {

struct PerturbTargets {
    bool tx = true;
    bool objects = true;
    bool materials = true;

    friend bool operator==(const PerturbTargets&, const PerturbTargets&) = default;

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        if (tx) out.emplace_back("tx");
        if (objects) out.emplace_back("objects");
        if (materials) out.emplace_back("materials");
        return out;
    }

    /// Parses "tx,objects,materials" (any subset, comma separated).
    static PerturbTargets parse(const std::string& csv) {
        PerturbTargets t{false, false, false};
        std::stringstream ss(csv);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (item == "tx") t.tx = true;
            else if (item == "objects") t.objects = true;
            else if (item == "materials") t.materials = true;
            else if (!item.empty()) throw InvalidRange("unknown perturbation target '" + item + "'");
        }
        return t;
    }
    static PerturbTargets from_names(const std::vector<std::string>& names) {
        std::string csv;
        for (const auto& n : names) csv += n + ",";
        return parse(csv);
    }
};

struct PerturbConfig {
    double mean_offset_m = 0.5;
    PerturbTargets targets;
    int copies_per_scene = 10;
    double material_rel_sigma = 0.2;
    std::uint64_t rng_seed = 7;
    double tx_margin_m = 0.1;
    int fallback_steps = 64;  ///< resolution of the shrink search along the drawn direction
    MaterialRanges material_ranges = default_material_ranges();
};

inline void check_perturb_config(const PerturbConfig& c) {
    if (!(c.mean_offset_m >= 0.0)) throw InvalidRange("mean offset must be >= 0");
    if (c.copies_per_scene < 1) throw InvalidRange("copies_per_scene must be >= 1");
    if (!(c.material_rel_sigma >= 0.0)) throw InvalidRange("material_rel_sigma must be >= 0");
    if (c.fallback_steps < 1) throw InvalidRange("fallback_steps must be >= 1");
}

/// Isotropic planar displacement: uniform direction, Rayleigh magnitude whose mean is `mean_m`.
inline Vec2 sample_planar_offset(Rng& rng, double mean_m) {
    if (mean_m <= 0.0) return {0.0, 0.0};
    const double sigma = mean_m / std::sqrt(std::numbers::pi / 2.0);
    const double angle = 2.0 * std::numbers::pi * rng.uniform();
    const double mag = sigma * std::sqrt(-2.0 * std::log(1.0 - rng.uniform()));
    return {mag * std::cos(angle), mag * std::sin(angle)};
}

struct OffsetDraw {
    std::string target;  ///< "tx" or "objects"
    int id = 0;          ///< object id or transmitter index
    Vec2 drawn;
    Vec2 applied;
};

struct PerturbWarning {
    std::string scene_id;
    int copy_index = 0;
    std::string target;
    int id = 0;
    double drawn_m = 0.0;
    double applied_m = 0.0;
};

struct PerturbResult {
    Scene scene;
    std::vector<OffsetDraw> draws;
    std::vector<PerturbWarning> warnings;
};

/// Log-normal jitter of permittivity and conductivity on every solid, clamped
/// to the class range. Geometry and thickness are untouched.
inline Scene perturb_materials(const Scene& scene, const PerturbConfig& config, std::uint64_t stream_seed) {
    Scene out = scene;
    if (config.material_rel_sigma == 0.0) return out;
    auto jitter = [&](SceneObject& o) {
        Rng rng(derive_seed(stream_seed, o.id));
        const auto& r = config.material_ranges[o.material.cls];
        o.material.rel_permittivity =
            r.rel_permittivity.clamp(o.material.rel_permittivity * std::exp(config.material_rel_sigma * rng.normal()));
        o.material.conductivity =
            r.conductivity.clamp(o.material.conductivity * std::exp(config.material_rel_sigma * rng.normal()));
    };
    for (auto& w : out.walls) jitter(w);
    for (auto& f : out.furniture) jitter(f);
    return out;
}

namespace detail {

inline double wall_clearance(Vec2 p, const Rect& b) {
    return std::min({p.x - b.min.x, b.max.x - p.x, p.y - b.min.y, b.max.y - p.y});
}

}  // namespace detail

/// Noisy copy of a scene. Furniture and transmitters move in the plane; walls
/// stay. Infeasible moves shrink along the drawn direction to the largest
/// feasible step (never failing) and leave a warning.
inline PerturbResult perturb_scene(const Scene& scene, const PerturbConfig& config, int copy_index) {
    check_perturb_config(config);
    PerturbResult res;
    res.scene = scene;
    Scene& out = res.scene;
    const std::uint64_t base = derive_seed(config.rng_seed, std::string_view(scene.id), copy_index);
    const int steps = config.fallback_steps;
    const double margin = config.tx_margin_m;

    // Clearance each transmitter keeps from furniture: the margin, or its current
    // clearance if already closer.
    std::vector<std::vector<double>> tx_keep(scene.transmitters.size());
    for (std::size_t t = 0; t < scene.transmitters.size(); ++t) {
        for (const auto& f : scene.furniture) {
            tx_keep[t].push_back(std::min(margin, distance_to_prism(scene.transmitters[t].position, f)));
        }
    }

    if (config.targets.objects && config.mean_offset_m > 0.0) {
        for (std::size_t i = 0; i < out.furniture.size(); ++i) {
            const SceneObject original = out.furniture[i];
            Rng rng(derive_seed(base, std::string_view("objects"), original.id));
            const Vec2 off = sample_planar_offset(rng, config.mean_offset_m);
            auto feasible = [&](const SceneObject& cand) {
                for (const auto& v : cand.footprint) {
                    if (!out.bounds.contains(v, 1e-12)) return false;
                }
                const Rect cb = bounding_box(cand.footprint);
                for (std::size_t j = 0; j < out.furniture.size(); ++j) {
                    if (j == i || !cb.overlaps(bounding_box(out.furniture[j].footprint))) continue;
                    if (solids_overlap(cand, out.furniture[j])) return false;
                }
                for (std::size_t t = 0; t < scene.transmitters.size(); ++t) {
                    if (distance_to_prism(scene.transmitters[t].position, cand) < tx_keep[t][i]) return false;
                }
                return true;
            };
            double applied = 0.0;
            for (int k = steps; k > 0; --k) {
                const double s = static_cast<double>(k) / steps;
                SceneObject cand = original;
                cand.footprint = translated(original.footprint, s * off);
                if (feasible(cand)) {
                    out.furniture[i] = std::move(cand);
                    applied = s;
                    break;
                }
            }
            res.draws.push_back({"objects", original.id, off, applied * off});
            if (applied < 1.0) {
                res.warnings.push_back({scene.id, copy_index, "objects", original.id, norm(off), applied * norm(off)});
            }
        }
    }

    if (config.targets.tx && config.mean_offset_m > 0.0) {
        for (std::size_t t = 0; t < out.transmitters.size(); ++t) {
            const Vec3 p0 = out.transmitters[t].position;
            Rng rng(derive_seed(base, std::string_view("tx"), static_cast<std::int64_t>(t)));
            const Vec2 off = sample_planar_offset(rng, config.mean_offset_m);
            const double wall_keep = std::min(margin, detail::wall_clearance(xy(p0), out.bounds));
            std::vector<double> keep;
            for (const auto& f : out.furniture) keep.push_back(std::min(margin, distance_to_prism(p0, f)));
            auto feasible = [&](Vec3 p) {
                if (!out.bounds.strictly_contains(xy(p)) || detail::wall_clearance(xy(p), out.bounds) < wall_keep) {
                    return false;
                }
                for (std::size_t j = 0; j < out.furniture.size(); ++j) {
                    if (distance_to_prism(p, out.furniture[j]) < keep[j]) return false;
                }
                return true;
            };
            double applied = 0.0;
            for (int k = steps; k > 0; --k) {
                const double s = static_cast<double>(k) / steps;
                const Vec3 cand{p0.x + s * off.x, p0.y + s * off.y, p0.z};
                if (feasible(cand)) {
                    out.transmitters[t].position = cand;
                    applied = s;
                    break;
                }
            }
            res.draws.push_back({"tx", static_cast<int>(t), off, applied * off});
            if (applied < 1.0) {
                res.warnings.push_back({scene.id, copy_index, "tx", static_cast<int>(t), norm(off), applied * norm(off)});
            }
        }
    }

    if (config.targets.materials) {
        out = perturb_materials(out, config, derive_seed(base, std::string_view("materials")));
    }
    return res;
}

/// Noisy copy with provenance attached and a derived id.
inline PerturbResult make_noisy_copy(const Scene& clean, const PerturbConfig& config, int copy_index) {
    PerturbResult r = perturb_scene(clean, config, copy_index);
    r.scene.id = clean.id + "__c" + std::to_string(copy_index);
    r.scene.perturbation = PerturbationInfo{clean.id, copy_index, config.mean_offset_m, config.targets.names()};
    return r;
}

struct OffsetSummary {
    std::size_t count = 0;
    double mean = 0.0;
    double max = 0.0;
    double bin_width = 0.1;
    std::vector<std::size_t> histogram;  ///< last bin collects overflow
};

/// Planar displacement per target class ("tx", "objects") between paired scenes.
inline std::map<std::string, OffsetSummary> offset_statistics(const std::vector<Scene>& before,
                                                              const std::vector<Scene>& after, double bin_width = 0.1,
                                                              std::size_t bins = 40) {
    if (before.size() != after.size()) throw PairingError("scene lists differ in length");
    std::map<std::string, std::vector<double>> samples{{"tx", {}}, {"objects", {}}};
    for (std::size_t s = 0; s < before.size(); ++s) {
        const Scene& a = before[s];
        const Scene& b = after[s];
        if (a.furniture.size() != b.furniture.size() || a.transmitters.size() != b.transmitters.size()) {
            throw PairingError("scene pair " + a.id + " / " + b.id + " differs in object or transmitter count");
        }
        std::map<int, const SceneObject*> by_id;
        for (const auto& f : b.furniture) by_id[f.id] = &f;
        for (const auto& f : a.furniture) {
            auto it = by_id.find(f.id);
            if (it == by_id.end()) throw PairingError("object id " + std::to_string(f.id) + " missing in " + b.id);
            samples["objects"].push_back(norm(it->second->footprint.front() - f.footprint.front()));
        }
        for (std::size_t t = 0; t < a.transmitters.size(); ++t) {
            samples["tx"].push_back(norm(xy(b.transmitters[t].position) - xy(a.transmitters[t].position)));
        }
    }
    std::map<std::string, OffsetSummary> out;
    for (auto& [name, v] : samples) {
        OffsetSummary s;
        s.bin_width = bin_width;
        s.histogram.assign(bins, 0);
        s.count = v.size();
        double sum = 0.0;
        for (double d : v) {
            sum += d;
            s.max = std::max(s.max, d);
            const auto bin = std::min(bins - 1, static_cast<std::size_t>(d / bin_width));
            ++s.histogram[bin];
        }
        s.mean = v.empty() ? 0.0 : sum / static_cast<double>(v.size());
        out[name] = std::move(s);
    }
    return out;
}

}  // namespace rmkit

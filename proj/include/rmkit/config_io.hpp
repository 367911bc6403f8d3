#pragma once

#include <string>
#include <vector>

#include "rmkit/baselines.hpp"
#include "rmkit/eval.hpp"
#include "rmkit/perturbation.hpp"
#include "rmkit/rasterizer.hpp"
#include "rmkit/raytracer.hpp"
#include "rmkit/scene_gen.hpp"
#include "rmkit/scene_io.hpp"

// JSON forms of every configuration struct. Readers start from the defaults
// and override only the keys present.

namespace rmkit {

namespace detail {

template <class T>
void read_key(const json& j, const char* key, T& field) {
    if (j.contains(key)) field = j.at(key).get<T>();
}

inline json range_json(ParamRange r) { return json::array({r.lo, r.hi}); }

inline void read_range(const json& j, const char* key, ParamRange& r) {
    if (!j.contains(key)) return;
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 2) throw InvalidRange(std::string(key) + " must be [lo, hi]");
    r = {a[0].get<double>(), a[1].get<double>()};
}

}  // namespace detail

inline json to_json(const MaterialRanges& r) {
    json j = json::object();
    for (auto c : {MaterialClass::wood, MaterialClass::metal, MaterialClass::glass, MaterialClass::concrete_drywall}) {
        j[std::string(to_string(c))] = {{"rel_permittivity", detail::range_json(r[c].rel_permittivity)},
                                        {"conductivity", detail::range_json(r[c].conductivity)}};
    }
    return j;
}

inline MaterialRanges material_ranges_from_json(const json& j, MaterialRanges r = default_material_ranges()) {
    for (const auto& [name, v] : j.items()) {
        const MaterialClass c = material_class_from_string(name);
        detail::read_range(v, "rel_permittivity", r[c].rel_permittivity);
        detail::read_range(v, "conductivity", r[c].conductivity);
    }
    return r;
}

inline json to_json(const KindSpec& k) {
    json mats = json::array();
    for (const auto& [c, w] : k.materials) mats.push_back({{"class", to_string(c)}, {"weight", w}});
    return {{"kind", to_string(k.kind)},
            {"weight", k.weight},
            {"width", detail::range_json(k.width)},
            {"depth", detail::range_json(k.depth)},
            {"z_min", detail::range_json(k.z_min)},
            {"height", detail::range_json(k.height)},
            {"against_wall", k.against_wall},
            {"ceiling_probability", k.ceiling_probability},
            {"materials", mats},
            {"thickness", detail::range_json(k.thickness)}};
}

inline KindSpec kind_spec_from_json(const json& j) {
    KindSpec k;
    k.kind = object_kind_from_string(j.at("kind").get<std::string>());
    detail::read_key(j, "weight", k.weight);
    detail::read_range(j, "width", k.width);
    detail::read_range(j, "depth", k.depth);
    detail::read_range(j, "z_min", k.z_min);
    detail::read_range(j, "height", k.height);
    detail::read_key(j, "against_wall", k.against_wall);
    detail::read_key(j, "ceiling_probability", k.ceiling_probability);
    detail::read_range(j, "thickness", k.thickness);
    if (j.contains("materials")) {
        for (const auto& m : j.at("materials")) {
            k.materials.emplace_back(material_class_from_string(m.at("class").get<std::string>()),
                                     m.value("weight", 1.0));
        }
    }
    return k;
}

inline json to_json(const GenConfig& c) {
    json cat = json::array();
    for (const auto& k : c.catalog) cat.push_back(to_json(k));
    return {{"rng_seed", c.rng_seed},
            {"id_prefix", c.id_prefix},
            {"room_width_range", detail::range_json(c.room_width)},
            {"room_depth_range", detail::range_json(c.room_depth)},
            {"room_height_range", detail::range_json(c.room_height)},
            {"furniture_count_range", json::array({c.furniture_count.first, c.furniture_count.second})},
            {"tx_per_scene", c.tx_per_scene},
            {"tx_height_range", detail::range_json(c.tx_height)},
            {"tx_margin_m", c.tx_margin_m},
            {"wall_thickness_range", detail::range_json(c.wall_thickness)},
            {"glass_thickness_range", detail::range_json(c.glass_thickness)},
            {"door", c.door},
            {"max_windows", c.max_windows},
            {"chair_snap_probability", c.chair_snap_probability},
            {"object_retry_budget", c.object_retry_budget},
            {"scene_retry_budget", c.scene_retry_budget},
            {"object_catalog", cat},
            {"material_ranges", to_json(c.material_ranges)}};
}

inline GenConfig gen_config_from_json(const json& j) {
    GenConfig c;
    detail::read_key(j, "rng_seed", c.rng_seed);
    detail::read_key(j, "id_prefix", c.id_prefix);
    detail::read_range(j, "room_width_range", c.room_width);
    detail::read_range(j, "room_depth_range", c.room_depth);
    detail::read_range(j, "room_height_range", c.room_height);
    if (j.contains("furniture_count_range")) {
        const auto& a = j.at("furniture_count_range");
        c.furniture_count = {a.at(0).get<int>(), a.at(1).get<int>()};
    }
    detail::read_key(j, "tx_per_scene", c.tx_per_scene);
    detail::read_range(j, "tx_height_range", c.tx_height);
    detail::read_key(j, "tx_margin_m", c.tx_margin_m);
    detail::read_range(j, "wall_thickness_range", c.wall_thickness);
    detail::read_range(j, "glass_thickness_range", c.glass_thickness);
    detail::read_key(j, "door", c.door);
    detail::read_key(j, "max_windows", c.max_windows);
    detail::read_key(j, "chair_snap_probability", c.chair_snap_probability);
    detail::read_key(j, "object_retry_budget", c.object_retry_budget);
    detail::read_key(j, "scene_retry_budget", c.scene_retry_budget);
    if (j.contains("object_catalog")) {
        c.catalog.clear();
        for (const auto& k : j.at("object_catalog")) c.catalog.push_back(kind_spec_from_json(k));
    }
    if (j.contains("material_ranges")) c.material_ranges = material_ranges_from_json(j.at("material_ranges"));
    check_gen_config(c);
    return c;
}

inline json to_json(const PerturbConfig& c) {
    return {{"mean_offset_m", c.mean_offset_m},
            {"perturb_targets", c.targets.names()},
            {"copies_per_scene", c.copies_per_scene},
            {"material_rel_sigma", c.material_rel_sigma},
            {"rng_seed", c.rng_seed},
            {"tx_margin_m", c.tx_margin_m},
            {"fallback_steps", c.fallback_steps},
            {"material_ranges", to_json(c.material_ranges)}};
}

inline PerturbConfig perturb_config_from_json(const json& j) {
    PerturbConfig c;
    detail::read_key(j, "mean_offset_m", c.mean_offset_m);
    if (j.contains("perturb_targets")) {
        c.targets = PerturbTargets::from_names(j.at("perturb_targets").get<std::vector<std::string>>());
    }
    detail::read_key(j, "copies_per_scene", c.copies_per_scene);
    detail::read_key(j, "material_rel_sigma", c.material_rel_sigma);
    detail::read_key(j, "rng_seed", c.rng_seed);
    detail::read_key(j, "tx_margin_m", c.tx_margin_m);
    detail::read_key(j, "fallback_steps", c.fallback_steps);
    if (j.contains("material_ranges")) c.material_ranges = material_ranges_from_json(j.at("material_ranges"));
    check_perturb_config(c);
    return c;
}

inline json to_json(const TraceConfig& c) {
    return {{"max_reflections", c.max_reflections},
            {"max_transmissions", c.max_transmissions},
            {"max_diffractions", c.max_diffractions},
            {"frequency_hz", c.frequency_hz},
            {"noise_floor_db", c.noise_floor_db},
            {"rx_height_m", c.rx_height_m},
            {"rx_grid_step_m", c.rx_grid_step_m},
            {"floor_ceiling_reflections", c.floor_ceiling_reflections},
            {"floor_material", to_json(c.floor_material)},
            {"ceiling_material", to_json(c.ceiling_material)},
            {"threads", c.threads}};
}

inline TraceConfig trace_config_from_json(const json& j) {
    TraceConfig c;
    detail::read_key(j, "max_reflections", c.max_reflections);
    detail::read_key(j, "max_transmissions", c.max_transmissions);
    detail::read_key(j, "max_diffractions", c.max_diffractions);
    detail::read_key(j, "frequency_hz", c.frequency_hz);
    detail::read_key(j, "noise_floor_db", c.noise_floor_db);
    detail::read_key(j, "rx_height_m", c.rx_height_m);
    detail::read_key(j, "rx_grid_step_m", c.rx_grid_step_m);
    detail::read_key(j, "floor_ceiling_reflections", c.floor_ceiling_reflections);
    if (j.contains("floor_material")) c.floor_material = material_from_json(j.at("floor_material"));
    if (j.contains("ceiling_material")) c.ceiling_material = material_from_json(j.at("ceiling_material"));
    detail::read_key(j, "threads", c.threads);
    check_trace_config(c);
    return c;
}

inline json to_json(const EncodeConfig& c) {
    return {{"encoding", to_string(c.encoding)},
            {"xy_resolution", c.xy_resolution},
            {"slice_step_m", c.slice_step_m},
            {"slice_top_m", c.slice_top_m ? json(*c.slice_top_m) : json(nullptr)},
            {"include_distance_map", c.include_distance_map},
            {"scale_lo_db", c.scale_lo_db},
            {"scale_hi_db", c.scale_hi_db}};
}

inline EncodeConfig encode_config_from_json(const json& j) {
    EncodeConfig c;
    if (j.contains("encoding")) c.encoding = encoding_from_string(j.at("encoding").get<std::string>());
    detail::read_key(j, "xy_resolution", c.xy_resolution);
    detail::read_key(j, "slice_step_m", c.slice_step_m);
    if (j.contains("slice_top_m") && !j.at("slice_top_m").is_null()) c.slice_top_m = j.at("slice_top_m").get<double>();
    detail::read_key(j, "include_distance_map", c.include_distance_map);
    detail::read_key(j, "scale_lo_db", c.scale_lo_db);
    detail::read_key(j, "scale_hi_db", c.scale_hi_db);
    check_encode_config(c);
    return c;
}

inline json to_json(const RbfConfig& c) {
    return {{"kernel", c.kernel == RbfKernel::gaussian ? "gaussian" : "thin_plate_spline"},
            {"shape_epsilon", c.shape_epsilon ? json(*c.shape_epsilon) : json(nullptr)},
            {"shape_rule", c.shape_rule == ShapeRule::average_spacing ? "average_spacing" : "median_pairwise"},
            {"regularization", c.regularization},
            {"center_mean", c.center_mean}};
}

inline RbfConfig rbf_config_from_json(const json& j) {
    RbfConfig c;
    if (j.contains("kernel")) {
        const auto k = j.at("kernel").get<std::string>();
        if (k == "gaussian") c.kernel = RbfKernel::gaussian;
        else if (k == "thin_plate_spline") c.kernel = RbfKernel::thin_plate_spline;
        else throw InvalidRange("unknown kernel '" + k + "'");
    }
    if (j.contains("shape_epsilon") && !j.at("shape_epsilon").is_null()) {
        c.shape_epsilon = j.at("shape_epsilon").get<double>();
    }
    if (j.contains("shape_rule")) {
        const auto r = j.at("shape_rule").get<std::string>();
        if (r == "average_spacing") c.shape_rule = ShapeRule::average_spacing;
        else if (r == "median_pairwise") c.shape_rule = ShapeRule::median_pairwise;
        else throw InvalidRange("unknown shape rule '" + r + "'");
    }
    detail::read_key(j, "regularization", c.regularization);
    if (c.regularization < 0.0) throw InvalidRange("regularization must be >= 0");
    detail::read_key(j, "center_mean", c.center_mean);
    return c;
}

inline json to_json(const EvalConfig& c) {
    json targets = json::array();
    for (const auto& t : c.targets_grid) targets.push_back(t.names());
    return {{"fractions", c.fractions},
            {"draws_per_sample", c.draws_per_sample},
            {"split", c.split ? json(to_string(*c.split)) : json("all")},
            {"input_condition", to_string(c.input_condition)},
            {"severity_grid", c.severity_grid},
            {"targets_grid", targets},
            {"master_seed", c.master_seed},
            {"noisy_copy_index", c.noisy_copy_index},
            {"region_draws", c.region_draws}};
}

inline EvalConfig eval_config_from_json(const json& j) {
    EvalConfig c;
    detail::read_key(j, "fractions", c.fractions);
    detail::read_key(j, "draws_per_sample", c.draws_per_sample);
    if (j.contains("split")) {
        const auto s = j.at("split").get<std::string>();
        if (s == "all") c.split.reset();
        else c.split = split_from_string(s);
    }
    if (j.contains("input_condition")) {
        c.input_condition = input_condition_from_string(j.at("input_condition").get<std::string>());
    }
    detail::read_key(j, "severity_grid", c.severity_grid);
    if (j.contains("targets_grid")) {
        c.targets_grid.clear();
        for (const auto& t : j.at("targets_grid")) {
            c.targets_grid.push_back(PerturbTargets::from_names(t.get<std::vector<std::string>>()));
        }
    }
    detail::read_key(j, "master_seed", c.master_seed);
    detail::read_key(j, "noisy_copy_index", c.noisy_copy_index);
    detail::read_key(j, "region_draws", c.region_draws);
    check_eval_config(c);
    return c;
}

}  // namespace rmkit

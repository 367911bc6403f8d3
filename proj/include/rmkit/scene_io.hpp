#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "rmkit/errors.hpp"
#include "rmkit/scene.hpp"

namespace rmkit {

using json = nlohmann::json;

inline json to_json(Vec2 p) { return json::array({p.x, p.y}); }
inline json to_json(Vec3 p) { return json::array({p.x, p.y, p.z}); }

inline Vec2 vec2_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2) throw FormatError("expected [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline Vec3 vec3_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3) throw FormatError("expected [x, y, z]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline json to_json(const Material& m) {
    return {{"name", m.name},
            {"class", std::string(to_string(m.cls))},
            {"rel_permittivity", m.rel_permittivity},
            {"conductivity", m.conductivity},
            {"thickness", m.thickness}};
}

inline Material material_from_json(const json& j) {
    Material m;
    m.name = j.value("name", std::string{});
    m.cls = material_class_from_string(j.at("class").get<std::string>());
    m.rel_permittivity = j.at("rel_permittivity").get<double>();
    m.conductivity = j.at("conductivity").get<double>();
    m.thickness = j.at("thickness").get<double>();
    return m;
}

inline json to_json(const SceneObject& o) {
    json fp = json::array();
    for (const auto& p : o.footprint) fp.push_back(to_json(p));
    return {{"id", o.id},
            {"kind", std::string(to_string(o.kind))},
            {"footprint", fp},
            {"z_min", o.z_min},
            {"z_max", o.z_max},
            {"material", to_json(o.material)}};
}

inline SceneObject object_from_json(const json& j) {
    SceneObject o;
    o.id = j.at("id").get<int>();
    o.kind = object_kind_from_string(j.at("kind").get<std::string>());
    for (const auto& p : j.at("footprint")) o.footprint.push_back(vec2_from_json(p));
    o.z_min = j.at("z_min").get<double>();
    o.z_max = j.at("z_max").get<double>();
    o.material = material_from_json(j.at("material"));
    return o;
}

inline json to_json(const Scene& s) {
    json walls = json::array();
    for (const auto& w : s.walls) walls.push_back(to_json(w));
    json furniture = json::array();
    for (const auto& f : s.furniture) furniture.push_back(to_json(f));
    json txs = json::array();
    for (const auto& t : s.transmitters) {
        txs.push_back({{"position", to_json(t.position)}, {"power_dbm", t.power_dbm}, {"frequency_hz", t.frequency_hz}});
    }
    json j = {{"id", s.id},
              {"bounds", {{"min", to_json(s.bounds.min)}, {"max", to_json(s.bounds.max)}}},
              {"room_height", s.room_height},
              {"walls", walls},
              {"furniture", furniture},
              {"transmitters", txs},
              {"rng_seed", s.rng_seed}};
    if (s.perturbation) {
        j["perturbation"] = {{"base_scene_id", s.perturbation->base_scene_id},
                             {"copy_index", s.perturbation->copy_index},
                             {"mean_offset_m", s.perturbation->mean_offset_m},
                             {"targets", s.perturbation->targets}};
    }
    return j;
}

inline Scene scene_from_json(const json& j) {
    try {
        Scene s;
        s.id = j.at("id").get<std::string>();
        s.bounds = {vec2_from_json(j.at("bounds").at("min")), vec2_from_json(j.at("bounds").at("max"))};
        s.room_height = j.at("room_height").get<double>();
        for (const auto& w : j.at("walls")) s.walls.push_back(object_from_json(w));
        for (const auto& f : j.at("furniture")) s.furniture.push_back(object_from_json(f));
        for (const auto& t : j.at("transmitters")) {
            Transmitter tx;
            tx.position = vec3_from_json(t.at("position"));
            tx.power_dbm = t.value("power_dbm", 0.0);
            tx.frequency_hz = t.value("frequency_hz", 5.92e9);
            s.transmitters.push_back(tx);
        }
        s.rng_seed = j.at("rng_seed").get<std::uint64_t>();
        if (j.contains("perturbation")) {
            const auto& p = j.at("perturbation");
            s.perturbation = PerturbationInfo{p.at("base_scene_id").get<std::string>(), p.at("copy_index").get<int>(),
                                              p.at("mean_offset_m").get<double>(),
                                              p.at("targets").get<std::vector<std::string>>()};
        }
        return s;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed scene JSON: ") + e.what());
    }
}

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

inline void write_json_file(const std::filesystem::path& path, const json& j, int indent = 1) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path.string());
    out << j.dump(indent) << '\n';
}

inline Scene read_scene(const std::filesystem::path& path) { return scene_from_json(read_json_file(path)); }
inline void write_scene(const std::filesystem::path& path, const Scene& s) { write_json_file(path, to_json(s)); }

}  // namespace rmkit

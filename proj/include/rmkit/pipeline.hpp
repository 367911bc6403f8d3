#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "rmkit/config_io.hpp"
#include "rmkit/dataset_io.hpp"
#include "rmkit/perturbation.hpp"
#include "rmkit/rasterizer.hpp"
#include "rmkit/raytracer.hpp"
#include "rmkit/scene_gen.hpp"
#include "rmkit/scene_io.hpp"

// Dataset stages over the on-disk layout: gen -> perturb -> trace -> encode -> manifest.

namespace rmkit {

using Logger = std::function<void(const std::string&)>;

inline std::vector<fs::path> list_scene_files(const fs::path& dir) {
    std::vector<fs::path> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".json") out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Writes `count` generated scenes into `root/scenes` and the config snapshot.
inline std::vector<std::string> gen_stage(const fs::path& root, const GenConfig& config, int count) {
    std::vector<std::string> ids;
    for (int i = 0; i < count; ++i) {
        const Scene s = generate_scene(config, i);
        write_scene(root / scene_relpath(s.id), s);
        ids.push_back(s.id);
    }
    write_json_file(root / layout::kConfig / "gen.json", to_json(config));
    return ids;
}

inline json to_json(const PerturbWarning& w) {
    return {{"scene_id", w.scene_id}, {"copy_index", w.copy_index}, {"target", w.target},
            {"id", w.id},             {"drawn_m", w.drawn_m},         {"applied_m", w.applied_m}};
}

struct PerturbStageResult {
    std::size_t copies = 0;
    std::size_t draws = 0;
    std::vector<PerturbWarning> warnings;
};

/// Noisy copies of every clean scene in `in_dir`, written to `out_dir`. Fallback
/// warnings go to `warnings_path` as JSON lines.
inline PerturbStageResult perturb_stage(const fs::path& in_dir, const fs::path& out_dir, const PerturbConfig& config,
                                        const fs::path& warnings_path) {
    check_perturb_config(config);
    PerturbStageResult res;
    for (const auto& f : list_scene_files(in_dir)) {
        const Scene clean = read_scene(f);
        if (clean.perturbation) continue;
        for (int k = 0; k < config.copies_per_scene; ++k) {
            PerturbResult r = make_noisy_copy(clean, config, k);
            write_scene(out_dir / (r.scene.id + ".json"), r.scene);
            ++res.copies;
            res.draws += r.draws.size();
            for (auto& w : r.warnings) res.warnings.push_back(std::move(w));
        }
    }
    if (warnings_path.has_parent_path()) fs::create_directories(warnings_path.parent_path());
    std::ofstream out(warnings_path, std::ios::trunc);
    for (const auto& w : res.warnings) out << to_json(w).dump() << '\n';
    return res;
}

inline json to_json(const PropagationPath& p) {
    json inter = json::array();
    for (const auto& i : p.interactions) {
        const char* kind = i.kind == InteractionKind::reflection     ? "reflection"
                           : i.kind == InteractionKind::transmission ? "transmission"
                                                                     : "diffraction";
        inter.push_back({{"kind", kind}, {"object_id", i.object_id}, {"element", i.element},
                         {"point", to_json(i.point)}, {"coefficient", i.coefficient}});
    }
    return {{"path_index", p.path_index},
            {"total_length_m", p.total_length_m},
            {"power_gain", p.power_gain},
            {"interactions", inter}};
}

inline json map_metadata(const Scene& scene, int tx_index, const TraceConfig& config) {
    const Transmitter& tx = scene.transmitters.at(static_cast<std::size_t>(tx_index));
    return {{"scene_id", scene.id},
            {"tx_index", tx_index},
            {"tx", {{"position", to_json(tx.position)}, {"power_dbm", tx.power_dbm}, {"frequency_hz", tx.frequency_hz}}},
            {"noise_floor_db", config.noise_floor_db}};
}

/// Traces every transmitter of every clean scene into `out_dir`. Noisy copies
/// share the ground truth of their base scene and are skipped.
inline std::size_t trace_stage(const fs::path& scenes_dir, const fs::path& out_dir, const TraceConfig& config,
                               bool dump_paths = false, const Logger& log = {}) {
    check_trace_config(config);
    std::size_t n = 0;
    for (const auto& f : list_scene_files(scenes_dir)) {
        const Scene s = read_scene(f);
        if (s.perturbation) continue;
        for (std::size_t t = 0; t < s.transmitters.size(); ++t) {
            const int ti = static_cast<int>(t);
            const auto t0 = std::chrono::steady_clock::now();
            RadioMap map = trace_radio_map(s, s.transmitters[t], config);
            map.id = sample_id(s.id, ti);
            const fs::path path = out_dir / (map.id + ".rmtf");
            write_radio_map(path, map, map_metadata(s, ti, config));
            if (dump_paths) {
                TraceConfig c = config;
                c.frequency_hz = s.transmitters[t].frequency_hz;
                const Tracer tracer(s, c);
                const auto src = tracer.prepare(s.transmitters[t].position);
                std::ofstream out(out_dir / (map.id + ".paths.jsonl"), std::ios::trunc);
                for (int r = 0; r < map.geometry.rows; ++r) {
                    for (int col = 0; col < map.geometry.cols; ++col) {
                        if (!map.is_valid(r, col)) continue;
                        const Vec3 rx = receiver_point(map.geometry, r, col);
                        if (norm(rx - s.transmitters[t].position) < 1e-9) continue;
                        json paths = json::array();
                        for (const auto& p : tracer.trace(src, rx)) paths.push_back(to_json(p));
                        out << json{{"row", r}, {"col", col}, {"paths", paths}}.dump() << '\n';
                    }
                }
            }
            ++n;
            if (log) {
                const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                char buf[160];
                std::snprintf(buf, sizeof buf, "traced %s in %.2f s", map.id.c_str(), dt);
                log(buf);
            }
        }
    }
    return n;
}

/// Environment tensor per scene and transmitter tensor (one-hot, distance) per
/// sample. Observations are drawn at training or evaluation time.
inline std::size_t encode_stage(const fs::path& root, const EncodeConfig& config) {
    check_encode_config(config);
    std::size_t n = 0;
    for (const auto& f : list_scene_files(root / layout::kScenes)) {
        const Scene s = read_scene(f);
        const EnvRaster env = rasterize_slices(s, config);
        const std::vector<std::uint64_t> dims{static_cast<std::uint64_t>(env.raster.channels),
                                              static_cast<std::uint64_t>(env.raster.rows),
                                              static_cast<std::uint64_t>(env.raster.cols)};
        const fs::path env_path = root / env_encoding_relpath(s.id);
        write_tensor(env_path, dims, env.raster.data);
        json channels = json::array();
        for (const auto& c : env.channels) {
            channels.push_back({{"name", c.name}, {"semantic", c.semantic}, {"slice_height_m", c.slice_height}});
        }
        write_json_file(sidecar_path(env_path),
                        {{"scene_id", s.id}, {"encode_config", to_json(config)}, {"channels", channels}});

        for (std::size_t t = 0; t < s.transmitters.size(); ++t) {
            auto [onehot, dist] = encode_transmitter(s.transmitters[t], config);
            std::vector<float> data = onehot.data;
            data.insert(data.end(), dist.data.begin(), dist.data.end());
            const std::vector<std::uint64_t> tdims{static_cast<std::uint64_t>(1 + dist.channels),
                                                   static_cast<std::uint64_t>(config.xy_resolution),
                                                   static_cast<std::uint64_t>(config.xy_resolution)};
            const fs::path tx_path = root / tx_encoding_relpath(s.id, static_cast<int>(t));
            write_tensor(tx_path, tdims, data);
            json ch = json::array({{{"name", "tx_onehot"}, {"semantic", "tx_height_m"}}});
            if (dist.channels) ch.push_back({{"name", "distance"}, {"semantic", "distance_m"}});
            write_json_file(sidecar_path(tx_path), {{"sample_id", sample_id(s.id, static_cast<int>(t))}, {"channels", ch}});
            ++n;
        }
    }
    write_json_file(root / layout::kConfig / "encode.json", to_json(config));
    return n;
}

struct PipelineConfig {
    GenConfig gen;
    PerturbConfig perturb;
    TraceConfig trace;
    EncodeConfig encode;
    int scenes = 20;
    bool run_encode = true;
    BuildOptions manifest;
};

struct PipelineReport {
    std::size_t scenes = 0;
    std::size_t noisy_scenes = 0;
    std::size_t maps = 0;
    std::size_t encodings = 0;
    std::size_t warnings = 0;
    std::size_t offset_draws = 0;
    DatasetManifest manifest;
    std::vector<ManifestViolation> violations;
    std::map<std::string, double> seconds;
};

inline PipelineReport run_pipeline(const fs::path& root, PipelineConfig config, const Logger& log = {}) {
    PipelineReport rep;
    auto timed = [&](const std::string& stage, auto&& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        rep.seconds[stage] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (log) log(stage + " done in " + std::to_string(rep.seconds[stage]) + " s");
    };
    timed("gen", [&] { rep.scenes = gen_stage(root, config.gen, config.scenes).size(); });
    timed("perturb", [&] {
        const auto r = perturb_stage(root / layout::kScenes, root / layout::kScenes, config.perturb,
                                     root / "perturb_warnings.jsonl");
        write_json_file(root / layout::kConfig / "perturb.json", to_json(config.perturb));
        rep.noisy_scenes = r.copies;
        rep.warnings = r.warnings.size();
        rep.offset_draws = r.draws;
    });
    timed("trace", [&] {
        rep.maps = trace_stage(root / layout::kScenes, root / layout::kMaps, config.trace, false, log);
        write_json_file(root / layout::kConfig / "trace.json", to_json(config.trace));
    });
    if (config.run_encode) timed("encode", [&] { rep.encodings = encode_stage(root, config.encode); });
    timed("manifest", [&] {
        rep.manifest = build_manifest(root, config.manifest);
        write_manifest(root, rep.manifest);
        rep.violations = verify_manifest(rep.manifest, root);
    });
    return rep;
}

}  // namespace rmkit

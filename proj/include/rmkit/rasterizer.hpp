#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "rmkit/errors.hpp"
#include "rmkit/rng.hpp"
#include "rmkit/scene.hpp"

namespace rmkit {

enum class Encoding { binary, classes, material_properties, no_env };

inline std::string_view to_string(Encoding e) {
    switch (e) {
        case Encoding::binary: return "binary";
        case Encoding::classes: return "classes";
        case Encoding::material_properties: return "material_properties";
        case Encoding::no_env: return "no_env";
    }
    return "binary";
}

inline Encoding encoding_from_string(std::string_view s) {
    for (auto e : {Encoding::binary, Encoding::classes, Encoding::material_properties, Encoding::no_env}) {
        if (to_string(e) == s) return e;
    }
    throw InvalidRange("unknown encoding '" + std::string(s) + "'");
}

inline constexpr double kConductivityFloor = 1e-6;  // S/m, inside log10 for the property channel

struct EncodeConfig {
    Encoding encoding = Encoding::binary;
    int xy_resolution = 256;
    double slice_step_m = 0.10;
    /// Highest slice bound; unset means the scene's room height. A fixed value
    /// gives every scene the same channel count.
    std::optional<double> slice_top_m;
    bool include_distance_map = true;
    MapGeometry map;  ///< lattice of the radio maps the Tx/observation rasters align to
    double scale_lo_db = kNoiseFloorDb;
    double scale_hi_db = kMaxPathLossDb;

    int upsampling() const { return xy_resolution / map.rows; }
    double fine_pixel() const { return map.extent().width() / xy_resolution; }
};

inline void check_encode_config(const EncodeConfig& c) {
    if (c.xy_resolution <= 0 || c.xy_resolution % c.map.rows != 0 || c.map.rows != c.map.cols) {
        throw InvalidRange("xy_resolution must be a positive multiple of the map size");
    }
    if (!(c.slice_step_m > 0.0)) throw InvalidRange("slice_step_m must be positive");
}

/// Channel-major float raster stack.
struct Raster {
    int channels = 0;
    int rows = 0;
    int cols = 0;
    std::vector<float> data;

    Raster() = default;
    Raster(int c, int r, int k) : channels(c), rows(r), cols(k), data(static_cast<std::size_t>(c) * r * k, 0.0f) {}

    float& at(int c, int r, int k) { return data[(static_cast<std::size_t>(c) * rows + r) * cols + k]; }
    float at(int c, int r, int k) const { return data[(static_cast<std::size_t>(c) * rows + r) * cols + k]; }
    friend bool operator==(const Raster&, const Raster&) = default;
};

struct ChannelInfo {
    std::string name;
    std::string semantic;
    double slice_height = std::numeric_limits<double>::quiet_NaN();
};

inline std::vector<double> slice_heights(const Scene& scene, const EncodeConfig& c) {
    const double top = c.slice_top_m.value_or(scene.room_height);
    std::vector<double> zs;
    for (int k = 0;; ++k) {
        const double z = (k + 0.5) * c.slice_step_m;
        if (z >= top) break;
        zs.push_back(z);
    }
    return zs;
}

inline int channels_per_slice(Encoding e) {
    switch (e) {
        case Encoding::binary:
        case Encoding::classes: return 1;
        case Encoding::material_properties: return 3;
        case Encoding::no_env: return 0;
    }
    return 0;
}

struct EnvRaster {
    Raster raster;
    std::vector<ChannelInfo> channels;
};

/// Pixel-center occupancy per height slice. Walls are drawn before furniture;
/// where footprints share a pixel center the later object wins.
inline EnvRaster rasterize_slices(const Scene& scene, const EncodeConfig& config) {
    check_encode_config(config);
    const auto zs = slice_heights(scene, config);
    const int per = channels_per_slice(config.encoding);
    const int n = config.xy_resolution;
    EnvRaster out;
    out.raster = Raster(per * static_cast<int>(zs.size()), n, n);
    if (per == 0) return out;

    for (std::size_t s = 0; s < zs.size(); ++s) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "z%.3f", zs[s]);
        if (config.encoding == Encoding::material_properties) {
            out.channels.push_back({std::string(buf) + ":permittivity", "rel_permittivity", zs[s]});
            out.channels.push_back({std::string(buf) + ":log10_conductivity", "log10_conductivity", zs[s]});
            out.channels.push_back({std::string(buf) + ":thickness", "thickness_m", zs[s]});
        } else {
            out.channels.push_back({std::string(buf), std::string(to_string(config.encoding)), zs[s]});
        }
    }

    const Rect ext = config.map.extent();
    const double px = config.fine_pixel();
    for (const SceneObject* o : scene.solids()) {
        const Rect box = bounding_box(o->footprint);
        const int c0 = std::max(0, static_cast<int>(std::floor((box.min.x - ext.min.x) / px - 0.5)));
        const int c1 = std::min(n - 1, static_cast<int>(std::ceil((box.max.x - ext.min.x) / px - 0.5)));
        const int r0 = std::max(0, static_cast<int>(std::floor((box.min.y - ext.min.y) / px - 0.5)));
        const int r1 = std::min(n - 1, static_cast<int>(std::ceil((box.max.y - ext.min.y) / px - 0.5)));
        if (c0 > c1 || r0 > r1) continue;
        float v[3] = {1.0f, 0.0f, 0.0f};
        if (config.encoding == Encoding::classes) v[0] = static_cast<float>(static_cast<int>(o->material.cls));
        if (config.encoding == Encoding::material_properties) {
            v[0] = static_cast<float>(o->material.rel_permittivity);
            v[1] = static_cast<float>(std::log10(o->material.conductivity + kConductivityFloor));
            v[2] = static_cast<float>(o->material.thickness);
        }
        std::vector<int> active;
        for (std::size_t s = 0; s < zs.size(); ++s) {
            if (zs[s] >= o->z_min && zs[s] < o->z_max) active.push_back(static_cast<int>(s));
        }
        if (active.empty()) continue;
        for (int r = r0; r <= r1; ++r) {
            for (int c = c0; c <= c1; ++c) {
                const Vec2 p{ext.min.x + (c + 0.5) * px, ext.min.y + (r + 0.5) * px};
                if (!point_in_polygon(p, o->footprint)) continue;
                for (int s : active) {
                    for (int k = 0; k < per; ++k) out.raster.at(s * per + k, r, c) = v[k];
                }
            }
        }
    }
    return out;
}

struct EncodedInput {
    EnvRaster env;
    Raster tx_onehot;     ///< 1 channel
    Raster distance_map;  ///< 1 channel, or 0 channels when disabled
    Raster obs_map;       ///< 1 channel

    /// All channels stacked: environment, Tx, distance, observations.
    Raster stacked() const {
        const int n = tx_onehot.rows;
        Raster out(env.raster.channels + 2 + distance_map.channels, n, n);
        auto it = out.data.begin();
        it = std::copy(env.raster.data.begin(), env.raster.data.end(), it);
        it = std::copy(tx_onehot.data.begin(), tx_onehot.data.end(), it);
        it = std::copy(distance_map.data.begin(), distance_map.data.end(), it);
        std::copy(obs_map.data.begin(), obs_map.data.end(), it);
        return out;
    }

    std::vector<ChannelInfo> channel_manifest() const {
        auto ch = env.channels;
        ch.push_back({"tx_onehot", "tx_height_m"});
        if (distance_map.channels) ch.push_back({"distance", "distance_m"});
        ch.push_back({"observations", "scaled_path_loss"});
        return ch;
    }
};

/// Tx one-hot and distance rasters on the fine grid.
inline std::pair<Raster, Raster> encode_transmitter(const Transmitter& tx, const EncodeConfig& config) {
    check_encode_config(config);
    const int n = config.xy_resolution;
    const int up = config.upsampling();
    Raster onehot(1, n, n);
    const auto [mr, mc] = config.map.pixel_of(xy(tx.position));
    onehot.at(0, mr * up + up / 2, mc * up + up / 2) = static_cast<float>(tx.position.z);
    Raster dist(config.include_distance_map ? 1 : 0, n, n);
    if (config.include_distance_map) {
        const Rect ext = config.map.extent();
        const double px = config.fine_pixel();
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c < n; ++c) {
                const Vec2 p{ext.min.x + (c + 0.5) * px, ext.min.y + (r + 0.5) * px};
                dist.at(0, r, c) = static_cast<float>(norm(p - xy(tx.position)));
            }
        }
    }
    return {std::move(onehot), std::move(dist)};
}

/// Observations upsampled into blocks of the fine grid, values scaled to [0, 1].
inline Raster encode_observations(const ObservationSet& obs, const RadioMap& source, const EncodeConfig& config) {
    check_encode_config(config);
    const int n = config.xy_resolution;
    const int up = config.upsampling();
    Raster out(1, n, n);
    for (const auto& o : obs.entries) {
        if (o.row < 0 || o.row >= source.geometry.rows || o.col < 0 || o.col >= source.geometry.cols ||
            !source.is_valid(o.row, o.col)) {
            throw ConsistencyError("observation at (" + std::to_string(o.row) + ", " + std::to_string(o.col) +
                                   ") is not a valid pixel of map " + source.id);
        }
        const auto v = static_cast<float>(scale_to_unit(o.path_loss_db, config.scale_lo_db, config.scale_hi_db));
        for (int r = 0; r < up; ++r) {
            for (int c = 0; c < up; ++c) out.at(0, o.row * up + r, o.col * up + c) = v;
        }
    }
    return out;
}

inline EncodedInput encode_sample(const Scene& scene, const Transmitter& tx, const ObservationSet& obs,
                                  const RadioMap& source, const EncodeConfig& config) {
    EncodedInput e;
    e.env = rasterize_slices(scene, config);
    auto [onehot, dist] = encode_transmitter(tx, config);
    e.tx_onehot = std::move(onehot);
    e.distance_map = std::move(dist);
    e.obs_map = encode_observations(obs, source, config);
    return e;
}

/// round(fraction * valid pixels) distinct valid pixels, uniformly without replacement.
/// Draws at growing fractions from equal streams are nested prefixes.
inline ObservationSet draw_observations(const RadioMap& map, double fraction, Rng& rng) {
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < map.valid.size(); ++i) {
        if (map.valid[i]) pool.push_back(i);
    }
    const double f = std::clamp(fraction, 0.0, 1.0);
    const auto count = static_cast<std::size_t>(std::llround(f * static_cast<double>(pool.size())));
    ObservationSet out;
    out.source_map_id = map.id;
    for (std::size_t k = 0; k < count; ++k) {
        const auto j = static_cast<std::size_t>(
            rng.uniform_int(static_cast<std::int64_t>(k), static_cast<std::int64_t>(pool.size()) - 1));
        std::swap(pool[k], pool[j]);
        const int r = static_cast<int>(pool[k] / static_cast<std::size_t>(map.geometry.cols));
        const int c = static_cast<int>(pool[k] % static_cast<std::size_t>(map.geometry.cols));
        out.entries.push_back({r, c, map.values[pool[k]]});
    }
    return out;
}

/// Counter-clockwise quarter turn of every channel (row index grows with y).
inline Raster rotate90(const Raster& in) {
    Raster out(in.channels, in.cols, in.rows);
    for (int ch = 0; ch < in.channels; ++ch) {
        for (int r = 0; r < in.rows; ++r) {
            for (int c = 0; c < in.cols; ++c) out.at(ch, c, in.rows - 1 - r) = in.at(ch, r, c);
        }
    }
    return out;
}

}  // namespace rmkit

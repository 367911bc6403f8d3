#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "rmkit/errors.hpp"
#include "rmkit/rng.hpp"
#include "rmkit/scene.hpp"
#include "rmkit/scene_io.hpp"

namespace rmkit {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Tensor container: "RMTF" | u16 version | u16 dtype | u32 rank | u64 dims[rank] | payload.
// All integers and the f32 payload are little-endian; no padding.

inline constexpr char kTensorMagic[4] = {'R', 'M', 'T', 'F'};
inline constexpr std::uint16_t kTensorVersion = 1;
inline constexpr std::uint16_t kDtypeF32 = 1;
inline constexpr std::uint32_t kMaxTensorRank = 16;

struct Tensor {
    std::vector<std::uint64_t> dims;
    std::vector<float> values;
};

namespace detail {

template <class T>
void put_le(std::vector<char>& out, T v) {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<char>(u & 0xFFu));
        u = static_cast<U>(u >> 8);
    }
}

template <class T>
T get_le(const char* p) {
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = sizeof(T); i-- > 0;) {
        u = static_cast<decltype(u)>((u << 8) | static_cast<unsigned char>(p[i]));
    }
    return static_cast<T>(u);
}

/// Element count; throws on u64 overflow of the count or its byte size.
inline std::uint64_t checked_count(std::span<const std::uint64_t> dims) {
    std::uint64_t n = 1;
    for (auto d : dims) {
        if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / 4 / d) {
            throw FormatError("tensor dimensions overflow");
        }
        n *= d;
    }
    return n;
}

}  // namespace detail

inline std::vector<char> encode_tensor(std::span<const std::uint64_t> dims, std::span<const float> values) {
    if (dims.size() > kMaxTensorRank) throw FormatError("tensor rank exceeds " + std::to_string(kMaxTensorRank));
    if (detail::checked_count(dims) != values.size()) {
        throw FormatError("tensor dims do not match the value count");
    }
    std::vector<char> out(kTensorMagic, kTensorMagic + 4);
    detail::put_le<std::uint16_t>(out, kTensorVersion);
    detail::put_le<std::uint16_t>(out, kDtypeF32);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(dims.size()));
    for (auto d : dims) detail::put_le<std::uint64_t>(out, d);
    out.reserve(out.size() + values.size() * 4);
    for (float v : values) detail::put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
    return out;
}

inline Tensor decode_tensor(std::span<const char> bytes) {
    constexpr std::size_t header = 12;
    if (bytes.size() < header) throw FormatError("tensor file truncated in header");
    if (!std::equal(kTensorMagic, kTensorMagic + 4, bytes.begin())) throw FormatError("bad tensor magic");
    const auto version = detail::get_le<std::uint16_t>(bytes.data() + 4);
    if (version != kTensorVersion) throw FormatError("unsupported tensor version " + std::to_string(version));
    const auto dtype = detail::get_le<std::uint16_t>(bytes.data() + 6);
    if (dtype != kDtypeF32) throw FormatError("unsupported tensor dtype " + std::to_string(dtype));
    const auto rank = detail::get_le<std::uint32_t>(bytes.data() + 8);
    if (rank > kMaxTensorRank) throw FormatError("tensor rank " + std::to_string(rank) + " too large");
    if (bytes.size() < header + 8ull * rank) throw FormatError("tensor file truncated in dims");
    Tensor t;
    for (std::uint32_t i = 0; i < rank; ++i) t.dims.push_back(detail::get_le<std::uint64_t>(bytes.data() + header + 8 * i));
    const std::uint64_t count = detail::checked_count(t.dims);
    const std::size_t offset = header + 8ull * rank;
    const std::uint64_t available = bytes.size() - offset;
    if (available < count * 4) throw FormatError("tensor payload truncated");
    if (available > count * 4) throw FormatError("trailing bytes after tensor payload");
    t.values.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        t.values[i] = std::bit_cast<float>(detail::get_le<std::uint32_t>(bytes.data() + offset + 4 * i));
    }
    return t;
}

inline void write_tensor(const fs::path& path, std::span<const std::uint64_t> dims, std::span<const float> values) {
    const auto bytes = encode_tensor(dims, values);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open " + path.string() + " for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error("write failed for " + path.string());
}

inline Tensor read_tensor(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    try {
        return decode_tensor(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Radio maps: tensor [2, rows, cols] (values, mask) plus a JSON sidecar.

inline fs::path sidecar_path(const fs::path& tensor_path) {
    fs::path p = tensor_path;
    return p.replace_extension(".json");
}

inline json geometry_to_json(const MapGeometry& g) {
    return {{"rows", g.rows},
            {"cols", g.cols},
            {"pixel_size", g.pixel_size},
            {"origin", to_json(g.origin)},
            {"rx_height", g.rx_height}};
}

inline MapGeometry geometry_from_json(const json& j) {
    MapGeometry g;
    g.rows = j.value("rows", g.rows);
    g.cols = j.value("cols", g.cols);
    g.pixel_size = j.value("pixel_size", g.pixel_size);
    if (j.contains("origin")) g.origin = vec2_from_json(j.at("origin"));
    g.rx_height = j.value("rx_height", g.rx_height);
    return g;
}

inline void write_radio_map(const fs::path& path, const RadioMap& map, json meta = json::object()) {
    const std::size_t n = map.geometry.size();
    std::vector<float> data(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        data[i] = static_cast<float>(map.values[i]);
        data[n + i] = map.valid[i] ? 1.0f : 0.0f;
    }
    const std::vector<std::uint64_t> dims{2, static_cast<std::uint64_t>(map.geometry.rows),
                                          static_cast<std::uint64_t>(map.geometry.cols)};
    write_tensor(path, dims, data);
    meta["id"] = map.id;
    meta["geometry"] = geometry_to_json(map.geometry);
    meta["units"] = "dB";
    meta["channels"] = json::array({"path_loss_db", "valid_mask"});
    write_json_file(sidecar_path(path), meta);
}

inline RadioMap read_radio_map(const fs::path& path) {
    const Tensor t = read_tensor(path);
    RadioMap m;
    m.id = path.stem().string();
    const fs::path side = sidecar_path(path);
    if (fs::exists(side)) {
        const json meta = read_json_file(side);
        m.id = meta.value("id", m.id);
        if (meta.contains("geometry")) m.geometry = geometry_from_json(meta.at("geometry"));
    }
    if (t.dims.size() != 3 || t.dims[0] != 2 || t.dims[1] != static_cast<std::uint64_t>(m.geometry.rows) ||
        t.dims[2] != static_cast<std::uint64_t>(m.geometry.cols)) {
        throw FormatError(path.string() + ": radio map tensor must be [2, rows, cols]");
    }
    const std::size_t n = m.geometry.size();
    m.values.resize(n);
    m.valid.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        m.values[i] = t.values[i];
        m.valid[i] = t.values[n + i] != 0.0f ? 1 : 0;
    }
    return m;
}

// ---------------------------------------------------------------------------
// Dataset layout and manifest.

namespace layout {
inline constexpr const char* kScenes = "scenes";
inline constexpr const char* kMaps = "maps";
inline constexpr const char* kEncodings = "encodings";
inline constexpr const char* kConfig = "config";
inline constexpr const char* kManifest = "manifest.json";
}  // namespace layout

inline std::string sample_id(const std::string& scene_id, int tx_index) {
    return scene_id + "__tx" + std::to_string(tx_index);
}
/// Maps are traced on clean scenes only and keyed by the base scene.
inline std::string map_relpath(const std::string& base_scene_id, int tx_index) {
    return std::string(layout::kMaps) + "/" + sample_id(base_scene_id, tx_index) + ".rmtf";
}
inline std::string scene_relpath(const std::string& scene_id) {
    return std::string(layout::kScenes) + "/" + scene_id + ".json";
}
inline std::string env_encoding_relpath(const std::string& scene_id) {
    return std::string(layout::kEncodings) + "/" + scene_id + ".env.rmtf";
}
inline std::string tx_encoding_relpath(const std::string& scene_id, int tx_index) {
    return std::string(layout::kEncodings) + "/" + sample_id(scene_id, tx_index) + ".tx.rmtf";
}

enum class Split { train, val, test };

inline std::string_view to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "train";
}

inline Split split_from_string(std::string_view s) {
    for (auto v : {Split::train, Split::val, Split::test}) {
        if (to_string(v) == s) return v;
    }
    throw InvalidRange("unknown split '" + std::string(s) + "'");
}

inline constexpr std::size_t kMinSplitScenes = 10;

/// 80/10/10 assignment of base scenes, deterministic in `seed`.
inline std::map<std::string, Split> make_splits(const std::vector<std::string>& base_scene_ids, std::uint64_t seed) {
    std::vector<std::string> ids(base_scene_ids);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (ids.size() < kMinSplitScenes) {
        throw SplitError("need at least " + std::to_string(kMinSplitScenes) + " base scenes, got " +
                         std::to_string(ids.size()));
    }
    Rng rng(derive_seed(seed, std::string_view("splits")));
    for (std::size_t i = ids.size() - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i)));
        std::swap(ids[i], ids[j]);
    }
    const auto n = static_cast<double>(ids.size());
    const auto n_test = static_cast<std::size_t>(std::llround(0.1 * n));
    const auto n_val = static_cast<std::size_t>(std::llround(0.1 * n));
    std::map<std::string, Split> out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out[ids[i]] = i < n_test ? Split::test : (i < n_test + n_val ? Split::val : Split::train);
    }
    return out;
}

struct SampleRecord {
    std::string sample_id;
    std::string scene_id;
    std::string base_scene_id;
    int tx_index = 0;
    int copy_index = -1;  ///< -1 marks the clean sample
    double severity = 0.0;
    std::vector<std::string> perturb_targets;
    std::string scene_path;
    std::string map_path;
    std::string env_encoding_path;  ///< empty until encoded
    std::string tx_encoding_path;
    std::string split;  ///< empty when unassigned

    bool clean() const { return copy_index < 0; }
};

struct DatasetManifest {
    std::string dataset_id;
    json config = json::object();
    std::uint64_t split_seed = 0;
    std::vector<SampleRecord> samples;

    const SampleRecord* find(const std::string& id) const {
        for (const auto& s : samples) {
            if (s.sample_id == id) return &s;
        }
        return nullptr;
    }
};

inline json to_json(const SampleRecord& r) {
    return {{"sample_id", r.sample_id},
            {"scene_id", r.scene_id},
            {"base_scene_id", r.base_scene_id},
            {"tx_index", r.tx_index},
            {"copy_index", r.copy_index},
            {"severity", r.severity},
            {"perturb_targets", r.perturb_targets},
            {"scene_path", r.scene_path},
            {"map_path", r.map_path},
            {"env_encoding_path", r.env_encoding_path},
            {"tx_encoding_path", r.tx_encoding_path},
            {"split", r.split}};
}

inline SampleRecord sample_record_from_json(const json& j) {
    SampleRecord r;
    r.sample_id = j.at("sample_id").get<std::string>();
    r.scene_id = j.at("scene_id").get<std::string>();
    r.base_scene_id = j.at("base_scene_id").get<std::string>();
    r.tx_index = j.at("tx_index").get<int>();
    r.copy_index = j.at("copy_index").get<int>();
    r.severity = j.value("severity", 0.0);
    r.perturb_targets = j.value("perturb_targets", std::vector<std::string>{});
    r.scene_path = j.value("scene_path", "");
    r.map_path = j.value("map_path", "");
    r.env_encoding_path = j.value("env_encoding_path", "");
    r.tx_encoding_path = j.value("tx_encoding_path", "");
    r.split = j.value("split", "");
    return r;
}

inline json to_json(const DatasetManifest& m) {
    json samples = json::array();
    for (const auto& s : m.samples) samples.push_back(to_json(s));
    return {{"dataset_id", m.dataset_id},
            {"format_version", 1},
            {"config", m.config},
            {"split_seed", m.split_seed},
            {"samples", samples}};
}

inline DatasetManifest manifest_from_json(const json& j) {
    DatasetManifest m;
    try {
        m.dataset_id = j.value("dataset_id", "");
        m.config = j.value("config", json::object());
        m.split_seed = j.value("split_seed", std::uint64_t{0});
        for (const auto& s : j.at("samples")) m.samples.push_back(sample_record_from_json(s));
    } catch (const json::exception& e) {
        throw ManifestError(std::string("malformed manifest: ") + e.what());
    }
    return m;
}

inline DatasetManifest read_manifest(const fs::path& root) {
    const fs::path p = root / layout::kManifest;
    if (!fs::exists(p)) throw ManifestError("no manifest at " + p.string());
    return manifest_from_json(read_json_file(p));
}

inline void write_manifest(const fs::path& root, const DatasetManifest& m) {
    write_json_file(root / layout::kManifest, to_json(m));
}

struct BuildOptions {
    std::string dataset_id;
    std::uint64_t split_seed = 2024;
};

/// Scans `root/scenes` and records one sample per (scene, transmitter). Map paths
/// point at the clean ground truth of the base scene; encodings are recorded when
/// present. Splits are assigned when there are enough base scenes.
inline DatasetManifest build_manifest(const fs::path& root, const BuildOptions& options = {}) {
    DatasetManifest m;
    m.dataset_id = options.dataset_id.empty() ? fs::absolute(root).filename().string() : options.dataset_id;
    m.split_seed = options.split_seed;
    const fs::path config_dir = root / layout::kConfig;
    if (fs::is_directory(config_dir)) {
        std::vector<fs::path> cfgs;
        for (const auto& e : fs::directory_iterator(config_dir)) {
            if (e.path().extension() == ".json") cfgs.push_back(e.path());
        }
        std::sort(cfgs.begin(), cfgs.end());
        for (const auto& p : cfgs) m.config[p.stem().string()] = read_json_file(p);
    }

    std::vector<fs::path> files;
    if (fs::is_directory(root / layout::kScenes)) {
        for (const auto& e : fs::directory_iterator(root / layout::kScenes)) {
            if (e.path().extension() == ".json") files.push_back(e.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<std::string> bases;
    for (const auto& f : files) {
        const Scene s = read_scene(f);
        for (std::size_t t = 0; t < s.transmitters.size(); ++t) {
            const int ti = static_cast<int>(t);
            SampleRecord r;
            r.sample_id = sample_id(s.id, ti);
            r.scene_id = s.id;
            r.base_scene_id = s.base_id();
            r.tx_index = ti;
            if (s.perturbation) {
                r.copy_index = s.perturbation->copy_index;
                r.severity = s.perturbation->mean_offset_m;
                r.perturb_targets = s.perturbation->targets;
            }
            r.scene_path = scene_relpath(s.id);
            r.map_path = map_relpath(r.base_scene_id, ti);
            if (fs::exists(root / env_encoding_relpath(s.id))) r.env_encoding_path = env_encoding_relpath(s.id);
            if (fs::exists(root / tx_encoding_relpath(s.id, ti))) r.tx_encoding_path = tx_encoding_relpath(s.id, ti);
            m.samples.push_back(std::move(r));
        }
        bases.push_back(s.base_id());
    }
    std::sort(bases.begin(), bases.end());
    bases.erase(std::unique(bases.begin(), bases.end()), bases.end());
    if (bases.size() >= kMinSplitScenes) {
        const auto splits = make_splits(bases, options.split_seed);
        for (auto& r : m.samples) r.split = std::string(to_string(splits.at(r.base_scene_id)));
    }
    return m;
}

struct ManifestViolation {
    std::string rule;
    std::vector<std::string> sample_ids;
    std::string path;
    std::string message;
};

/// Structural checks: unique keys, existing files (one violation per missing
/// path), clean counterparts for every noisy sample, and no base scene in two splits.
inline std::vector<ManifestViolation> verify_manifest(const DatasetManifest& m, const fs::path& root) {
    std::vector<ManifestViolation> out;
    std::map<std::tuple<std::string, int, int>, std::vector<std::string>> keys;
    std::map<std::string, int> ids;
    std::map<std::string, std::vector<std::string>> missing;
    std::map<std::string, std::set<std::string>> splits;
    std::map<std::string, bool> exists_cache;
    auto exists = [&](const std::string& rel) {
        auto it = exists_cache.find(rel);
        if (it == exists_cache.end()) it = exists_cache.emplace(rel, fs::exists(root / rel)).first;
        return it->second;
    };

    for (const auto& s : m.samples) {
        keys[{s.base_scene_id, s.tx_index, s.copy_index}].push_back(s.sample_id);
        ++ids[s.sample_id];
        if (s.scene_path.empty()) out.push_back({"missing_scene", {s.sample_id}, "", "sample has no scene path"});
        if (s.map_path.empty()) out.push_back({"missing_map", {s.sample_id}, "", "sample has no ground-truth map"});
        for (const auto* p : {&s.scene_path, &s.map_path, &s.env_encoding_path, &s.tx_encoding_path}) {
            if (!p->empty() && !exists(*p)) missing[*p].push_back(s.sample_id);
        }
        if (!s.split.empty()) splits[s.base_scene_id].insert(s.split);
    }
    for (const auto& [key, list] : keys) {
        if (list.size() > 1) {
            out.push_back({"duplicate_key", list, "",
                           "(" + std::get<0>(key) + ", tx " + std::to_string(std::get<1>(key)) + ", copy " +
                               std::to_string(std::get<2>(key)) + ") appears " + std::to_string(list.size()) +
                               " times"});
        }
    }
    for (const auto& [id, n] : ids) {
        if (n > 1) out.push_back({"duplicate_sample_id", {id}, "", "sample id appears " + std::to_string(n) + " times"});
    }
    for (const auto& [path, list] : missing) {
        out.push_back({"dangling_reference", list, path, "referenced file does not exist"});
    }
    for (const auto& s : m.samples) {
        if (s.clean()) continue;
        auto it = keys.find({s.base_scene_id, s.tx_index, -1});
        if (it == keys.end()) {
            out.push_back({"unpaired", {s.sample_id}, "", "noisy sample has no clean counterpart"});
            continue;
        }
        const SampleRecord* clean = m.find(it->second.front());
        if (clean && clean->map_path != s.map_path) {
            out.push_back({"pairing", {s.sample_id, clean->sample_id}, s.map_path,
                           "noisy sample does not reference the clean ground-truth map"});
        }
    }
    for (const auto& [base, set] : splits) {
        if (set.size() > 1) out.push_back({"split_leak", {}, "", "base scene " + base + " spans several splits"});
    }
    return out;
}

}  // namespace rmkit

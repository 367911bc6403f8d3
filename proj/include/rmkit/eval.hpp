#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "rmkit/baselines.hpp"
#include "rmkit/dataset_io.hpp"
#include "rmkit/errors.hpp"
#include "rmkit/perturbation.hpp"
#include "rmkit/rasterizer.hpp"
#include "rmkit/raytracer.hpp"
#include "rmkit/rng.hpp"
#include "rmkit/scene.hpp"
#include "rmkit/scene_io.hpp"

namespace rmkit {

/// Recursive halving keeps the summation order a function of the length only.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t h = v.size() / 2;
    return pairwise_sum(v.first(h)) + pairwise_sum(v.subspan(h));
}

inline double rmse_db(const RadioMap& pred, const RadioMap& gt) {
    if (pred.geometry.rows != gt.geometry.rows || pred.geometry.cols != gt.geometry.cols) {
        throw DomainError("radio maps differ in shape");
    }
    std::vector<double> sq;
    for (std::size_t i = 0; i < gt.values.size(); ++i) {
        if (!gt.valid[i]) continue;
        const double d = pred.values[i] - gt.values[i];
        sq.push_back(d * d);
    }
    if (sq.empty()) throw DomainError("ground truth has no valid pixels");
    return std::sqrt(pairwise_sum(sq) / static_cast<double>(sq.size()));
}

/// RMSE over an explicit pixel list.
inline double rmse_db(const RadioMap& pred, const RadioMap& gt, const std::vector<std::size_t>& pixels) {
    if (pixels.empty()) throw DomainError("no pixels to score");
    std::vector<double> sq;
    sq.reserve(pixels.size());
    for (auto i : pixels) {
        const double d = pred.values[i] - gt.values[i];
        sq.push_back(d * d);
    }
    return std::sqrt(pairwise_sum(sq) / static_cast<double>(sq.size()));
}

struct PredictRequest {
    const Scene& scene;  ///< environment as given to the predictor (clean or noisy)
    const Transmitter& tx;
    const ObservationSet& obs;
    const RadioMap& layout;  ///< lattice and valid mask of the map to predict
    const std::string& sample_id;
    double fraction = 0.0;
    int draw = 0;
};

using Predictor = std::function<RadioMap(const PredictRequest&)>;

// ---------------------------------------------------------------------------
// Predictors

inline Predictor make_fspl_predictor(bool fit_offset = true, double noise_floor_db = kNoiseFloorDb) {
    return [=](const PredictRequest& q) {
        const double a = fit_offset && !q.obs.entries.empty() ? fit_fspl_offset(q.obs, q.tx, q.layout.geometry) : 0.0;
        return fspl_predict(q.tx, q.layout, a, noise_floor_db);
    };
}

/// Falls back to the a=0 FSPL map when there are too few observations to fit.
inline Predictor make_rbf_predictor(RbfConfig config) {
    return [config](const PredictRequest& q) {
        const std::size_t need = config.kernel == RbfKernel::gaussian ? 1 : 3;
        if (q.obs.entries.size() < need) return fspl_predict(q.tx, q.layout, 0.0, config.noise_floor_db);
        return rbf_fit_predict(q.obs, config, q.layout);
    };
}

/// Ray-traced map of the given environment shifted by the FSPL-style fitted
/// constant (mean residual at the observed pixels). Traces are cached per
/// (scene content, transmitter position).
inline Predictor make_rt_predictor(TraceConfig config, bool fit_offset = true) {
    struct Cache {
        std::mutex mu;
        std::map<std::string, RadioMap> maps;
    };
    auto cache = std::make_shared<Cache>();
    return [config, fit_offset, cache](const PredictRequest& q) {
        char key_tail[128];
        std::snprintf(key_tail, sizeof key_tail, "|%.17g|%.17g|%.17g|%.17g", q.tx.position.x, q.tx.position.y,
                      q.tx.position.z, q.tx.frequency_hz);
        json env = to_json(q.scene);
        env.erase("id");
        env.erase("transmitters");
        env.erase("perturbation");
        const std::string key = env.dump() + key_tail;
        RadioMap traced;
        {
            std::lock_guard lock(cache->mu);
            auto it = cache->maps.find(key);
            if (it != cache->maps.end()) traced = it->second;
        }
        if (traced.values.empty()) {
            traced = trace_radio_map(q.scene, q.tx, config);
            std::lock_guard lock(cache->mu);
            cache->maps.emplace(key, traced);
        }
        double a = 0.0;
        if (fit_offset && !q.obs.entries.empty()) {
            for (const auto& o : q.obs.entries) a += o.path_loss_db - traced.at(o.row, o.col);
            a /= static_cast<double>(q.obs.entries.size());
        }
        RadioMap out = q.layout.layout();
        for (std::size_t i = 0; i < out.values.size(); ++i) {
            if (out.valid[i]) out.values[i] = std::clamp(traced.values[i] + a, config.noise_floor_db, 0.0);
        }
        return out;
    };
}

inline int fraction_permille(double fraction) { return static_cast<int>(std::lround(fraction * 1000.0)); }

/// File stem under which externally produced predictions and exported
/// observation sets are keyed.
inline std::string cell_stem(const std::string& sample_id, double fraction, int draw) {
    return sample_id + "__f" + std::to_string(fraction_permille(fraction)) + "__d" + std::to_string(draw);
}

/// Reads predictions written by an external model: `<dir>/<cell stem>.rmtf`,
/// falling back to `<dir>/<sample id>.rmtf`. Tensors are [rows, cols],
/// [1, rows, cols] or the radio-map layout [2, rows, cols], in dB.
inline Predictor make_file_predictor(const fs::path& dir) {
    return [dir](const PredictRequest& q) {
        fs::path p = dir / (cell_stem(q.sample_id, q.fraction, q.draw) + ".rmtf");
        if (!fs::exists(p)) p = dir / (q.sample_id + ".rmtf");
        if (!fs::exists(p)) throw Error("no prediction file for " + q.sample_id + " in " + dir.string());
        const Tensor t = read_tensor(p);
        const auto rows = static_cast<std::uint64_t>(q.layout.geometry.rows);
        const auto cols = static_cast<std::uint64_t>(q.layout.geometry.cols);
        const bool ok = (t.dims.size() == 2 && t.dims[0] == rows && t.dims[1] == cols) ||
                        (t.dims.size() == 3 && (t.dims[0] == 1 || t.dims[0] == 2) && t.dims[1] == rows &&
                         t.dims[2] == cols);
        if (!ok) throw FormatError(p.string() + ": prediction tensor does not match the map shape");
        RadioMap out = q.layout.layout();
        for (std::size_t i = 0; i < out.values.size(); ++i) {
            if (out.valid[i]) out.values[i] = t.values[i];
        }
        return out;
    };
}

struct PredictorContext {
    TraceConfig trace;
    RbfConfig rbf;
};

/// Parses fspl | grbf | tps | rt | cnn:PATH | noenv-cnn:PATH.
inline Predictor make_predictor(const std::string& name, const PredictorContext& ctx = {}) {
    if (name == "fspl") return make_fspl_predictor(true, ctx.trace.noise_floor_db);
    if (name == "grbf" || name == "tps") {
        RbfConfig c = ctx.rbf;
        c.kernel = name == "grbf" ? RbfKernel::gaussian : RbfKernel::thin_plate_spline;
        c.noise_floor_db = ctx.trace.noise_floor_db;
        return make_rbf_predictor(c);
    }
    if (name == "rt") return make_rt_predictor(ctx.trace);
    for (const std::string prefix : {"cnn:", "noenv-cnn:"}) {
        if (name.rfind(prefix, 0) == 0 && name.size() > prefix.size()) {
            return make_file_predictor(name.substr(prefix.size()));
        }
    }
    throw InvalidRange("unknown predictor '" + name + "'");
}

// ---------------------------------------------------------------------------
// Experiments

enum class InputCondition { clean, noisy };

inline std::string_view to_string(InputCondition c) { return c == InputCondition::clean ? "clean" : "noisy"; }

inline InputCondition input_condition_from_string(std::string_view s) {
    if (s == "clean") return InputCondition::clean;
    if (s == "noisy") return InputCondition::noisy;
    throw InvalidRange("unknown input condition '" + std::string(s) + "'");
}

struct EvalConfig {
    std::vector<double> fractions{0.0, 0.01, 0.02, 0.04, 0.08, 0.16};
    int draws_per_sample = 10;
    std::optional<Split> split = Split::test;  ///< unset evaluates every sample
    InputCondition input_condition = InputCondition::clean;
    std::vector<double> severity_grid{0.25, 0.5, 1.0};
    std::vector<PerturbTargets> targets_grid{{true, false, false}, {false, true, false}, {true, true, false}};
    std::uint64_t master_seed = 2024;
    int noisy_copy_index = 0;
    int region_draws = 500;
};

/// Experiment configs keep fractions within the training range [0, 0.2].
inline void check_eval_config(const EvalConfig& c) {
    for (double f : c.fractions) {
        if (!(f >= 0.0 && f <= 0.2)) throw InvalidRange("fractions must lie in [0, 0.2]");
    }
    if (c.draws_per_sample < 1) throw InvalidRange("draws_per_sample must be >= 1");
}

namespace detail {

/// The evaluation loops themselves accept any fraction in [0, 1].
inline void check_cells(const EvalConfig& c) {
    for (double f : c.fractions) {
        if (!(f >= 0.0 && f <= 1.0)) throw InvalidRange("fractions must lie in [0, 1]");
    }
    if (c.draws_per_sample < 1) throw InvalidRange("draws_per_sample must be >= 1");
}

}  // namespace detail

struct EvalSample {
    std::string sample_id;  ///< key for observation streams; the clean sample id
    std::string base_scene_id;
    int tx_index = 0;
    int copy_index = -1;
    Scene scene;  ///< predictor input
    RadioMap ground_truth;
};

/// Observation stream shared by every predictor for a (sample, draw) cell.
inline std::uint64_t observation_seed(std::uint64_t master, const std::string& sample_id, int draw) {
    return derive_seed(master, std::string_view("obs"), std::string_view(sample_id), draw);
}

inline ObservationSet cell_observations(const EvalSample& s, double fraction, int draw, std::uint64_t master) {
    Rng rng(observation_seed(master, s.sample_id, draw));
    return draw_observations(s.ground_truth, fraction, rng);
}

/// Loads evaluation samples strictly through the manifest. Noisy inputs use
/// copy `noisy_copy_index` paired with the clean map of the base scene.
inline std::vector<EvalSample> load_eval_samples(const DatasetManifest& m, const fs::path& root,
                                                 const EvalConfig& config) {
    std::vector<EvalSample> out;
    std::map<std::string, Scene> scenes;
    std::map<std::string, RadioMap> maps;
    const int want_copy = config.input_condition == InputCondition::clean ? -1 : config.noisy_copy_index;
    for (const auto& r : m.samples) {
        if (r.copy_index != want_copy) continue;
        if (config.split) {
            if (r.split.empty()) throw ManifestError("sample " + r.sample_id + " has no split assignment");
            if (split_from_string(r.split) != *config.split) continue;
        }
        if (r.map_path.empty()) throw ManifestError("sample " + r.sample_id + " has no ground-truth map");
        EvalSample s;
        s.sample_id = sample_id(r.base_scene_id, r.tx_index);
        s.base_scene_id = r.base_scene_id;
        s.tx_index = r.tx_index;
        s.copy_index = r.copy_index;
        auto sit = scenes.find(r.scene_path);
        if (sit == scenes.end()) sit = scenes.emplace(r.scene_path, read_scene(root / r.scene_path)).first;
        s.scene = sit->second;
        auto mit = maps.find(r.map_path);
        if (mit == maps.end()) mit = maps.emplace(r.map_path, read_radio_map(root / r.map_path)).first;
        s.ground_truth = mit->second;
        if (s.tx_index < 0 || static_cast<std::size_t>(s.tx_index) >= s.scene.transmitters.size()) {
            throw ManifestError("sample " + r.sample_id + " references a missing transmitter");
        }
        out.push_back(std::move(s));
    }
    return out;
}

struct CellStats {
    double mean = 0.0;
    double std = 0.0;
    std::size_t n = 0;
    std::size_t failures = 0;
};

inline CellStats summarize(const std::vector<double>& v, std::size_t failures) {
    CellStats s;
    s.n = v.size();
    s.failures = failures;
    if (v.empty()) {
        s.mean = std::numeric_limits<double>::quiet_NaN();
        s.std = std::numeric_limits<double>::quiet_NaN();
        return s;
    }
    s.mean = pairwise_sum(v) / static_cast<double>(v.size());
    std::vector<double> dev;
    dev.reserve(v.size());
    for (double x : v) dev.push_back((x - s.mean) * (x - s.mean));
    s.std = std::sqrt(pairwise_sum(dev) / static_cast<double>(v.size()));
    return s;
}

struct CurveRow {
    double fraction = 0.0;
    CellStats stats;
};

struct CurveTable {
    std::string predictor;
    std::vector<CurveRow> rows;
};

/// One scored cell; exceptions from the predictor count as failures.
inline std::optional<double> score_cell(const Predictor& predictor, const EvalSample& s, const Scene& input,
                                        double fraction, int draw, std::uint64_t master) {
    const ObservationSet obs = cell_observations(s, fraction, draw, master);
    const Transmitter& tx = input.transmitters.at(static_cast<std::size_t>(s.tx_index));
    try {
        const RadioMap pred = predictor({input, tx, obs, s.ground_truth, s.sample_id, fraction, draw});
        return rmse_db(pred, s.ground_truth);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

inline CurveTable curve_eval(const Predictor& predictor, const std::vector<EvalSample>& samples,
                             const EvalConfig& config, std::string name = {}) {
    detail::check_cells(config);
    CurveTable t;
    t.predictor = std::move(name);
    for (double f : config.fractions) {
        std::vector<double> v;
        std::size_t failures = 0;
        for (const auto& s : samples) {
            for (int d = 0; d < config.draws_per_sample; ++d) {
                if (auto r = score_cell(predictor, s, s.scene, f, d, config.master_seed)) {
                    v.push_back(*r);
                } else {
                    ++failures;
                }
            }
        }
        t.rows.push_back({f, summarize(v, failures)});
    }
    return t;
}

struct SweepRow {
    std::string targets;
    double severity = 0.0;
    double fraction = 0.0;
    CellStats stats;
};

struct SweepTable {
    std::string predictor;
    std::vector<SweepRow> rows;
};

inline std::string targets_label(const PerturbTargets& t) {
    std::string s;
    for (const auto& n : t.names()) s += (s.empty() ? "" : "+") + n;
    return s.empty() ? "none" : s;
}

/// RMSE over (targets x severity x fraction): the predictor sees a regenerated
/// noisy copy of each clean scene, scored against the clean traced map.
inline SweepTable sensitivity_sweep(const Predictor& predictor, const std::vector<EvalSample>& samples,
                                    const EvalConfig& config, const PerturbConfig& base = {},
                                    std::string name = {}) {
    detail::check_cells(config);
    for (const auto& s : samples) {
        if (s.copy_index >= 0 || s.scene.perturbation) {
            throw ManifestError("sensitivity sweep needs clean samples; " + s.sample_id + " is a noisy copy");
        }
    }
    SweepTable t;
    t.predictor = std::move(name);
    for (const auto& targets : config.targets_grid) {
        for (double severity : config.severity_grid) {
            PerturbConfig pc = base;
            pc.mean_offset_m = severity;
            pc.targets = targets;
            std::map<std::string, Scene> noisy;
            for (const auto& s : samples) {
                if (!noisy.count(s.scene.id)) {
                    noisy.emplace(s.scene.id, perturb_scene(s.scene, pc, config.noisy_copy_index).scene);
                }
            }
            for (double f : config.fractions) {
                std::vector<double> v;
                std::size_t failures = 0;
                for (const auto& s : samples) {
                    const Scene& input = noisy.at(s.scene.id);
                    for (int d = 0; d < config.draws_per_sample; ++d) {
                        if (auto r = score_cell(predictor, s, input, f, d, config.master_seed)) {
                            v.push_back(*r);
                        } else {
                            ++failures;
                        }
                    }
                }
                t.rows.push_back({targets_label(targets), severity, f, summarize(v, failures)});
            }
        }
    }
    return t;
}

struct Region {
    std::string label;
    bool scored = true;  ///< target region: its pixels enter the RMSE
    std::vector<std::pair<int, int>> pixels;
};

struct RegionReport {
    double mean_rmse = 0.0;
    std::vector<double> per_draw;
    std::size_t failures = 0;
};

/// Each draw takes one observation pixel uniformly from every region and scores
/// the remaining pixels of the scored regions.
inline RegionReport region_protocol_eval(const Predictor& predictor, const Scene& scene, const Transmitter& tx,
                                         const RadioMap& gt, const std::vector<Region>& regions, int n_draws = 500,
                                         std::uint64_t master_seed = 2024) {
    if (regions.empty()) throw ProtocolError("no regions");
    if (n_draws < 1) throw ProtocolError("n_draws must be >= 1");
    for (const auto& r : regions) {
        if (r.pixels.empty()) throw ProtocolError("region '" + r.label + "' is empty");
        for (auto [row, col] : r.pixels) {
            if (row < 0 || row >= gt.geometry.rows || col < 0 || col >= gt.geometry.cols || !gt.is_valid(row, col)) {
                throw ProtocolError("region '" + r.label + "' contains an invalid pixel");
            }
        }
    }
    RegionReport rep;
    const std::string id = gt.id.empty() ? scene.id : gt.id;
    for (int d = 0; d < n_draws; ++d) {
        Rng rng(derive_seed(master_seed, std::string_view("region"), std::string_view(id), d));
        ObservationSet obs;
        obs.source_map_id = gt.id;
        std::set<std::size_t> taken;
        for (const auto& r : regions) {
            const auto k = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(r.pixels.size()) - 1));
            const auto [row, col] = r.pixels[k];
            if (taken.insert(gt.geometry.index(row, col)).second) obs.entries.push_back({row, col, gt.at(row, col)});
        }
        std::vector<std::size_t> scored;
        std::set<std::size_t> seen;
        for (const auto& r : regions) {
            if (!r.scored) continue;
            for (auto [row, col] : r.pixels) {
                const auto i = gt.geometry.index(row, col);
                if (!taken.count(i) && seen.insert(i).second) scored.push_back(i);
            }
        }
        if (scored.empty()) throw ProtocolError("no target pixels remain after drawing observations");
        try {
            const RadioMap pred = predictor({scene, tx, obs, gt, id, 0.0, d});
            rep.per_draw.push_back(rmse_db(pred, gt, scored));
        } catch (const ProtocolError&) {
            throw;
        } catch (const std::exception&) {
            ++rep.failures;
        }
    }
    rep.mean_rmse = rep.per_draw.empty() ? std::numeric_limits<double>::quiet_NaN()
                                         : pairwise_sum(rep.per_draw) / static_cast<double>(rep.per_draw.size());
    return rep;
}

// ---------------------------------------------------------------------------
// Reports

inline json to_json(const CellStats& s) {
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    return {{"mean_rmse_db", num(s.mean)}, {"std_rmse_db", num(s.std)}, {"n", s.n}, {"failures", s.failures}};
}

inline json to_json(const CurveTable& t) {
    json rows = json::array();
    for (const auto& r : t.rows) {
        json j = to_json(r.stats);
        j["fraction"] = r.fraction;
        rows.push_back(j);
    }
    return {{"predictor", t.predictor}, {"kind", "curve"}, {"rows", rows}};
}

inline json to_json(const SweepTable& t) {
    json rows = json::array();
    for (const auto& r : t.rows) {
        json j = to_json(r.stats);
        j["targets"] = r.targets;
        j["severity_m"] = r.severity;
        j["fraction"] = r.fraction;
        rows.push_back(j);
    }
    return {{"predictor", t.predictor}, {"kind", "sweep"}, {"rows", rows}};
}

inline std::string to_csv(const CurveTable& t) {
    std::string out = "predictor,fraction,mean_rmse_db,std_rmse_db,n,failures\n";
    char buf[256];
    for (const auto& r : t.rows) {
        std::snprintf(buf, sizeof buf, "%s,%.6g,%.6f,%.6f,%zu,%zu\n", t.predictor.c_str(), r.fraction, r.stats.mean,
                      r.stats.std, r.stats.n, r.stats.failures);
        out += buf;
    }
    return out;
}

inline std::string to_csv(const SweepTable& t) {
    std::string out = "predictor,targets,severity_m,fraction,mean_rmse_db,std_rmse_db,n,failures\n";
    char buf[256];
    for (const auto& r : t.rows) {
        std::snprintf(buf, sizeof buf, "%s,%s,%.6g,%.6g,%.6f,%.6f,%zu,%zu\n", t.predictor.c_str(), r.targets.c_str(),
                      r.severity, r.fraction, r.stats.mean, r.stats.std, r.stats.n, r.stats.failures);
        out += buf;
    }
    return out;
}

}  // namespace rmkit

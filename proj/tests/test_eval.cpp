#include <gtest/gtest.h>

#include <filesystem>

#include "rmkit/eval.hpp"
#include "rmkit/pipeline.hpp"
#include "rmkit/scene_gen.hpp"
#include "test_support.hpp"

using namespace rmkit;
using namespace rmkit::fixtures;

namespace {

EvalSample make_sample(const Scene& s, int tx, const TraceConfig& cfg = {}) {
    EvalSample e;
    e.sample_id = sample_id(s.id, tx);
    e.base_scene_id = s.id;
    e.tx_index = tx;
    e.scene = s;
    e.ground_truth = trace_radio_map(s, s.transmitters[static_cast<std::size_t>(tx)], cfg);
    e.ground_truth.id = e.sample_id;
    return e;
}

std::vector<EvalSample> generated_samples(int scenes, int first = 0) {
    const GenConfig gen;
    std::vector<EvalSample> out;
    for (int i = 0; i < scenes; ++i) {
        const Scene s = generate_scene(gen, first + i);
        for (int t = 0; t < static_cast<int>(s.transmitters.size()); ++t) out.push_back(make_sample(s, t));
    }
    return out;
}

// Rooms without walls or furniture: the tracer reduces to Friis.
std::vector<EvalSample> empty_room_samples(int n) {
    Rng rng(55);
    std::vector<EvalSample> out;
    for (int i = 0; i < n; ++i) {
        const double w = rng.uniform(4.0, 9.6), d = rng.uniform(4.0, 9.6);
        Scene s = open_room({{0.0, 0.0}, {w, d}});
        s.id = "empty" + std::to_string(i);
        const Vec2 p = point_in(rng, s.bounds, 0.3);
        s.transmitters.push_back({{p.x, p.y, rng.uniform(1.0, 2.2)}});
        out.push_back(make_sample(s, 0));
    }
    return out;
}

RadioMap constant_map(double v, int valid) {
    RadioMap m = RadioMap::blank(MapGeometry{}, "c");
    for (int i = 0; i < valid; ++i) {
        m.valid[static_cast<std::size_t>(i)] = 1;
        m.values[static_cast<std::size_t>(i)] = v;
    }
    return m;
}

const Predictor kPerfect = [](const PredictRequest& q) { return q.layout; };

}  // namespace

TEST(RmseDb, Examples) {
    const RadioMap gt = constant_map(-50.0, 100);
    EXPECT_EQ(rmse_db(gt, gt), 0.0);
    EXPECT_NEAR(rmse_db(constant_map(-48.0, 100), gt), 2.0, 1e-12);
    RadioMap one_off = gt;
    one_off.values[37] += 10.0;
    EXPECT_NEAR(rmse_db(one_off, gt), 1.0, 1e-12);
}

TEST(RmseDb, IgnoresInvalidPixelsAndIsSymmetric) {
    RadioMap a = constant_map(-50.0, 100);
    RadioMap b = a;
    b.values[500] = -10.0;  // outside the valid set
    EXPECT_EQ(rmse_db(a, b), 0.0);
    Rng rng(3);
    for (std::size_t i = 0; i < 100; ++i) b.values[i] = rng.uniform(-70, -30);
    EXPECT_EQ(rmse_db(a, b), rmse_db(b, a));
    EXPECT_GT(rmse_db(a, b), 0.0);
}

TEST(RmseDb, NoValidPixelsIsDomainError) {
    const RadioMap m = RadioMap::blank(MapGeometry{});
    EXPECT_THROW(rmse_db(m, m), DomainError);
}

TEST(CurveEval, PerfectPredictorScoresZero) {
    const auto samples = generated_samples(2);
    EvalConfig cfg;
    cfg.draws_per_sample = 3;
    const CurveTable t = curve_eval(kPerfect, samples, cfg, "gt");
    ASSERT_EQ(t.rows.size(), cfg.fractions.size());
    for (const auto& r : t.rows) {
        EXPECT_EQ(r.stats.mean, 0.0);
        EXPECT_EQ(r.stats.n, samples.size() * 3);
        EXPECT_EQ(r.stats.failures, 0u);
    }
}

TEST(CurveEval, GaussianRbfWithEveryPixelObservedIsExact) {
    const auto samples = generated_samples(2);
    EvalConfig cfg;
    cfg.fractions = {1.0};
    cfg.draws_per_sample = 1;
    const CurveTable t = curve_eval(make_predictor("grbf"), samples, cfg);
    EXPECT_LT(t.rows[0].stats.mean, 1e-6);
    EXPECT_THROW(check_eval_config(cfg), InvalidRange);
}

TEST(CurveEval, FittedFsplOnEmptyRoomsIsNearExact) {
    const auto samples = empty_room_samples(10);
    EvalConfig cfg;
    cfg.draws_per_sample = 3;
    const CurveTable t = curve_eval(make_predictor("fspl"), samples, cfg);
    for (const auto& r : t.rows) {
        EXPECT_LE(r.stats.mean, 0.1) << r.fraction;
        EXPECT_LT(r.stats.mean, 1e-9) << r.fraction;
    }
}

TEST(CurveEval, FailuresAreCountedAndExcluded) {
    const auto samples = generated_samples(1);
    const Predictor flaky = [](const PredictRequest& q) {
        if (q.tx.position.x < 4.8) throw std::runtime_error("model crashed");
        return q.layout;
    };
    std::size_t west = 0;
    for (const auto& s : samples) west += s.scene.transmitters[static_cast<std::size_t>(s.tx_index)].position.x < 4.8;
    EvalConfig cfg;
    cfg.fractions = {0.02};
    cfg.draws_per_sample = 2;
    const CurveTable t = curve_eval(flaky, samples, cfg);
    EXPECT_EQ(t.rows[0].stats.failures, 2 * west);
    EXPECT_EQ(t.rows[0].stats.n, 2 * (samples.size() - west));
}

TEST(CurveEval, PredictorsSeeIdenticalObservationSets) {
    const auto samples = generated_samples(1);
    std::vector<ObservationSet> seen_a, seen_b;
    auto recorder = [](std::vector<ObservationSet>& log) {
        return [&log](const PredictRequest& q) {
            log.push_back(q.obs);
            return q.layout;
        };
    };
    EvalConfig cfg;
    cfg.draws_per_sample = 2;
    curve_eval(recorder(seen_a), samples, cfg);
    curve_eval(recorder(seen_b), samples, cfg);
    ASSERT_EQ(seen_a, seen_b);
    // Within a cell, larger fractions extend the same draw.
    const auto& s = samples[0];
    const auto small = cell_observations(s, 0.02, 1, cfg.master_seed);
    const auto large = cell_observations(s, 0.08, 1, cfg.master_seed);
    ASSERT_LT(small.entries.size(), large.entries.size());
    for (std::size_t i = 0; i < small.entries.size(); ++i) EXPECT_EQ(small.entries[i], large.entries[i]);
    EXPECT_NE(cell_observations(s, 0.08, 2, cfg.master_seed), large);
}

TEST(CurveEval, ReportsAreDeterministic) {
    const auto samples = generated_samples(1);
    EvalConfig cfg;
    cfg.draws_per_sample = 2;
    const auto a = to_json(curve_eval(make_predictor("tps"), samples, cfg, "tps")).dump();
    const auto b = to_json(curve_eval(make_predictor("tps"), samples, cfg, "tps")).dump();
    EXPECT_EQ(a, b);
}

TEST(SensitivitySweep, ZeroSeverityEqualsCleanCurve) {
    const auto samples = generated_samples(1);
    EvalConfig cfg;
    cfg.fractions = {0.0, 0.04};
    cfg.draws_per_sample = 2;
    cfg.severity_grid = {0.0};
    PerturbConfig base;
    base.targets.materials = false;
    const Predictor rt = make_predictor("rt");
    const CurveTable clean = curve_eval(rt, samples, cfg);
    const SweepTable sweep = sensitivity_sweep(rt, samples, cfg, base);
    ASSERT_EQ(sweep.rows.size(), 3u * 2u);
    for (const auto& row : sweep.rows) {
        const auto& ref = row.fraction == 0.0 ? clean.rows[0] : clean.rows[1];
        EXPECT_EQ(row.stats.mean, ref.stats.mean) << row.targets;
        EXPECT_EQ(row.stats.n, ref.stats.n);
    }
}

TEST(SensitivitySweep, RejectsNoisyInputs) {
    auto samples = generated_samples(1);
    samples[0].copy_index = 0;
    EXPECT_THROW(sensitivity_sweep(kPerfect, samples, EvalConfig{}), ManifestError);
}

TEST(SensitivitySweep, CompoundedNoiseHurtsAtLeastAsMuch) {
    // Interpolation-free predictors with no observations, over 100 samples.
    const auto samples = generated_samples(20, 500);
    ASSERT_EQ(samples.size(), 100u);
    EvalConfig cfg;
    cfg.fractions = {0.0};
    cfg.draws_per_sample = 1;
    cfg.severity_grid = {0.5};
    TraceConfig trace;
    for (const auto& [name, pred] : {std::pair{"rt", make_rt_predictor(trace, false)},
                                     std::pair{"fspl", make_fspl_predictor(false)}}) {
        const SweepTable t = sensitivity_sweep(pred, samples, cfg, {}, name);
        std::map<std::string, double> by;
        for (const auto& r : t.rows) by[r.targets] = r.stats.mean;
        RecordProperty(std::string(name) + "_tx", std::to_string(by["tx"]));
        RecordProperty(std::string(name) + "_objects", std::to_string(by["objects"]));
        RecordProperty(std::string(name) + "_both", std::to_string(by["tx+objects"]));
        EXPECT_GE(by["tx+objects"], std::max(by["tx"], by["objects"])) << name;
    }
}

TEST(RegionProtocol, GroundTruthPredictorScoresZeroAndIsDeterministic) {
    const Scene s = generate_scene(GenConfig{}, 4);
    const auto sample = make_sample(s, 0);
    std::vector<Region> regions;
    std::vector<std::pair<int, int>> valid;
    for (int r = 0; r < 32; ++r) {
        for (int c = 0; c < 32; ++c) {
            if (sample.ground_truth.is_valid(r, c)) valid.push_back({r, c});
        }
    }
    regions.push_back({"obs_a", false, {valid.begin(), valid.begin() + 20}});
    regions.push_back({"obs_b", false, {valid.end() - 20, valid.end()}});
    regions.push_back({"target", true, {valid.begin() + 100, valid.begin() + 160}});
    const auto rep = region_protocol_eval(kPerfect, s, s.transmitters[0], sample.ground_truth, regions);
    EXPECT_EQ(rep.per_draw.size(), 500u);
    EXPECT_EQ(rep.mean_rmse, 0.0);

    const Predictor fspl = make_predictor("fspl");
    const auto r1 = region_protocol_eval(fspl, s, s.transmitters[0], sample.ground_truth, regions);
    const auto r2 = region_protocol_eval(fspl, s, s.transmitters[0], sample.ground_truth, regions);
    EXPECT_EQ(r1.per_draw, r2.per_draw);
    EXPECT_EQ(r1.mean_rmse, r2.mean_rmse);
    EXPECT_GT(r1.mean_rmse, 0.0);
}

TEST(RegionProtocol, EmptyOrInvalidRegionsAreProtocolErrors) {
    Scene s = walled_room({{0.5, 0.5}, {6, 6}});
    s.transmitters.push_back({{3, 3, 1.5}});
    const auto sample = make_sample(s, 0);
    EXPECT_THROW(region_protocol_eval(kPerfect, s, s.transmitters[0], sample.ground_truth,
                                      {{"obs", false, {{5, 5}}}, {"target", true, {}}}),
                 ProtocolError);
    EXPECT_THROW(region_protocol_eval(kPerfect, s, s.transmitters[0], sample.ground_truth,
                                      {{"obs", false, {{5, 5}}}, {"target", true, {{31, 31}}}}),
                 ProtocolError);
    EXPECT_THROW(region_protocol_eval(kPerfect, s, s.transmitters[0], sample.ground_truth,
                                      {{"target", true, {{5, 5}}}}),
                 ProtocolError);
}

TEST(RegionProtocol, KnowingTheBlockingObjectHelps) {
    // Room with a metal cabinet added after "training"; gt is traced with it.
    Scene without = walled_room({{0.3, 0.3}, {9.3, 6.3}});
    without.id = "region_room";
    without.transmitters.push_back({{1.5, 3.3, 1.5}});
    Scene with = without;
    with.furniture.push_back(box(20, {4.0, 2.4}, {4.6, 4.2}, 0.0, 2.2, metal()));
    const RadioMap gt = trace_radio_map(with, with.transmitters[0], {});

    auto block = [](int r0, int r1, int c0, int c1) {
        std::vector<std::pair<int, int>> px;
        for (int r = r0; r <= r1; ++r) {
            for (int c = c0; c <= c1; ++c) px.push_back({r, c});
        }
        return px;
    };
    const std::vector<Region> regions{{"red_near", false, block(9, 12, 4, 7)},
                                      {"red_far", false, block(16, 18, 24, 27)},
                                      {"yellow_shadow", true, block(8, 13, 16, 22)},
                                      {"yellow_side", true, block(2, 4, 16, 22)}};
    const Predictor rt = make_predictor("rt");
    const Predictor fspl = make_predictor("fspl");
    const auto r_with = region_protocol_eval(rt, with, with.transmitters[0], gt, regions);
    const auto r_without = region_protocol_eval(rt, without, without.transmitters[0], gt, regions);
    const auto r_fspl = region_protocol_eval(fspl, with, with.transmitters[0], gt, regions);
    RecordProperty("with", std::to_string(r_with.mean_rmse));
    RecordProperty("without", std::to_string(r_without.mean_rmse));
    RecordProperty("fspl", std::to_string(r_fspl.mean_rmse));
    EXPECT_LT(r_with.mean_rmse, r_without.mean_rmse);
    EXPECT_LT(r_without.mean_rmse, r_fspl.mean_rmse);
}

TEST(MakeSplits, FullScaleProportions) {
    std::vector<std::string> ids;
    for (int i = 0; i < 3601; ++i) ids.push_back("scene" + std::to_string(i));
    const auto a = make_splits(ids, 7);
    const auto b = make_splits(ids, 7);
    EXPECT_EQ(a, b);
    std::map<Split, int> count;
    for (const auto& [id, s] : a) ++count[s];
    EXPECT_EQ(a.size(), 3601u);
    EXPECT_TRUE(count[Split::test] == 360 || count[Split::test] == 361);
    EXPECT_TRUE(count[Split::val] == 360 || count[Split::val] == 361);
    EXPECT_EQ(count[Split::train] + count[Split::val] + count[Split::test], 3601);
    EXPECT_NE(make_splits(ids, 8), a);
}

TEST(MakeSplits, TooFewScenes) {
    EXPECT_THROW(make_splits({"a", "b", "c"}, 1), SplitError);
    std::vector<std::string> ten;
    for (int i = 0; i < 10; ++i) ten.push_back("s" + std::to_string(i));
    const auto s = make_splits(ten, 1);
    std::map<Split, int> count;
    for (const auto& [id, v] : s) ++count[v];
    EXPECT_EQ(count[Split::test], 1);
    EXPECT_EQ(count[Split::val], 1);
    EXPECT_EQ(count[Split::train], 8);
}

TEST(FilePredictor, ReadsCellAndSampleFiles) {
    const auto samples = generated_samples(1);
    const auto dir = std::filesystem::temp_directory_path() / "rmkit_cnn_preds";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    EvalConfig cfg;
    cfg.fractions = {0.0, 0.04};
    cfg.draws_per_sample = 2;
    for (const auto& s : samples) {
        std::vector<float> v(s.ground_truth.values.begin(), s.ground_truth.values.end());
        for (auto& x : v) x += 1.0f;
        const std::uint64_t dims2[2] = {32, 32};
        write_tensor(dir / (s.sample_id + ".rmtf"), dims2, v);
        for (auto& x : v) x += 1.0f;
        const std::uint64_t dims3[3] = {1, 32, 32};
        write_tensor(dir / (cell_stem(s.sample_id, 0.04, 1) + ".rmtf"), dims3, v);
    }
    const CurveTable t = curve_eval(make_predictor("cnn:" + dir.string()), samples, cfg);
    EXPECT_NEAR(t.rows[0].stats.mean, 1.0, 1e-5);
    EXPECT_NEAR(t.rows[1].stats.mean, 1.5, 1e-5);  // half the cells use the +2 dB file
    EXPECT_EQ(cell_stem("s__tx1", 0.04, 3), "s__tx1__f40__d3");

    const std::uint64_t bad[2] = {16, 16};
    write_tensor(dir / (samples[0].sample_id + ".rmtf"), bad, std::vector<float>(256, -50.0f));
    const CurveTable broken = curve_eval(make_predictor("noenv-cnn:" + dir.string()), samples, cfg);
    EXPECT_EQ(broken.rows[0].stats.failures, 2u);
    std::filesystem::remove_all(dir);
}

TEST(MakePredictor, UnknownNamesAreRejected) {
    EXPECT_THROW(make_predictor("knn"), InvalidRange);
    EXPECT_THROW(make_predictor("cnn:"), InvalidRange);
    EXPECT_NO_THROW(make_predictor("grbf"));
}

TEST(EvalConfig, ExperimentFractionsStayInTrainingRange) {
    EvalConfig cfg;
    EXPECT_NO_THROW(check_eval_config(cfg));
    cfg.fractions = {0.3};
    EXPECT_THROW(check_eval_config(cfg), InvalidRange);
    cfg = {};
    cfg.draws_per_sample = 0;
    EXPECT_THROW(check_eval_config(cfg), InvalidRange);
    EXPECT_THROW(curve_eval(kPerfect, {}, cfg), InvalidRange);
}

TEST(Reports, JsonAndCsvShapes) {
    CurveTable t{"fspl", {{0.01, {1.5, 0.25, 10, 1}}, {0.02, summarize({}, 3)}}};
    const json j = to_json(t);
    EXPECT_EQ(j.at("kind"), "curve");
    EXPECT_EQ(j.at("rows")[0].at("mean_rmse_db"), 1.5);
    EXPECT_TRUE(j.at("rows")[1].at("mean_rmse_db").is_null());
    EXPECT_EQ(j.at("rows")[1].at("failures"), 3);
    const std::string csv = to_csv(t);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "predictor,fraction,mean_rmse_db,std_rmse_db,n,failures");
    EXPECT_NE(csv.find("fspl,0.01,1.500000,0.250000,10,1"), std::string::npos);
}

TEST(Summaries, PairwiseMeanAndStd) {
    const CellStats s = summarize({1.0, 2.0, 3.0, 4.0}, 0);
    EXPECT_DOUBLE_EQ(s.mean, 2.5);
    EXPECT_DOUBLE_EQ(s.std, std::sqrt(1.25));
    std::vector<double> many(1001, 0.1);
    EXPECT_NEAR(pairwise_sum(many), 100.1, 1e-12);
}

TEST(LoadEvalSamples, FollowsManifestSplitsAndPairing) {
    const auto root = std::filesystem::temp_directory_path() / "rmkit_eval_ds";
    std::filesystem::remove_all(root);
    PipelineConfig pc;
    pc.scenes = 10;
    pc.perturb.copies_per_scene = 2;
    pc.run_encode = false;
    pc.trace.threads = 1;
    const auto rep = run_pipeline(root, pc);
    ASSERT_TRUE(rep.violations.empty());
    const DatasetManifest m = read_manifest(root);

    EvalConfig cfg;
    const auto clean = load_eval_samples(m, root, cfg);
    ASSERT_EQ(clean.size(), 5u);  // one test scene
    for (const auto& s : clean) {
        EXPECT_EQ(s.copy_index, -1);
        EXPECT_FALSE(s.scene.perturbation.has_value());
    }
    cfg.input_condition = InputCondition::noisy;
    cfg.noisy_copy_index = 1;
    const auto noisy = load_eval_samples(m, root, cfg);
    ASSERT_EQ(noisy.size(), 5u);
    for (std::size_t i = 0; i < noisy.size(); ++i) {
        EXPECT_EQ(noisy[i].copy_index, 1);
        EXPECT_EQ(noisy[i].sample_id, clean[i].sample_id);
        EXPECT_EQ(noisy[i].ground_truth.values, clean[i].ground_truth.values);
        EXPECT_NE(noisy[i].scene, clean[i].scene);
    }
    cfg = {};
    cfg.split.reset();
    EXPECT_EQ(load_eval_samples(m, root, cfg).size(), 50u);

    DatasetManifest unsplit = m;
    for (auto& r : unsplit.samples) r.split.clear();
    EXPECT_THROW(load_eval_samples(unsplit, root, EvalConfig{}), ManifestError);
    std::filesystem::remove_all(root);
}

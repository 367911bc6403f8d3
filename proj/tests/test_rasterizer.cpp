#include <gtest/gtest.h>

#include <set>

#include "rmkit/rasterizer.hpp"
#include "rmkit/raytracer.hpp"
#include "rmkit/scene_gen.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace rmkit;
using namespace rmkit::fixtures;

namespace {

constexpr double kPx = 9.6 / 256.0;

Scene rotate_scene(const Scene& s) {
    auto rot = [](Vec2 p) { return Vec2{9.6 - p.y, p.x}; };
    Scene out = s;
    out.bounds = {{9.6 - s.bounds.max.y, s.bounds.min.x}, {9.6 - s.bounds.min.y, s.bounds.max.x}};
    for (auto* list : {&out.walls, &out.furniture}) {
        for (auto& o : *list) {
            for (auto& v : o.footprint) v = rot(v);
        }
    }
    for (auto& t : out.transmitters) {
        const Vec2 p = rot(xy(t.position));
        t.position = {p.x, p.y, t.position.z};
    }
    return out;
}

RadioMap half_room_map() {
    Scene s = open_room({{0.0, 0.0}, {4.8, 9.6}});
    RadioMap m = RadioMap::blank(MapGeometry{}, "m");
    m.valid = room_mask(s, m.geometry);
    for (std::size_t i = 0; i < m.values.size(); ++i) {
        if (m.valid[i]) m.values[i] = -30.0 - static_cast<double>(i % 41);
    }
    return m;
}

}  // namespace

TEST(RasterizeSlices, EmptyInteriorHasOnlyWalls) {
    const Scene s = walled_room({{1.0, 1.0}, {8.0, 7.0}});
    EncodeConfig cfg;
    const EnvRaster e = rasterize_slices(s, cfg);
    ASSERT_EQ(e.raster.channels, 30);
    ASSERT_EQ(e.channels.size(), 30u);
    for (int r = 0; r < 256; ++r) {
        for (int c = 0; c < 256; ++c) {
            const Vec2 p{(c + 0.5) * kPx, (r + 0.5) * kPx};
            bool in_wall = false;
            for (const auto& w : s.walls) in_wall |= point_in_polygon(p, w.footprint);
            ASSERT_EQ(e.raster.at(5, r, c), in_wall ? 1.0f : 0.0f);
        }
    }
}

TEST(RasterizeSlices, MetalBoxOccupiesSameSetBelowItsTop) {
    Scene s = open_room();
    s.furniture.push_back(box(10, {3.01, 4.02}, {4.01, 5.02}, 0.0, 2.0, metal()));
    EncodeConfig cfg;
    cfg.encoding = Encoding::classes;
    const EnvRaster e = rasterize_slices(s, cfg);
    std::set<std::pair<int, int>> expected;
    for (int r = 0; r < 256; ++r) {
        for (int c = 0; c < 256; ++c) {
            const double x = (c + 0.5) * kPx, y = (r + 0.5) * kPx;
            if (x > 3.01 && x < 4.01 && y > 4.02 && y < 5.02) expected.insert({r, c});
        }
    }
    ASSERT_FALSE(expected.empty());
    for (int k = 0; k < 30; ++k) {
        std::set<std::pair<int, int>> got;
        for (int r = 0; r < 256; ++r) {
            for (int c = 0; c < 256; ++c) {
                const float v = e.raster.at(k, r, c);
                if (v != 0.0f) {
                    ASSERT_EQ(v, 2.0f);
                    got.insert({r, c});
                }
            }
        }
        if (k < 20) {
            ASSERT_EQ(got, expected) << "slice " << k;
        } else {
            ASSERT_TRUE(got.empty()) << "slice " << k;
        }
    }
}

TEST(RasterizeSlices, ThinTableFallsBetweenSlices) {
    Scene s = open_room();
    s.furniture.push_back(box(10, {2, 2}, {3, 3}, 0.7, 0.75, wood(), ObjectKind::table));
    const EnvRaster e = rasterize_slices(s, {});
    EXPECT_TRUE(std::all_of(e.raster.data.begin(), e.raster.data.end(), [](float v) { return v == 0.0f; }));
    const auto zs = slice_heights(s, {});
    EXPECT_NEAR(zs[7], 0.75, 1e-15);
}

TEST(RasterizeSlices, SliceHeightsFollowStep) {
    const Scene s = open_room({{0, 0}, {5, 5}}, 2.8);
    const auto zs = slice_heights(s, {});
    ASSERT_EQ(zs.size(), 28u);
    EXPECT_NEAR(zs.front(), 0.05, 1e-15);
    EXPECT_NEAR(zs.back(), 2.75, 1e-12);
    EncodeConfig fixed;
    fixed.slice_top_m = 3.2;
    EXPECT_EQ(slice_heights(s, fixed).size(), 32u);
}

TEST(RasterizeSlices, MatchesWindingNumberOracle) {
    Rng rng(77);
    for (int i = 0; i < 50; ++i) {
        const Scene s = random_small_scene(rng);
        for (Encoding enc : {Encoding::binary, Encoding::classes, Encoding::material_properties}) {
            EncodeConfig cfg;
            cfg.encoding = enc;
            const EnvRaster e = rasterize_slices(s, cfg);
            const auto zs = slice_heights(s, cfg);
            const int per = channels_per_slice(enc);
            ASSERT_EQ(e.raster.channels, per * static_cast<int>(zs.size()));
            for (int r = 0; r < 256; ++r) {
                for (int c = 0; c < 256; ++c) {
                    const Vec2 p{(c + 0.5) * kPx, (r + 0.5) * kPx};
                    std::vector<const SceneObject*> inside;
                    for (const SceneObject* o : s.solids()) {
                        if (oracles::winding(p, o->footprint) != 0) inside.push_back(o);
                    }
                    for (std::size_t z = 0; z < zs.size(); ++z) {
                        for (int k = 0; k < per; ++k) {
                            ASSERT_EQ(e.raster.at(static_cast<int>(z) * per + k, r, c),
                                      oracles::raster_value(inside, zs[z], enc, k))
                                << "scene " << i << " slice " << z << " px " << r << "," << c;
                        }
                    }
                }
            }
        }
    }
}

TEST(RasterizeSlices, BinaryIsNonzeroClasses) {
    const GenConfig gen;
    for (int i = 0; i < 5; ++i) {
        const Scene s = generate_scene(gen, i);
        EncodeConfig b, c;
        b.encoding = Encoding::binary;
        c.encoding = Encoding::classes;
        const auto rb = rasterize_slices(s, b).raster;
        const auto rc = rasterize_slices(s, c).raster;
        ASSERT_EQ(rb.data.size(), rc.data.size());
        for (std::size_t k = 0; k < rb.data.size(); ++k) {
            ASSERT_EQ(rb.data[k], rc.data[k] != 0.0f ? 1.0f : 0.0f);
        }
    }
}

TEST(RasterizeSlices, QuarterTurnEquivariance) {
    Rng rng(5);
    for (int i = 0; i < 10; ++i) {
        const Scene s = random_small_scene(rng);
        EncodeConfig cfg;
        cfg.encoding = Encoding::classes;
        const Raster a = rotate90(rasterize_slices(s, cfg).raster);
        const Raster b = rasterize_slices(rotate_scene(s), cfg).raster;
        ASSERT_EQ(a, b) << i;
    }
}

TEST(RasterizeSlices, MaterialPropertiesChannels) {
    Scene s = open_room();
    s.furniture.push_back(box(10, {1.01, 1.01}, {2.01, 2.01}, 0.0, 1.0, wood()));
    EncodeConfig cfg;
    cfg.encoding = Encoding::material_properties;
    const auto e = rasterize_slices(s, cfg);
    ASSERT_EQ(e.raster.channels, 90);
    const int r = 40, c = 40;  // center about 1.52 m
    EXPECT_FLOAT_EQ(e.raster.at(0, r, c), 2.5f);
    EXPECT_FLOAT_EQ(e.raster.at(1, r, c), static_cast<float>(std::log10(0.05 + 1e-6)));
    EXPECT_FLOAT_EQ(e.raster.at(2, r, c), 0.03f);
    EXPECT_EQ(e.raster.at(0, 200, 200), 0.0f);
    EXPECT_EQ(e.channels[1].semantic, "log10_conductivity");
    EncodeConfig none;
    none.encoding = Encoding::no_env;
    EXPECT_EQ(rasterize_slices(s, none).raster.channels, 0);
}

TEST(EncodeSample, ZeroObservationsGiveEmptyObsMap) {
    const RadioMap m = half_room_map();
    const Scene s = open_room({{0.0, 0.0}, {4.8, 9.6}});
    const auto e = encode_sample(s, {{1.0, 1.0, 1.5}}, {}, m, {});
    EXPECT_TRUE(std::all_of(e.obs_map.data.begin(), e.obs_map.data.end(), [](float v) { return v == 0.0f; }));
}

TEST(EncodeSample, TxOneHotAtBlockCenter) {
    EncodeConfig cfg;
    // Tx inside map pixel (row 12, col 7).
    const Transmitter tx{{7 * 0.3 + 0.11, 12 * 0.3 + 0.27, 1.8}};
    const auto [onehot, dist] = encode_transmitter(tx, cfg);
    int nonzero = 0;
    for (int r = 0; r < 256; ++r) {
        for (int c = 0; c < 256; ++c) {
            if (onehot.at(0, r, c) != 0.0f) {
                ++nonzero;
                EXPECT_EQ(r, 12 * 8 + 4);
                EXPECT_EQ(c, 7 * 8 + 4);
                EXPECT_FLOAT_EQ(onehot.at(0, r, c), 1.8f);
            }
        }
    }
    EXPECT_EQ(nonzero, 1);
}

TEST(EncodeSample, DistanceMapIsEuclidean) {
    // Tx on the center of fine pixel (100, 60).
    const Transmitter tx{{60.5 * kPx, 100.5 * kPx, 1.2}};
    const auto [onehot, dist] = encode_transmitter(tx, {});
    EXPECT_NEAR(dist.at(0, 100, 60), 0.0, 1e-6);
    EXPECT_NEAR(dist.at(0, 100, 140), 3.0, 1e-5);  // 80 fine pixels in x
    EXPECT_NEAR(dist.at(0, 0, 0), std::hypot(60 * kPx, 100 * kPx), 1e-5);
    EncodeConfig off;
    off.include_distance_map = false;
    EXPECT_EQ(encode_transmitter(tx, off).second.channels, 0);
}

TEST(EncodeSample, ObservationsFillScaledBlocks) {
    const RadioMap m = half_room_map();
    ObservationSet obs{{{3, 5, m.at(3, 5)}}, m.id};
    const Raster o = encode_observations(obs, m, {});
    const float v = static_cast<float>(scale_to_unit(m.at(3, 5)));
    for (int r = 0; r < 256; ++r) {
        for (int c = 0; c < 256; ++c) {
            const bool in_block = r / 8 == 3 && c / 8 == 5;
            ASSERT_EQ(o.at(0, r, c), in_block ? v : 0.0f);
        }
    }
}

TEST(EncodeSample, InvalidObservationPixelIsConsistencyError) {
    const RadioMap m = half_room_map();
    ObservationSet obs{{{3, 20, -40.0}}, m.id};  // column 20 lies outside the 4.8 m room
    EXPECT_THROW(encode_observations(obs, m, {}), ConsistencyError);
    EXPECT_THROW(encode_sample(open_room({{0.0, 0.0}, {4.8, 9.6}}), {{1, 1, 1}}, obs, m, {}), ConsistencyError);
}

TEST(EncodeSample, StackedChannelOrder) {
    const RadioMap m = half_room_map();
    Rng rng(2);
    const auto obs = draw_observations(m, 0.05, rng);
    EncodeConfig cfg;
    cfg.encoding = Encoding::classes;
    const Scene s = walled_room({{0.2, 0.2}, {4.6, 9.4}});
    const auto e = encode_sample(s, {{1, 1, 1.5}}, obs, m, cfg);
    const Raster st = e.stacked();
    ASSERT_EQ(st.channels, 30 + 3);
    ASSERT_EQ(e.channel_manifest().size(), 33u);
    EXPECT_EQ(e.channel_manifest()[30].name, "tx_onehot");
    EXPECT_EQ(e.channel_manifest()[32].name, "observations");
    for (int r = 0; r < 256; r += 17) {
        for (int c = 0; c < 256; c += 13) {
            EXPECT_EQ(st.at(30, r, c), e.tx_onehot.at(0, r, c));
            EXPECT_EQ(st.at(31, r, c), e.distance_map.at(0, r, c));
            EXPECT_EQ(st.at(32, r, c), e.obs_map.at(0, r, c));
        }
    }
}

TEST(DrawObservations, Counts) {
    const RadioMap m = half_room_map();
    ASSERT_EQ(m.valid_count(), 512u);
    Rng rng(1);
    EXPECT_TRUE(draw_observations(m, 0.0, rng).entries.empty());
    EXPECT_EQ(draw_observations(m, 0.01, rng).entries.size(), 5u);
    EXPECT_EQ(draw_observations(m, 0.16, rng).entries.size(), 82u);
    const auto all = draw_observations(m, 1.0, rng);
    ASSERT_EQ(all.entries.size(), 512u);
    std::set<std::pair<int, int>> seen;
    for (const auto& o : all.entries) {
        ASSERT_TRUE(m.is_valid(o.row, o.col));
        ASSERT_EQ(o.path_loss_db, m.at(o.row, o.col));
        seen.insert({o.row, o.col});
    }
    EXPECT_EQ(seen.size(), 512u);
}

TEST(DrawObservations, ReproducibleAndUniform) {
    const RadioMap m = half_room_map();
    Rng a(9), b(9);
    EXPECT_EQ(draw_observations(m, 0.1, a), draw_observations(m, 0.1, b));
    // Each valid pixel should be hit about equally often.
    std::vector<int> hits(m.values.size(), 0);
    Rng rng(10);
    const int trials = 4000;
    for (int t = 0; t < trials; ++t) {
        for (const auto& o : draw_observations(m, 0.05, rng).entries) ++hits[m.geometry.index(o.row, o.col)];
    }
    const double expect = trials * 26.0 / 512.0;
    for (std::size_t i = 0; i < hits.size(); ++i) {
        if (m.valid[i]) {
            ASSERT_NEAR(hits[i], expect, 6 * std::sqrt(expect));
        } else {
            ASSERT_EQ(hits[i], 0);
        }
    }
}

TEST(EncodeConfig, RejectsBadResolution) {
    EncodeConfig cfg;
    cfg.xy_resolution = 250;
    EXPECT_THROW(check_encode_config(cfg), InvalidRange);
    cfg = {};
    cfg.slice_step_m = 0.0;
    EXPECT_THROW(check_encode_config(cfg), InvalidRange);
    EXPECT_THROW(encoding_from_string("rgb"), InvalidRange);
    EXPECT_EQ(encoding_from_string("material_properties"), Encoding::material_properties);
}

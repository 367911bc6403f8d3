#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

#include "rmkit/scene.hpp"
#include "rmkit/scene_gen.hpp"
#include "rmkit/scene_io.hpp"
#include "test_support.hpp"

using namespace rmkit;
using namespace rmkit::fixtures;

namespace {

Scene furnished_room() {
    Scene s = walled_room({{1, 1}, {7, 6}});
    s.furniture.push_back(box(10, {2, 2}, {3.5, 3}, 0.7, 0.75, wood(), ObjectKind::table));
    s.furniture.push_back(box(11, {5, 2}, {6, 2.5}, 0.0, 1.9, metal(), ObjectKind::cabinet));
    s.transmitters.push_back({{4, 4, 1.5}});
    return s;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST(ValidateScene, EmptyRoomWithTransmitterIsClean) {
    Scene s = open_room({{1, 1}, {5, 5}});
    s.transmitters.push_back({{3, 3, 1.2}});
    EXPECT_TRUE(validate_scene(s).empty());
}

TEST(ValidateScene, FurnishedRoomIsClean) { EXPECT_TRUE(validate_scene(furnished_room()).empty()); }

TEST(ValidateScene, OverlappingTablesGiveOneViolation) {
    Scene s = furnished_room();
    s.furniture.push_back(box(12, {3, 2.5}, {4, 3.5}, 0.7, 0.75, wood(), ObjectKind::table));
    const auto v = validate_scene(s);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].rule, "overlap");
    EXPECT_EQ(v[0].object_ids, (std::vector<int>{10, 12}));
}

TEST(ValidateScene, StackedObjectsWithDisjointHeightsAreAllowed) {
    Scene s = furnished_room();
    s.furniture.push_back(box(12, {2, 2}, {3, 3}, 0.0, 0.5, wood(), ObjectKind::other));
    EXPECT_TRUE(validate_scene(s).empty());
}

TEST(ValidateScene, TransmitterOutsideWallsGivesPlacementViolation) {
    Scene s = furnished_room();
    s.transmitters.push_back({{8.5, 4, 1.5}});
    const auto v = validate_scene(s);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].rule, "tx_placement");
}

TEST(ValidateScene, TransmitterInsideCabinetIsFlagged) {
    Scene s = furnished_room();
    s.transmitters.push_back({{5.5, 2.2, 1.0}});
    const auto v = validate_scene(s);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].rule, "tx_placement");
}

TEST(ValidateScene, FurnitureOutsideBoundsIsFlagged) {
    Scene s = furnished_room();
    s.furniture.push_back(box(12, {6.5, 4}, {7.5, 5}, 0.0, 1.0, wood(), ObjectKind::other));
    bool containment = false;
    for (const auto& v : validate_scene(s)) containment |= v.rule == "containment";
    EXPECT_TRUE(containment);
}

TEST(ValidateScene, MaterialAndFootprintRules) {
    Scene s = furnished_room();
    s.furniture[0].material.thickness = 2.0;
    s.furniture[1].footprint = {{5, 2}, {5, 2.5}, {6, 2.5}, {6, 2}};  // clockwise
    std::set<std::string> rules;
    for (const auto& v : validate_scene(s)) rules.insert(v.rule);
    EXPECT_TRUE(rules.count("material"));
    EXPECT_TRUE(rules.count("footprint"));
}

TEST(ValidateScene, FreeSpaceMaterialOnSolidIsFlagged) {
    Scene s = furnished_room();
    s.furniture[0].material.cls = MaterialClass::free_space;
    ASSERT_EQ(validate_scene(s).size(), 1u);
    EXPECT_EQ(validate_scene(s)[0].rule, "material");
}

TEST(ValidateScene, BoundsBeyondMapExtent) {
    Scene s = open_room({{0, 0}, {10, 5}});
    ASSERT_FALSE(validate_scene(s).empty());
    EXPECT_EQ(validate_scene(s)[0].rule, "bounds");
}

TEST(Scaling, PaperEndpointsAndMidpoint) {
    EXPECT_DOUBLE_EQ(scale_to_unit(-71, -71, -12), 0.0);
    EXPECT_DOUBLE_EQ(scale_to_unit(-12, -71, -12), 1.0);
    EXPECT_DOUBLE_EQ(scale_to_unit(-41.5, -71, -12), 0.5);
}

TEST(Scaling, ClampsOutsideRange) {
    EXPECT_DOUBLE_EQ(scale_to_unit(-90), 0.0);
    EXPECT_DOUBLE_EQ(scale_to_unit(-3), 1.0);
}

TEST(Scaling, InvalidRangeThrows) {
    EXPECT_THROW(scale_to_unit(-20, -12, -12), InvalidRange);
    EXPECT_THROW(scale_to_unit(-20, -10, -50), InvalidRange);
    EXPECT_THROW(unscale_from_unit(0.5, -10, -50), InvalidRange);
}

TEST(Scaling, MonotoneAndInvertible) {
    Rng rng(11);
    double prev = -1.0;
    for (int i = 0; i <= 1000; ++i) {
        const double x = -71.0 + 59.0 * i / 1000.0;
        const double u = scale_to_unit(x);
        EXPECT_GT(u, prev);
        prev = u;
    }
    for (int i = 0; i < 10000; ++i) {
        const double x = rng.uniform(-71.0, -12.0);
        EXPECT_NEAR(unscale_from_unit(scale_to_unit(x)), x, 1e-12 * std::abs(x));
    }
}

TEST(SceneIo, RoundTripIsBitExact) {
    GenConfig cfg;
    const auto dir = std::filesystem::temp_directory_path() / "rmkit_scene_io";
    for (int i = 0; i < 20; ++i) {
        Scene s = generate_scene(cfg, i);
        s.perturbation = PerturbationInfo{"base", 3, 0.5, {"tx", "objects"}};
        const auto path = dir / (s.id + ".json");
        write_scene(path, s);
        const Scene back = read_scene(path);
        ASSERT_EQ(back, s);
        for (std::size_t k = 0; k < s.furniture.size(); ++k) {
            for (std::size_t v = 0; v < s.furniture[k].footprint.size(); ++v) {
                ASSERT_TRUE(same_bits(s.furniture[k].footprint[v].x, back.furniture[k].footprint[v].x));
            }
            ASSERT_TRUE(same_bits(s.furniture[k].material.conductivity, back.furniture[k].material.conductivity));
        }
    }
    std::filesystem::remove_all(dir);
}

TEST(SceneIo, TopLevelKeys) {
    const json j = to_json(furnished_room());
    for (const char* k : {"id", "bounds", "room_height", "walls", "furniture", "transmitters", "rng_seed"}) {
        EXPECT_TRUE(j.contains(k)) << k;
    }
    EXPECT_TRUE(j.at("furniture")[0].at("footprint")[0].is_array());
}

TEST(RadioMapGeometry, PixelCentersAndMask) {
    const MapGeometry g;
    EXPECT_NEAR(g.pixel_center(0, 0).x, 0.15, 1e-15);
    EXPECT_NEAR(g.pixel_center(31, 31).y, 9.45, 1e-12);
    EXPECT_NEAR(g.extent().width(), 9.6, 1e-12);
    Scene s = open_room({{0.0, 0.0}, {4.8, 9.6}});
    const auto mask = room_mask(s, g);
    std::size_t n = 0;
    for (auto m : mask) n += m;
    EXPECT_EQ(n, 16u * 32u);
    EXPECT_EQ(g.pixel_of({4.79, 0.01}), (std::pair<int, int>{0, 15}));
}

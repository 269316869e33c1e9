#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "nadir/common.hpp"
#include "nadir/geometry.hpp"
#include "nadir/synth.hpp"

using namespace nadir;
using synth::ScenarioConfig;
using synth::TemplateSpec;
using synth::VehicleSpec;

namespace {

ScenarioConfig small_scenario() {
    ScenarioConfig cfg;
    cfg.seed = 404;
    cfg.width = 160;
    cfg.height = 120;
    cfg.fps = 25.0;
    cfg.frames = 30;
    cfg.background_level = 90.0;
    cfg.texture_amp = 3.0;
    cfg.noise = 1.0;
    cfg.pixel_to_world << 0.2, 0, 0, 0, 0.2, 0, 0, 0, 1;

    TemplateSpec car{"car", classify::VehicleClass::private_car, 18, 9};
    cfg.templates.push_back(car);

    VehicleSpec v;
    v.id = 1;
    v.template_name = "car";
    v.cls = classify::VehicleClass::private_car;
    v.scale = 1.0;
    v.angle = 0.0;
    v.waypoints = {{0, {4.0, 12.0}}, {29, {26.0, 12.0}}};
    cfg.vehicles.push_back(v);
    return cfg;
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("identical seeds render byte-identical frames and ground truth") {
    ScenarioConfig cfg = small_scenario();
    auto a = synth::generate(cfg);
    auto b = synth::generate(cfg);
    REQUIRE(a.frames.size() == b.frames.size());
    for (size_t i = 0; i < a.frames.size(); ++i) CHECK(a.frames[i].data == b.frames[i].data);
    REQUIRE(a.gt.boxes.size() == b.gt.boxes.size());
    for (size_t i = 0; i < a.gt.boxes.size(); ++i) {
        CHECK(a.gt.boxes[i].box.cx == b.gt.boxes[i].box.cx);
        CHECK(a.gt.boxes[i].box.cy == b.gt.boxes[i].box.cy);
    }
    // different seed, different noise
    ScenarioConfig other = cfg;
    other.seed = 405;
    auto c = synth::generate(other);
    bool any_diff = false;
    for (size_t i = 0; i < a.frames.size() && !any_diff; ++i)
        any_diff = a.frames[i].data != c.frames[i].data;
    CHECK(any_diff);
}

TEST_CASE("an empty scenario renders background-only frames") {
    ScenarioConfig cfg = small_scenario();
    cfg.vehicles.clear();
    cfg.noise = 0.0;
    cfg.texture_amp = 0.0;
    auto out = synth::generate(cfg);
    REQUIRE(out.frames.size() == 30);
    for (const auto& f : out.frames)
        for (float v : f.data) CHECK(v == doctest::Approx(90.0f));
    CHECK(out.gt.boxes.empty());
    CHECK(out.gt.tracks.empty());
    CHECK(out.gt.violations.empty());
}

TEST_CASE("ground-truth pixel centers equal the projected kinematics") {
    ScenarioConfig cfg = small_scenario();
    auto out = synth::generate(cfg);
    geometry::Homography world_to_pixel =
        geometry::Homography::from_matrix(cfg.pixel_to_world).inverse();
    for (const auto& b : out.gt.boxes) {
        // world position from the track samples at that frame
        const auto& tr = out.gt.tracks[0];
        const auto& s = tr.samples[b.frame - tr.samples.front().frame];
        Eigen::Vector2d px = geometry::project(world_to_pixel, s.world);
        CHECK(b.box.cx == doctest::Approx(px.x()).epsilon(1e-12));
        CHECK(b.box.cy == doctest::Approx(px.y()).epsilon(1e-12));
    }
}

TEST_CASE("speeds re-derived from world trajectories match the stored speeds") {
    ScenarioConfig cfg = small_scenario();
    auto out = synth::generate(cfg);
    for (const auto& tr : out.gt.tracks)
        for (size_t i = 0; i + 1 < tr.samples.size(); ++i) {
            double d = (tr.samples[i + 1].world - tr.samples[i].world).norm();
            double kmh = d * cfg.fps * 3.6;
            CHECK(tr.samples[i].speed_kmh == doctest::Approx(kmh).epsilon(1e-9));
        }
}

TEST_CASE("a scripted stop inside a no-parking zone lands in the gt violation list") {
    ScenarioConfig cfg = small_scenario();
    cfg.frames = 400;
    cfg.dwell.dwell_min_s = 10.0;
    cfg.dwell.v_stop_kmh = 2.0;
    // park for 12 s (300 frames at 25 fps) inside the zone
    cfg.vehicles[0].waypoints = {{0, {4.0, 12.0}},
                                 {50, {14.0, 12.0}},
                                 {350, {14.0, 12.0}},
                                 {399, {24.0, 12.0}}};
    violations::Zone np;
    np.id = "np1";
    np.kind = violations::ZoneKind::no_parking;
    np.polygon = {{12.0, 10.0}, {16.0, 10.0}, {16.0, 14.0}, {12.0, 14.0}};
    cfg.zones.zones.push_back(np);

    auto out = synth::generate(cfg);
    REQUIRE(out.gt.violations.size() == 1);
    CHECK(out.gt.violations[0].kind == violations::ViolationKind::double_parking);
    CHECK(out.gt.violations[0].zone_id == "np1");
    CHECK(out.gt.violations[0].evidence > 10.0);
}

TEST_CASE("vehicles leaving the frame bounds raise a config error naming the frame") {
    ScenarioConfig cfg = small_scenario();
    cfg.vehicles[0].waypoints = {{0, {4.0, 12.0}}, {29, {200.0, 12.0}}};  // runs off the right edge
    CHECK_THROWS_WITH_AS(synth::generate(cfg), doctest::Contains("outside frame bounds"),
                         std::invalid_argument);
}

TEST_CASE("waypoint frames must increase") {
    ScenarioConfig cfg = small_scenario();
    cfg.vehicles[0].waypoints = {{10, {4.0, 12.0}}, {10, {5.0, 12.0}}};
    CHECK_THROWS_AS(synth::generate(cfg), std::invalid_argument);
}

TEST_CASE("scenario files round trip and drive write_outputs") {
    namespace fs = std::filesystem;
    fs::create_directories("test_tmp");
    ScenarioConfig cfg = small_scenario();
    synth::save_scenario("test_tmp/scenario.json", cfg);
    ScenarioConfig loaded = synth::load_scenario("test_tmp/scenario.json");
    CHECK(loaded.seed == cfg.seed);
    CHECK(loaded.width == cfg.width);
    CHECK(loaded.frames == cfg.frames);
    REQUIRE(loaded.vehicles.size() == 1);
    CHECK(loaded.vehicles[0].waypoints.size() == 2);

    auto out = synth::generate(loaded);
    synth::write_outputs(out, loaded, "test_tmp/synth_out");
    CHECK(fs::exists("test_tmp/synth_out/frames/frame_000000.pgm"));
    CHECK(fs::exists("test_tmp/synth_out/frames/frame_000029.pgm"));
    CHECK(fs::exists("test_tmp/synth_out/templates/car.pgm"));
    CHECK(fs::exists("test_tmp/synth_out/gt.json"));
    CHECK(fs::exists("test_tmp/synth_out/zones.json"));
    CHECK(fs::exists("test_tmp/synth_out/calib.txt"));

    auto gt = synth::load_ground_truth("test_tmp/synth_out/gt.json");
    CHECK(gt.frames == 30);
    CHECK(gt.tracks.size() == out.gt.tracks.size());
    CHECK(gt.boxes.size() == out.gt.boxes.size());

    // the emitted calibration recovers the scenario's ground-truth mapping
    auto calib = geometry::load_calibration("test_tmp/synth_out/calib.txt");
    auto est = geometry::estimate_homography(calib);
    CHECK((est.h.h - cfg.pixel_to_world / cfg.pixel_to_world(2, 2)).cwiseAbs().maxCoeff() <= 1e-9);
}

}  // TEST_SUITE

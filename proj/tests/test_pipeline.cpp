#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nadir/pipeline.hpp"
#include "nadir/synth.hpp"

using namespace nadir;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// 24-frame scene, two cars crossing a gate, calibration 0.25 m/px
void write_mini_scenario(const std::string& path) {
    synth::ScenarioConfig cfg;
    cfg.seed = 11;
    cfg.width = 160;
    cfg.height = 128;
    cfg.fps = 25.0;
    cfg.frames = 24;
    cfg.background_level = 95.0;
    cfg.texture_amp = 3.0;
    cfg.texture_cell = 12;
    cfg.noise = 0.5;
    cfg.pixel_to_world << 0.25, 0, 0, 0, 0.25, 0, 0, 0, 1;
    cfg.templates.push_back({"car", classify::VehicleClass::private_car, 20, 10});

    synth::VehicleSpec a;
    a.id = 1;
    a.template_name = "car";
    a.cls = classify::VehicleClass::private_car;
    a.waypoints = {{0, {4.0, 10.0}}, {23, {32.0, 10.0}}};
    cfg.vehicles.push_back(a);

    synth::VehicleSpec b = a;
    b.id = 2;
    b.waypoints = {{0, {32.0, 22.0}}, {23, {6.0, 22.0}}};
    cfg.vehicles.push_back(b);

    violations::Gate gate{"G1", {18.0, 0.0}, {18.0, 32.0}};
    cfg.zones.gates.push_back(gate);
    synth::save_scenario(path, cfg);
}

std::string write_config(const std::string& path, const std::string& scenario,
                         const std::string& out_dir) {
    json j;
    j["input"] = {{"scenario", scenario}};
    j["detection"] = {{"scale_levels", 1},
                      {"angles_deg", json::array({0.0})},
                      {"detect_thr", 0.55},
                      {"nms_iou", 0.4},
                      {"rotated_boxes", true}};
    j["tracker"] = {{"q", 0.5}, {"r_sigma", 2.0}, {"confirm_hits", 2}, {"max_misses", 6}};
    j["speed"] = {{"window", 6}};
    j["output_dir"] = out_dir;
    std::ofstream out(path);
    out << j.dump(2) << "\n";
    return path;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("end-to-end run produces the full output tree") {
    fs::create_directories("test_tmp");
    write_mini_scenario("test_tmp/mini_scenario.json");
    write_config("test_tmp/mini_config.json", "test_tmp/mini_scenario.json", "test_tmp/run1");

    auto cfg = pipeline::load_config("test_tmp/mini_config.json");
    auto summary = pipeline::run(cfg);

    CHECK(summary.frames == 24);
    CHECK(summary.detections >= 24);  // two vehicles most frames
    CHECK(summary.tracks_confirmed >= 1);
    CHECK(summary.evaluated);

    for (const char* name :
         {"detections.csv", "tracks.csv", "track_boxes.csv", "speeds.csv", "events.jsonl",
          "counts.csv", "od.csv", "heatmap.csv", "congestion.jsonl", "mot_report.json",
          "manifest.json"})
        CHECK_MESSAGE(fs::exists(fs::path("test_tmp/run1") / name), name);

    // confirmed tracks appear in tracks.csv
    std::string tracks = slurp("test_tmp/run1/tracks.csv");
    CHECK(tracks.find("confirmed") != std::string::npos);

    // the mot report scores this clean scene highly
    json rep = json::parse(slurp("test_tmp/run1/mot_report.json"));
    CHECK(rep["detection"]["recall"].get<double>() >= 0.9);
    CHECK(rep["tracking"]["mota"].get<double>() >= 0.8);

    // counts saw the two gate crossings
    std::string counts = slurp("test_tmp/run1/counts.csv");
    CHECK(counts.find("G1,private_car,2") != std::string::npos);
}

TEST_CASE("identical configs produce byte-identical output trees") {
    fs::create_directories("test_tmp");
    write_mini_scenario("test_tmp/mini_scenario.json");
    write_config("test_tmp/det_a.json", "test_tmp/mini_scenario.json", "test_tmp/run_a");
    write_config("test_tmp/det_b.json", "test_tmp/mini_scenario.json", "test_tmp/run_b");

    pipeline::run(pipeline::load_config("test_tmp/det_a.json"));
    pipeline::run(pipeline::load_config("test_tmp/det_b.json"));

    int compared = 0;
    for (const auto& entry : fs::recursive_directory_iterator("test_tmp/run_a")) {
        if (!entry.is_regular_file()) continue;
        fs::path rel = fs::relative(entry.path(), "test_tmp/run_a");
        fs::path other = fs::path("test_tmp/run_b") / rel;
        REQUIRE_MESSAGE(fs::exists(other), rel.string());
        if (rel == "manifest.json") continue;  // carries the config hash
        CHECK_MESSAGE(slurp(entry.path()) == slurp(other), rel.string());
        compared++;
    }
    CHECK(compared >= 10);
}

TEST_CASE("missing referenced files fail loudly with the path") {
    fs::create_directories("test_tmp");
    json j;
    j["input"] = {{"frames_dir", "test_tmp"}};
    j["templates"] = json::array({{{"path", "test_tmp/nope_template.pgm"}}});
    std::ofstream("test_tmp/bad_config.json") << j.dump();
    CHECK_THROWS_WITH_AS(pipeline::load_config("test_tmp/bad_config.json"),
                         doctest::Contains("nope_template.pgm"), std::runtime_error);

    CHECK_THROWS_AS(pipeline::load_config("test_tmp/no_such_config.json"), std::runtime_error);

    json noinput;
    noinput["output_dir"] = "x";
    std::ofstream("test_tmp/noinput.json") << noinput.dump();
    CHECK_THROWS(pipeline::load_config("test_tmp/noinput.json"));
}

TEST_CASE("evaluate replays stored predictions against ground truth") {
    fs::create_directories("test_tmp/eval_out");
    // tiny ground truth: one track, three frames
    synth::GroundTruth gt;
    gt.fps = 25.0;
    gt.frames = 3;
    for (int f = 0; f < 3; ++f) {
        synth::GtBox b;
        b.frame = f;
        b.track_id = 1;
        b.cls = classify::VehicleClass::private_car;
        b.box = {10.0 + f, 20.0, 8.0, 4.0, 0.0};
        gt.boxes.push_back(b);
    }
    synth::save_ground_truth("test_tmp/eval_gt.json", gt);

    // predictions copied from the ground truth -> every metric is 1.0
    {
        std::ofstream out("test_tmp/eval_out/track_boxes.csv");
        out << "track_id,frame_index,cx,cy,w,h,theta\n";
        for (int f = 0; f < 3; ++f)
            out << "5," << f << ',' << 10.0 + f << ",20,8,4,0\n";
    }
    json j;
    j["input"] = {{"frames_dir", "test_tmp"}};
    j["output_dir"] = "test_tmp/eval_out";
    std::ofstream("test_tmp/eval_config.json") << j.dump();
    auto cfg = pipeline::load_config("test_tmp/eval_config.json");
    auto rep = pipeline::evaluate(cfg, "test_tmp/eval_gt.json");
    CHECK(rep.mota == doctest::Approx(1.0));
    CHECK(rep.motp == doctest::Approx(1.0));
    CHECK(rep.precision == doctest::Approx(1.0));
    CHECK(rep.recall == doctest::Approx(1.0));
    CHECK(fs::exists("test_tmp/eval_out/mot_report.json"));

    // empty predictions: recall 0
    {
        std::ofstream out("test_tmp/eval_out/track_boxes.csv");
        out << "track_id,frame_index,cx,cy,w,h,theta\n";
    }
    auto rep0 = pipeline::evaluate(cfg, "test_tmp/eval_gt.json");
    CHECK(rep0.recall == 0.0);
    CHECK_FALSE(rep0.precision_defined);

    // predictions outside the gt frame range are a hard error
    {
        std::ofstream out("test_tmp/eval_out/track_boxes.csv");
        out << "track_id,frame_index,cx,cy,w,h,theta\n";
        out << "5,99,10,20,8,4,0\n";
    }
    CHECK_THROWS_WITH_AS(pipeline::evaluate(cfg, "test_tmp/eval_gt.json"),
                         doctest::Contains("frame-range"), std::runtime_error);
}

TEST_CASE("the output directory env var overrides the config") {
    fs::create_directories("test_tmp");
    write_mini_scenario("test_tmp/mini_scenario.json");
    write_config("test_tmp/env_config.json", "test_tmp/mini_scenario.json", "test_tmp/env_ignored");
    setenv("NADIR_OUTPUT_DIR", "test_tmp/env_override", 1);
    auto cfg = pipeline::load_config("test_tmp/env_config.json");
    unsetenv("NADIR_OUTPUT_DIR");
    CHECK(cfg.output_dir == "test_tmp/env_override");
}

TEST_CASE("stage toggles support detect-only and track-from-csv runs") {
    fs::create_directories("test_tmp");
    write_mini_scenario("test_tmp/mini_scenario.json");

    // detect-only: detections come out, no tracks
    json j;
    j["input"] = {{"scenario", "test_tmp/mini_scenario.json"}};
    j["detection"] = {{"scale_levels", 1},
                      {"angles_deg", json::array({0.0})},
                      {"detect_thr", 0.55},
                      {"rotated_boxes", true}};
    j["stages"] = {{"track", false}};
    j["output_dir"] = "test_tmp/run_detect_only";
    std::ofstream("test_tmp/detect_only.json") << j.dump();
    auto summary = pipeline::run(pipeline::load_config("test_tmp/detect_only.json"));
    CHECK(summary.detections > 0);
    CHECK(fs::exists("test_tmp/run_detect_only/detections.csv"));
    CHECK_FALSE(fs::exists("test_tmp/run_detect_only/tracks.csv"));

    // track-from-csv: reuse those detections, frames come from the synth dir
    json k;
    k["input"] = {{"frames_dir", "test_tmp/run_detect_only/synth/frames"}, {"fps", 25.0}};
    k["stages"] = {{"detect", false}};
    k["detections_csv"] = "test_tmp/run_detect_only/detections.csv";
    k["tracker"] = {{"confirm_hits", 2}};
    k["output_dir"] = "test_tmp/run_from_csv";
    std::ofstream("test_tmp/from_csv.json") << k.dump();
    auto summary2 = pipeline::run(pipeline::load_config("test_tmp/from_csv.json"));
    CHECK(summary2.tracks_confirmed >= 1);
    CHECK(fs::exists("test_tmp/run_from_csv/tracks.csv"));

    // tracking without any detection source is rejected at load time
    json bad;
    bad["input"] = {{"frames_dir", "test_tmp/run_detect_only/synth/frames"}};
    bad["stages"] = {{"detect", false}};
    std::ofstream("test_tmp/bad_stages.json") << bad.dump();
    CHECK_THROWS(pipeline::load_config("test_tmp/bad_stages.json"));
}

TEST_CASE("soft-nms can replace hard suppression in the detect stage") {
    fs::create_directories("test_tmp");
    write_mini_scenario("test_tmp/mini_scenario.json");
    json j;
    j["input"] = {{"scenario", "test_tmp/mini_scenario.json"}};
    j["detection"] = {{"scale_levels", 1},
                      {"angles_deg", json::array({0.0})},
                      {"detect_thr", 0.55},
                      {"rotated_boxes", true},
                      {"soft_nms", {{"mode", "linear"}, {"sigma", 0.5}, {"final_thr", 0.4}}}};
    j["tracker"] = {{"confirm_hits", 2}};
    j["output_dir"] = "test_tmp/run_softnms";
    std::ofstream("test_tmp/softnms.json") << j.dump();
    auto summary = pipeline::run(pipeline::load_config("test_tmp/softnms.json"));
    CHECK(summary.detections >= 24);
    CHECK(summary.tracks_confirmed >= 1);
}

TEST_CASE("detections csv round trips through the loader") {
    fs::create_directories("test_tmp");
    write_mini_scenario("test_tmp/mini_scenario.json");
    write_config("test_tmp/csv_config.json", "test_tmp/mini_scenario.json", "test_tmp/run_csv");
    pipeline::run(pipeline::load_config("test_tmp/csv_config.json"));
    auto dets = pipeline::load_detections_csv("test_tmp/run_csv/detections.csv");
    CHECK(dets.size() >= 24);
    for (const auto& d : dets) {
        CHECK(d.frame_index >= 0);
        CHECK(d.frame_index < 24);
        CHECK(d.score > 0.5);
    }
}

}  // TEST_SUITE

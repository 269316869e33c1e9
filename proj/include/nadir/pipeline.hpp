#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nadir/analytics.hpp"
#include "nadir/detect.hpp"
#include "nadir/imaging.hpp"
#include "nadir/synth.hpp"

namespace nadir::pipeline {

struct TemplateRef {
    std::string path;
    std::string class_hint;
};

struct ClaheSpec {
    int rows = 8;
    int cols = 8;
    double clip = 2.0;
};

struct SoftNmsSpec {
    detect::SoftNmsMode mode = detect::SoftNmsMode::linear;
    double sigma = 0.5;
    double final_thr = 0.3;
};

struct PipelineConfig {
    // input: exactly one of scenario_path / frames_dir
    std::string scenario_path;
    std::string frames_dir;
    double fps = 25.0;
    std::vector<TemplateRef> templates;

    std::optional<imaging::DenoiseSpec> denoise;
    std::optional<ClaheSpec> clahe;

    detect::MatchParams match;
    std::optional<SoftNmsSpec> soft_nms;

    double tracker_q = 1.0;
    double tracker_r_sigma = 2.0;
    std::optional<double> gate;  // default 3x the widest template
    int max_misses = 10;
    int confirm_hits = 3;

    std::string calibration_path;
    int speed_window = 12;

    std::string rules_path;
    std::string zones_path;

    violations::DwellParams dwell;
    double lane_change_d_max = 100.0;

    double congestion_eps = 8.0;
    int congestion_min_pts = 4;
    double congestion_persist_s = 5.0;

    double eval_iou = 0.5;
    double eval_dist = 10.0;
    std::string gt_path;

    std::string output_dir = "out";
    bool stage_detect = true;
    bool stage_track = true;
    bool stage_violations = true;
    bool stage_analytics = true;
    std::string detections_csv;  // track-from-csv input when stage_detect is off

    uint64_t config_hash = 0;  // of the raw config file bytes
};

/// Parses the JSON config; referenced files must exist at load time. The
/// NADIR_OUTPUT_DIR environment variable overrides output_dir.
PipelineConfig load_config(const std::string& path);

struct RunSummary {
    int frames = 0;
    int detections = 0;
    int tracks_total = 0;
    int tracks_confirmed = 0;
    int events = 0;
    bool evaluated = false;
};

/// Executes preprocess -> detect -> classify -> track -> geometry ->
/// violations -> analytics and writes every report under output_dir.
/// Deterministic for a fixed config and seed.
RunSummary run(const PipelineConfig& cfg);

/// Evaluates existing pipeline outputs against a ground-truth file and
/// writes mot_report.json into the output directory.
analytics::MotReport evaluate(const PipelineConfig& cfg, const std::string& gt_path);

std::vector<detect::Detection> load_detections_csv(const std::string& path);

}  // namespace nadir::pipeline

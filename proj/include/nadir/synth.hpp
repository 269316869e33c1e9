#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "nadir/classify.hpp"
#include "nadir/detect.hpp"
#include "nadir/geometry.hpp"
#include "nadir/imaging.hpp"
#include "nadir/violations.hpp"

namespace nadir::synth {

struct TemplateSpec {
    std::string name;
    classify::VehicleClass cls = classify::VehicleClass::private_car;
    int width = 20;
    int height = 10;
};

struct Waypoint {
    int frame = 0;
    Eigen::Vector2d world = Eigen::Vector2d::Zero();  // meters
};

/// Piecewise constant-velocity kinematics in world coordinates, rendered as
/// the named template scaled and rotated at the projected pixel position.
struct VehicleSpec {
    int id = 0;
    std::string template_name;
    classify::VehicleClass cls = classify::VehicleClass::private_car;
    double scale = 1.0;
    double angle = 0.0;  // radians
    std::vector<Waypoint> waypoints;

    int spawn_frame() const { return waypoints.front().frame; }
    int last_frame() const { return waypoints.back().frame; }
};

struct OcclusionSpec {
    int vehicle_id = 0;
    int start = 0;
    int end = 0;  // inclusive
};

struct ScenarioConfig {
    uint64_t seed = 1;
    int width = 320;
    int height = 320;
    double fps = 25.0;
    int frames = 50;
    double background_level = 96.0;
    double texture_amp = 0.0;
    int texture_cell = 16;
    double noise = 0.0;  // additive uniform in [-noise, noise]
    Eigen::Matrix3d pixel_to_world = Eigen::Matrix3d::Identity();
    std::vector<TemplateSpec> templates;
    std::vector<VehicleSpec> vehicles;
    std::vector<OcclusionSpec> occlusions;
    violations::ZoneFile zones;
    violations::DwellParams dwell;
    double lane_change_d_max = 100.0;
};

struct GtBox {
    int frame = 0;
    int track_id = 0;
    classify::VehicleClass cls = classify::VehicleClass::private_car;
    detect::RotatedBox box;  // pixels
    bool occluded = false;
};

struct GtTrackSample {
    int frame = 0;
    Eigen::Vector2d world = Eigen::Vector2d::Zero();
    double speed_kmh = 0.0;
};

struct GtTrack {
    int id = 0;
    classify::VehicleClass cls = classify::VehicleClass::private_car;
    std::vector<GtTrackSample> samples;
};

struct GroundTruth {
    double fps = 25.0;
    int frames = 0;
    std::vector<GtBox> boxes;
    std::vector<GtTrack> tracks;
    std::vector<violations::ViolationEvent> violations;
};

struct SynthOutput {
    std::vector<imaging::Frame> frames;
    std::vector<std::pair<std::string, detect::Template>> templates;
    GroundTruth gt;
};

/// Deterministic procedural template pattern for a vehicle class.
detect::Template make_template_pattern(const TemplateSpec& spec);

ScenarioConfig load_scenario(const std::string& path);
void save_scenario(const std::string& path, const ScenarioConfig& cfg);

/// Renders all frames plus the exact ground truth. Identical seeds give
/// byte-identical output. Throws when a vehicle leaves the frame bounds.
SynthOutput generate(const ScenarioConfig& cfg);

/// Writes frames/, templates/, gt.json, zones.json and calib.txt under dir.
void write_outputs(const SynthOutput& out, const ScenarioConfig& cfg, const std::string& dir);

void save_ground_truth(const std::string& path, const GroundTruth& gt);
GroundTruth load_ground_truth(const std::string& path);

}  // namespace nadir::synth

#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace nadir::violations {

enum class ZoneKind { no_parking, crosswalk, uturn_approach, lane_region };

std::string to_string(ZoneKind k);
ZoneKind zone_kind_from_string(const std::string& s);

/// Geofence polygon; uturn_approach zones also carry the approach axis
/// (stop-line point plus the unit direction pointing upstream).
struct Zone {
    std::string id;
    ZoneKind kind = ZoneKind::no_parking;
    std::vector<Eigen::Vector2d> polygon;  // simple, >= 3 vertices
    std::optional<Eigen::Vector2d> axis_point;
    std::optional<Eigen::Vector2d> axis_dir;
};

enum class ViolationKind { illegal_lane_change, double_parking, crosswalk_obstruction };

std::string to_string(ViolationKind k);
ViolationKind violation_kind_from_string(const std::string& s);

struct ViolationEvent {
    int track_id = 0;
    ViolationKind kind = ViolationKind::double_parking;
    std::string zone_id;
    int start_frame = 0;
    int end_frame = 0;
    double evidence = 0.0;       // dwell seconds or distance in meters
    std::string evidence_name;   // "dwell_seconds" | "distance_m"
};

/// Ray-casting parity; points on the boundary count as inside.
bool point_in_polygon(const Eigen::Vector2d& p, const std::vector<Eigen::Vector2d>& polygon);

/// Per-frame track state in world coordinates.
struct TrackSample {
    int frame = 0;
    Eigen::Vector2d pos = Eigen::Vector2d::Zero();
    double speed_kmh = 0.0;
};

struct TrackStates {
    int track_id = 0;
    std::vector<TrackSample> samples;  // strictly increasing frames
};

struct DwellParams {
    double v_stop_kmh = 2.0;
    double dwell_min_s = 10.0;  // strict: events need dwell > this
    int bridge_gap = 2;         // exit-reentry gaps up to this many frames merge
};

std::vector<ViolationEvent> detect_double_parking(const std::vector<TrackStates>& tracks,
                                                  const std::vector<Zone>& zones,
                                                  const DwellParams& params, double fps);

struct LaneGeometry {
    std::vector<std::vector<Eigen::Vector2d>> centerlines;  // world polylines
};

/// A lane-index change (nearest centerline) within the approach zone closer
/// than d_max meters to the stop line, measured along the approach axis.
std::vector<ViolationEvent> detect_lane_change_violation(const std::vector<TrackStates>& tracks,
                                                         const Zone& uturn_zone,
                                                         const LaneGeometry& lanes, double d_max);

std::vector<ViolationEvent> detect_crosswalk_obstruction(const std::vector<TrackStates>& tracks,
                                                         const std::vector<Zone>& zones,
                                                         const DwellParams& params, double fps);

/// Directed observation gate for counting and OD analytics.
struct Gate {
    std::string id;
    Eigen::Vector2d a = Eigen::Vector2d::Zero();
    Eigen::Vector2d b = Eigen::Vector2d::Zero();
};

/// Zone file: zones, lane centerlines and gates in one structured document.
struct ZoneFile {
    std::vector<Zone> zones;
    LaneGeometry lanes;
    std::vector<Gate> gates;
};

ZoneFile load_zone_file(const std::string& path);
void save_zone_file(const std::string& path, const ZoneFile& zf);

/// Stable output order: (start_frame, track_id, kind, zone).
void sort_events(std::vector<ViolationEvent>& events);

std::string event_to_json_line(const ViolationEvent& e);
ViolationEvent event_from_json_line(const std::string& line);

}  // namespace nadir::violations

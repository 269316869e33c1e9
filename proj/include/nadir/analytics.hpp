#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "nadir/classify.hpp"
#include "nadir/detect.hpp"
#include "nadir/violations.hpp"

namespace nadir::analytics {

using classify::VehicleClass;
using violations::Gate;

/// World-frame polyline of one confirmed track.
struct TrackPath {
    int track_id = 0;
    VehicleClass cls = VehicleClass::private_car;
    std::vector<std::pair<int, Eigen::Vector2d>> points;  // (frame, world position)
};

/// Gate crossing: the track's segment between two consecutive frames crossed
/// the gate segment. sign is +1 when moving left-to-right of the gate
/// direction, -1 otherwise.
struct Crossing {
    int track_id = 0;
    std::string gate_id;
    int frame = 0;       // frame of the segment start
    double along = 0.0;  // interpolation parameter within that segment
    int sign = 0;
};

std::vector<Crossing> find_crossings(const TrackPath& track, const std::vector<Gate>& gates);

/// Rows are gates, columns the five vehicle classes.
struct CountTable {
    std::vector<std::string> point_ids;
    std::vector<std::array<int64_t, classify::kClassCount>> cells;

    int64_t total() const;
};

CountTable count_crossings(const std::vector<TrackPath>& tracks, const std::vector<Gate>& gates);

struct ODMatrix {
    std::vector<std::string> gate_ids;
    std::vector<std::vector<int64_t>> cells;  // origin row, destination column
    int64_t excluded_single_crossing = 0;     // tracks with exactly one crossing

    int64_t total() const;
};

ODMatrix od_matrix(const std::vector<TrackPath>& tracks, const std::vector<Gate>& gates);

/// Count intensities normalized by the global maximum; all zeros when the
/// table is empty of counts.
std::vector<std::array<double, classify::kClassCount>> heatmap_grid(const CountTable& counts);

/// Pearson correlation between class count vectors across observation
/// points. Needs >= 2 points; zero-variance classes come back NaN.
Eigen::Matrix<double, classify::kClassCount, classify::kClassCount> class_correlation(
    const CountTable& counts);

/// Plain DBSCAN labels, -1 for noise. Point order does not affect the
/// result: processing happens in canonical coordinate order.
std::vector<int> dbscan_labels(const std::vector<Eigen::Vector2d>& points, double eps,
                               int min_pts);

struct CongestionRegion {
    int start_frame = 0;
    int end_frame = 0;
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();  // mean over the chain
    int max_size = 0;                                    // largest cluster in the chain
};

/// Per-frame DBSCAN over vehicle positions; clusters link across frames by
/// centroid distance < eps and only chains persisting longer than
/// persist_min_s are reported.
std::vector<CongestionRegion> congestion_clusters(
    const std::vector<std::vector<Eigen::Vector2d>>& positions_per_frame, double eps, int min_pts,
    double persist_min_s, double fps);

struct MotObject {
    int id = 0;
    detect::RotatedBox box;
};

/// Index is the frame number within the evaluated range.
using MotFrames = std::vector<std::vector<MotObject>>;

struct MotReport {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double mota = 0.0;
    double motp = 0.0;  // mean IoU of matched pairs
    int64_t id_switches = 0;
    int64_t fp = 0;
    int64_t fn = 0;
    int64_t tp = 0;
    int64_t gt_total = 0;
    bool precision_defined = true;  // false when there are no predictions at all
};

/// CLEAR-style evaluation: per-frame matching on center distance under
/// match_dist_thr with correspondence continuity; identity changes of a
/// ground-truth object count as switches.
MotReport evaluate_mot(const MotFrames& gt, const MotFrames& pred, double match_dist_thr);

struct DetectionPr {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    int64_t tp = 0;
    int64_t fp = 0;
    int64_t fn = 0;
};

/// Identity-free detection quality at an IoU threshold.
DetectionPr evaluate_detections(const MotFrames& gt, const MotFrames& pred, double iou_thr);

}  // namespace nadir::analytics

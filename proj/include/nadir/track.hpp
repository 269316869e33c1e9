#pragma once

#include <Eigen/Dense>
#include <vector>

#include "nadir/classify.hpp"
#include "nadir/detect.hpp"

namespace nadir::track {

/// State is (x, y, vx, vy) in pixels and pixels/frame.
struct KalmanState {
    Eigen::Vector4d x = Eigen::Vector4d::Zero();
    Eigen::Matrix4d P = Eigen::Matrix4d::Identity();
};

/// Constant-velocity model matrices. R must be positive definite.
struct NoiseModel {
    Eigen::Matrix4d F = Eigen::Matrix4d::Identity();
    Eigen::Matrix4d Q = Eigen::Matrix4d::Zero();
    Eigen::Matrix<double, 2, 4> H;
    Eigen::Matrix2d R = Eigen::Matrix2d::Identity();
    double dt = 1.0;

    NoiseModel();

    /// White-acceleration process noise of intensity q; measurement noise
    /// diag(sigma^2, sigma^2).
    static NoiseModel constant_velocity(double dt, double q, double meas_sigma);
};

KalmanState kf_predict(const KalmanState& s, const NoiseModel& m);
KalmanState kf_update(const KalmanState& s, const Eigen::Vector2d& z, const NoiseModel& m);

/// Min-cost assignment of size min(n, m) over finite-cost pairs; infinity
/// marks forbidden pairs. Among optimal assignments the lexicographically
/// smallest (by row, then column) is returned. Pairs are sorted by row.
/// Intended for the matrix sizes tracking produces (up to a few hundred).
std::vector<std::pair<int, int>> hungarian(const std::vector<std::vector<double>>& cost);

enum class TrackStatus { tentative, confirmed, terminated };

std::string to_string(TrackStatus s);

struct TrackPoint {
    int frame_index = 0;
    Eigen::Vector4d state = Eigen::Vector4d::Zero();  // x, y, vx, vy
    bool coasted = false;
    TrackStatus status = TrackStatus::tentative;
    double box_w = 0.0;  // detection dims, carried through coasting
    double box_h = 0.0;
    double box_theta = 0.0;
};

struct Track {
    int id = 0;
    KalmanState state;
    classify::VehicleClass cls = classify::VehicleClass::private_car;
    std::array<int, classify::kClassCount> class_votes{};
    std::vector<TrackPoint> history;
    int misses = 0;  // consecutive unmatched frames
    int hits = 0;    // consecutive matched frames
    TrackStatus status = TrackStatus::tentative;
    detect::RotatedBox last_box;  // dims persist through coasting

    Eigen::Vector2d position() const { return state.x.head<2>(); }
};

struct TrackerParams {
    NoiseModel model = NoiseModel::constant_velocity(1.0, 1.0, 2.0);
    double gate = 60.0;       // pixels; association beyond this is forbidden
    int max_misses = 10;      // terminate when misses exceed this
    int confirm_hits = 3;     // consecutive matches to confirm
    double init_pos_var = 25.0;
    double init_vel_var = 100.0;
};

struct StepResult {
    std::vector<std::pair<int, int>> matches;  // (track id, detection index)
    std::vector<int> spawned;                  // new track ids
};

/// Single-writer stateful tracker; one step call per frame, in frame order.
class Tracker {
public:
    explicit Tracker(TrackerParams params) : params_(std::move(params)) {}

    StepResult step(const std::vector<detect::Detection>& dets, int frame_index);

    const std::vector<Track>& tracks() const { return tracks_; }
    std::vector<Track>& tracks() { return tracks_; }

private:
    TrackerParams params_;
    std::vector<Track> tracks_;
    int next_id_ = 1;
    int last_frame_ = -1;
};

}  // namespace nadir::track

#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace nadir::geometry {

/// 3x3 projective map from pixel plane to metric ground plane, scaled so
/// h(2,2) = 1 whenever that entry is nonzero.
struct Homography {
    Eigen::Matrix3d h = Eigen::Matrix3d::Identity();

    Homography inverse() const;
    static Homography from_matrix(const Eigen::Matrix3d& m);
};

struct Correspondence {
    Eigen::Vector2d pixel;
    Eigen::Vector2d world;  // meters
};

struct HomographyEstimate {
    Homography h;
    double reprojection_rms = 0.0;  // pixels mapped through h vs world, in meters
};

/// Direct linear transform with Hartley normalization on both point sets;
/// the smallest singular direction of the 2n x 9 system gives h. Throws on
/// fewer than 4 pairs or a degenerate configuration (the error names the
/// offending points).
HomographyEstimate estimate_homography(const std::vector<Correspondence>& pairs);

/// Applies h to a pixel point. Throws when the homogeneous denominator
/// vanishes (point at infinity).
Eigen::Vector2d project(const Homography& h, const Eigen::Vector2d& p);

struct SpeedSample {
    int frame_index = 0;
    double kmh = 0.0;
};

/// Projects the track to the ground plane and reports, for every frame once
/// the window has filled, the world path length over the trailing window
/// divided by the elapsed time. The window is measured in frames of the
/// original timeline, so uniformly subsampled constant-velocity tracks give
/// identical speeds.
std::vector<SpeedSample> estimate_speed(
    const std::vector<std::pair<int, Eigen::Vector2d>>& pixel_track, const Homography& h,
    double fps, int window);

/// Calibration file: one "px py wx wy" line per correspondence.
std::vector<Correspondence> load_calibration(const std::string& path);
void save_calibration(const std::string& path, const std::vector<Correspondence>& pairs);

}  // namespace nadir::geometry

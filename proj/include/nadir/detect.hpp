#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "nadir/imaging.hpp"

namespace nadir::detect {

/// Matching template. Must be non-constant and at least 3x3.
struct Template {
    int width = 0;
    int height = 0;
    std::vector<float> data;  // row-major intensities in [0, 255]
    std::string class_hint;   // optional vehicle class label

    Template() = default;
    Template(int w, int h, float fill = 0.0f)
        : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

    float& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    float at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }

    double mean() const;
    double variance() const;
};

struct Point2d {
    double x = 0.0;
    double y = 0.0;
};

/// Oriented rectangle; theta is normalized to (-pi/2, pi/2].
struct RotatedBox {
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double h = 0.0;
    double theta = 0.0;

    std::array<Point2d, 4> corners() const;
    double area() const { return w * h; }
};

double normalize_theta(double theta);

struct Detection {
    RotatedBox box;
    double score = 0.0;      // NCC value in [-1, 1]
    int scale_index = 0;     // pyramid level
    double angle = 0.0;      // radians
    int frame_index = 0;
    int template_index = -1; // which template produced the match (multi-template runs)
};

/// Rotates by theta around the template center onto a canvas sized to the
/// rotated footprint; bilinear resampling, uncovered pixels take the
/// template mean.
Template rotate_template(const Template& t, double theta);

/// Normalized cross-correlation at a single placement (x, y = top-left).
/// The local patch mean and the global template mean are both subtracted.
/// Returns nullopt when the patch has zero variance (score undefined).
std::optional<double> ncc_score(const imaging::Frame& frame, const Template& t, int x, int y);

/// Dense NCC response at every valid placement; undefined placements hold NaN.
struct ResponseMap {
    int width = 0;   // frame.width - t.width + 1
    int height = 0;  // frame.height - t.height + 1
    std::vector<float> scores;

    float at(int x, int y) const { return scores[static_cast<size_t>(y) * width + x]; }
};

ResponseMap response_map(const imaging::Frame& frame, const Template& t);

struct MatchParams {
    int scale_levels = 4;
    double scale_factor = 0.8;
    std::vector<double> angles;  // radians; empty grid is an error
    double detect_thr = 0.7;
    double nms_iou = 0.4;
    bool rotated_boxes = false;  // default emits axis-aligned square boxes
    int threads = 0;             // 0 = hardware concurrency
    // patches with intensity stddev below this are treated like the
    // zero-variance case: flat asphalt correlates spuriously because NCC is
    // contrast invariant
    double min_patch_stddev = 2.0;

    static std::vector<double> default_angles();  // -45..45 deg step 5
};

/// Multi-scale multi-angle matching over one template: local response
/// maxima above detect_thr, mapped back to level-0 pixels, then NMS.
/// Output is sorted by descending score.
std::vector<Detection> match(const imaging::Frame& frame, const Template& t,
                             const MatchParams& params);

/// Sequential per-template matching with one shared NMS pass; detections
/// carry the index of the template that produced them.
std::vector<Detection> match_all(const imaging::Frame& frame,
                                 const std::vector<Template>& templates,
                                 const MatchParams& params);

/// Candidate peaks without suppression (building block for match/match_all).
std::vector<Detection> match_candidates(const imaging::Pyramid& pyramid, const Template& t,
                                        int template_index, const MatchParams& params);

/// Exact polygon-clipping IoU between oriented rectangles.
double rotated_iou(const RotatedBox& a, const RotatedBox& b);

/// Greedy descending-score suppression; a detection overlapping a kept one
/// with IoU > iou_thr is dropped. Score ties break on (cy, cx).
std::vector<Detection> nms(std::vector<Detection> dets, double iou_thr);

enum class SoftNmsMode { linear, gaussian };

/// Score attenuation instead of removal; detections whose rescored value
/// falls below final_thr are dropped.
std::vector<Detection> soft_nms(std::vector<Detection> dets, SoftNmsMode mode, double sigma,
                                double final_thr);

}  // namespace nadir::detect

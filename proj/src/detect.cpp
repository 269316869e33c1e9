#include "nadir/detect.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "nadir/common.hpp"

namespace nadir::detect {

namespace {

constexpr double kVarEpsPerPixel = 1e-6;

void validate_template(const Template& t, const char* op) {
    if (t.width < 3 || t.height < 3)
        throw std::invalid_argument(std::string(op) + ": template must be at least 3x3");
    if (t.data.size() != static_cast<size_t>(t.width) * t.height)
        throw std::invalid_argument(std::string(op) + ": malformed template");
    if (t.variance() <= 0.0)
        throw std::invalid_argument(std::string(op) + ": template must not be constant");
}

int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

float bilinear_template(const Template& t, double x, double y) {
    int x0 = clampi(static_cast<int>(std::floor(x)), 0, t.width - 1);
    int y0 = clampi(static_cast<int>(std::floor(y)), 0, t.height - 1);
    int x1 = std::min(x0 + 1, t.width - 1);
    int y1 = std::min(y0 + 1, t.height - 1);
    double fx = std::min(1.0, std::max(0.0, x - x0));
    double fy = std::min(1.0, std::max(0.0, y - y0));
    double v = (1 - fy) * ((1 - fx) * t.at(x0, y0) + fx * t.at(x1, y0)) +
               fy * ((1 - fx) * t.at(x0, y1) + fx * t.at(x1, y1));
    return static_cast<float>(v);
}

}  // namespace

double Template::mean() const {
    double s = 0.0;
    for (float v : data) s += v;
    return data.empty() ? 0.0 : s / static_cast<double>(data.size());
}

double Template::variance() const {
    if (data.empty()) return 0.0;
    double m = mean();
    double s = 0.0;
    for (float v : data) s += (v - m) * (v - m);
    return s / static_cast<double>(data.size());
}

double normalize_theta(double theta) {
    while (theta > kPi / 2.0) theta -= kPi;
    while (theta <= -kPi / 2.0) theta += kPi;
    return theta;
}

std::array<Point2d, 4> RotatedBox::corners() const {
    double c = std::cos(theta), s = std::sin(theta);
    double hw = w / 2.0, hh = h / 2.0;
    std::array<Point2d, 4> out;
    const double dx[4] = {-hw, hw, hw, -hw};
    const double dy[4] = {-hh, -hh, hh, hh};
    for (int i = 0; i < 4; ++i) {
        out[i].x = cx + dx[i] * c - dy[i] * s;
        out[i].y = cy + dx[i] * s + dy[i] * c;
    }
    return out;
}

Template rotate_template(const Template& t, double theta) {
    validate_template(t, "rotate_template");
    double c = std::cos(theta), s = std::sin(theta);
    double wf = t.width * std::abs(c) + t.height * std::abs(s);
    double hf = t.width * std::abs(s) + t.height * std::abs(c);
    int ow = std::max(1, static_cast<int>(std::ceil(wf - 1e-9)));
    int oh = std::max(1, static_cast<int>(std::ceil(hf - 1e-9)));

    double cix = (t.width - 1) / 2.0, ciy = (t.height - 1) / 2.0;
    double cox = (ow - 1) / 2.0, coy = (oh - 1) / 2.0;
    float fill = static_cast<float>(t.mean());

    Template out(ow, oh, fill);
    out.class_hint = t.class_hint;
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double dx = x - cox, dy = y - coy;
            // inverse of the forward rotation [c -s; s c]
            double u = c * dx + s * dy + cix;
            double v = -s * dx + c * dy + ciy;
            if (u >= -1e-9 && u <= t.width - 1 + 1e-9 && v >= -1e-9 && v <= t.height - 1 + 1e-9)
                out.at(x, y) = bilinear_template(t, u, v);
        }
    return out;
}

std::optional<double> ncc_score(const imaging::Frame& frame, const Template& t, int x, int y) {
    validate_template(t, "ncc_score");
    if (x < 0 || y < 0 || x + t.width > frame.width || y + t.height > frame.height)
        throw std::invalid_argument("ncc_score: template window does not fit at placement");

    const double n = static_cast<double>(t.width) * t.height;
    double psum = 0.0;
    for (int v = 0; v < t.height; ++v)
        for (int u = 0; u < t.width; ++u) psum += frame.at(x + u, y + v);
    double pmean = psum / n;
    double tmean = t.mean();

    double cross = 0.0, pvar = 0.0, tvar = 0.0;
    for (int v = 0; v < t.height; ++v)
        for (int u = 0; u < t.width; ++u) {
            double a = frame.at(x + u, y + v) - pmean;
            double b = t.at(u, v) - tmean;
            cross += a * b;
            pvar += a * a;
            tvar += b * b;
        }
    if (pvar <= kVarEpsPerPixel * n) return std::nullopt;
    double score = cross / std::sqrt(pvar * tvar);
    return std::min(1.0, std::max(-1.0, score));
}

namespace detail {
ResponseMap response_map_with_floor(const imaging::Frame& frame, const Template& t,
                                    double min_patch_stddev);
}

ResponseMap response_map(const imaging::Frame& frame, const Template& t) {
    return detail::response_map_with_floor(frame, t, 0.0);
}

ResponseMap detail::response_map_with_floor(const imaging::Frame& frame, const Template& t,
                                            double min_patch_stddev) {
    validate_template(t, "response_map");
    if (t.width > frame.width || t.height > frame.height)
        throw std::invalid_argument("response_map: template larger than frame");

    const int rw = frame.width - t.width + 1;
    const int rh = frame.height - t.height + 1;
    ResponseMap rm;
    rm.width = rw;
    rm.height = rh;
    rm.scores.assign(static_cast<size_t>(rw) * rh, std::numeric_limits<float>::quiet_NaN());

    // integral images for patch sum and sum of squares
    const int W = frame.width, H = frame.height;
    std::vector<double> s1(static_cast<size_t>(W + 1) * (H + 1), 0.0);
    std::vector<double> s2(static_cast<size_t>(W + 1) * (H + 1), 0.0);
    for (int y = 0; y < H; ++y) {
        double row1 = 0.0, row2 = 0.0;
        for (int x = 0; x < W; ++x) {
            double v = frame.at(x, y);
            row1 += v;
            row2 += v * v;
            s1[static_cast<size_t>(y + 1) * (W + 1) + x + 1] =
                s1[static_cast<size_t>(y) * (W + 1) + x + 1] + row1;
            s2[static_cast<size_t>(y + 1) * (W + 1) + x + 1] =
                s2[static_cast<size_t>(y) * (W + 1) + x + 1] + row2;
        }
    }
    auto rect = [&](const std::vector<double>& s, int x0, int y0, int x1, int y1) {
        return s[static_cast<size_t>(y1) * (W + 1) + x1] - s[static_cast<size_t>(y0) * (W + 1) + x1] -
               s[static_cast<size_t>(y1) * (W + 1) + x0] + s[static_cast<size_t>(y0) * (W + 1) + x0];
    };

    const double n = static_cast<double>(t.width) * t.height;
    const double tmean = t.mean();
    std::vector<float> tc(t.data.size());
    double tvar = 0.0;
    for (size_t i = 0; i < t.data.size(); ++i) {
        tc[i] = static_cast<float>(t.data[i] - tmean);
        tvar += static_cast<double>(tc[i]) * tc[i];
    }
    const double var_eps =
        std::max(kVarEpsPerPixel * n, min_patch_stddev * min_patch_stddev * n);

    for (int y = 0; y < rh; ++y)
        for (int x = 0; x < rw; ++x) {
            double ps = rect(s1, x, y, x + t.width, y + t.height);
            double pss = rect(s2, x, y, x + t.width, y + t.height);
            double pvar = pss - ps * ps / n;
            if (pvar <= var_eps) continue;
            double cross = 0.0;
            for (int v = 0; v < t.height; ++v) {
                const float* fr = &frame.data[static_cast<size_t>(y + v) * W + x];
                const float* tr = &tc[static_cast<size_t>(v) * t.width];
                double acc = 0.0;
                for (int u = 0; u < t.width; ++u) acc += static_cast<double>(fr[u]) * tr[u];
                cross += acc;
            }
            double score = cross / std::sqrt(pvar * tvar);
            rm.scores[static_cast<size_t>(y) * rw + x] =
                static_cast<float>(std::min(1.0, std::max(-1.0, score)));
        }
    return rm;
}

std::vector<double> MatchParams::default_angles() {
    std::vector<double> a;
    for (int d = -45; d <= 45; d += 5) a.push_back(deg_to_rad(d));
    return a;
}

namespace {

struct GridCell {
    int scale_index;
    int angle_index;
};

std::vector<Detection> eval_cell(const imaging::Pyramid& pyr, const Template& rotated,
                                 const Template& original, int template_index,
                                 const GridCell& cell, const MatchParams& params) {
    std::vector<Detection> out;
    const imaging::Frame& level = pyr.levels[cell.scale_index];
    if (rotated.width > level.width || rotated.height > level.height) return out;

    ResponseMap rm =
        detail::response_map_with_floor(level, rotated, params.min_patch_stddev);
    const double fx = pyr.scale_x(cell.scale_index);
    const double fy = pyr.scale_y(cell.scale_index);
    const double angle = params.angles[cell.angle_index];

    for (int y = 0; y < rm.height; ++y)
        for (int x = 0; x < rm.width; ++x) {
            float v = rm.at(x, y);
            if (std::isnan(v) || v <= params.detect_thr) continue;
            bool peak = true;
            for (int dy = -1; dy <= 1 && peak; ++dy)
                for (int dx = -1; dx <= 1 && peak; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    int nx = x + dx, ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= rm.width || ny >= rm.height) continue;
                    float nv = rm.at(nx, ny);
                    if (std::isnan(nv)) continue;
                    if (nv > v) peak = false;
                    // exact plateaus keep exactly one cell, the raster-first one
                    else if (nv == v && (ny < y || (ny == y && nx < x))) peak = false;
                }
            if (!peak) continue;

            double ckx = x + (rotated.width - 1) / 2.0;
            double cky = y + (rotated.height - 1) / 2.0;
            Detection d;
            d.box.cx = (ckx + 0.5) / fx - 0.5;
            d.box.cy = (cky + 0.5) / fy - 0.5;
            if (params.rotated_boxes) {
                d.box.w = original.width / fx;
                d.box.h = original.height / fy;
                d.box.theta = normalize_theta(angle);
            } else {
                double side = std::max(original.width / fx, original.height / fy);
                d.box.w = side;
                d.box.h = side;
                d.box.theta = 0.0;
            }
            d.score = v;
            d.scale_index = cell.scale_index;
            d.angle = angle;
            d.frame_index = level.timestamp_index;
            d.template_index = template_index;
            out.push_back(d);
        }
    return out;
}

void sort_by_score(std::vector<Detection>& dets) {
    std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.box.cy != b.box.cy) return a.box.cy < b.box.cy;
        return a.box.cx < b.box.cx;
    });
}

void validate_params(const MatchParams& params) {
    if (params.angles.empty() || params.scale_levels < 1)
        throw std::invalid_argument("match: empty scale/angle grid");
    if (!(params.detect_thr > 0.0 && params.detect_thr < 1.0))
        throw std::invalid_argument("match: detect_thr must be in (0, 1)");
    if (!(params.nms_iou > 0.0 && params.nms_iou < 1.0))
        throw std::invalid_argument("match: nms_iou must be in (0, 1)");
}

}  // namespace

std::vector<Detection> match_candidates(const imaging::Pyramid& pyramid, const Template& t,
                                        int template_index, const MatchParams& params) {
    validate_params(params);
    validate_template(t, "match");

    std::vector<Template> rotated;
    rotated.reserve(params.angles.size());
    for (double a : params.angles) rotated.push_back(rotate_template(t, a));

    std::vector<GridCell> cells;
    for (int k = 0; k < static_cast<int>(pyramid.levels.size()); ++k)
        for (int a = 0; a < static_cast<int>(params.angles.size()); ++a)
            cells.push_back({k, a});

    // the (scale x angle) grid runs in parallel; the merge order below is
    // fixed by cell order so the output is deterministic
    std::vector<std::vector<Detection>> per_cell(cells.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= cells.size()) break;
            per_cell[i] =
                eval_cell(pyramid, rotated[cells[i].angle_index], t, template_index, cells[i], params);
        }
    };
    unsigned nthreads = params.threads > 0 ? static_cast<unsigned>(params.threads)
                                           : std::max(1u, std::thread::hardware_concurrency());
    nthreads = std::min<unsigned>(nthreads, static_cast<unsigned>(cells.size()));
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < nthreads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::vector<Detection> out;
    for (auto& dets : per_cell) out.insert(out.end(), dets.begin(), dets.end());
    return out;
}

std::vector<Detection> match(const imaging::Frame& frame, const Template& t,
                             const MatchParams& params) {
    validate_params(params);
    imaging::Pyramid pyr = imaging::build_pyramid(frame, params.scale_levels, params.scale_factor);
    std::vector<Detection> cand = match_candidates(pyr, t, 0, params);
    sort_by_score(cand);
    return nms(std::move(cand), params.nms_iou);
}

std::vector<Detection> match_all(const imaging::Frame& frame,
                                 const std::vector<Template>& templates,
                                 const MatchParams& params) {
    validate_params(params);
    imaging::Pyramid pyr = imaging::build_pyramid(frame, params.scale_levels, params.scale_factor);
    std::vector<Detection> cand;
    for (int i = 0; i < static_cast<int>(templates.size()); ++i) {
        auto dets = match_candidates(pyr, templates[i], i, params);
        cand.insert(cand.end(), dets.begin(), dets.end());
    }
    sort_by_score(cand);
    return nms(std::move(cand), params.nms_iou);
}

namespace {

double polygon_area(const std::vector<Point2d>& poly) {
    double a = 0.0;
    for (size_t i = 0; i < poly.size(); ++i) {
        const Point2d& p = poly[i];
        const Point2d& q = poly[(i + 1) % poly.size()];
        a += p.x * q.y - q.x * p.y;
    }
    return std::abs(a) / 2.0;
}

// Sutherland-Hodgman: clip subject by the half-plane left of edge (a, b).
std::vector<Point2d> clip_halfplane(const std::vector<Point2d>& subject, const Point2d& a,
                                    const Point2d& b) {
    std::vector<Point2d> out;
    auto side = [&](const Point2d& p) {
        return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    };
    size_t n = subject.size();
    for (size_t i = 0; i < n; ++i) {
        const Point2d& cur = subject[i];
        const Point2d& prev = subject[(i + n - 1) % n];
        double sc = side(cur), sp = side(prev);
        bool in_c = sc >= 0.0, in_p = sp >= 0.0;
        if (in_c) {
            if (!in_p) {
                double t = sp / (sp - sc);
                out.push_back({prev.x + t * (cur.x - prev.x), prev.y + t * (cur.y - prev.y)});
            }
            out.push_back(cur);
        } else if (in_p) {
            double t = sp / (sp - sc);
            out.push_back({prev.x + t * (cur.x - prev.x), prev.y + t * (cur.y - prev.y)});
        }
    }
    return out;
}

std::vector<Point2d> ccw_corners(const RotatedBox& b) {
    auto c = b.corners();
    std::vector<Point2d> poly(c.begin(), c.end());
    double a = 0.0;
    for (size_t i = 0; i < poly.size(); ++i) {
        const Point2d& p = poly[i];
        const Point2d& q = poly[(i + 1) % poly.size()];
        a += p.x * q.y - q.x * p.y;
    }
    if (a < 0.0) std::reverse(poly.begin(), poly.end());
    return poly;
}

}  // namespace

double rotated_iou(const RotatedBox& a, const RotatedBox& b) {
    if (a.w <= 0.0 || a.h <= 0.0 || b.w <= 0.0 || b.h <= 0.0) return 0.0;
    std::vector<Point2d> subject = ccw_corners(a);
    std::vector<Point2d> clip = ccw_corners(b);
    for (size_t i = 0; i < clip.size() && !subject.empty(); ++i)
        subject = clip_halfplane(subject, clip[i], clip[(i + 1) % clip.size()]);
    if (subject.size() < 3) return 0.0;
    double inter = polygon_area(subject);
    double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) return 0.0;
    return std::min(1.0, std::max(0.0, inter / uni));
}

std::vector<Detection> nms(std::vector<Detection> dets, double iou_thr) {
    if (!(iou_thr > 0.0 && iou_thr < 1.0))
        throw std::invalid_argument("nms: iou_thr must be in (0, 1)");
    sort_by_score(dets);
    std::vector<Detection> kept;
    std::vector<bool> suppressed(dets.size(), false);
    for (size_t i = 0; i < dets.size(); ++i) {
        if (suppressed[i]) continue;
        kept.push_back(dets[i]);
        for (size_t j = i + 1; j < dets.size(); ++j) {
            if (suppressed[j]) continue;
            if (rotated_iou(dets[i].box, dets[j].box) > iou_thr) suppressed[j] = true;
        }
    }
    return kept;
}

std::vector<Detection> soft_nms(std::vector<Detection> dets, SoftNmsMode mode, double sigma,
                                double final_thr) {
    if (!(final_thr > 0.0)) throw std::invalid_argument("soft_nms: final_thr must be positive");
    if (mode == SoftNmsMode::gaussian && !(sigma > 0.0))
        throw std::invalid_argument("soft_nms: sigma must be positive");

    std::vector<Detection> kept;
    std::vector<Detection> pool = std::move(dets);
    while (!pool.empty()) {
        size_t best = 0;
        for (size_t i = 1; i < pool.size(); ++i) {
            const Detection& a = pool[i];
            const Detection& b = pool[best];
            if (a.score > b.score ||
                (a.score == b.score &&
                 (a.box.cy < b.box.cy || (a.box.cy == b.box.cy && a.box.cx < b.box.cx))))
                best = i;
        }
        Detection top = pool[best];
        pool.erase(pool.begin() + static_cast<ptrdiff_t>(best));
        kept.push_back(top);

        std::vector<Detection> next;
        next.reserve(pool.size());
        for (Detection& d : pool) {
            double iou = rotated_iou(top.box, d.box);
            double factor = mode == SoftNmsMode::linear ? (1.0 - iou)
                                                        : std::exp(-(iou * iou) / sigma);
            d.score *= factor;
            if (d.score >= final_thr) next.push_back(d);
        }
        pool = std::move(next);
    }
    return kept;
}

}  // namespace nadir::detect

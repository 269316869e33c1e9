#include "nadir/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "nadir/track.hpp"

namespace nadir::analytics {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::vector<Crossing> find_crossings(const TrackPath& track, const std::vector<Gate>& gates) {
    std::vector<Crossing> out;
    for (const Gate& g : gates) {
        Eigen::Vector2d d = g.b - g.a;
        double len2 = d.squaredNorm();
        auto side = [&](const Eigen::Vector2d& p) {
            return d.x() * (p.y() - g.a.y()) - d.y() * (p.x() - g.a.x());
        };
        // track the last strictly-signed side so samples landing exactly on
        // the gate line still yield one crossing per pass-through
        int last_sign = 0;
        for (size_t i = 0; i < track.points.size(); ++i) {
            double s = side(track.points[i].second);
            int sign = s > 0.0 ? 1 : (s < 0.0 ? -1 : 0);
            if (sign == 0) continue;
            if (last_sign != 0 && sign != last_sign && i > 0) {
                const Eigen::Vector2d& p = track.points[i - 1].second;
                const Eigen::Vector2d& q = track.points[i].second;
                double sp = side(p);
                double t = sp == 0.0 ? 0.0 : sp / (sp - s);
                Eigen::Vector2d x = p + t * (q - p);
                double u = len2 > 0.0 ? d.dot(x - g.a) / len2 : -1.0;
                if (u >= 0.0 && u <= 1.0) {
                    Crossing c;
                    c.track_id = track.track_id;
                    c.gate_id = g.id;
                    c.frame = track.points[i - 1].first;
                    c.along = t;
                    c.sign = sign;
                    out.push_back(c);
                }
            }
            last_sign = sign;
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const Crossing& a, const Crossing& b) {
        if (a.frame != b.frame) return a.frame < b.frame;
        return a.along < b.along;
    });
    return out;
}

int64_t CountTable::total() const {
    int64_t t = 0;
    for (const auto& row : cells)
        for (int64_t c : row) t += c;
    return t;
}

CountTable count_crossings(const std::vector<TrackPath>& tracks, const std::vector<Gate>& gates) {
    CountTable table;
    for (const Gate& g : gates) {
        table.point_ids.push_back(g.id);
        table.cells.push_back({});
    }
    std::map<std::string, size_t> gate_row;
    for (size_t i = 0; i < table.point_ids.size(); ++i) gate_row[table.point_ids[i]] = i;

    for (const TrackPath& tr : tracks) {
        for (const Crossing& c : find_crossings(tr, gates))
            table.cells[gate_row[c.gate_id]][static_cast<int>(tr.cls)] += 1;
    }
    return table;
}

int64_t ODMatrix::total() const {
    int64_t t = 0;
    for (const auto& row : cells)
        for (int64_t c : row) t += c;
    return t;
}

ODMatrix od_matrix(const std::vector<TrackPath>& tracks, const std::vector<Gate>& gates) {
    ODMatrix od;
    for (const Gate& g : gates) od.gate_ids.push_back(g.id);
    od.cells.assign(gates.size(), std::vector<int64_t>(gates.size(), 0));
    std::map<std::string, size_t> gate_row;
    for (size_t i = 0; i < od.gate_ids.size(); ++i) gate_row[od.gate_ids[i]] = i;

    for (const TrackPath& tr : tracks) {
        auto crossings = find_crossings(tr, gates);
        if (crossings.empty()) continue;
        if (crossings.size() == 1) {
            od.excluded_single_crossing += 1;
            continue;
        }
        od.cells[gate_row[crossings.front().gate_id]][gate_row[crossings.back().gate_id]] += 1;
    }
    return od;
}

std::vector<std::array<double, classify::kClassCount>> heatmap_grid(const CountTable& counts) {
    if (counts.cells.empty()) throw std::invalid_argument("heatmap_grid: empty table");
    int64_t mx = 0;
    for (const auto& row : counts.cells)
        for (int64_t c : row) mx = std::max(mx, c);
    std::vector<std::array<double, classify::kClassCount>> grid(counts.cells.size());
    for (size_t i = 0; i < counts.cells.size(); ++i)
        for (int k = 0; k < classify::kClassCount; ++k)
            grid[i][k] = mx > 0 ? static_cast<double>(counts.cells[i][k]) / static_cast<double>(mx)
                                : 0.0;
    return grid;
}

Eigen::Matrix<double, classify::kClassCount, classify::kClassCount> class_correlation(
    const CountTable& counts) {
    const int n = static_cast<int>(counts.cells.size());
    if (n < 2) throw std::invalid_argument("class_correlation: need >= 2 observation points");

    using Mat = Eigen::Matrix<double, classify::kClassCount, classify::kClassCount>;
    Mat r = Mat::Constant(kNaN);

    std::array<std::vector<double>, classify::kClassCount> centered;
    std::array<double, classify::kClassCount> norm{};
    for (int k = 0; k < classify::kClassCount; ++k) {
        double mean = 0.0;
        for (int i = 0; i < n; ++i) mean += static_cast<double>(counts.cells[i][k]);
        mean /= n;
        centered[k].resize(n);
        double ss = 0.0;
        for (int i = 0; i < n; ++i) {
            centered[k][i] = static_cast<double>(counts.cells[i][k]) - mean;
            ss += centered[k][i] * centered[k][i];
        }
        norm[k] = std::sqrt(ss);
    }
    for (int a = 0; a < classify::kClassCount; ++a)
        for (int b = 0; b < classify::kClassCount; ++b) {
            if (norm[a] <= 0.0 || norm[b] <= 0.0) continue;  // undefined stays NaN
            double dot = 0.0;
            for (int i = 0; i < n; ++i) dot += centered[a][i] * centered[b][i];
            r(a, b) = dot / (norm[a] * norm[b]);
        }
    return r;
}

std::vector<int> dbscan_labels(const std::vector<Eigen::Vector2d>& points, double eps,
                               int min_pts) {
    if (!(eps > 0.0)) throw std::invalid_argument("dbscan: eps must be positive");
    if (min_pts < 2) throw std::invalid_argument("dbscan: min_pts must be >= 2");

    const int n = static_cast<int>(points.size());
    // canonical processing order keeps labels independent of input order
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (points[a].x() != points[b].x()) return points[a].x() < points[b].x();
        if (points[a].y() != points[b].y()) return points[a].y() < points[b].y();
        return a < b;
    });

    const double eps2 = eps * eps;
    auto neighbors = [&](int p) {
        std::vector<int> out;
        for (int q : order)
            if ((points[p] - points[q]).squaredNorm() < eps2) out.push_back(q);
        return out;
    };

    constexpr int kUndef = -2;
    std::vector<int> label(n, kUndef);
    int cluster = 0;
    for (int p : order) {
        if (label[p] != kUndef) continue;
        auto nb = neighbors(p);
        if (static_cast<int>(nb.size()) < min_pts) {
            label[p] = -1;
            continue;
        }
        label[p] = cluster;
        std::vector<int> seeds = nb;
        for (size_t si = 0; si < seeds.size(); ++si) {
            int q = seeds[si];
            if (label[q] == -1) label[q] = cluster;
            if (label[q] != kUndef) continue;
            label[q] = cluster;
            auto qb = neighbors(q);
            if (static_cast<int>(qb.size()) >= min_pts)
                seeds.insert(seeds.end(), qb.begin(), qb.end());
        }
        ++cluster;
    }
    return label;
}

std::vector<CongestionRegion> congestion_clusters(
    const std::vector<std::vector<Eigen::Vector2d>>& positions_per_frame, double eps, int min_pts,
    double persist_min_s, double fps) {
    if (!(fps > 0.0)) throw std::invalid_argument("congestion_clusters: fps must be positive");

    struct Chain {
        int start_frame;
        int last_frame;
        Eigen::Vector2d last_centroid;
        Eigen::Vector2d centroid_sum;
        int frames;
        int max_size;
    };
    std::vector<Chain> open, closed;

    for (int f = 0; f < static_cast<int>(positions_per_frame.size()); ++f) {
        const auto& pts = positions_per_frame[f];
        auto labels = dbscan_labels(pts, eps, min_pts);
        int nclusters = 0;
        for (int l : labels) nclusters = std::max(nclusters, l + 1);

        std::vector<Eigen::Vector2d> centroids(nclusters, Eigen::Vector2d::Zero());
        std::vector<int> sizes(nclusters, 0);
        for (size_t i = 0; i < pts.size(); ++i) {
            if (labels[i] < 0) continue;
            centroids[labels[i]] += pts[i];
            sizes[labels[i]] += 1;
        }
        for (int c = 0; c < nclusters; ++c) centroids[c] /= std::max(1, sizes[c]);

        std::vector<bool> chain_taken(open.size(), false);
        std::vector<Chain> next_open;
        std::vector<int> cluster_chain(nclusters, -1);
        for (int c = 0; c < nclusters; ++c) {
            int best = -1;
            double best_d = eps;
            for (size_t k = 0; k < open.size(); ++k) {
                if (chain_taken[k] || open[k].last_frame != f - 1) continue;
                double d = (open[k].last_centroid - centroids[c]).norm();
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<int>(k);
                }
            }
            if (best >= 0) {
                chain_taken[best] = true;
                cluster_chain[c] = best;
            }
        }
        for (int c = 0; c < nclusters; ++c) {
            if (cluster_chain[c] >= 0) {
                Chain ch = open[cluster_chain[c]];
                ch.last_frame = f;
                ch.last_centroid = centroids[c];
                ch.centroid_sum += centroids[c];
                ch.frames += 1;
                ch.max_size = std::max(ch.max_size, sizes[c]);
                next_open.push_back(ch);
            } else {
                next_open.push_back({f, f, centroids[c], centroids[c], 1, sizes[c]});
            }
        }
        for (size_t k = 0; k < open.size(); ++k)
            if (!chain_taken[k]) closed.push_back(open[k]);
        open = std::move(next_open);
    }
    closed.insert(closed.end(), open.begin(), open.end());

    const long required = std::lround(std::ceil(persist_min_s * fps - 1e-9));
    std::vector<CongestionRegion> regions;
    for (const Chain& ch : closed) {
        long length = ch.last_frame - ch.start_frame + 1;
        if (length <= required) continue;
        CongestionRegion r;
        r.start_frame = ch.start_frame;
        r.end_frame = ch.last_frame;
        r.centroid = ch.centroid_sum / std::max(1, ch.frames);
        r.max_size = ch.max_size;
        regions.push_back(r);
    }
    std::stable_sort(regions.begin(), regions.end(),
                     [](const CongestionRegion& a, const CongestionRegion& b) {
                         if (a.start_frame != b.start_frame) return a.start_frame < b.start_frame;
                         if (a.centroid.x() != b.centroid.x()) return a.centroid.x() < b.centroid.x();
                         return a.centroid.y() < b.centroid.y();
                     });
    return regions;
}

MotReport evaluate_mot(const MotFrames& gt, const MotFrames& pred, double match_dist_thr) {
    if (gt.size() != pred.size())
        throw std::invalid_argument("evaluate_mot: frame-range mismatch between gt and pred");
    int64_t gt_total = 0;
    for (const auto& frame : gt) gt_total += static_cast<int64_t>(frame.size());
    if (gt_total == 0) throw std::invalid_argument("evaluate_mot: empty ground truth");

    constexpr double kInf = std::numeric_limits<double>::infinity();
    MotReport rep;
    rep.gt_total = gt_total;
    double iou_sum = 0.0;
    std::map<int, int> last_match;  // gt id -> pred id seen on the latest correspondence

    for (size_t f = 0; f < gt.size(); ++f) {
        const auto& g = gt[f];
        const auto& p = pred[f];

        std::vector<bool> g_used(g.size(), false), p_used(p.size(), false);
        std::vector<std::pair<int, int>> matches;

        // correspondences from the previous frame persist while still valid
        for (size_t i = 0; i < g.size(); ++i) {
            auto it = last_match.find(g[i].id);
            if (it == last_match.end()) continue;
            for (size_t j = 0; j < p.size(); ++j) {
                if (p_used[j] || p[j].id != it->second) continue;
                double d = std::hypot(g[i].box.cx - p[j].box.cx, g[i].box.cy - p[j].box.cy);
                if (d <= match_dist_thr) {
                    matches.emplace_back(static_cast<int>(i), static_cast<int>(j));
                    g_used[i] = true;
                    p_used[j] = true;
                }
                break;
            }
        }
        // optimal assignment over what remains
        std::vector<int> g_rest, p_rest;
        for (size_t i = 0; i < g.size(); ++i)
            if (!g_used[i]) g_rest.push_back(static_cast<int>(i));
        for (size_t j = 0; j < p.size(); ++j)
            if (!p_used[j]) p_rest.push_back(static_cast<int>(j));
        if (!g_rest.empty() && !p_rest.empty()) {
            std::vector<std::vector<double>> cost(g_rest.size(),
                                                  std::vector<double>(p_rest.size(), kInf));
            for (size_t a = 0; a < g_rest.size(); ++a)
                for (size_t b = 0; b < p_rest.size(); ++b) {
                    double d = std::hypot(g[g_rest[a]].box.cx - p[p_rest[b]].box.cx,
                                          g[g_rest[a]].box.cy - p[p_rest[b]].box.cy);
                    if (d <= match_dist_thr) cost[a][b] = d;
                }
            for (auto [a, b] : track::hungarian(cost)) {
                matches.emplace_back(g_rest[a], p_rest[b]);
                g_used[g_rest[a]] = true;
                p_used[p_rest[b]] = true;
            }
        }

        for (auto [i, j] : matches) {
            auto it = last_match.find(g[i].id);
            if (it != last_match.end() && it->second != p[j].id) rep.id_switches += 1;
            last_match[g[i].id] = p[j].id;
            rep.tp += 1;
            iou_sum += detect::rotated_iou(g[i].box, p[j].box);
        }
        for (size_t i = 0; i < g.size(); ++i)
            if (!g_used[i]) rep.fn += 1;
        for (size_t j = 0; j < p.size(); ++j)
            if (!p_used[j]) rep.fp += 1;
    }

    int64_t pred_total = rep.tp + rep.fp;
    rep.precision_defined = pred_total > 0;
    rep.precision = pred_total > 0 ? static_cast<double>(rep.tp) / static_cast<double>(pred_total)
                                   : 0.0;
    rep.recall = static_cast<double>(rep.tp) / static_cast<double>(gt_total);
    rep.f1 = (rep.precision + rep.recall) > 0.0
                 ? 2.0 * rep.precision * rep.recall / (rep.precision + rep.recall)
                 : 0.0;
    rep.mota = 1.0 - static_cast<double>(rep.fn + rep.fp + rep.id_switches) /
                         static_cast<double>(gt_total);
    rep.motp = rep.tp > 0 ? iou_sum / static_cast<double>(rep.tp) : 0.0;
    return rep;
}

DetectionPr evaluate_detections(const MotFrames& gt, const MotFrames& pred, double iou_thr) {
    if (gt.size() != pred.size())
        throw std::invalid_argument("evaluate_detections: frame-range mismatch");

    constexpr double kInf = std::numeric_limits<double>::infinity();
    DetectionPr pr;
    for (size_t f = 0; f < gt.size(); ++f) {
        const auto& g = gt[f];
        const auto& p = pred[f];
        if (g.empty() || p.empty()) {
            pr.fn += static_cast<int64_t>(g.size());
            pr.fp += static_cast<int64_t>(p.size());
            continue;
        }
        std::vector<std::vector<double>> cost(g.size(), std::vector<double>(p.size(), kInf));
        for (size_t i = 0; i < g.size(); ++i)
            for (size_t j = 0; j < p.size(); ++j) {
                double iou = detect::rotated_iou(g[i].box, p[j].box);
                if (iou >= iou_thr) cost[i][j] = 1.0 - iou;
            }
        auto pairs = track::hungarian(cost);
        pr.tp += static_cast<int64_t>(pairs.size());
        pr.fn += static_cast<int64_t>(g.size() - pairs.size());
        pr.fp += static_cast<int64_t>(p.size() - pairs.size());
    }
    int64_t pred_total = pr.tp + pr.fp;
    int64_t gt_total = pr.tp + pr.fn;
    pr.precision = pred_total > 0 ? static_cast<double>(pr.tp) / static_cast<double>(pred_total) : 0.0;
    pr.recall = gt_total > 0 ? static_cast<double>(pr.tp) / static_cast<double>(gt_total) : 0.0;
    pr.f1 = (pr.precision + pr.recall) > 0.0
                ? 2.0 * pr.precision * pr.recall / (pr.precision + pr.recall)
                : 0.0;
    return pr;
}

}  // namespace nadir::analytics

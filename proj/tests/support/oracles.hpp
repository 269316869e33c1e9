#pragma once

// Independent reference implementations used as test oracles. These stay
// deliberately naive and separate from the library code paths they check.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "nadir/detect.hpp"
#include "nadir/imaging.hpp"

namespace oracles {

// ---- assignment: first-found best over all injections, enumerated in
// lexicographic order so ties resolve exactly like the contract demands
inline void enumerate_assignments(const std::vector<std::vector<double>>& cost, size_t row,
                                  std::vector<int>& current, std::vector<bool>& col_used,
                                  std::vector<std::vector<int>>& out, int target_card, int card) {
    const size_t n = cost.size();
    const size_t m = cost.empty() ? 0 : cost[0].size();
    if (row == n) {
        if (card == target_card) out.push_back(current);
        return;
    }
    // unmatched rows are allowed only when cardinality still reachable
    for (size_t j = 0; j < m; ++j) {
        if (col_used[j] || cost[row][j] == std::numeric_limits<double>::infinity()) continue;
        col_used[j] = true;
        current[row] = static_cast<int>(j);
        enumerate_assignments(cost, row + 1, current, col_used, out, target_card, card + 1);
        col_used[j] = false;
    }
    current[row] = -1;
    enumerate_assignments(cost, row + 1, current, col_used, out, target_card, card);
}

inline std::vector<std::pair<int, int>> brute_force_assignment(
    const std::vector<std::vector<double>>& cost) {
    const size_t n = cost.size();
    const size_t m = cost.empty() ? 0 : cost[0].size();
    if (n == 0 || m == 0) return {};

    // max achievable cardinality over finite edges (greedy augmenting search)
    int best_card = 0;
    {
        std::vector<std::vector<int>> adj(n);
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < m; ++j)
                if (cost[i][j] != std::numeric_limits<double>::infinity())
                    adj[i].push_back(static_cast<int>(j));
        std::vector<int> match_col(m, -1);
        std::function<bool(size_t, std::vector<bool>&)> try_kuhn =
            [&](size_t v, std::vector<bool>& used) -> bool {
            for (int to : adj[v]) {
                if (used[to]) continue;
                used[to] = true;
                if (match_col[to] < 0 || try_kuhn(match_col[to], used)) {
                    match_col[to] = static_cast<int>(v);
                    return true;
                }
            }
            return false;
        };
        for (size_t i = 0; i < n; ++i) {
            std::vector<bool> used(m, false);
            if (try_kuhn(i, used)) best_card++;
        }
    }

    std::vector<std::vector<int>> candidates;
    std::vector<int> current(n, -1);
    std::vector<bool> col_used(m, false);
    enumerate_assignments(cost, 0, current, col_used, candidates, best_card, 0);

    std::vector<int> best;
    double best_cost = std::numeric_limits<double>::infinity();
    for (const auto& cand : candidates) {
        double c = 0.0;
        for (size_t i = 0; i < n; ++i)
            if (cand[i] >= 0) c += cost[i][cand[i]];
        if (c < best_cost - 1e-9) {
            best_cost = c;
            best = cand;
        }
        // candidates arrive in lexicographic order (unmatched sorts last),
        // so on ties the first stays
    }
    std::vector<std::pair<int, int>> pairs;
    for (size_t i = 0; i < n; ++i)
        if (!best.empty() && best[i] >= 0) pairs.emplace_back(static_cast<int>(i), best[i]);
    return pairs;
}

// ---- naive DBSCAN in the same canonical order the library documents
inline std::vector<int> naive_dbscan(const std::vector<Eigen::Vector2d>& pts, double eps,
                                     int min_pts) {
    const int n = static_cast<int>(pts.size());
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (pts[a].x() != pts[b].x()) return pts[a].x() < pts[b].x();
        if (pts[a].y() != pts[b].y()) return pts[a].y() < pts[b].y();
        return a < b;
    });
    auto region = [&](int p) {
        std::vector<int> nb;
        for (int q : order)
            if ((pts[p] - pts[q]).norm() < eps) nb.push_back(q);
        return nb;
    };
    std::vector<int> label(n, -2);
    int cluster = 0;
    for (int p : order) {
        if (label[p] != -2) continue;
        auto nb = region(p);
        if (static_cast<int>(nb.size()) < min_pts) {
            label[p] = -1;
            continue;
        }
        label[p] = cluster;
        for (size_t k = 0; k < nb.size(); ++k) {
            int q = nb[k];
            if (label[q] == -1) label[q] = cluster;
            if (label[q] != -2) continue;
            label[q] = cluster;
            auto nb2 = region(q);
            if (static_cast<int>(nb2.size()) >= min_pts) nb.insert(nb.end(), nb2.begin(), nb2.end());
        }
        ++cluster;
    }
    return label;
}

// ---- axis-aligned rectangle IoU from the closed-form overlap
inline double rect_iou(double cx1, double cy1, double w1, double h1, double cx2, double cy2,
                       double w2, double h2) {
    double ix = std::max(0.0, std::min(cx1 + w1 / 2, cx2 + w2 / 2) -
                                  std::max(cx1 - w1 / 2, cx2 - w2 / 2));
    double iy = std::max(0.0, std::min(cy1 + h1 / 2, cy2 + h2 / 2) -
                                  std::max(cy1 - h1 / 2, cy2 - h2 / 2));
    double inter = ix * iy;
    double uni = w1 * h1 + w2 * h2 - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

// ---- direct Eq.-style NCC without integral images or caching
inline std::optional<double> naive_ncc(const nadir::imaging::Frame& f,
                                       const nadir::detect::Template& t, int x, int y) {
    double tmean = 0.0;
    for (float v : t.data) tmean += v;
    tmean /= static_cast<double>(t.data.size());
    double pmean = 0.0;
    for (int v = 0; v < t.height; ++v)
        for (int u = 0; u < t.width; ++u) pmean += f.at(x + u, y + v);
    pmean /= static_cast<double>(t.data.size());
    double num = 0.0, dp = 0.0, dt = 0.0;
    for (int v = 0; v < t.height; ++v)
        for (int u = 0; u < t.width; ++u) {
            double a = f.at(x + u, y + v) - pmean;
            double b = t.at(u, v) - tmean;
            num += a * b;
            dp += a * a;
            dt += b * b;
        }
    if (dp <= 1e-6 * static_cast<double>(t.data.size())) return std::nullopt;
    return num / std::sqrt(dp * dt);
}

// ---- greedy NMS trace: sort, keep, strike overlaps
inline std::vector<size_t> greedy_nms_trace(const std::vector<nadir::detect::Detection>& dets,
                                            double thr) {
    std::vector<size_t> idx(dets.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
        if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
        if (dets[a].box.cy != dets[b].box.cy) return dets[a].box.cy < dets[b].box.cy;
        return dets[a].box.cx < dets[b].box.cx;
    });
    std::vector<bool> dead(dets.size(), false);
    std::vector<size_t> keep;
    for (size_t a : idx) {
        if (dead[a]) continue;
        keep.push_back(a);
        for (size_t b : idx) {
            if (dead[b] || b == a) continue;
            if (nadir::detect::rotated_iou(dets[a].box, dets[b].box) > thr) dead[b] = true;
        }
    }
    return keep;
}

// ---- exhaustive between-class variance search, class 0 below threshold
inline int exhaustive_otsu(const nadir::imaging::Frame& f) {
    long hist[256] = {0};
    for (float v : f.data) {
        int b = std::max(0, std::min(255, static_cast<int>(std::lround(v))));
        hist[b]++;
    }
    double total = static_cast<double>(f.data.size());
    double best_var = -1.0;
    int best_t = 0;
    for (int t = 0; t < 256; ++t) {
        double c0 = 0, m0 = 0, c1 = 0, m1 = 0;
        for (int i = 0; i < 256; ++i) {
            if (i < t) {
                c0 += hist[i];
                m0 += static_cast<double>(i) * hist[i];
            } else {
                c1 += hist[i];
                m1 += static_cast<double>(i) * hist[i];
            }
        }
        if (c0 == 0 || c1 == 0) continue;
        double w0 = c0 / total, w1 = c1 / total;
        double mu0 = m0 / c0, mu1 = m1 / c1;
        double var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (var > best_var + 1e-12) {
            best_var = var;
            best_t = t;
        }
    }
    return best_t;
}

// ---- plain histogram equalization: round(255 * cdf / n)
inline nadir::imaging::Frame plain_hist_equalization(const nadir::imaging::Frame& f) {
    long hist[256] = {0};
    for (float v : f.data) {
        int b = std::max(0, std::min(255, static_cast<int>(std::lround(v))));
        hist[b]++;
    }
    double n = static_cast<double>(f.data.size());
    float lut[256];
    double cdf = 0.0;
    for (int i = 0; i < 256; ++i) {
        cdf += hist[i];
        lut[i] = static_cast<float>(std::round(255.0 * cdf / n));
    }
    nadir::imaging::Frame out(f.width, f.height);
    for (size_t i = 0; i < f.data.size(); ++i) {
        int b = std::max(0, std::min(255, static_cast<int>(std::lround(f.data[i]))));
        out.data[i] = lut[b];
    }
    return out;
}

}  // namespace oracles

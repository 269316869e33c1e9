#include "nadir/track.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nadir::track {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

NoiseModel::NoiseModel() {
    H.setZero();
    H(0, 0) = 1.0;
    H(1, 1) = 1.0;
}

NoiseModel NoiseModel::constant_velocity(double dt, double q, double meas_sigma) {
    if (!(meas_sigma > 0.0)) throw std::invalid_argument("NoiseModel: meas_sigma must be positive");
    NoiseModel m;
    m.dt = dt;
    m.F = Eigen::Matrix4d::Identity();
    m.F(0, 2) = dt;
    m.F(1, 3) = dt;
    double dt2 = dt * dt, dt3 = dt2 * dt, dt4 = dt3 * dt;
    m.Q.setZero();
    for (int axis = 0; axis < 2; ++axis) {
        int p = axis, v = axis + 2;
        m.Q(p, p) = q * dt4 / 4.0;
        m.Q(p, v) = q * dt3 / 2.0;
        m.Q(v, p) = q * dt3 / 2.0;
        m.Q(v, v) = q * dt2;
    }
    m.R = meas_sigma * meas_sigma * Eigen::Matrix2d::Identity();
    return m;
}

KalmanState kf_predict(const KalmanState& s, const NoiseModel& m) {
    KalmanState out;
    out.x = m.F * s.x;
    out.P = m.F * s.P * m.F.transpose() + m.Q;
    out.P = ((out.P + out.P.transpose()) / 2.0).eval();
    return out;
}

KalmanState kf_update(const KalmanState& s, const Eigen::Vector2d& z, const NoiseModel& m) {
    if (!z.allFinite()) throw std::invalid_argument("kf_update: non-finite measurement");
    Eigen::Matrix2d S = m.H * s.P * m.H.transpose() + m.R;
    double det = S.determinant();
    if (!(std::abs(det) > 1e-12))
        throw std::runtime_error("kf_update: singular innovation covariance");
    Eigen::Matrix<double, 4, 2> K = s.P * m.H.transpose() * S.inverse();
    KalmanState out;
    out.x = s.x + K * (z - m.H * s.x);
    out.P = (Eigen::Matrix4d::Identity() - K * m.H) * s.P;
    out.P = ((out.P + out.P.transpose()) / 2.0).eval();
    return out;
}

namespace {

struct LapResult {
    std::vector<int> row_to_col;  // -1 for unmatched
    int cardinality = 0;
    double cost = 0.0;
};

// Min-cost maximum-cardinality matching via successive shortest augmenting
// paths. Every free row seeds the search so each augmentation takes the
// globally cheapest path, which keeps the matching min-cost at every
// cardinality. Bellman-Ford handles the negative reverse edges.
LapResult solve_lap(const std::vector<std::vector<double>>& cost,
                    const std::vector<int>& rows, const std::vector<int>& cols) {
    const int n = static_cast<int>(rows.size());
    const int m = static_cast<int>(cols.size());
    LapResult res;
    res.row_to_col.assign(n, -1);
    if (n == 0 || m == 0) return res;

    std::vector<int> col_to_row(m, -1);
    while (true) {
        std::vector<double> dist_row(n, kInf), dist_col(m, kInf);
        std::vector<int> par_col(m, -1);  // row whose forward edge reaches this column
        for (int i = 0; i < n; ++i)
            if (res.row_to_col[i] < 0) dist_row[i] = 0.0;

        bool changed = true;
        while (changed) {
            changed = false;
            for (int i = 0; i < n; ++i) {
                if (dist_row[i] == kInf) continue;
                const double base = dist_row[i];
                for (int j = 0; j < m; ++j) {
                    double c = cost[rows[i]][cols[j]];
                    if (c == kInf) continue;
                    if (res.row_to_col[i] == j) continue;  // matched edge is reverse only
                    double nd = base + c;
                    if (nd < dist_col[j]) {
                        dist_col[j] = nd;
                        par_col[j] = i;
                        int owner = col_to_row[j];
                        if (owner >= 0) {
                            double back = nd - cost[rows[owner]][cols[j]];
                            if (back < dist_row[owner]) {
                                dist_row[owner] = back;
                                changed = true;
                            }
                        }
                    }
                }
            }
        }
        // cheapest reachable free column; ties on the smaller index
        int best = -1;
        for (int j = 0; j < m; ++j) {
            if (col_to_row[j] >= 0 || dist_col[j] == kInf) continue;
            if (best < 0 || dist_col[j] < dist_col[best]) best = j;
        }
        if (best < 0) break;
        // walk parents back to a free row, flipping matched edges
        int j = best;
        while (true) {
            int i = par_col[j];
            int prev = res.row_to_col[i];
            res.row_to_col[i] = j;
            col_to_row[j] = i;
            if (prev < 0) break;
            j = prev;
        }
    }

    for (int i = 0; i < n; ++i) {
        if (res.row_to_col[i] >= 0) {
            res.cardinality++;
            res.cost += cost[rows[i]][cols[res.row_to_col[i]]];
        }
    }
    return res;
}

}  // namespace

std::vector<std::pair<int, int>> hungarian(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    const int m = n > 0 ? static_cast<int>(cost[0].size()) : 0;
    if (n == 0 || m == 0) return {};
    for (const auto& row : cost) {
        if (static_cast<int>(row.size()) != m)
            throw std::invalid_argument("hungarian: ragged cost matrix");
        for (double c : row)
            if (std::isnan(c) || (c != kInf && !std::isfinite(c)))
                throw std::invalid_argument("hungarian: costs must be finite or +infinity");
    }

    std::vector<int> all_rows(n), all_cols(m);
    for (int i = 0; i < n; ++i) all_rows[i] = i;
    for (int j = 0; j < m; ++j) all_cols[j] = j;
    LapResult full = solve_lap(cost, all_rows, all_cols);

    const double eps = 1e-9 * std::max(1.0, std::abs(full.cost));

    // Fix rows in order to the smallest column that preserves both the
    // matching size and the optimal total cost.
    std::vector<std::pair<int, int>> fixed;
    std::vector<bool> col_used(m, false);
    double fixed_cost = 0.0;
    int remaining = full.cardinality;

    for (int i = 0; i < n && remaining > 0; ++i) {
        std::vector<int> tail_rows;
        for (int r = i + 1; r < n; ++r) tail_rows.push_back(r);

        bool assigned = false;
        for (int j = 0; j < m; ++j) {
            if (col_used[j] || cost[i][j] == kInf) continue;
            std::vector<int> avail_cols;
            for (int c = 0; c < m; ++c)
                if (!col_used[c] && c != j) avail_cols.push_back(c);
            LapResult sub = solve_lap(cost, tail_rows, avail_cols);
            if (sub.cardinality == remaining - 1 &&
                std::abs(fixed_cost + cost[i][j] + sub.cost - full.cost) <= eps) {
                fixed.emplace_back(i, j);
                col_used[j] = true;
                fixed_cost += cost[i][j];
                remaining--;
                assigned = true;
                break;
            }
        }
        if (!assigned) {
            // row i is unmatched in every optimal assignment of this size
            continue;
        }
    }
    return fixed;
}

std::string to_string(TrackStatus s) {
    switch (s) {
        case TrackStatus::tentative: return "tentative";
        case TrackStatus::confirmed: return "confirmed";
        case TrackStatus::terminated: return "terminated";
    }
    return "tentative";
}

StepResult Tracker::step(const std::vector<detect::Detection>& dets, int frame_index) {
    if (frame_index <= last_frame_)
        throw std::invalid_argument("Tracker::step: frame_index must be strictly increasing");
    last_frame_ = frame_index;

    StepResult result;
    std::vector<int> live;
    for (int i = 0; i < static_cast<int>(tracks_.size()); ++i)
        if (tracks_[i].status != TrackStatus::terminated) live.push_back(i);

    for (int idx : live) tracks_[idx].state = kf_predict(tracks_[idx].state, params_.model);

    std::vector<std::vector<double>> cost(live.size(), std::vector<double>(dets.size(), kInf));
    for (size_t li = 0; li < live.size(); ++li) {
        Eigen::Vector2d p = tracks_[live[li]].position();
        for (size_t dj = 0; dj < dets.size(); ++dj) {
            Eigen::Vector2d z(dets[dj].box.cx, dets[dj].box.cy);
            double d = (p - z).norm();
            if (d <= params_.gate) cost[li][dj] = d;
        }
    }
    auto pairs = dets.empty() || live.empty() ? std::vector<std::pair<int, int>>{}
                                              : hungarian(cost);

    std::vector<bool> track_matched(live.size(), false), det_matched(dets.size(), false);
    for (auto [li, dj] : pairs) {
        Track& tr = tracks_[live[li]];
        const detect::Detection& d = dets[dj];
        tr.state = kf_update(tr.state, Eigen::Vector2d(d.box.cx, d.box.cy), params_.model);
        tr.hits += 1;
        tr.misses = 0;
        if (tr.status == TrackStatus::tentative && tr.hits >= params_.confirm_hits)
            tr.status = TrackStatus::confirmed;
        tr.last_box = d.box;
        tr.last_box.cx = tr.state.x(0);
        tr.last_box.cy = tr.state.x(1);
        tr.history.push_back({frame_index, tr.state.x, false, tr.status, tr.last_box.w,
                              tr.last_box.h, tr.last_box.theta});
        track_matched[li] = true;
        det_matched[dj] = true;
        result.matches.emplace_back(tr.id, static_cast<int>(dj));
    }

    for (size_t li = 0; li < live.size(); ++li) {
        if (track_matched[li]) continue;
        Track& tr = tracks_[live[li]];
        tr.misses += 1;
        tr.hits = 0;
        if (tr.misses > params_.max_misses) {
            tr.status = TrackStatus::terminated;
            continue;
        }
        tr.last_box.cx = tr.state.x(0);
        tr.last_box.cy = tr.state.x(1);
        tr.history.push_back({frame_index, tr.state.x, true, tr.status, tr.last_box.w,
                              tr.last_box.h, tr.last_box.theta});
    }

    for (size_t dj = 0; dj < dets.size(); ++dj) {
        if (det_matched[dj]) continue;
        const detect::Detection& d = dets[dj];
        Track tr;
        tr.id = next_id_++;
        tr.state.x = Eigen::Vector4d(d.box.cx, d.box.cy, 0.0, 0.0);
        tr.state.P = Eigen::Vector4d(params_.init_pos_var, params_.init_pos_var,
                                     params_.init_vel_var, params_.init_vel_var)
                         .asDiagonal();
        tr.hits = 1;
        tr.misses = 0;
        tr.status = tr.hits >= params_.confirm_hits ? TrackStatus::confirmed
                                                    : TrackStatus::tentative;
        tr.last_box = d.box;
        tr.history.push_back({frame_index, tr.state.x, false, tr.status, tr.last_box.w,
                              tr.last_box.h, tr.last_box.theta});
        result.spawned.push_back(tr.id);
        tracks_.push_back(std::move(tr));
    }
    return result;
}

}  // namespace nadir::track

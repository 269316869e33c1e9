#include "nadir/geometry.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nadir::geometry {

namespace {

Eigen::Matrix3d normalize_scale(const Eigen::Matrix3d& m) {
    if (std::abs(m(2, 2)) > 1e-12) return m / m(2, 2);
    return m;
}

// similarity transform: zero centroid, mean distance sqrt(2)
Eigen::Matrix3d hartley_transform(const std::vector<Eigen::Vector2d>& pts) {
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (const auto& p : pts) centroid += p;
    centroid /= static_cast<double>(pts.size());
    double mean_dist = 0.0;
    for (const auto& p : pts) mean_dist += (p - centroid).norm();
    mean_dist /= static_cast<double>(pts.size());
    if (mean_dist < 1e-12)
        throw std::invalid_argument("estimate_homography: coincident points");
    double s = std::sqrt(2.0) / mean_dist;
    Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
    t(0, 0) = s;
    t(1, 1) = s;
    t(0, 2) = -s * centroid.x();
    t(1, 2) = -s * centroid.y();
    return t;
}

bool collinear(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
    Eigen::Vector2d u = b - a, v = c - a;
    double cross = u.x() * v.y() - u.y() * v.x();
    double scale = std::max({u.norm() * v.norm(), 1e-12});
    return std::abs(cross) / scale < 1e-9;
}

// looks for a collinear triple so degeneracy errors can name the points
std::string find_collinear_triple(const std::vector<Eigen::Vector2d>& pts, const char* label) {
    size_t n = pts.size();
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j)
            for (size_t k = j + 1; k < n; ++k)
                if (collinear(pts[i], pts[j], pts[k])) {
                    std::ostringstream os;
                    os << label << " points " << i << ", " << j << ", " << k << " are collinear";
                    return os.str();
                }
    return {};
}

}  // namespace

Homography Homography::from_matrix(const Eigen::Matrix3d& m) {
    Homography h;
    h.h = normalize_scale(m);
    if (std::abs(h.h.determinant()) < 1e-12)
        throw std::invalid_argument("Homography: matrix is singular");
    return h;
}

Homography Homography::inverse() const {
    return from_matrix(h.inverse().eval());
}

HomographyEstimate estimate_homography(const std::vector<Correspondence>& pairs) {
    const size_t n = pairs.size();
    if (n < 4) throw std::invalid_argument("estimate_homography: need at least 4 pairs");

    std::vector<Eigen::Vector2d> px, wd;
    px.reserve(n);
    wd.reserve(n);
    for (const auto& c : pairs) {
        px.push_back(c.pixel);
        wd.push_back(c.world);
    }

    Eigen::Matrix3d tp = hartley_transform(px);
    Eigen::Matrix3d tw = hartley_transform(wd);

    Eigen::MatrixXd a(2 * n, 9);
    for (size_t i = 0; i < n; ++i) {
        Eigen::Vector3d p = tp * Eigen::Vector3d(px[i].x(), px[i].y(), 1.0);
        Eigen::Vector3d w = tw * Eigen::Vector3d(wd[i].x(), wd[i].y(), 1.0);
        double x = p.x() / p.z(), y = p.y() / p.z();
        double u = w.x() / w.z(), v = w.y() / w.z();
        a.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
        a.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    // rank < 8 means more than a one-dimensional null space: degenerate input
    if (sv(7) < 1e-9 * sv(0)) {
        std::string who = find_collinear_triple(px, "pixel");
        if (who.empty()) who = find_collinear_triple(wd, "world");
        if (who.empty()) who = "points are in a degenerate configuration";
        throw std::invalid_argument("estimate_homography: " + who);
    }

    Eigen::VectorXd hv = svd.matrixV().col(8);
    Eigen::Matrix3d hn;
    hn << hv(0), hv(1), hv(2), hv(3), hv(4), hv(5), hv(6), hv(7), hv(8);
    Eigen::Matrix3d m = tw.inverse() * hn * tp;

    HomographyEstimate est;
    est.h = Homography::from_matrix(m);
    double se = 0.0;
    for (const auto& c : pairs) {
        Eigen::Vector2d proj = project(est.h, c.pixel);
        se += (proj - c.world).squaredNorm();
    }
    est.reprojection_rms = std::sqrt(se / static_cast<double>(n));
    return est;
}

Eigen::Vector2d project(const Homography& h, const Eigen::Vector2d& p) {
    Eigen::Vector3d q = h.h * Eigen::Vector3d(p.x(), p.y(), 1.0);
    if (std::abs(q.z()) <= 1e-12)
        throw std::runtime_error("project: point maps to infinity");
    return {q.x() / q.z(), q.y() / q.z()};
}

std::vector<SpeedSample> estimate_speed(
    const std::vector<std::pair<int, Eigen::Vector2d>>& pixel_track, const Homography& h,
    double fps, int window) {
    if (pixel_track.size() < 2)
        throw std::invalid_argument("estimate_speed: need at least 2 positions");
    if (!(fps > 0.0)) throw std::invalid_argument("estimate_speed: fps must be positive");
    if (window < 1) throw std::invalid_argument("estimate_speed: window must be >= 1");

    std::vector<Eigen::Vector2d> world;
    world.reserve(pixel_track.size());
    for (const auto& [frame, p] : pixel_track) world.push_back(project(h, p));

    std::vector<SpeedSample> out;
    size_t j = 0;
    double path_from_j = 0.0;  // world path length from sample j to the current sample
    for (size_t i = 1; i < pixel_track.size(); ++i) {
        path_from_j += (world[i] - world[i - 1]).norm();
        // largest j with frame[i] - frame[j] >= window
        while (j + 1 < i && pixel_track[i].first - pixel_track[j + 1].first >= window) {
            path_from_j -= (world[j + 1] - world[j]).norm();
            ++j;
        }
        int span = pixel_track[i].first - pixel_track[j].first;
        if (span < window) continue;  // window has not filled yet
        double dt = span / fps;
        out.push_back({pixel_track[i].first, path_from_j / dt * 3.6});
    }
    return out;
}

std::vector<Correspondence> load_calibration(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("calibration: cannot open " + path);
    std::vector<Correspondence> pairs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream is(line);
        Correspondence c;
        if (!(is >> c.pixel.x() >> c.pixel.y() >> c.world.x() >> c.world.y()))
            throw std::runtime_error("calibration: bad line in " + path + ": " + line);
        pairs.push_back(c);
    }
    return pairs;
}

void save_calibration(const std::string& path, const std::vector<Correspondence>& pairs) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("calibration: cannot write " + path);
    out.precision(12);
    for (const auto& c : pairs)
        out << c.pixel.x() << " " << c.pixel.y() << " " << c.world.x() << " " << c.world.y()
            << "\n";
}

}  // namespace nadir::geometry

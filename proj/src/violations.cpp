#include "nadir/violations.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace nadir::violations {

using nlohmann::json;

std::string to_string(ZoneKind k) {
    switch (k) {
        case ZoneKind::no_parking: return "no_parking";
        case ZoneKind::crosswalk: return "crosswalk";
        case ZoneKind::uturn_approach: return "uturn_approach";
        case ZoneKind::lane_region: return "lane_region";
    }
    return "no_parking";
}

ZoneKind zone_kind_from_string(const std::string& s) {
    if (s == "no_parking") return ZoneKind::no_parking;
    if (s == "crosswalk") return ZoneKind::crosswalk;
    if (s == "uturn_approach") return ZoneKind::uturn_approach;
    if (s == "lane_region") return ZoneKind::lane_region;
    throw std::invalid_argument("unknown zone kind: " + s);
}

std::string to_string(ViolationKind k) {
    switch (k) {
        case ViolationKind::illegal_lane_change: return "illegal_lane_change";
        case ViolationKind::double_parking: return "double_parking";
        case ViolationKind::crosswalk_obstruction: return "crosswalk_obstruction";
    }
    return "double_parking";
}

ViolationKind violation_kind_from_string(const std::string& s) {
    if (s == "illegal_lane_change") return ViolationKind::illegal_lane_change;
    if (s == "double_parking") return ViolationKind::double_parking;
    if (s == "crosswalk_obstruction") return ViolationKind::crosswalk_obstruction;
    throw std::invalid_argument("unknown violation kind: " + s);
}

bool point_in_polygon(const Eigen::Vector2d& p, const std::vector<Eigen::Vector2d>& polygon) {
    const size_t n = polygon.size();
    if (n < 3) throw std::invalid_argument("point_in_polygon: polygon needs >= 3 vertices");

    // boundary counts as inside
    for (size_t i = 0; i < n; ++i) {
        const Eigen::Vector2d& a = polygon[i];
        const Eigen::Vector2d& b = polygon[(i + 1) % n];
        Eigen::Vector2d ab = b - a, ap = p - a;
        double len2 = ab.squaredNorm();
        double cross = ab.x() * ap.y() - ab.y() * ap.x();
        if (cross * cross <= 1e-18 * std::max(1.0, len2)) {
            double t = len2 > 0.0 ? ab.dot(ap) / len2 : 0.0;
            if (t >= -1e-12 && t <= 1.0 + 1e-12) {
                Eigen::Vector2d closest = a + t * ab;
                if ((p - closest).squaredNorm() <= 1e-18) return true;
            }
        }
    }

    bool inside = false;
    for (size_t i = 0; i < n; ++i) {
        const Eigen::Vector2d& a = polygon[i];
        const Eigen::Vector2d& b = polygon[(i + 1) % n];
        if ((a.y() > p.y()) != (b.y() > p.y())) {
            double xint = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
            if (p.x() < xint) inside = !inside;
        }
    }
    return inside;
}

namespace {

// Maximal runs of a per-sample flag, with gaps of at most bridge_gap false
// samples merged when flanked by true samples.
struct Run {
    size_t first, last;  // sample indices
};

std::vector<Run> flag_runs(const std::vector<bool>& flags, int bridge_gap) {
    std::vector<Run> raw;
    size_t i = 0;
    while (i < flags.size()) {
        if (!flags[i]) {
            ++i;
            continue;
        }
        size_t start = i;
        while (i < flags.size() && flags[i]) ++i;
        raw.push_back({start, i - 1});
    }
    std::vector<Run> merged;
    for (const Run& r : raw) {
        if (!merged.empty() && r.first - merged.back().last - 1 <= static_cast<size_t>(bridge_gap))
            merged.back().last = r.last;
        else
            merged.push_back(r);
    }
    return merged;
}

std::vector<ViolationEvent> dwell_events(const std::vector<TrackStates>& tracks,
                                         const std::vector<Zone>& zones, ZoneKind zone_kind,
                                         ViolationKind violation_kind, const DwellParams& params,
                                         double fps) {
    if (!(fps > 0.0)) throw std::invalid_argument("dwell detection: fps must be positive");
    const long required = std::lround(std::ceil(params.dwell_min_s * fps - 1e-9));

    std::vector<ViolationEvent> events;
    for (const auto& zone : zones) {
        if (zone.kind != zone_kind) continue;
        for (const auto& track : tracks) {
            std::vector<bool> flags(track.samples.size());
            for (size_t i = 0; i < track.samples.size(); ++i) {
                const TrackSample& s = track.samples[i];
                flags[i] = s.speed_kmh < params.v_stop_kmh && point_in_polygon(s.pos, zone.polygon);
            }
            for (const Run& run : flag_runs(flags, params.bridge_gap)) {
                int start_frame = track.samples[run.first].frame;
                int end_frame = track.samples[run.last].frame;
                long length = end_frame - start_frame + 1;
                if (length > required) {
                    ViolationEvent e;
                    e.track_id = track.track_id;
                    e.kind = violation_kind;
                    e.zone_id = zone.id;
                    e.start_frame = start_frame;
                    e.end_frame = end_frame;
                    e.evidence = static_cast<double>(length) / fps;
                    e.evidence_name = "dwell_seconds";
                    events.push_back(e);
                }
            }
        }
    }
    sort_events(events);
    return events;
}

double point_to_segment_dist(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                             const Eigen::Vector2d& b) {
    Eigen::Vector2d ab = b - a;
    double len2 = ab.squaredNorm();
    if (len2 <= 0.0) return (p - a).norm();
    double t = std::min(1.0, std::max(0.0, ab.dot(p - a) / len2));
    return (p - (a + t * ab)).norm();
}

double point_to_polyline_dist(const Eigen::Vector2d& p, const std::vector<Eigen::Vector2d>& line) {
    double best = std::numeric_limits<double>::infinity();
    if (line.size() == 1) return (p - line[0]).norm();
    for (size_t i = 0; i + 1 < line.size(); ++i)
        best = std::min(best, point_to_segment_dist(p, line[i], line[i + 1]));
    return best;
}

int nearest_lane(const Eigen::Vector2d& p, const LaneGeometry& lanes) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(lanes.centerlines.size()); ++i) {
        double d = point_to_polyline_dist(p, lanes.centerlines[i]);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

}  // namespace

std::vector<ViolationEvent> detect_double_parking(const std::vector<TrackStates>& tracks,
                                                  const std::vector<Zone>& zones,
                                                  const DwellParams& params, double fps) {
    return dwell_events(tracks, zones, ZoneKind::no_parking, ViolationKind::double_parking, params,
                        fps);
}

std::vector<ViolationEvent> detect_crosswalk_obstruction(const std::vector<TrackStates>& tracks,
                                                         const std::vector<Zone>& zones,
                                                         const DwellParams& params, double fps) {
    return dwell_events(tracks, zones, ZoneKind::crosswalk, ViolationKind::crosswalk_obstruction,
                        params, fps);
}

std::vector<ViolationEvent> detect_lane_change_violation(const std::vector<TrackStates>& tracks,
                                                         const Zone& uturn_zone,
                                                         const LaneGeometry& lanes, double d_max) {
    if (lanes.centerlines.empty())
        throw std::invalid_argument("detect_lane_change_violation: missing lane geometry");
    if (uturn_zone.kind != ZoneKind::uturn_approach || !uturn_zone.axis_point ||
        !uturn_zone.axis_dir)
        throw std::invalid_argument(
            "detect_lane_change_violation: zone must be a uturn_approach with an axis");
    Eigen::Vector2d axis = uturn_zone.axis_dir->normalized();

    std::vector<ViolationEvent> events;
    for (const auto& track : tracks) {
        int prev_lane = -1;
        for (const auto& s : track.samples) {
            int lane = nearest_lane(s.pos, lanes);
            if (prev_lane >= 0 && lane != prev_lane &&
                point_in_polygon(s.pos, uturn_zone.polygon)) {
                double d = (s.pos - *uturn_zone.axis_point).dot(axis);
                if (d >= 0.0 && d < d_max) {
                    ViolationEvent e;
                    e.track_id = track.track_id;
                    e.kind = ViolationKind::illegal_lane_change;
                    e.zone_id = uturn_zone.id;
                    e.start_frame = s.frame;
                    e.end_frame = s.frame;
                    e.evidence = d;
                    e.evidence_name = "distance_m";
                    events.push_back(e);
                }
            }
            prev_lane = lane;
        }
    }
    sort_events(events);
    return events;
}

void sort_events(std::vector<ViolationEvent>& events) {
    std::stable_sort(events.begin(), events.end(),
                     [](const ViolationEvent& a, const ViolationEvent& b) {
                         if (a.start_frame != b.start_frame) return a.start_frame < b.start_frame;
                         if (a.track_id != b.track_id) return a.track_id < b.track_id;
                         if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind);
                         return a.zone_id < b.zone_id;
                     });
}

std::string event_to_json_line(const ViolationEvent& e) {
    json j;
    j["track_id"] = e.track_id;
    j["kind"] = to_string(e.kind);
    j["zone_id"] = e.zone_id;
    j["start_frame"] = e.start_frame;
    j["end_frame"] = e.end_frame;
    j["evidence"] = {{e.evidence_name, e.evidence}};
    return j.dump();
}

ViolationEvent event_from_json_line(const std::string& line) {
    json j = json::parse(line);
    ViolationEvent e;
    e.track_id = j.at("track_id").get<int>();
    e.kind = violation_kind_from_string(j.at("kind").get<std::string>());
    e.zone_id = j.at("zone_id").get<std::string>();
    e.start_frame = j.at("start_frame").get<int>();
    e.end_frame = j.at("end_frame").get<int>();
    const auto& ev = j.at("evidence");
    for (auto it = ev.begin(); it != ev.end(); ++it) {
        e.evidence_name = it.key();
        e.evidence = it.value().get<double>();
    }
    return e;
}

namespace {

std::vector<Eigen::Vector2d> polygon_from_json(const json& j) {
    std::vector<Eigen::Vector2d> poly;
    for (const auto& v : j) poly.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
    return poly;
}

json polygon_to_json(const std::vector<Eigen::Vector2d>& poly) {
    json j = json::array();
    for (const auto& p : poly) j.push_back({p.x(), p.y()});
    return j;
}

}  // namespace

ZoneFile load_zone_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("zones: cannot open " + path);
    json j = json::parse(in);

    ZoneFile zf;
    if (j.contains("zones"))
        for (const auto& zj : j["zones"]) {
            Zone z;
            z.id = zj.at("id").get<std::string>();
            z.kind = zone_kind_from_string(zj.at("kind").get<std::string>());
            z.polygon = polygon_from_json(zj.at("polygon"));
            if (z.polygon.size() < 3)
                throw std::runtime_error("zones: polygon of " + z.id + " needs >= 3 vertices");
            if (zj.contains("axis_point"))
                z.axis_point = Eigen::Vector2d(zj["axis_point"].at(0).get<double>(),
                                               zj["axis_point"].at(1).get<double>());
            if (zj.contains("axis_dir"))
                z.axis_dir = Eigen::Vector2d(zj["axis_dir"].at(0).get<double>(),
                                             zj["axis_dir"].at(1).get<double>());
            zf.zones.push_back(std::move(z));
        }
    if (j.contains("lanes"))
        for (const auto& lj : j["lanes"]) zf.lanes.centerlines.push_back(polygon_from_json(lj));
    if (j.contains("gates"))
        for (const auto& gj : j["gates"]) {
            Gate g;
            g.id = gj.at("id").get<std::string>();
            g.a = Eigen::Vector2d(gj.at("a").at(0).get<double>(), gj.at("a").at(1).get<double>());
            g.b = Eigen::Vector2d(gj.at("b").at(0).get<double>(), gj.at("b").at(1).get<double>());
            zf.gates.push_back(std::move(g));
        }
    return zf;
}

void save_zone_file(const std::string& path, const ZoneFile& zf) {
    json j;
    j["zones"] = json::array();
    for (const auto& z : zf.zones) {
        json zj;
        zj["id"] = z.id;
        zj["kind"] = to_string(z.kind);
        zj["polygon"] = polygon_to_json(z.polygon);
        if (z.axis_point) zj["axis_point"] = {z.axis_point->x(), z.axis_point->y()};
        if (z.axis_dir) zj["axis_dir"] = {z.axis_dir->x(), z.axis_dir->y()};
        j["zones"].push_back(zj);
    }
    j["lanes"] = json::array();
    for (const auto& l : zf.lanes.centerlines) j["lanes"].push_back(polygon_to_json(l));
    j["gates"] = json::array();
    for (const auto& g : zf.gates) {
        json gj;
        gj["id"] = g.id;
        gj["a"] = {g.a.x(), g.a.y()};
        gj["b"] = {g.b.x(), g.b.y()};
        j["gates"].push_back(gj);
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("zones: cannot write " + path);
    out << j.dump(2) << "\n";
}

}  // namespace nadir::violations

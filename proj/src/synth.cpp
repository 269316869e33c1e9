#include "nadir/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "nadir/common.hpp"

namespace nadir::synth {

using nlohmann::json;

namespace {

void paint_rect(detect::Template& t, int x0, int y0, int x1, int y1, float v) {
    x0 = std::max(0, x0);
    y0 = std::max(0, y0);
    x1 = std::min(t.width - 1, x1);
    y1 = std::min(t.height - 1, y1);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) t.at(x, y) = v;
}

}  // namespace

detect::Template make_template_pattern(const TemplateSpec& spec) {
    if (spec.width < 3 || spec.height < 3)
        throw std::invalid_argument("template spec: dims must be >= 3");
    const int w = spec.width, h = spec.height;
    detect::Template t(w, h, 40.0f);  // dark outline band
    t.class_hint = classify::to_string(spec.cls);

    // bright body with class-specific internal structure; patterns are kept
    // mutually decorrelated so cross-template NCC stays low
    paint_rect(t, 1, 1, w - 2, h - 2, 200.0f);
    switch (spec.cls) {
        case classify::VehicleClass::bus:
            for (int x = 4; x < w - 4; x += 6) paint_rect(t, x, 2, x + 1, h - 3, 90.0f);
            paint_rect(t, 1, 1, 2, h - 2, 245.0f);
            break;
        case classify::VehicleClass::pickup:
            paint_rect(t, 1, 1, 2 * w / 5, h - 2, 235.0f);              // cab
            paint_rect(t, 2 * w / 5 + 1, 2, w - 2, h - 3, 115.0f);      // open bed
            paint_rect(t, w - 3, 1, w - 2, h - 2, 235.0f);              // tailgate
            break;
        case classify::VehicleClass::motorcycle:
            for (int x = 1; x < w - 1; ++x)
                paint_rect(t, x, 1, x, h - 2, ((x / 2) % 2) ? 70.0f : 240.0f);
            break;
        case classify::VehicleClass::taxi:
            paint_rect(t, 1, 1, 2, h - 2, 245.0f);                      // bumpers
            paint_rect(t, w - 3, 1, w - 2, h - 2, 245.0f);
            paint_rect(t, 4, 2, w / 4 + 1, h - 3, 80.0f);               // windshield
            paint_rect(t, 3 * w / 4, 2, w - 5, h - 3, 80.0f);           // rear window
            paint_rect(t, w / 2 - 1, h / 2 - 1, w / 2 + 1, h / 2 + 1, 255.0f);  // roof sign
            break;
        case classify::VehicleClass::private_car:
            paint_rect(t, 1, 1, 2, h - 2, 245.0f);                      // bumpers
            paint_rect(t, w - 3, 1, w - 2, h - 2, 245.0f);
            paint_rect(t, 4, 2, w / 4 + 1, h - 3, 80.0f);               // windshield
            paint_rect(t, 3 * w / 4, 2, w - 5, h - 3, 80.0f);           // rear window
            break;
    }
    // soften the pattern so sub-pixel renders still correlate strongly
    imaging::Frame tf(w, h);
    tf.data = t.data;
    t.data = imaging::gaussian_blur(tf, 0.8).data;
    return t;
}

namespace {

Eigen::Vector2d position_at(const VehicleSpec& v, int frame) {
    const auto& wp = v.waypoints;
    if (frame <= wp.front().frame) return wp.front().world;
    if (frame >= wp.back().frame) return wp.back().world;
    for (size_t i = 0; i + 1 < wp.size(); ++i) {
        if (frame >= wp[i].frame && frame <= wp[i + 1].frame) {
            double t = static_cast<double>(frame - wp[i].frame) /
                       static_cast<double>(wp[i + 1].frame - wp[i].frame);
            return wp[i].world + t * (wp[i + 1].world - wp[i].world);
        }
    }
    return wp.back().world;
}

// static low-frequency value noise, bilinear over a seeded coarse grid
std::vector<float> make_texture(const ScenarioConfig& cfg) {
    std::vector<float> tex(static_cast<size_t>(cfg.width) * cfg.height, 0.0f);
    if (cfg.texture_amp <= 0.0) return tex;
    int cell = std::max(2, cfg.texture_cell);
    int gw = cfg.width / cell + 2;
    int gh = cfg.height / cell + 2;
    Rng rng(mix_seed(cfg.seed, 0x7e577e57ull));
    std::vector<double> grid(static_cast<size_t>(gw) * gh);
    for (double& g : grid) g = rng.uniform(-1.0, 1.0);
    for (int y = 0; y < cfg.height; ++y)
        for (int x = 0; x < cfg.width; ++x) {
            double gx = static_cast<double>(x) / cell;
            double gy = static_cast<double>(y) / cell;
            int x0 = static_cast<int>(gx), y0 = static_cast<int>(gy);
            double fx = gx - x0, fy = gy - y0;
            double v00 = grid[static_cast<size_t>(y0) * gw + x0];
            double v01 = grid[static_cast<size_t>(y0) * gw + x0 + 1];
            double v10 = grid[static_cast<size_t>(y0 + 1) * gw + x0];
            double v11 = grid[static_cast<size_t>(y0 + 1) * gw + x0 + 1];
            double v = (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11);
            tex[static_cast<size_t>(y) * cfg.width + x] = static_cast<float>(v * cfg.texture_amp);
        }
    return tex;
}

// samples the template through the inverse scale+rotation; pixels outside
// the footprint keep the scene
void render_vehicle(imaging::Frame& frame, const detect::Template& t, double cx, double cy,
                    double scale, double angle) {
    double c = std::cos(angle), s = std::sin(angle);
    double hw = t.width * scale / 2.0, hh = t.height * scale / 2.0;
    double radius = std::sqrt(hw * hw + hh * hh);
    int x0 = std::max(0, static_cast<int>(std::floor(cx - radius)));
    int x1 = std::min(frame.width - 1, static_cast<int>(std::ceil(cx + radius)));
    int y0 = std::max(0, static_cast<int>(std::floor(cy - radius)));
    int y1 = std::min(frame.height - 1, static_cast<int>(std::ceil(cy + radius)));
    double tcx = (t.width - 1) / 2.0, tcy = (t.height - 1) / 2.0;

    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            double dx = x - cx, dy = y - cy;
            double u = (c * dx + s * dy) / scale + tcx;
            double v = (-s * dx + c * dy) / scale + tcy;
            if (u < -0.5 || u > t.width - 0.5 || v < -0.5 || v > t.height - 0.5) continue;
            int ix0 = std::max(0, std::min(t.width - 1, static_cast<int>(std::floor(u))));
            int iy0 = std::max(0, std::min(t.height - 1, static_cast<int>(std::floor(v))));
            int ix1 = std::min(t.width - 1, ix0 + 1);
            int iy1 = std::min(t.height - 1, iy0 + 1);
            double fx = std::min(1.0, std::max(0.0, u - ix0));
            double fy = std::min(1.0, std::max(0.0, v - iy0));
            double val = (1 - fy) * ((1 - fx) * t.at(ix0, iy0) + fx * t.at(ix1, iy0)) +
                         fy * ((1 - fx) * t.at(ix0, iy1) + fx * t.at(ix1, iy1));
            frame.at(x, y) = static_cast<float>(val);
        }
}

}  // namespace

SynthOutput generate(const ScenarioConfig& cfg) {
    if (cfg.frames < 1 || cfg.width < 8 || cfg.height < 8)
        throw std::invalid_argument("scenario: bad frame geometry");
    if (!(cfg.fps > 0.0)) throw std::invalid_argument("scenario: fps must be positive");
    for (const auto& v : cfg.vehicles) {
        if (v.waypoints.empty())
            throw std::invalid_argument("scenario: vehicle without waypoints");
        for (size_t i = 1; i < v.waypoints.size(); ++i)
            if (v.waypoints[i].frame <= v.waypoints[i - 1].frame)
                throw std::invalid_argument("scenario: waypoint frames must increase");
    }

    SynthOutput out;
    for (const auto& ts : cfg.templates) out.templates.emplace_back(ts.name, make_template_pattern(ts));
    auto template_by_name = [&](const std::string& name) -> const detect::Template& {
        for (const auto& [n, t] : out.templates)
            if (n == name) return t;
        throw std::invalid_argument("scenario: unknown template: " + name);
    };

    geometry::Homography world_to_pixel =
        geometry::Homography::from_matrix(cfg.pixel_to_world).inverse();

    std::vector<float> texture = make_texture(cfg);

    out.gt.fps = cfg.fps;
    out.gt.frames = cfg.frames;

    for (int f = 0; f < cfg.frames; ++f) {
        imaging::Frame frame(cfg.width, cfg.height);
        frame.timestamp_index = f;
        frame.fps = cfg.fps;
        for (size_t i = 0; i < frame.size(); ++i)
            frame.data[i] = static_cast<float>(
                std::min(255.0, std::max(0.0, cfg.background_level + texture[i])));

        for (const auto& v : cfg.vehicles) {
            if (f < v.spawn_frame() || f > v.last_frame()) continue;
            const detect::Template& t = template_by_name(v.template_name);
            Eigen::Vector2d world = position_at(v, f);
            Eigen::Vector2d px = geometry::project(world_to_pixel, world);

            GtBox gb;
            gb.frame = f;
            gb.track_id = v.id;
            gb.cls = v.cls;
            gb.box = {px.x(), px.y(), t.width * v.scale, t.height * v.scale,
                      detect::normalize_theta(v.angle)};
            for (const auto& corner : gb.box.corners()) {
                if (corner.x < 0.0 || corner.x > cfg.width - 1 || corner.y < 0.0 ||
                    corner.y > cfg.height - 1) {
                    std::ostringstream os;
                    os << "scenario: vehicle " << v.id << " outside frame bounds at frame " << f;
                    throw std::invalid_argument(os.str());
                }
            }
            render_vehicle(frame, t, px.x(), px.y(), v.scale, v.angle);

            for (const auto& occ : cfg.occlusions) {
                if (occ.vehicle_id != v.id || f < occ.start || f > occ.end) continue;
                double half = std::max(gb.box.w, gb.box.h) * 0.75;
                int ox0 = std::max(0, static_cast<int>(std::floor(px.x() - half)));
                int ox1 = std::min(cfg.width - 1, static_cast<int>(std::ceil(px.x() + half)));
                int oy0 = std::max(0, static_cast<int>(std::floor(px.y() - half)));
                int oy1 = std::min(cfg.height - 1, static_cast<int>(std::ceil(px.y() + half)));
                for (int y = oy0; y <= oy1; ++y)
                    for (int x = ox0; x <= ox1; ++x)
                        frame.at(x, y) = static_cast<float>(cfg.background_level);
                gb.occluded = true;
            }
            out.gt.boxes.push_back(gb);
        }

        if (cfg.noise > 0.0) {
            Rng rng(mix_seed(cfg.seed, 1000 + static_cast<uint64_t>(f)));
            for (auto& v : frame.data)
                v = static_cast<float>(
                    std::min(255.0, std::max(0.0, v + rng.uniform(-cfg.noise, cfg.noise))));
        }
        out.frames.push_back(std::move(frame));
    }

    // exact per-track world trajectories and speeds
    for (const auto& v : cfg.vehicles) {
        GtTrack tr;
        tr.id = v.id;
        tr.cls = v.cls;
        int first = std::max(0, v.spawn_frame());
        int last = std::min(cfg.frames - 1, v.last_frame());
        for (int f = first; f <= last; ++f) {
            GtTrackSample s;
            s.frame = f;
            s.world = position_at(v, f);
            Eigen::Vector2d next = position_at(v, std::min(f + 1, last));
            if (f == last && last > first) {
                Eigen::Vector2d prev = position_at(v, f - 1);
                s.speed_kmh = (s.world - prev).norm() * cfg.fps * 3.6;
            } else {
                s.speed_kmh = (next - s.world).norm() * cfg.fps * 3.6;
            }
            tr.samples.push_back(s);
        }
        if (!tr.samples.empty()) out.gt.tracks.push_back(std::move(tr));
    }

    // scripted violations derived from the exact kinematics
    std::vector<violations::TrackStates> states;
    for (const auto& tr : out.gt.tracks) {
        violations::TrackStates ts;
        ts.track_id = tr.id;
        for (const auto& s : tr.samples) ts.samples.push_back({s.frame, s.world, s.speed_kmh});
        states.push_back(std::move(ts));
    }
    auto dp = violations::detect_double_parking(states, cfg.zones.zones, cfg.dwell, cfg.fps);
    auto cw = violations::detect_crosswalk_obstruction(states, cfg.zones.zones, cfg.dwell, cfg.fps);
    out.gt.violations.insert(out.gt.violations.end(), dp.begin(), dp.end());
    out.gt.violations.insert(out.gt.violations.end(), cw.begin(), cw.end());
    if (!cfg.zones.lanes.centerlines.empty()) {
        for (const auto& z : cfg.zones.zones) {
            if (z.kind != violations::ZoneKind::uturn_approach) continue;
            auto lc = violations::detect_lane_change_violation(states, z, cfg.zones.lanes,
                                                               cfg.lane_change_d_max);
            out.gt.violations.insert(out.gt.violations.end(), lc.begin(), lc.end());
        }
    }
    violations::sort_events(out.gt.violations);
    return out;
}

namespace {

json matrix_to_json(const Eigen::Matrix3d& m) {
    json rows = json::array();
    for (int r = 0; r < 3; ++r) rows.push_back({m(r, 0), m(r, 1), m(r, 2)});
    return rows;
}

Eigen::Matrix3d matrix_from_json(const json& j) {
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m(r, c) = j.at(r).at(c).get<double>();
    return m;
}

}  // namespace

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("scenario: cannot open " + path);
    json j = json::parse(in);

    ScenarioConfig cfg;
    cfg.seed = j.value("seed", 1ull);
    cfg.width = j.at("width").get<int>();
    cfg.height = j.at("height").get<int>();
    cfg.fps = j.value("fps", 25.0);
    cfg.frames = j.at("frames").get<int>();
    if (j.contains("background")) {
        const auto& b = j["background"];
        cfg.background_level = b.value("level", 96.0);
        cfg.texture_amp = b.value("texture_amp", 0.0);
        cfg.texture_cell = b.value("texture_cell", 16);
    }
    cfg.noise = j.value("noise", 0.0);
    if (j.contains("pixel_to_world")) cfg.pixel_to_world = matrix_from_json(j["pixel_to_world"]);

    for (const auto& tj : j.value("templates", json::array())) {
        TemplateSpec ts;
        ts.name = tj.at("name").get<std::string>();
        ts.cls = classify::class_from_string(tj.at("class").get<std::string>());
        ts.width = tj.at("width").get<int>();
        ts.height = tj.at("height").get<int>();
        cfg.templates.push_back(std::move(ts));
    }
    for (const auto& vj : j.value("vehicles", json::array())) {
        VehicleSpec v;
        v.id = vj.at("id").get<int>();
        v.template_name = vj.at("template").get<std::string>();
        if (vj.contains("class"))
            v.cls = classify::class_from_string(vj["class"].get<std::string>());
        else {
            for (const auto& ts : cfg.templates)
                if (ts.name == v.template_name) v.cls = ts.cls;
        }
        v.scale = vj.value("scale", 1.0);
        v.angle = deg_to_rad(vj.value("angle_deg", 0.0));
        for (const auto& wj : vj.at("waypoints")) {
            Waypoint w;
            w.frame = wj.at("frame").get<int>();
            w.world = Eigen::Vector2d(wj.at("x").get<double>(), wj.at("y").get<double>());
            v.waypoints.push_back(w);
        }
        cfg.vehicles.push_back(std::move(v));
    }
    for (const auto& oj : j.value("occlusions", json::array())) {
        OcclusionSpec o;
        o.vehicle_id = oj.at("vehicle").get<int>();
        o.start = oj.at("start").get<int>();
        o.end = oj.at("end").get<int>();
        cfg.occlusions.push_back(o);
    }
    if (j.contains("zones")) {
        // inline zone-file schema: reuse the violations loader via a temp dump
        const auto& zj = j["zones"];
        if (zj.contains("zones"))
            for (const auto& z : zj["zones"]) {
                violations::Zone zone;
                zone.id = z.at("id").get<std::string>();
                zone.kind = violations::zone_kind_from_string(z.at("kind").get<std::string>());
                for (const auto& p : z.at("polygon"))
                    zone.polygon.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
                if (z.contains("axis_point"))
                    zone.axis_point = Eigen::Vector2d(z["axis_point"].at(0).get<double>(),
                                                      z["axis_point"].at(1).get<double>());
                if (z.contains("axis_dir"))
                    zone.axis_dir = Eigen::Vector2d(z["axis_dir"].at(0).get<double>(),
                                                    z["axis_dir"].at(1).get<double>());
                cfg.zones.zones.push_back(std::move(zone));
            }
        if (zj.contains("lanes"))
            for (const auto& l : zj["lanes"]) {
                std::vector<Eigen::Vector2d> line;
                for (const auto& p : l) line.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
                cfg.zones.lanes.centerlines.push_back(std::move(line));
            }
        if (zj.contains("gates"))
            for (const auto& g : zj["gates"]) {
                violations::Gate gate;
                gate.id = g.at("id").get<std::string>();
                gate.a = Eigen::Vector2d(g.at("a").at(0).get<double>(), g.at("a").at(1).get<double>());
                gate.b = Eigen::Vector2d(g.at("b").at(0).get<double>(), g.at("b").at(1).get<double>());
                cfg.zones.gates.push_back(std::move(gate));
            }
    }
    if (j.contains("violation_params")) {
        const auto& vp = j["violation_params"];
        cfg.dwell.v_stop_kmh = vp.value("v_stop_kmh", 2.0);
        cfg.dwell.dwell_min_s = vp.value("dwell_min_s", 10.0);
        cfg.dwell.bridge_gap = vp.value("bridge_gap", 2);
        cfg.lane_change_d_max = vp.value("d_max_m", 100.0);
    }
    return cfg;
}

void save_scenario(const std::string& path, const ScenarioConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["width"] = cfg.width;
    j["height"] = cfg.height;
    j["fps"] = cfg.fps;
    j["frames"] = cfg.frames;
    j["background"] = {{"level", cfg.background_level},
                       {"texture_amp", cfg.texture_amp},
                       {"texture_cell", cfg.texture_cell}};
    j["noise"] = cfg.noise;
    j["pixel_to_world"] = matrix_to_json(cfg.pixel_to_world);
    j["templates"] = json::array();
    for (const auto& ts : cfg.templates)
        j["templates"].push_back({{"name", ts.name},
                                  {"class", classify::to_string(ts.cls)},
                                  {"width", ts.width},
                                  {"height", ts.height}});
    j["vehicles"] = json::array();
    for (const auto& v : cfg.vehicles) {
        json vj;
        vj["id"] = v.id;
        vj["template"] = v.template_name;
        vj["class"] = classify::to_string(v.cls);
        vj["scale"] = v.scale;
        vj["angle_deg"] = rad_to_deg(v.angle);
        vj["waypoints"] = json::array();
        for (const auto& w : v.waypoints)
            vj["waypoints"].push_back({{"frame", w.frame}, {"x", w.world.x()}, {"y", w.world.y()}});
        j["vehicles"].push_back(vj);
    }
    j["occlusions"] = json::array();
    for (const auto& o : cfg.occlusions)
        j["occlusions"].push_back({{"vehicle", o.vehicle_id}, {"start", o.start}, {"end", o.end}});

    json zj;
    zj["zones"] = json::array();
    for (const auto& z : cfg.zones.zones) {
        json zz;
        zz["id"] = z.id;
        zz["kind"] = violations::to_string(z.kind);
        zz["polygon"] = json::array();
        for (const auto& p : z.polygon) zz["polygon"].push_back({p.x(), p.y()});
        if (z.axis_point) zz["axis_point"] = {z.axis_point->x(), z.axis_point->y()};
        if (z.axis_dir) zz["axis_dir"] = {z.axis_dir->x(), z.axis_dir->y()};
        zj["zones"].push_back(zz);
    }
    zj["lanes"] = json::array();
    for (const auto& l : cfg.zones.lanes.centerlines) {
        json lj = json::array();
        for (const auto& p : l) lj.push_back({p.x(), p.y()});
        zj["lanes"].push_back(lj);
    }
    zj["gates"] = json::array();
    for (const auto& g : cfg.zones.gates)
        zj["gates"].push_back(
            {{"id", g.id}, {"a", {g.a.x(), g.a.y()}}, {"b", {g.b.x(), g.b.y()}}});
    j["zones"] = zj;
    j["violation_params"] = {{"v_stop_kmh", cfg.dwell.v_stop_kmh},
                             {"dwell_min_s", cfg.dwell.dwell_min_s},
                             {"bridge_gap", cfg.dwell.bridge_gap},
                             {"d_max_m", cfg.lane_change_d_max}};

    std::ofstream out(path);
    if (!out) throw std::runtime_error("scenario: cannot write " + path);
    out << j.dump(2) << "\n";
}

void save_ground_truth(const std::string& path, const GroundTruth& gt) {
    json j;
    j["fps"] = gt.fps;
    j["frames"] = gt.frames;
    j["boxes"] = json::array();
    for (const auto& b : gt.boxes)
        j["boxes"].push_back({{"frame", b.frame},
                              {"id", b.track_id},
                              {"class", classify::to_string(b.cls)},
                              {"cx", b.box.cx},
                              {"cy", b.box.cy},
                              {"w", b.box.w},
                              {"h", b.box.h},
                              {"theta", b.box.theta},
                              {"occluded", b.occluded}});
    j["tracks"] = json::array();
    for (const auto& t : gt.tracks) {
        json tj;
        tj["id"] = t.id;
        tj["class"] = classify::to_string(t.cls);
        tj["samples"] = json::array();
        for (const auto& s : t.samples)
            tj["samples"].push_back({{"frame", s.frame},
                                     {"x", s.world.x()},
                                     {"y", s.world.y()},
                                     {"speed_kmh", s.speed_kmh}});
        j["tracks"].push_back(tj);
    }
    j["violations"] = json::array();
    for (const auto& e : gt.violations)
        j["violations"].push_back(json::parse(violations::event_to_json_line(e)));

    std::ofstream out(path);
    if (!out) throw std::runtime_error("gt: cannot write " + path);
    out << j.dump(2) << "\n";
}

GroundTruth load_ground_truth(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("gt: cannot open " + path);
    json j = json::parse(in);
    GroundTruth gt;
    gt.fps = j.at("fps").get<double>();
    gt.frames = j.at("frames").get<int>();
    for (const auto& bj : j.value("boxes", json::array())) {
        GtBox b;
        b.frame = bj.at("frame").get<int>();
        b.track_id = bj.at("id").get<int>();
        b.cls = classify::class_from_string(bj.at("class").get<std::string>());
        b.box.cx = bj.at("cx").get<double>();
        b.box.cy = bj.at("cy").get<double>();
        b.box.w = bj.at("w").get<double>();
        b.box.h = bj.at("h").get<double>();
        b.box.theta = bj.at("theta").get<double>();
        b.occluded = bj.value("occluded", false);
        gt.boxes.push_back(b);
    }
    for (const auto& tj : j.value("tracks", json::array())) {
        GtTrack t;
        t.id = tj.at("id").get<int>();
        t.cls = classify::class_from_string(tj.at("class").get<std::string>());
        for (const auto& sj : tj.at("samples")) {
            GtTrackSample s;
            s.frame = sj.at("frame").get<int>();
            s.world = Eigen::Vector2d(sj.at("x").get<double>(), sj.at("y").get<double>());
            s.speed_kmh = sj.at("speed_kmh").get<double>();
            t.samples.push_back(s);
        }
        gt.tracks.push_back(std::move(t));
    }
    for (const auto& vj : j.value("violations", json::array()))
        gt.violations.push_back(violations::event_from_json_line(vj.dump()));
    return gt;
}

void write_outputs(const SynthOutput& out, const ScenarioConfig& cfg, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "frames");
    fs::create_directories(fs::path(dir) / "templates");
    for (const auto& f : out.frames)
        pgm::write((fs::path(dir) / "frames" / pgm::frame_filename(f.timestamp_index)).string(), f);
    for (const auto& [name, t] : out.templates) {
        imaging::Frame tf(t.width, t.height);
        tf.data = t.data;
        pgm::write((fs::path(dir) / "templates" / (name + ".pgm")).string(), tf);
    }
    save_ground_truth((fs::path(dir) / "gt.json").string(), out.gt);
    violations::save_zone_file((fs::path(dir) / "zones.json").string(), cfg.zones);

    // exact calibration correspondences spanning the frame
    std::vector<geometry::Correspondence> calib;
    geometry::Homography h = geometry::Homography::from_matrix(cfg.pixel_to_world);
    const double xs[2] = {8.0, cfg.width - 9.0};
    const double ys[2] = {8.0, cfg.height - 9.0};
    for (double px : xs)
        for (double py : ys) {
            geometry::Correspondence c;
            c.pixel = Eigen::Vector2d(px, py);
            c.world = geometry::project(h, c.pixel);
            calib.push_back(c);
        }
    geometry::save_calibration((fs::path(dir) / "calib.txt").string(), calib);
}

}  // namespace nadir::synth

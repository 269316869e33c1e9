#include "nadir/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "nadir/classify.hpp"
#include "nadir/common.hpp"
#include "nadir/geometry.hpp"
#include "nadir/track.hpp"
#include "nadir/violations.hpp"

namespace nadir::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void require_file(const std::string& path, const char* what) {
    if (!fs::exists(path))
        throw std::runtime_error(std::string(what) + " file not found: " + path);
}

std::string fmt(double v) { return format_double(v, 6); }

struct FrameDetections {
    int frame_index = 0;
    std::vector<detect::Detection> dets;
    std::vector<classify::VehicleClass> labels;
};

}  // namespace

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("config file not found: " + path);
    std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    json j = json::parse(raw);

    PipelineConfig cfg;
    cfg.config_hash = fnv1a(raw.data(), raw.size());

    const auto& input = j.at("input");
    if (input.contains("scenario")) {
        cfg.scenario_path = input["scenario"].get<std::string>();
        require_file(cfg.scenario_path, "scenario");
    } else if (input.contains("frames_dir")) {
        cfg.frames_dir = input["frames_dir"].get<std::string>();
        cfg.fps = input.value("fps", 25.0);
        if (!fs::is_directory(cfg.frames_dir))
            throw std::runtime_error("frames directory not found: " + cfg.frames_dir);
    } else {
        throw std::runtime_error("config: input needs 'scenario' or 'frames_dir'");
    }

    for (const auto& tj : j.value("templates", json::array())) {
        TemplateRef t;
        t.path = tj.at("path").get<std::string>();
        t.class_hint = tj.value("class_hint", "");
        require_file(t.path, "template");
        cfg.templates.push_back(std::move(t));
    }

    if (j.contains("preprocess")) {
        const auto& p = j["preprocess"];
        if (p.contains("denoise") && !p["denoise"].is_null()) {
            imaging::DenoiseSpec d;
            std::string method = p["denoise"].value("method", "gaussian");
            if (method == "gaussian") {
                d.kind = imaging::DenoiseSpec::Kind::gaussian;
                d.sigma = p["denoise"].value("sigma", 1.0);
            } else if (method == "median") {
                d.kind = imaging::DenoiseSpec::Kind::median;
                d.window = p["denoise"].value("window", 3);
            } else {
                throw std::runtime_error("config: unknown denoise method: " + method);
            }
            cfg.denoise = d;
        }
        if (p.contains("clahe") && !p["clahe"].is_null()) {
            ClaheSpec c;
            c.rows = p["clahe"].value("rows", 8);
            c.cols = p["clahe"].value("cols", 8);
            c.clip = p["clahe"].value("clip", 2.0);
            cfg.clahe = c;
        }
    }

    if (j.contains("detection")) {
        const auto& d = j["detection"];
        cfg.match.scale_levels = d.value("scale_levels", 4);
        cfg.match.scale_factor = d.value("scale_factor", 0.8);
        if (d.contains("angles_deg")) {
            if (d["angles_deg"].is_array()) {
                for (const auto& a : d["angles_deg"])
                    cfg.match.angles.push_back(deg_to_rad(a.get<double>()));
            } else {
                double lo = d["angles_deg"].value("min", -45.0);
                double hi = d["angles_deg"].value("max", 45.0);
                double step = d["angles_deg"].value("step", 5.0);
                if (!(step > 0.0)) throw std::runtime_error("config: angle step must be positive");
                for (double a = lo; a <= hi + 1e-9; a += step)
                    cfg.match.angles.push_back(deg_to_rad(a));
            }
        }
        cfg.match.detect_thr = d.value("detect_thr", 0.7);
        cfg.match.nms_iou = d.value("nms_iou", 0.4);
        cfg.match.rotated_boxes = d.value("rotated_boxes", false);
        cfg.match.threads = d.value("threads", 0);
        cfg.match.min_patch_stddev = d.value("min_patch_stddev", 2.0);
        if (d.contains("soft_nms") && !d["soft_nms"].is_null()) {
            SoftNmsSpec s;
            std::string mode = d["soft_nms"].value("mode", "linear");
            s.mode = mode == "gaussian" ? detect::SoftNmsMode::gaussian
                                        : detect::SoftNmsMode::linear;
            s.sigma = d["soft_nms"].value("sigma", 0.5);
            s.final_thr = d["soft_nms"].value("final_thr", 0.3);
            cfg.soft_nms = s;
        }
    }
    if (cfg.match.angles.empty()) cfg.match.angles = detect::MatchParams::default_angles();

    if (j.contains("tracker")) {
        const auto& t = j["tracker"];
        cfg.tracker_q = t.value("q", 1.0);
        cfg.tracker_r_sigma = t.value("r_sigma", 2.0);
        if (t.contains("gate") && !t["gate"].is_null()) cfg.gate = t["gate"].get<double>();
        cfg.max_misses = t.value("max_misses", 10);
        cfg.confirm_hits = t.value("confirm_hits", 3);
    }

    if (j.contains("calibration") && !j["calibration"].is_null()) {
        cfg.calibration_path = j["calibration"].get<std::string>();
        require_file(cfg.calibration_path, "calibration");
    }
    if (j.contains("speed")) cfg.speed_window = j["speed"].value("window", 12);

    if (j.contains("rules") && !j["rules"].is_null()) {
        cfg.rules_path = j["rules"].get<std::string>();
        require_file(cfg.rules_path, "rules");
    }
    if (j.contains("zones") && !j["zones"].is_null()) {
        cfg.zones_path = j["zones"].get<std::string>();
        require_file(cfg.zones_path, "zones");
    }

    if (j.contains("violations")) {
        const auto& v = j["violations"];
        cfg.dwell.v_stop_kmh = v.value("v_stop_kmh", 2.0);
        cfg.dwell.dwell_min_s = v.value("dwell_min_s", 10.0);
        cfg.dwell.bridge_gap = v.value("bridge_gap", 2);
        cfg.lane_change_d_max = v.value("d_max_m", 100.0);
    }

    if (j.contains("analytics") && j["analytics"].contains("congestion")) {
        const auto& c = j["analytics"]["congestion"];
        cfg.congestion_eps = c.value("eps", 8.0);
        cfg.congestion_min_pts = c.value("min_pts", 4);
        cfg.congestion_persist_s = c.value("persist_s", 5.0);
    }

    if (j.contains("evaluation")) {
        const auto& e = j["evaluation"];
        cfg.eval_iou = e.value("iou_thr", 0.5);
        cfg.eval_dist = e.value("dist_thr", 10.0);
        if (e.contains("gt") && !e["gt"].is_null()) {
            cfg.gt_path = e["gt"].get<std::string>();
            require_file(cfg.gt_path, "ground truth");
        }
    }

    cfg.output_dir = j.value("output_dir", "out");
    if (const char* env = std::getenv("NADIR_OUTPUT_DIR"); env && *env) cfg.output_dir = env;

    if (j.contains("stages")) {
        const auto& s = j["stages"];
        cfg.stage_detect = s.value("detect", true);
        cfg.stage_track = s.value("track", true);
        cfg.stage_violations = s.value("violations", true);
        cfg.stage_analytics = s.value("analytics", true);
    }
    if (j.contains("detections_csv") && !j["detections_csv"].is_null()) {
        cfg.detections_csv = j["detections_csv"].get<std::string>();
        require_file(cfg.detections_csv, "detections");
    }
    if (!cfg.stage_detect && cfg.detections_csv.empty() && cfg.stage_track)
        throw std::runtime_error("config: tracking without detect stage needs detections_csv");
    return cfg;
}

std::vector<detect::Detection> load_detections_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("detections file not found: " + path);
    std::vector<detect::Detection> dets;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream is(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(is, cell, ',')) vals.push_back(std::stod(cell));
        if (vals.size() != 9) throw std::runtime_error("detections: bad row in " + path);
        detect::Detection d;
        d.frame_index = static_cast<int>(vals[0]);
        d.box = {vals[1], vals[2], vals[3], vals[4], vals[5]};
        d.score = vals[6];
        d.scale_index = static_cast<int>(vals[7]);
        d.angle = vals[8];
        dets.push_back(d);
    }
    return dets;
}

namespace {

struct LoadedInput {
    std::vector<imaging::Frame> frames;
    std::vector<detect::Template> templates;
    std::optional<synth::GroundTruth> gt;
    std::string calibration_path;
    std::string zones_path;
    double fps = 25.0;
};

LoadedInput load_input(const PipelineConfig& cfg) {
    LoadedInput li;
    if (!cfg.scenario_path.empty()) {
        synth::ScenarioConfig scfg = synth::load_scenario(cfg.scenario_path);
        synth::SynthOutput so = synth::generate(scfg);
        fs::path synth_dir = fs::path(cfg.output_dir) / "synth";
        synth::write_outputs(so, scfg, synth_dir.string());
        li.frames = std::move(so.frames);
        for (auto& [name, t] : so.templates) li.templates.push_back(std::move(t));
        li.gt = std::move(so.gt);
        li.calibration_path = cfg.calibration_path.empty()
                                  ? (synth_dir / "calib.txt").string()
                                  : cfg.calibration_path;
        li.zones_path =
            cfg.zones_path.empty() ? (synth_dir / "zones.json").string() : cfg.zones_path;
        li.fps = scfg.fps;
    } else {
        li.frames = pgm::load_frame_dir(cfg.frames_dir, cfg.fps);
        for (const auto& tr : cfg.templates) {
            imaging::Frame tf = pgm::read(tr.path);
            detect::Template t(tf.width, tf.height);
            t.data = tf.data;
            t.class_hint = tr.class_hint;
            li.templates.push_back(std::move(t));
        }
        li.calibration_path = cfg.calibration_path;
        li.zones_path = cfg.zones_path;
        li.fps = cfg.fps;
        if (!cfg.gt_path.empty()) li.gt = synth::load_ground_truth(cfg.gt_path);
    }
    return li;
}

void write_detections_csv(const std::string& path, const std::vector<FrameDetections>& frames) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "frame_index,cx,cy,w,h,theta,score,scale_index,angle\n";
    for (const auto& fd : frames)
        for (const auto& d : fd.dets)
            out << d.frame_index << ',' << fmt(d.box.cx) << ',' << fmt(d.box.cy) << ','
                << fmt(d.box.w) << ',' << fmt(d.box.h) << ',' << fmt(d.box.theta) << ','
                << fmt(d.score) << ',' << d.scale_index << ',' << fmt(d.angle) << '\n';
}

std::vector<const track::Track*> sorted_tracks(const std::vector<track::Track>& tracks) {
    std::vector<const track::Track*> out;
    for (const auto& t : tracks) out.push_back(&t);
    std::sort(out.begin(), out.end(),
              [](const track::Track* a, const track::Track* b) { return a->id < b->id; });
    return out;
}

bool ever_confirmed(const track::Track& t) {
    if (t.status == track::TrackStatus::confirmed) return true;
    for (const auto& p : t.history)
        if (p.status == track::TrackStatus::confirmed) return true;
    return false;
}

void write_tracks_csv(const std::string& path, const std::vector<track::Track>& tracks) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "track_id,frame_index,cx,cy,vx,vy,class,status\n";
    for (const track::Track* t : sorted_tracks(tracks))
        for (const auto& p : t->history)
            out << t->id << ',' << p.frame_index << ',' << fmt(p.state(0)) << ','
                << fmt(p.state(1)) << ',' << fmt(p.state(2)) << ',' << fmt(p.state(3)) << ','
                << classify::to_string(t->cls) << ',' << track::to_string(p.status) << '\n';
}

void write_track_boxes_csv(const std::string& path, const std::vector<track::Track>& tracks) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "track_id,frame_index,cx,cy,w,h,theta\n";
    for (const track::Track* t : sorted_tracks(tracks)) {
        if (!ever_confirmed(*t)) continue;
        for (const auto& p : t->history) {
            if (p.status != track::TrackStatus::confirmed) continue;
            out << t->id << ',' << p.frame_index << ',' << fmt(p.state(0)) << ','
                << fmt(p.state(1)) << ',' << fmt(p.box_w) << ',' << fmt(p.box_h) << ','
                << fmt(p.box_theta) << '\n';
        }
    }
}

analytics::MotFrames gt_mot_frames(const synth::GroundTruth& gt) {
    analytics::MotFrames frames(gt.frames);
    for (const auto& b : gt.boxes)
        if (b.frame >= 0 && b.frame < gt.frames)
            frames[b.frame].push_back({b.track_id, b.box});
    return frames;
}

json mot_report_json(const analytics::MotReport& r) {
    json j;
    j["precision"] = r.precision;
    j["precision_defined"] = r.precision_defined;
    j["recall"] = r.recall;
    j["f1"] = r.f1;
    j["mota"] = r.mota;
    j["motp"] = r.motp;
    j["id_switches"] = r.id_switches;
    j["fp"] = r.fp;
    j["fn"] = r.fn;
    j["tp"] = r.tp;
    j["gt_total"] = r.gt_total;
    return j;
}

}  // namespace

RunSummary run(const PipelineConfig& cfg) {
    fs::create_directories(cfg.output_dir);
    LoadedInput input = load_input(cfg);
    RunSummary summary;
    summary.frames = static_cast<int>(input.frames.size());
    std::vector<std::string> notes;

    // preprocess
    for (auto& f : input.frames) {
        if (cfg.denoise) f = imaging::denoise(f, *cfg.denoise);
        if (cfg.clahe) {
            int ts = f.timestamp_index;
            double fps = f.fps;
            f = imaging::clahe(f, cfg.clahe->rows, cfg.clahe->cols, cfg.clahe->clip);
            f.timestamp_index = ts;
            f.fps = fps;
        }
    }

    // detect + classify
    classify::ClassRules rules =
        cfg.rules_path.empty() ? classify::ClassRules::defaults() : classify::load_rules(cfg.rules_path);

    std::vector<FrameDetections> per_frame(input.frames.size());
    if (cfg.stage_detect) {
        if (input.templates.empty()) throw std::runtime_error("config: no templates configured");
        for (size_t fi = 0; fi < input.frames.size(); ++fi) {
            const imaging::Frame& frame = input.frames[fi];
            imaging::Pyramid pyr =
                imaging::build_pyramid(frame, cfg.match.scale_levels, cfg.match.scale_factor);
            std::vector<detect::Detection> cand;
            for (int ti = 0; ti < static_cast<int>(input.templates.size()); ++ti) {
                auto dets = detect::match_candidates(pyr, input.templates[ti], ti, cfg.match);
                cand.insert(cand.end(), dets.begin(), dets.end());
            }
            std::vector<detect::Detection> dets =
                cfg.soft_nms ? detect::soft_nms(std::move(cand), cfg.soft_nms->mode,
                                                cfg.soft_nms->sigma, cfg.soft_nms->final_thr)
                             : detect::nms(std::move(cand), cfg.match.nms_iou);
            per_frame[fi].frame_index = frame.timestamp_index;
            per_frame[fi].dets = std::move(dets);
        }
    } else if (!cfg.detections_csv.empty()) {
        auto all = load_detections_csv(cfg.detections_csv);
        for (size_t fi = 0; fi < per_frame.size(); ++fi)
            per_frame[fi].frame_index = input.frames[fi].timestamp_index;
        for (auto& d : all)
            if (d.frame_index >= 0 && d.frame_index < static_cast<int>(per_frame.size()))
                per_frame[d.frame_index].dets.push_back(d);
    }

    for (auto& fd : per_frame) {
        for (const auto& d : fd.dets) {
            std::string hint = d.template_index >= 0 &&
                                       d.template_index < static_cast<int>(input.templates.size())
                                   ? input.templates[d.template_index].class_hint
                                   : std::string();
            fd.labels.push_back(classify::classify(d, hint, std::nullopt, rules));
        }
        summary.detections += static_cast<int>(fd.dets.size());
    }
    write_detections_csv((fs::path(cfg.output_dir) / "detections.csv").string(), per_frame);

    if (!cfg.stage_track) {
        json manifest;
        manifest["version"] = "0.1.0";
        manifest["config_hash"] = format_compact(static_cast<double>(cfg.config_hash));
        std::ofstream mo((fs::path(cfg.output_dir) / "manifest.json").string());
        mo << manifest.dump(2) << "\n";
        return summary;
    }

    // track
    double max_template_w = 20.0;
    for (const auto& t : input.templates)
        max_template_w = std::max(max_template_w, static_cast<double>(std::max(t.width, t.height)));
    track::TrackerParams tp;
    tp.model = track::NoiseModel::constant_velocity(1.0, cfg.tracker_q, cfg.tracker_r_sigma);
    tp.gate = cfg.gate ? *cfg.gate : 3.0 * max_template_w;
    tp.max_misses = cfg.max_misses;
    tp.confirm_hits = cfg.confirm_hits;
    track::Tracker tracker(tp);
    for (const auto& fd : per_frame) {
        auto result = tracker.step(fd.dets, fd.frame_index);
        for (auto [track_id, det_idx] : result.matches) {
            for (auto& t : tracker.tracks())
                if (t.id == track_id) {
                    t.class_votes[static_cast<int>(fd.labels[det_idx])] += 1;
                    break;
                }
        }
    }
    for (auto& t : tracker.tracks()) t.cls = classify::majority_class(t.class_votes);

    summary.tracks_total = static_cast<int>(tracker.tracks().size());
    for (const auto& t : tracker.tracks())
        if (ever_confirmed(t)) summary.tracks_confirmed += 1;

    write_tracks_csv((fs::path(cfg.output_dir) / "tracks.csv").string(), tracker.tracks());
    write_track_boxes_csv((fs::path(cfg.output_dir) / "track_boxes.csv").string(),
                          tracker.tracks());

    // geometry: homography, world paths, speeds
    std::optional<geometry::Homography> homography;
    if (!input.calibration_path.empty()) {
        auto calib = geometry::load_calibration(input.calibration_path);
        homography = geometry::estimate_homography(calib).h;
    } else {
        notes.push_back("no calibration: speeds, violations and world analytics skipped");
    }

    std::vector<analytics::TrackPath> world_paths;
    std::map<int, std::map<int, double>> speeds_by_track;  // track -> frame -> kmh
    if (homography) {
        std::ofstream speeds_out((fs::path(cfg.output_dir) / "speeds.csv").string());
        speeds_out << "track_id,frame_index,speed_kmh\n";
        for (const track::Track* t : sorted_tracks(tracker.tracks())) {
            if (!ever_confirmed(*t)) continue;
            analytics::TrackPath path;
            path.track_id = t->id;
            path.cls = t->cls;
            std::vector<std::pair<int, Eigen::Vector2d>> pixel_track;
            for (const auto& p : t->history) {
                Eigen::Vector2d world =
                    geometry::project(*homography, Eigen::Vector2d(p.state(0), p.state(1)));
                path.points.emplace_back(p.frame_index, world);
                pixel_track.emplace_back(p.frame_index, Eigen::Vector2d(p.state(0), p.state(1)));
            }
            world_paths.push_back(path);
            if (pixel_track.size() >= 2) {
                auto samples =
                    geometry::estimate_speed(pixel_track, *homography, input.fps, cfg.speed_window);
                for (const auto& s : samples) speeds_by_track[t->id][s.frame_index] = s.kmh;
                // backfill the warmup frames with the first computed value
                if (!samples.empty())
                    for (const auto& p : t->history) {
                        if (p.frame_index >= samples.front().frame_index) break;
                        speeds_by_track[t->id][p.frame_index] = samples.front().kmh;
                    }
                for (const auto& p : t->history) {
                    auto it = speeds_by_track[t->id].find(p.frame_index);
                    if (it != speeds_by_track[t->id].end())
                        speeds_out << t->id << ',' << p.frame_index << ',' << fmt(it->second)
                                   << '\n';
                }
            }
        }
    }

    // violations
    std::vector<violations::ViolationEvent> events;
    std::optional<violations::ZoneFile> zones;
    if (!input.zones_path.empty()) zones = violations::load_zone_file(input.zones_path);
    if (cfg.stage_violations && homography && zones) {
        std::vector<violations::TrackStates> states;
        for (const auto& path : world_paths) {
            violations::TrackStates ts;
            ts.track_id = path.track_id;
            const auto& sp = speeds_by_track[path.track_id];
            for (const auto& [frame, world] : path.points) {
                auto it = sp.find(frame);
                double kmh = it != sp.end() ? it->second : 0.0;
                ts.samples.push_back({frame, world, kmh});
            }
            states.push_back(std::move(ts));
        }
        auto dp = violations::detect_double_parking(states, zones->zones, cfg.dwell, input.fps);
        auto cw =
            violations::detect_crosswalk_obstruction(states, zones->zones, cfg.dwell, input.fps);
        events.insert(events.end(), dp.begin(), dp.end());
        events.insert(events.end(), cw.begin(), cw.end());
        if (!zones->lanes.centerlines.empty())
            for (const auto& z : zones->zones) {
                if (z.kind != violations::ZoneKind::uturn_approach) continue;
                auto lc = violations::detect_lane_change_violation(states, z, zones->lanes,
                                                                   cfg.lane_change_d_max);
                events.insert(events.end(), lc.begin(), lc.end());
            }
        violations::sort_events(events);
    }
    {
        std::ofstream ev_out((fs::path(cfg.output_dir) / "events.jsonl").string());
        for (const auto& e : events) ev_out << violations::event_to_json_line(e) << "\n";
    }
    summary.events = static_cast<int>(events.size());

    // analytics
    if (cfg.stage_analytics && homography && zones && !zones->gates.empty()) {
        analytics::CountTable counts = analytics::count_crossings(world_paths, zones->gates);
        {
            std::ofstream out((fs::path(cfg.output_dir) / "counts.csv").string());
            out << "point,class,count\n";
            for (size_t i = 0; i < counts.point_ids.size(); ++i)
                for (int k = 0; k < classify::kClassCount; ++k)
                    out << counts.point_ids[i] << ','
                        << classify::to_string(static_cast<classify::VehicleClass>(k)) << ','
                        << counts.cells[i][k] << '\n';
        }
        analytics::ODMatrix od = analytics::od_matrix(world_paths, zones->gates);
        {
            std::ofstream out((fs::path(cfg.output_dir) / "od.csv").string());
            out << "origin";
            for (const auto& g : od.gate_ids) out << ',' << g;
            out << '\n';
            for (size_t i = 0; i < od.gate_ids.size(); ++i) {
                out << od.gate_ids[i];
                for (size_t jj = 0; jj < od.gate_ids.size(); ++jj) out << ',' << od.cells[i][jj];
                out << '\n';
            }
            out << "excluded_single_crossing," << od.excluded_single_crossing << '\n';
        }
        {
            auto grid = analytics::heatmap_grid(counts);
            std::ofstream out((fs::path(cfg.output_dir) / "heatmap.csv").string());
            out << "point";
            for (int k = 0; k < classify::kClassCount; ++k)
                out << ',' << classify::to_string(static_cast<classify::VehicleClass>(k));
            out << '\n';
            for (size_t i = 0; i < counts.point_ids.size(); ++i) {
                out << counts.point_ids[i];
                for (int k = 0; k < classify::kClassCount; ++k) out << ',' << fmt(grid[i][k]);
                out << '\n';
            }
        }
        if (counts.point_ids.size() >= 2) {
            auto corr = analytics::class_correlation(counts);
            std::ofstream out((fs::path(cfg.output_dir) / "correlation.csv").string());
            out << "class";
            for (int k = 0; k < classify::kClassCount; ++k)
                out << ',' << classify::to_string(static_cast<classify::VehicleClass>(k));
            out << '\n';
            for (int a = 0; a < classify::kClassCount; ++a) {
                out << classify::to_string(static_cast<classify::VehicleClass>(a));
                for (int b = 0; b < classify::kClassCount; ++b)
                    out << ',' << (std::isnan(corr(a, b)) ? std::string("nan") : fmt(corr(a, b)));
                out << '\n';
            }
        } else {
            notes.push_back("fewer than 2 gates: correlation skipped");
        }
    }
    if (cfg.stage_analytics && homography) {
        // congestion over per-frame confirmed-track world positions
        std::map<int, std::vector<Eigen::Vector2d>> by_frame;
        for (const auto& path : world_paths)
            for (const auto& [frame, world] : path.points) by_frame[frame].push_back(world);
        int max_frame = -1;
        for (const auto& [frame, _] : by_frame) max_frame = std::max(max_frame, frame);
        std::vector<std::vector<Eigen::Vector2d>> frames_positions(
            static_cast<size_t>(std::max(0, max_frame + 1)));
        for (auto& [frame, pts] : by_frame)
            if (frame >= 0) frames_positions[frame] = std::move(pts);
        auto regions =
            analytics::congestion_clusters(frames_positions, cfg.congestion_eps,
                                           cfg.congestion_min_pts, cfg.congestion_persist_s,
                                           input.fps);
        std::ofstream out((fs::path(cfg.output_dir) / "congestion.jsonl").string());
        for (const auto& r : regions) {
            json j;
            j["start_frame"] = r.start_frame;
            j["end_frame"] = r.end_frame;
            j["centroid"] = {r.centroid.x(), r.centroid.y()};
            j["max_size"] = r.max_size;
            out << j.dump() << "\n";
        }
    }

    // evaluation against ground truth when present
    json report;
    if (input.gt) {
        analytics::MotFrames gt_frames = gt_mot_frames(*input.gt);
        analytics::MotFrames det_frames(gt_frames.size()), trk_frames(gt_frames.size());
        for (const auto& fd : per_frame)
            if (fd.frame_index >= 0 && fd.frame_index < static_cast<int>(det_frames.size()))
                for (const auto& d : fd.dets) det_frames[fd.frame_index].push_back({0, d.box});
        for (const auto& t : tracker.tracks()) {
            for (const auto& p : t.history) {
                if (p.status != track::TrackStatus::confirmed) continue;
                if (p.frame_index < 0 || p.frame_index >= static_cast<int>(trk_frames.size()))
                    continue;
                detect::RotatedBox box{p.state(0), p.state(1), p.box_w, p.box_h, p.box_theta};
                trk_frames[p.frame_index].push_back({t.id, box});
            }
        }
        auto det_pr = analytics::evaluate_detections(gt_frames, det_frames, cfg.eval_iou);
        auto mot = analytics::evaluate_mot(gt_frames, trk_frames, cfg.eval_dist);
        report["detection"] = {{"precision", det_pr.precision}, {"recall", det_pr.recall},
                               {"f1", det_pr.f1},             {"tp", det_pr.tp},
                               {"fp", det_pr.fp},             {"fn", det_pr.fn},
                               {"iou_thr", cfg.eval_iou}};
        report["tracking"] = mot_report_json(mot);
        std::ofstream out((fs::path(cfg.output_dir) / "mot_report.json").string());
        out << report.dump(2) << "\n";
        summary.evaluated = true;
    }

    // manifest: everything needed to reproduce the output tree
    json manifest;
    manifest["version"] = "0.1.0";
    char hash_hex[32];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(cfg.config_hash));
    manifest["config_hash"] = hash_hex;
    manifest["input"] = cfg.scenario_path.empty() ? cfg.frames_dir : cfg.scenario_path;
    manifest["counts"] = {{"frames", summary.frames},
                          {"detections", summary.detections},
                          {"tracks_total", summary.tracks_total},
                          {"tracks_confirmed", summary.tracks_confirmed},
                          {"events", summary.events}};
    manifest["stages"] = {{"detect", cfg.stage_detect},
                          {"track", cfg.stage_track},
                          {"violations", cfg.stage_violations},
                          {"analytics", cfg.stage_analytics}};
    manifest["notes"] = notes;
    std::ofstream mo((fs::path(cfg.output_dir) / "manifest.json").string());
    mo << manifest.dump(2) << "\n";
    return summary;
}

analytics::MotReport evaluate(const PipelineConfig& cfg, const std::string& gt_path) {
    require_file(gt_path, "ground truth");
    synth::GroundTruth gt = synth::load_ground_truth(gt_path);
    analytics::MotFrames gt_frames = gt_mot_frames(gt);

    std::string boxes_path = (fs::path(cfg.output_dir) / "track_boxes.csv").string();
    require_file(boxes_path, "track boxes");
    analytics::MotFrames pred(gt_frames.size());
    std::ifstream in(boxes_path);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream is(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(is, cell, ',')) vals.push_back(std::stod(cell));
        if (vals.size() != 7) throw std::runtime_error("track_boxes: bad row");
        int frame = static_cast<int>(vals[1]);
        if (frame < 0 || frame >= static_cast<int>(pred.size()))
            throw std::runtime_error("evaluate: frame-range mismatch between GT and predictions");
        pred[frame].push_back(
            {static_cast<int>(vals[0]), {vals[2], vals[3], vals[4], vals[5], vals[6]}});
    }
    auto mot = analytics::evaluate_mot(gt_frames, pred, cfg.eval_dist);
    json j = mot_report_json(mot);
    std::ofstream out((fs::path(cfg.output_dir) / "mot_report.json").string());
    out << j.dump(2) << "\n";
    return mot;
}

}  // namespace nadir::pipeline

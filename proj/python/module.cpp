#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nadir/analytics.hpp"
#include "nadir/classify.hpp"
#include "nadir/common.hpp"
#include "nadir/detect.hpp"
#include "nadir/geometry.hpp"
#include "nadir/imaging.hpp"
#include "nadir/pipeline.hpp"
#include "nadir/synth.hpp"
#include "nadir/track.hpp"

namespace py = pybind11;
using namespace nadir;

namespace {

imaging::Frame frame_from_array(py::array_t<float, py::array::c_style | py::array::forcecast> a,
                                double fps = 25.0) {
    if (a.ndim() != 2) throw std::invalid_argument("frame array must be 2-dimensional");
    imaging::Frame f(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    f.fps = fps;
    std::memcpy(f.data.data(), a.data(), sizeof(float) * f.data.size());
    return f;
}

py::array_t<float> frame_to_array(const imaging::Frame& f) {
    py::array_t<float> out({f.height, f.width});
    std::memcpy(out.mutable_data(), f.data.data(), sizeof(float) * f.data.size());
    return out;
}

detect::Template template_from_array(
    py::array_t<float, py::array::c_style | py::array::forcecast> a, const std::string& hint) {
    if (a.ndim() != 2) throw std::invalid_argument("template array must be 2-dimensional");
    detect::Template t(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    t.class_hint = hint;
    std::memcpy(t.data.data(), a.data(), sizeof(float) * t.data.size());
    return t;
}

std::vector<std::vector<double>> cost_from_array(
    py::array_t<double, py::array::c_style | py::array::forcecast> a) {
    if (a.ndim() != 2) throw std::invalid_argument("cost matrix must be 2-dimensional");
    std::vector<std::vector<double>> cost(a.shape(0), std::vector<double>(a.shape(1)));
    auto r = a.unchecked<2>();
    for (py::ssize_t i = 0; i < a.shape(0); ++i)
        for (py::ssize_t j = 0; j < a.shape(1); ++j) cost[i][j] = r(i, j);
    return cost;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "aerial traffic analysis core";
    m.attr("__version__") = "0.1.0";

    // ---- imaging
    py::class_<imaging::Frame>(m, "Frame")
        .def(py::init([](py::array_t<float, py::array::c_style | py::array::forcecast> a,
                         double fps) { return frame_from_array(a, fps); }),
             py::arg("data"), py::arg("fps") = 25.0)
        .def_readonly("width", &imaging::Frame::width)
        .def_readonly("height", &imaging::Frame::height)
        .def_readwrite("timestamp_index", &imaging::Frame::timestamp_index)
        .def_readwrite("fps", &imaging::Frame::fps)
        .def("to_numpy", &frame_to_array);

    m.def("to_grayscale",
          [](py::array_t<float, py::array::c_style | py::array::forcecast> a) {
              if (a.ndim() != 3 || a.shape(2) != 3)
                  throw std::invalid_argument("expected an HxWx3 array");
              imaging::RgbFrame rgb;
              rgb.height = static_cast<int>(a.shape(0));
              rgb.width = static_cast<int>(a.shape(1));
              rgb.data.assign(a.data(), a.data() + a.size());
              return imaging::to_grayscale(rgb);
          });
    m.def("gaussian_blur", &imaging::gaussian_blur, py::arg("frame"), py::arg("sigma"));
    m.def("median_filter", &imaging::median_filter, py::arg("frame"), py::arg("window"));
    m.def("otsu_threshold", &imaging::otsu_threshold);
    m.def("apply_threshold", &imaging::apply_threshold, py::arg("frame"), py::arg("threshold"));
    m.def("adaptive_threshold", &imaging::adaptive_threshold, py::arg("frame"), py::arg("window"),
          py::arg("c"));
    m.def("clahe", &imaging::clahe, py::arg("frame"), py::arg("tile_rows"), py::arg("tile_cols"),
          py::arg("clip_limit"));
    m.def("build_pyramid", [](const imaging::Frame& f, int levels, double factor) {
        auto p = imaging::build_pyramid(f, levels, factor);
        std::vector<py::array_t<float>> out;
        for (const auto& lvl : p.levels) out.push_back(frame_to_array(lvl));
        return out;
    });
    m.def("read_pgm", &pgm::read);
    m.def("write_pgm", &pgm::write);

    // ---- detection
    py::class_<detect::Template>(m, "Template")
        .def(py::init([](py::array_t<float, py::array::c_style | py::array::forcecast> a,
                         const std::string& hint) { return template_from_array(a, hint); }),
             py::arg("data"), py::arg("class_hint") = "")
        .def_readonly("width", &detect::Template::width)
        .def_readonly("height", &detect::Template::height)
        .def_readwrite("class_hint", &detect::Template::class_hint);

    py::class_<detect::RotatedBox>(m, "RotatedBox")
        .def(py::init([](double cx, double cy, double w, double h, double theta) {
                 return detect::RotatedBox{cx, cy, w, h, theta};
             }),
             py::arg("cx"), py::arg("cy"), py::arg("w"), py::arg("h"), py::arg("theta") = 0.0)
        .def_readwrite("cx", &detect::RotatedBox::cx)
        .def_readwrite("cy", &detect::RotatedBox::cy)
        .def_readwrite("w", &detect::RotatedBox::w)
        .def_readwrite("h", &detect::RotatedBox::h)
        .def_readwrite("theta", &detect::RotatedBox::theta);

    py::class_<detect::Detection>(m, "Detection")
        .def_readwrite("box", &detect::Detection::box)
        .def_readwrite("score", &detect::Detection::score)
        .def_readwrite("scale_index", &detect::Detection::scale_index)
        .def_readwrite("angle", &detect::Detection::angle)
        .def_readwrite("frame_index", &detect::Detection::frame_index)
        .def_readwrite("template_index", &detect::Detection::template_index);

    py::class_<detect::MatchParams>(m, "MatchParams")
        .def(py::init<>())
        .def_readwrite("scale_levels", &detect::MatchParams::scale_levels)
        .def_readwrite("scale_factor", &detect::MatchParams::scale_factor)
        .def_readwrite("angles", &detect::MatchParams::angles)
        .def_readwrite("detect_thr", &detect::MatchParams::detect_thr)
        .def_readwrite("nms_iou", &detect::MatchParams::nms_iou)
        .def_readwrite("rotated_boxes", &detect::MatchParams::rotated_boxes)
        .def_readwrite("threads", &detect::MatchParams::threads);

    m.def("rotate_template", &detect::rotate_template);
    m.def("ncc_score", [](const imaging::Frame& f, const detect::Template& t, int x, int y) {
        auto s = detect::ncc_score(f, t, x, y);
        return s ? py::cast(*s) : py::none().cast<py::object>();
    });
    m.def("response_map", [](const imaging::Frame& f, const detect::Template& t) {
        auto rm = detect::response_map(f, t);
        py::array_t<float> out({rm.height, rm.width});
        std::memcpy(out.mutable_data(), rm.scores.data(), sizeof(float) * rm.scores.size());
        return out;
    });
    m.def("match", &detect::match, py::arg("frame"), py::arg("template"), py::arg("params"));
    m.def("match_all", &detect::match_all, py::arg("frame"), py::arg("templates"),
          py::arg("params"));
    m.def("rotated_iou", &detect::rotated_iou);
    m.def("nms", &detect::nms, py::arg("detections"), py::arg("iou_thr"));
    m.def("soft_nms",
          [](std::vector<detect::Detection> dets, const std::string& mode, double sigma,
             double final_thr) {
              auto md = mode == "gaussian" ? detect::SoftNmsMode::gaussian
                                           : detect::SoftNmsMode::linear;
              return detect::soft_nms(std::move(dets), md, sigma, final_thr);
          },
          py::arg("detections"), py::arg("mode") = "linear", py::arg("sigma") = 0.5,
          py::arg("final_thr") = 0.3);

    // ---- tracking
    py::class_<track::KalmanState>(m, "KalmanState")
        .def(py::init<>())
        .def_readwrite("x", &track::KalmanState::x)
        .def_readwrite("P", &track::KalmanState::P);

    py::class_<track::NoiseModel>(m, "NoiseModel")
        .def_static("constant_velocity", &track::NoiseModel::constant_velocity, py::arg("dt"),
                    py::arg("q"), py::arg("meas_sigma"))
        .def_readwrite("F", &track::NoiseModel::F)
        .def_readwrite("Q", &track::NoiseModel::Q)
        .def_readwrite("R", &track::NoiseModel::R);

    m.def("kf_predict", &track::kf_predict);
    m.def("kf_update", &track::kf_update);
    m.def("hungarian",
          [](py::array_t<double, py::array::c_style | py::array::forcecast> cost) {
              return track::hungarian(cost_from_array(cost));
          });

    py::class_<track::TrackerParams>(m, "TrackerParams")
        .def(py::init<>())
        .def_readwrite("model", &track::TrackerParams::model)
        .def_readwrite("gate", &track::TrackerParams::gate)
        .def_readwrite("max_misses", &track::TrackerParams::max_misses)
        .def_readwrite("confirm_hits", &track::TrackerParams::confirm_hits);

    py::class_<track::Track>(m, "Track")
        .def_readonly("id", &track::Track::id)
        .def_readonly("misses", &track::Track::misses)
        .def_readonly("hits", &track::Track::hits)
        .def_property_readonly("status",
                               [](const track::Track& t) { return track::to_string(t.status); })
        .def_property_readonly("position", [](const track::Track& t) { return t.position(); })
        .def_property_readonly("history", [](const track::Track& t) {
            std::vector<std::tuple<int, double, double, double, double>> out;
            for (const auto& p : t.history)
                out.emplace_back(p.frame_index, p.state(0), p.state(1), p.state(2), p.state(3));
            return out;
        });

    py::class_<track::Tracker>(m, "Tracker")
        .def(py::init<track::TrackerParams>())
        .def("step",
             [](track::Tracker& tk, const std::vector<detect::Detection>& dets, int frame) {
                 auto r = tk.step(dets, frame);
                 return py::make_tuple(r.matches, r.spawned);
             })
        .def_property_readonly("tracks",
                               [](const track::Tracker& tk) { return tk.tracks(); });

    // ---- geometry
    py::class_<geometry::Homography>(m, "Homography")
        .def_static("from_matrix", &geometry::Homography::from_matrix)
        .def("inverse", &geometry::Homography::inverse)
        .def_readonly("h", &geometry::Homography::h);

    m.def("estimate_homography", [](const std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>>&
                                        pairs) {
        std::vector<geometry::Correspondence> cs;
        for (const auto& [p, w] : pairs) cs.push_back({p, w});
        auto est = geometry::estimate_homography(cs);
        return py::make_tuple(est.h, est.reprojection_rms);
    });
    m.def("project", &geometry::project);
    m.def("estimate_speed",
          [](const std::vector<std::pair<int, Eigen::Vector2d>>& track,
             const geometry::Homography& h, double fps, int window) {
              std::vector<std::pair<int, double>> out;
              for (const auto& s : geometry::estimate_speed(track, h, fps, window))
                  out.emplace_back(s.frame_index, s.kmh);
              return out;
          },
          py::arg("pixel_track"), py::arg("homography"), py::arg("fps"), py::arg("window") = 12);

    // ---- classification, violations, analytics
    m.def("classify_detection",
          [](const detect::Detection& d, const std::string& hint) {
              return classify::to_string(
                  classify::classify(d, hint, std::nullopt, classify::ClassRules::defaults()));
          },
          py::arg("detection"), py::arg("template_hint") = "");

    m.def("point_in_polygon", &violations::point_in_polygon);
    m.def("dbscan_labels", &analytics::dbscan_labels, py::arg("points"), py::arg("eps"),
          py::arg("min_pts"));

    py::class_<analytics::MotReport>(m, "MotReport")
        .def_readonly("precision", &analytics::MotReport::precision)
        .def_readonly("recall", &analytics::MotReport::recall)
        .def_readonly("f1", &analytics::MotReport::f1)
        .def_readonly("mota", &analytics::MotReport::mota)
        .def_readonly("motp", &analytics::MotReport::motp)
        .def_readonly("id_switches", &analytics::MotReport::id_switches)
        .def_readonly("fp", &analytics::MotReport::fp)
        .def_readonly("fn", &analytics::MotReport::fn)
        .def_readonly("precision_defined", &analytics::MotReport::precision_defined);

    m.def("evaluate_mot",
          [](const std::vector<std::vector<std::pair<int, detect::RotatedBox>>>& gt,
             const std::vector<std::vector<std::pair<int, detect::RotatedBox>>>& pred,
             double dist_thr) {
              auto convert = [](const auto& frames) {
                  analytics::MotFrames out(frames.size());
                  for (size_t f = 0; f < frames.size(); ++f)
                      for (const auto& [id, box] : frames[f]) out[f].push_back({id, box});
                  return out;
              };
              return analytics::evaluate_mot(convert(gt), convert(pred), dist_thr);
          });

    // ---- synth + pipeline entry points
    m.def("generate_scenario",
          [](const std::string& scenario_path, const std::string& out_dir) {
              auto cfg = synth::load_scenario(scenario_path);
              auto out = synth::generate(cfg);
              synth::write_outputs(out, cfg, out_dir);
              return py::make_tuple(out.frames.size(), out.gt.tracks.size(),
                                    out.gt.violations.size());
          },
          py::arg("scenario_path"), py::arg("out_dir"));

    m.def("run_pipeline",
          [](const std::string& config_path) {
              auto cfg = pipeline::load_config(config_path);
              auto s = pipeline::run(cfg);
              py::dict d;
              d["frames"] = s.frames;
              d["detections"] = s.detections;
              d["tracks_total"] = s.tracks_total;
              d["tracks_confirmed"] = s.tracks_confirmed;
              d["events"] = s.events;
              d["evaluated"] = s.evaluated;
              return d;
          },
          py::arg("config_path"));

    m.def("evaluate_pipeline",
          [](const std::string& config_path, const std::string& gt_path) {
              auto cfg = pipeline::load_config(config_path);
              return pipeline::evaluate(cfg, gt_path);
          },
          py::arg("config_path"), py::arg("gt_path"));
}

#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "nadir/common.hpp"
#include "nadir/violations.hpp"

using namespace nadir;
using violations::DwellParams;
using violations::TrackSample;
using violations::TrackStates;
using violations::ViolationKind;
using violations::Zone;
using violations::ZoneKind;

namespace {

Zone square_zone(const std::string& id, ZoneKind kind, double x0, double y0, double side) {
    Zone z;
    z.id = id;
    z.kind = kind;
    z.polygon = {{x0, y0}, {x0 + side, y0}, {x0 + side, y0 + side}, {x0, y0 + side}};
    return z;
}

// track that sits at `stop` between [stop_start, stop_end) and moves in
// from the left before / out to the right after, at 10 m/s
TrackStates stopping_track(int id, const Eigen::Vector2d& stop, int stop_start, int stop_end,
                           int total, double fps) {
    TrackStates ts;
    ts.track_id = id;
    const double step = 10.0 / fps;
    for (int f = 0; f < total; ++f) {
        TrackSample s;
        s.frame = f;
        if (f < stop_start) {
            s.pos = stop - Eigen::Vector2d(step * (stop_start - f), 0.0);
            s.speed_kmh = 36.0;
        } else if (f < stop_end) {
            s.pos = stop;
            s.speed_kmh = 0.0;
        } else {
            s.pos = stop + Eigen::Vector2d(step * (f - stop_end + 1), 0.0);
            s.speed_kmh = 36.0;
        }
        ts.samples.push_back(s);
    }
    return ts;
}

// winding-number containment, the independent cross-check
bool winding_inside(const Eigen::Vector2d& p, const std::vector<Eigen::Vector2d>& poly) {
    double angle = 0.0;
    for (size_t i = 0; i < poly.size(); ++i) {
        Eigen::Vector2d a = poly[i] - p;
        Eigen::Vector2d b = poly[(i + 1) % poly.size()] - p;
        double cross = a.x() * b.y() - a.y() * b.x();
        double dot = a.dot(b);
        angle += std::atan2(cross, dot);
    }
    return std::abs(angle) > kPi;
}

}  // namespace

TEST_SUITE("violations") {

TEST_CASE("point in polygon basics") {
    std::vector<Eigen::Vector2d> square = {{0, 0}, {4, 0}, {4, 4}, {0, 4}};
    CHECK(violations::point_in_polygon({2, 2}, square));
    CHECK_FALSE(violations::point_in_polygon({9, 9}, square));
    CHECK_FALSE(violations::point_in_polygon({-1, 2}, square));
    // boundary points count as inside
    CHECK(violations::point_in_polygon({4, 2}, square));
    CHECK(violations::point_in_polygon({0, 0}, square));
    CHECK(violations::point_in_polygon({2, 0}, square));
    std::vector<Eigen::Vector2d> two = {{0, 0}, {1, 1}};
    CHECK_THROWS_AS(violations::point_in_polygon({0, 0}, two), std::invalid_argument);
}

TEST_CASE("point in polygon agrees with a winding-number oracle") {
    Rng rng(321);
    for (int rep = 0; rep < 30; ++rep) {
        // random convex polygon around a random center
        int n = 3 + static_cast<int>(rng.uniform_int(6));
        Eigen::Vector2d c(rng.uniform(-5, 5), rng.uniform(-5, 5));
        std::vector<double> angles;
        for (int i = 0; i < n; ++i) angles.push_back(rng.uniform(0.0, 2 * kPi));
        std::sort(angles.begin(), angles.end());
        std::vector<Eigen::Vector2d> poly;
        for (double a : angles)
            poly.push_back(c + rng.uniform(2.0, 6.0) * Eigen::Vector2d(std::cos(a), std::sin(a)));
        if (poly.size() < 3) continue;
        for (int q = 0; q < 40; ++q) {
            Eigen::Vector2d p(rng.uniform(-12, 12), rng.uniform(-12, 12));
            // skip points hugging an edge, where the conventions differ by design
            double min_edge = 1e9;
            for (size_t i = 0; i < poly.size(); ++i) {
                Eigen::Vector2d a = poly[i], b = poly[(i + 1) % poly.size()];
                Eigen::Vector2d ab = b - a;
                double t = std::clamp(ab.dot(p - a) / ab.squaredNorm(), 0.0, 1.0);
                min_edge = std::min(min_edge, (p - (a + t * ab)).norm());
            }
            if (min_edge < 1e-6) continue;
            CHECK(violations::point_in_polygon(p, poly) == winding_inside(p, poly));
        }
    }
}

TEST_CASE("double parking flags a 12 second stop and reports the dwell") {
    const double fps = 25.0;
    Zone zone = square_zone("np1", ZoneKind::no_parking, 95.0, 95.0, 10.0);
    auto track = stopping_track(7, {100.0, 100.0}, 100, 400, 500, fps);  // 300 frames = 12 s
    DwellParams params;  // v_stop 2 km/h, dwell > 10 s
    auto events = violations::detect_double_parking({track}, {zone}, params, fps);
    REQUIRE(events.size() == 1);
    CHECK(events[0].kind == ViolationKind::double_parking);
    CHECK(events[0].track_id == 7);
    CHECK(events[0].zone_id == "np1");
    CHECK(events[0].evidence == doctest::Approx(12.0).epsilon(1e-9));
    CHECK(events[0].end_frame >= events[0].start_frame);
}

TEST_CASE("stops shorter than the dwell threshold are ignored") {
    const double fps = 25.0;
    Zone zone = square_zone("np1", ZoneKind::no_parking, 95.0, 95.0, 10.0);
    auto track = stopping_track(3, {100.0, 100.0}, 100, 300, 400, fps);  // 200 frames = 8 s
    CHECK(violations::detect_double_parking({track}, {zone}, DwellParams{}, fps).empty());
}

TEST_CASE("stops outside every zone are ignored") {
    const double fps = 25.0;
    Zone zone = square_zone("np1", ZoneKind::no_parking, 0.0, 0.0, 10.0);
    auto track = stopping_track(3, {100.0, 100.0}, 50, 425, 500, fps);  // 15 s, far away
    CHECK(violations::detect_double_parking({track}, {zone}, DwellParams{}, fps).empty());
}

TEST_CASE("a short exit-reentry gap is bridged into one event") {
    const double fps = 25.0;
    Zone zone = square_zone("np1", ZoneKind::no_parking, 95.0, 95.0, 10.0);
    TrackStates ts;
    ts.track_id = 1;
    for (int f = 0; f < 600; ++f) {
        TrackSample s;
        s.frame = f;
        bool jitter = (f == 300 || f == 301);  // 2-frame exit
        s.pos = jitter ? Eigen::Vector2d(90.0, 100.0) : Eigen::Vector2d(100.0, 100.0);
        s.speed_kmh = 0.5;
        ts.samples.push_back(s);
    }
    auto events = violations::detect_double_parking({ts}, {zone}, DwellParams{}, fps);
    REQUIRE(events.size() == 1);
    CHECK(events[0].start_frame == 0);
    CHECK(events[0].end_frame == 599);

    // a 3-frame gap exceeds the bridge and splits the dwell in two
    TrackStates split = ts;
    split.samples[302].pos = Eigen::Vector2d(90.0, 100.0);
    auto split_events = violations::detect_double_parking({split}, {zone}, DwellParams{}, fps);
    REQUIRE(split_events.size() == 2);  // 300 and 297 frames, both above the 250 needed
    CHECK(split_events[0].end_frame == 299);
    CHECK(split_events[1].start_frame == 303);
}

TEST_CASE("crosswalk obstruction follows the same dwell rule") {
    const double fps = 25.0;
    Zone cw = square_zone("cw1", ZoneKind::crosswalk, 95.0, 95.0, 10.0);
    auto eleven = stopping_track(1, {100.0, 100.0}, 50, 325, 400, fps);  // 11 s
    auto events = violations::detect_crosswalk_obstruction({eleven}, {cw}, DwellParams{}, fps);
    REQUIRE(events.size() == 1);
    CHECK(events[0].kind == ViolationKind::crosswalk_obstruction);

    auto nine = stopping_track(2, {100.0, 100.0}, 50, 275, 400, fps);  // 9 s
    CHECK(violations::detect_crosswalk_obstruction({nine}, {cw}, DwellParams{}, fps).empty());

    // moving transit through the crosswalk at 20 km/h never dwells
    TrackStates transit;
    transit.track_id = 3;
    for (int f = 0; f < 400; ++f) {
        TrackSample s;
        s.frame = f;
        s.pos = Eigen::Vector2d(80.0 + 0.22 * f, 100.0);
        s.speed_kmh = 20.0;
        transit.samples.push_back(s);
    }
    CHECK(violations::detect_crosswalk_obstruction({transit}, {cw}, DwellParams{}, fps).empty());
}

TEST_CASE("lane changes near the u-turn are flagged with their distance") {
    Zone uturn;
    uturn.id = "ut1";
    uturn.kind = ZoneKind::uturn_approach;
    uturn.polygon = {{0, 0}, {200, 0}, {200, 10}, {0, 10}};
    uturn.axis_point = Eigen::Vector2d(150.0, 5.0);  // stop line
    uturn.axis_dir = Eigen::Vector2d(-1.0, 0.0);     // upstream points to -x

    violations::LaneGeometry lanes;
    lanes.centerlines.push_back({{0.0, 2.5}, {200.0, 2.5}});
    lanes.centerlines.push_back({{0.0, 7.5}, {200.0, 7.5}});

    auto make_track = [](double change_x) {
        TrackStates ts;
        ts.track_id = 9;
        for (int f = 0; f < 100; ++f) {
            TrackSample s;
            s.frame = f;
            double x = 2.0 * f;
            s.pos = Eigen::Vector2d(x, x < change_x ? 2.5 : 7.5);
            s.speed_kmh = 30.0;
            ts.samples.push_back(s);
        }
        return ts;
    };

    // change 25 m before the stop line (at x = 125)
    auto events =
        violations::detect_lane_change_violation({make_track(125.0)}, uturn, lanes, 100.0);
    REQUIRE(events.size() == 1);
    CHECK(events[0].kind == ViolationKind::illegal_lane_change);
    CHECK(events[0].evidence == doctest::Approx(25.0).epsilon(0.1));

    // change 150 m upstream (x = 0 side is beyond d_max)
    auto far = violations::detect_lane_change_violation({make_track(20.0)}, uturn, lanes, 100.0);
    CHECK(far.empty());

    // a track that never changes lanes
    TrackStates steady;
    steady.track_id = 4;
    for (int f = 0; f < 100; ++f)
        steady.samples.push_back({f, Eigen::Vector2d(2.0 * f, 2.5), 30.0});
    CHECK(violations::detect_lane_change_violation({steady}, uturn, lanes, 100.0).empty());

    CHECK_THROWS_AS(
        violations::detect_lane_change_violation({steady}, uturn, violations::LaneGeometry{}, 100.0),
        std::invalid_argument);
}

TEST_CASE("per-frame rescan oracle reproduces the dwell event set") {
    const double fps = 20.0;
    Zone zone = square_zone("np", ZoneKind::no_parking, 40.0, 40.0, 20.0);
    DwellParams params;
    params.dwell_min_s = 3.0;
    params.v_stop_kmh = 2.0;

    Rng rng(1234);
    for (int rep = 0; rep < 20; ++rep) {
        // random walk that sometimes sits still inside the zone
        TrackStates ts;
        ts.track_id = rep;
        Eigen::Vector2d pos(rng.uniform(30.0, 70.0), rng.uniform(30.0, 70.0));
        bool parked = false;
        for (int f = 0; f < 300; ++f) {
            if (rng.uniform() < 0.02) parked = !parked;
            if (!parked) pos += Eigen::Vector2d(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
            ts.samples.push_back({f, pos, parked ? 0.0 : 15.0});
        }
        auto events = violations::detect_double_parking({ts}, {zone}, params, fps);

        // oracle: flag per frame, merge gaps <= bridge, keep runs > ceil(s*fps)
        std::vector<int> flagged;
        for (const auto& s : ts.samples)
            if (s.speed_kmh < params.v_stop_kmh && violations::point_in_polygon(s.pos, zone.polygon))
                flagged.push_back(s.frame);
        std::vector<std::pair<int, int>> runs;
        for (int f : flagged) {
            if (!runs.empty() && f - runs.back().second - 1 <= params.bridge_gap)
                runs.back().second = f;
            else
                runs.emplace_back(f, f);
        }
        std::vector<std::pair<int, int>> expected;
        long required = std::lround(std::ceil(params.dwell_min_s * fps));
        for (auto [s, e] : runs)
            if (e - s + 1 > required) expected.emplace_back(s, e);

        REQUIRE(events.size() == expected.size());
        for (size_t i = 0; i < events.size(); ++i) {
            CHECK(events[i].start_frame == expected[i].first);
            CHECK(events[i].end_frame == expected[i].second);
        }
    }
}

TEST_CASE("event logs serialize deterministically") {
    violations::ViolationEvent e;
    e.track_id = 12;
    e.kind = ViolationKind::double_parking;
    e.zone_id = "np2";
    e.start_frame = 100;
    e.end_frame = 399;
    e.evidence = 12.0;
    e.evidence_name = "dwell_seconds";
    std::string a = violations::event_to_json_line(e);
    std::string b = violations::event_to_json_line(e);
    CHECK(a == b);
    auto back = violations::event_from_json_line(a);
    CHECK(back.track_id == e.track_id);
    CHECK(back.kind == e.kind);
    CHECK(back.zone_id == e.zone_id);
    CHECK(back.start_frame == e.start_frame);
    CHECK(back.end_frame == e.end_frame);
    CHECK(back.evidence == doctest::Approx(e.evidence));
    CHECK(back.evidence_name == e.evidence_name);
}

TEST_CASE("zone files round trip") {
    namespace fs = std::filesystem;
    fs::create_directories("test_tmp");
    violations::ZoneFile zf;
    Zone np = square_zone("np1", ZoneKind::no_parking, 0, 0, 5);
    Zone ut = square_zone("ut1", ZoneKind::uturn_approach, 10, 0, 5);
    ut.axis_point = Eigen::Vector2d(12.0, 2.0);
    ut.axis_dir = Eigen::Vector2d(0.0, 1.0);
    zf.zones = {np, ut};
    zf.lanes.centerlines.push_back({{0, 1}, {10, 1}});
    zf.gates.push_back({"A", {0, 0}, {0, 10}});
    violations::save_zone_file("test_tmp/zones.json", zf);
    auto loaded = violations::load_zone_file("test_tmp/zones.json");
    REQUIRE(loaded.zones.size() == 2);
    CHECK(loaded.zones[0].kind == ZoneKind::no_parking);
    REQUIRE(loaded.zones[1].axis_point.has_value());
    CHECK((*loaded.zones[1].axis_point - *ut.axis_point).norm() <= 1e-12);
    REQUIRE(loaded.lanes.centerlines.size() == 1);
    REQUIRE(loaded.gates.size() == 1);
    CHECK(loaded.gates[0].id == "A");
}

}  // TEST_SUITE

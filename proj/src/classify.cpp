#include "nadir/classify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace nadir::classify {

using nlohmann::json;

std::string to_string(VehicleClass c) {
    switch (c) {
        case VehicleClass::motorcycle: return "motorcycle";
        case VehicleClass::taxi: return "taxi";
        case VehicleClass::private_car: return "private_car";
        case VehicleClass::pickup: return "pickup";
        case VehicleClass::bus: return "bus";
    }
    return "private_car";
}

VehicleClass class_from_string(std::string_view s) {
    if (s == "motorcycle") return VehicleClass::motorcycle;
    if (s == "taxi") return VehicleClass::taxi;
    if (s == "private_car") return VehicleClass::private_car;
    if (s == "pickup") return VehicleClass::pickup;
    if (s == "bus") return VehicleClass::bus;
    throw std::invalid_argument("unknown vehicle class: " + std::string(s));
}

std::optional<double> mean_hue(const ColorPatch& patch) {
    if (patch.width <= 0 || patch.height <= 0 ||
        patch.data.size() != static_cast<size_t>(patch.width) * patch.height * 3)
        throw std::invalid_argument("mean_hue: malformed color patch");
    double r = 0, g = 0, b = 0;
    size_t n = static_cast<size_t>(patch.width) * patch.height;
    for (size_t i = 0; i < n; ++i) {
        r += patch.data[i * 3];
        g += patch.data[i * 3 + 1];
        b += patch.data[i * 3 + 2];
    }
    r /= static_cast<double>(n);
    g /= static_cast<double>(n);
    b /= static_cast<double>(n);
    double mx = std::max({r, g, b}), mn = std::min({r, g, b});
    double delta = mx - mn;
    if (delta < 1e-9) return std::nullopt;
    double h;
    if (mx == r)
        h = 60.0 * std::fmod((g - b) / delta, 6.0);
    else if (mx == g)
        h = 60.0 * ((b - r) / delta + 2.0);
    else
        h = 60.0 * ((r - g) / delta + 4.0);
    if (h < 0) h += 360.0;
    return h;
}

ClassRules ClassRules::defaults() {
    // Template shape matching leads; size/aspect thresholds cover hint-free
    // detections in the ~200 m regime where a private car spans ~200 px.
    ClassRules r;
    for (auto cls : {VehicleClass::bus, VehicleClass::motorcycle, VehicleClass::taxi,
                     VehicleClass::pickup}) {
        Rule hint;
        hint.label = cls;
        hint.hint_is = to_string(cls);
        r.rules.push_back(hint);
    }

    Rule taxi_hue;
    taxi_hue.label = VehicleClass::taxi;
    taxi_hue.hue_range = {38.0, 70.0};  // yellow livery
    taxi_hue.min_area = 130.0;
    taxi_hue.max_area = 700.0;
    r.rules.push_back(taxi_hue);

    Rule bus;
    bus.label = VehicleClass::bus;
    bus.min_area = 700.0;
    r.rules.push_back(bus);

    Rule moto;
    moto.label = VehicleClass::motorcycle;
    moto.max_area = 130.0;
    moto.min_aspect = 2.0;
    r.rules.push_back(moto);

    Rule pickup;
    pickup.label = VehicleClass::pickup;
    pickup.min_area = 380.0;
    pickup.max_area = 700.0;
    r.rules.push_back(pickup);

    r.fallback = VehicleClass::private_car;
    return r;
}

namespace {

Rule rule_from_json(const json& j) {
    Rule r;
    r.label = class_from_string(j.at("label").get<std::string>());
    if (j.contains("min_area")) r.min_area = j["min_area"].get<double>();
    if (j.contains("max_area")) r.max_area = j["max_area"].get<double>();
    if (j.contains("min_aspect")) r.min_aspect = j["min_aspect"].get<double>();
    if (j.contains("max_aspect")) r.max_aspect = j["max_aspect"].get<double>();
    if (j.contains("hint_is")) r.hint_is = j["hint_is"].get<std::string>();
    if (j.contains("hue_min") && j.contains("hue_max"))
        r.hue_range = {j["hue_min"].get<double>(), j["hue_max"].get<double>()};
    return r;
}

json rule_to_json(const Rule& r) {
    json j;
    j["label"] = to_string(r.label);
    if (r.min_area) j["min_area"] = *r.min_area;
    if (r.max_area) j["max_area"] = *r.max_area;
    if (r.min_aspect) j["min_aspect"] = *r.min_aspect;
    if (r.max_aspect) j["max_aspect"] = *r.max_aspect;
    if (r.hint_is) j["hint_is"] = *r.hint_is;
    if (r.hue_range) {
        j["hue_min"] = r.hue_range->first;
        j["hue_max"] = r.hue_range->second;
    }
    return j;
}

}  // namespace

ClassRules load_rules(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("rules: cannot open " + path);
    json j = json::parse(in);
    ClassRules rules;
    for (const auto& rj : j.at("rules")) rules.rules.push_back(rule_from_json(rj));
    if (j.contains("fallback")) rules.fallback = class_from_string(j["fallback"].get<std::string>());
    return rules;
}

void save_rules(const std::string& path, const ClassRules& rules) {
    json j;
    j["rules"] = json::array();
    for (const auto& r : rules.rules) j["rules"].push_back(rule_to_json(r));
    j["fallback"] = to_string(rules.fallback);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("rules: cannot write " + path);
    out << j.dump(2) << "\n";
}

VehicleClass classify(const detect::Detection& det, std::string_view template_hint,
                      const std::optional<ColorPatch>& color, const ClassRules& rules) {
    double area = det.box.w * det.box.h;
    double long_side = std::max(det.box.w, det.box.h);
    double short_side = std::min(det.box.w, det.box.h);
    double aspect = short_side > 0.0 ? long_side / short_side : 0.0;
    std::optional<double> hue;
    if (color) hue = mean_hue(*color);

    for (const Rule& r : rules.rules) {
        if (r.min_area && area < *r.min_area) continue;
        if (r.max_area && area > *r.max_area) continue;
        if (r.min_aspect && aspect < *r.min_aspect) continue;
        if (r.max_aspect && aspect > *r.max_aspect) continue;
        if (r.hint_is && template_hint != *r.hint_is) continue;
        if (r.hue_range) {
            if (!hue) continue;
            if (*hue < r.hue_range->first || *hue > r.hue_range->second) continue;
        }
        return r.label;
    }
    return rules.fallback;
}

VehicleClass majority_class(const std::array<int, kClassCount>& votes) {
    int best = 2;  // private_car
    int best_count = -1;
    for (int i = 0; i < kClassCount; ++i) {
        if (votes[i] > best_count) {
            best_count = votes[i];
            best = i;
        }
    }
    if (best_count <= 0) return VehicleClass::private_car;
    return static_cast<VehicleClass>(best);
}

}  // namespace nadir::classify

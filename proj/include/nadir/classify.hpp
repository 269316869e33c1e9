#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nadir/detect.hpp"

namespace nadir::classify {

enum class VehicleClass { motorcycle, taxi, private_car, pickup, bus };
constexpr int kClassCount = 5;

std::string to_string(VehicleClass c);
VehicleClass class_from_string(std::string_view s);

/// Interleaved RGB patch used for color cues.
struct ColorPatch {
    int width = 0;
    int height = 0;
    std::vector<float> data;  // width * height * 3
};

/// Mean hue in degrees [0, 360); nullopt for achromatic patches.
std::optional<double> mean_hue(const ColorPatch& patch);

/// One rule: all present predicates must hold. Area is measured in level-0
/// pixels, aspect is long side over short side.
struct Rule {
    VehicleClass label = VehicleClass::private_car;
    std::optional<double> min_area;
    std::optional<double> max_area;
    std::optional<double> min_aspect;
    std::optional<double> max_aspect;
    std::optional<std::string> hint_is;          // template class hint equals
    std::optional<std::pair<double, double>> hue_range;  // degrees, requires color
};

struct ClassRules {
    std::vector<Rule> rules;  // evaluated in order, first match wins
    VehicleClass fallback = VehicleClass::private_car;

    // Size thresholds assume the ~200 m nadir regime where a private car
    // covers roughly 200 level-0 pixels; override via a rules file for other
    // altitudes. The taxi hue band is locale-specific.
    static ClassRules defaults();
};

ClassRules load_rules(const std::string& path);
void save_rules(const std::string& path, const ClassRules& rules);

VehicleClass classify(const detect::Detection& det, std::string_view template_hint,
                      const std::optional<ColorPatch>& color, const ClassRules& rules);

/// Majority vote over per-detection labels; ties resolve to the smaller
/// enum value. Empty vote counts fall back to private_car.
VehicleClass majority_class(const std::array<int, kClassCount>& votes);

}  // namespace nadir::classify

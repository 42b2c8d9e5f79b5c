#pragma once

// JSON conversions shared by the dataset sidecar, checkpoints and reports.

#include <cmath>
#include <string>

#include <json.hpp>

#include "pamic/dataset.hpp"
#include "pamic/error.hpp"
#include "pamic/response.hpp"

namespace pamic::detail {

using nlohmann::json;

template <class T>
T get_field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) {
        throw SchemaError(std::string("missing field '") + key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw SchemaError(std::string("field '") + key + "' has the wrong type: " + e.what());
    }
}

inline json grid_to_json(const FrequencyGrid& g) {
    return {{"f_min", g.f_min()}, {"f_max", g.f_max()}, {"count", g.count()}, {"points", g.points()}};
}

inline FrequencyGrid grid_from_json(const json& j) {
    const auto f_min = get_field<double>(j, "f_min");
    const auto f_max = get_field<double>(j, "f_max");
    const auto count = get_field<std::size_t>(j, "count");
    const auto points = get_field<std::vector<double>>(j, "points");
    FrequencyGrid g;
    try {
        g = FrequencyGrid::linear(f_min, f_max, count);
    } catch (const InvalidParameter& e) {
        throw SchemaError(std::string("invalid grid: ") + e.what());
    }
    if (points.size() != count) throw SchemaError("grid point count disagrees with 'count'");
    for (std::size_t i = 0; i < count; ++i) {
        if (std::abs(points[i] - g[i]) > 1e-9 * std::abs(g[i])) {
            throw SchemaError("grid points are not the declared linear grid");
        }
    }
    return g;
}

inline json spec_to_json(const ClassGridSpec& s) {
    return {{"class", label_of(s.mic_class)},
            {"name", std::string(mic_class_name(s.mic_class))},
            {"f2_values", s.f2_values},
            {"f3_range", {s.f3_low, s.f3_high}},
            {"f3_count", s.f3_count},
            {"f4_range", {s.f4_low, s.f4_high}},
            {"f4_count", s.f4_count},
            {"xi_values", s.xi_values}};
}

inline ClassGridSpec spec_from_json(const json& j) {
    ClassGridSpec s;
    try {
        s.mic_class = mic_class_from_label(get_field<int>(j, "class"));
    } catch (const InvalidParameter& e) {
        throw SchemaError(e.what());
    }
    s.f2_values = get_field<std::vector<double>>(j, "f2_values");
    const auto f3 = get_field<std::vector<double>>(j, "f3_range");
    const auto f4 = get_field<std::vector<double>>(j, "f4_range");
    if (f3.size() != 2 || f4.size() != 2) throw SchemaError("resonance ranges need two values");
    s.f3_low = f3[0];
    s.f3_high = f3[1];
    s.f4_low = f4[0];
    s.f4_high = f4[1];
    s.f3_count = get_field<std::size_t>(j, "f3_count");
    s.f4_count = get_field<std::size_t>(j, "f4_count");
    s.xi_values = get_field<std::vector<double>>(j, "xi_values");
    try {
        s.validate();
    } catch (const InvalidParameter& e) {
        throw SchemaError(std::string("invalid class grid: ") + e.what());
    }
    return s;
}

}  // namespace pamic::detail

#include "mushroom/protocol.hpp"

#include <json.hpp>

#include <cmath>

namespace mushroom {

using nlohmann::json;

namespace {

double number(const json& j, const char* key)
{
    if (!j.contains(key))
        throw ShapeError(std::string("protocol field '") + key + "' missing");
    const auto& v = j.at(key);
    if (!v.is_number())
        throw ShapeError(std::string("protocol field '") + key + "' must be a number");
    return v.get<double>();
}

double number_or(const json& j, const char* key, double fallback)
{
    return j.contains(key) ? number(j, key) : fallback;
}

}  // namespace

std::string StaticProtocol::to_json() const
{
    json j = {{"kind", "static"},
              {"r", shape_.r},
              {"w", shape_.w},
              {"h", shape_.h},
              {"tan_theta", shape_.tan_theta},
              {"period", period_}};
    return j.dump();
}

std::string RectangleCycle::to_json() const
{
    const auto& p = params_;
    json j = {{"kind", "rectangle"},
              {"r", p.r},
              {"w0", p.w0},
              {"w1", p.w1},
              {"h0", p.h0},
              {"h1", p.h1},
              {"tan_theta", p.tan_theta},
              {"direction", p.direction == LoopDirection::anticlockwise ? "anticlockwise" : "clockwise"},
              {"period", p.period}};
    return j.dump();
}

std::string SinusoidalCycle::to_json() const
{
    const auto& p = params_;
    json j = {{"kind", "sinusoidal"},
              {"r0", p.r0},
              {"h0", p.h0},
              {"a", p.a},
              {"b", p.b},
              {"c", p.c},
              {"tan_theta", p.tan_theta},
              {"time_scale", p.time_scale},
              {"nu_rate", p.nu_rate}};
    return j.dump();
}

std::shared_ptr<const Protocol> protocol_from_json(std::string_view text, double default_e0)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ShapeError(std::string("protocol JSON does not parse: ") + e.what());
    }
    if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
        throw ShapeError("protocol field 'kind' missing");
    const auto kind = j.at("kind").get<std::string>();

    if (kind == "rectangle") {
        RectangleParams p;
        p.r = number(j, "r");
        p.w0 = number(j, "w0");
        p.w1 = number(j, "w1");
        p.h0 = number(j, "h0");
        p.h1 = number(j, "h1");
        p.tan_theta = number(j, "tan_theta");
        std::string dir = j.value("direction", std::string("anticlockwise"));
        if (dir == "anticlockwise")
            p.direction = LoopDirection::anticlockwise;
        else if (dir == "clockwise")
            p.direction = LoopDirection::clockwise;
        else
            throw ShapeError("protocol field 'direction' must be anticlockwise or clockwise");
        if (j.contains("period") && !j.at("period").is_null()) {
            p.period = number(j, "period");
        } else {
            if (!(default_e0 > 0.0))
                throw ShapeError("rectangle protocol needs 'period' (or an initial energy to derive it)");
            p.period = RectangleCycle::adiabatic_period(p, default_e0);
        }
        return std::make_shared<RectangleCycle>(p);
    }
    if (kind == "sinusoidal") {
        SinusoidalParams p;
        p.r0 = number(j, "r0");
        p.h0 = number(j, "h0");
        p.a = number(j, "a");
        p.b = number(j, "b");
        p.c = number(j, "c");
        p.tan_theta = number(j, "tan_theta");
        p.time_scale = number_or(j, "time_scale", 1.0);
        p.nu_rate = number_or(j, "nu_rate", 0.5);
        return std::make_shared<SinusoidalCycle>(p);
    }
    if (kind == "static") {
        auto shape = MushroomShape::make(number(j, "r"), number(j, "w"), number(j, "h"), number(j, "tan_theta"));
        return std::make_shared<StaticProtocol>(shape, number_or(j, "period", 1.0));
    }
    throw ShapeError("unknown protocol kind '" + kind + "'");
}

}  // namespace mushroom

// Copyright 2026 The Navi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Transit directions and GPS-triggered walking instructions.
//
// Plans are read from recorded directions-response documents shaped like
// routes[].legs[].steps[]; no live routing service is contacted.

#include <cmath>
#include <cstddef>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "navi/geometry.hpp"

namespace navi {

inline constexpr double kEarthRadiusM = 6371008.8;

struct GeoCoord {
  double lat = 0.0;
  double lon = 0.0;

  bool is_valid() const {
    return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 && lat <= 90.0 &&
           lon >= -180.0 && lon <= 180.0;
  }
  bool operator==(const GeoCoord&) const = default;
};

enum class TravelMode { walk, transit };

struct TransitStep {
  TravelMode mode = TravelMode::walk;
  std::string instruction;
  std::optional<std::string> line;
  std::optional<std::string> departure_stop;
  std::optional<std::string> departure_time;
  GeoCoord waypoint;  // where the step begins; its instruction is announced here
  double distance_m = 0.0;
  double duration_min = 0.0;

  bool operator==(const TransitStep&) const = default;
};

struct TransitPlan {
  std::vector<TransitStep> steps;
  std::optional<GeoCoord> destination;  // end of the leg

  bool operator==(const TransitPlan&) const = default;
};

/// Malformed directions document; what() names the offending field path.
class PlanParseError : public std::runtime_error {
 public:
  PlanParseError(std::string path, const std::string& problem)
      : std::runtime_error(path + ": " + problem), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Great-circle distance in meters.
inline double haversine(const GeoCoord& a, const GeoCoord& b) {
  const double lat1 = a.lat * kDegToRad;
  const double lat2 = b.lat * kDegToRad;
  const double dlat = (b.lat - a.lat) * kDegToRad;
  const double dlon = (b.lon - a.lon) * kDegToRad;
  const double s = std::sin(dlat / 2.0);
  const double t = std::sin(dlon / 2.0);
  const double h = s * s + std::cos(lat1) * std::cos(lat2) * t * t;
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(std::min(1.0, h)));
}

/// Initial compass bearing from `a` to `b`, degrees clockwise from north.
inline double initial_bearing(const GeoCoord& a, const GeoCoord& b) {
  const double lat1 = a.lat * kDegToRad;
  const double lat2 = b.lat * kDegToRad;
  const double dlon = (b.lon - a.lon) * kDegToRad;
  const double y = std::sin(dlon) * std::cos(lat2);
  const double x = std::cos(lat1) * std::sin(lat2) - std::sin(lat1) * std::cos(lat2) * std::cos(dlon);
  return normalize_deg(std::atan2(y, x) * kRadToDeg);
}

inline const char* compass_word(double bearing) {
  static constexpr const char* kWords[] = {"north", "north-east", "east", "south-east",
                                           "south", "south-west", "west", "north-west"};
  const int sector = static_cast<int>(std::floor(normalize_deg(bearing + 22.5) / 45.0)) % 8;
  return kWords[sector];
}

/// Turn from the previous segment's bearing onto the next one.
inline const char* relative_turn(double previous_bearing, double bearing) {
  const double diff = wrap_deg_signed(bearing - previous_bearing);
  if (std::abs(diff) <= 30.0) return "continue straight";
  if (std::abs(diff) >= 150.0) return "turn around";
  return diff > 0.0 ? "turn right" : "turn left";
}

namespace detail {

inline const nlohmann::json& field(const nlohmann::json& obj, const std::string& path,
                                   const char* key) {
  if (!obj.is_object() || !obj.contains(key)) throw PlanParseError(path + "." + key, "missing");
  return obj.at(key);
}

inline const nlohmann::json* optional_field(const nlohmann::json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) return nullptr;
  return &obj.at(key);
}

inline double number_field(const nlohmann::json& obj, const std::string& path, const char* key) {
  const auto& v = field(obj, path, key);
  if (!v.is_number()) throw PlanParseError(path + "." + key, "expected a number");
  return v.get<double>();
}

inline std::string string_field(const nlohmann::json& obj, const std::string& path, const char* key) {
  const auto& v = field(obj, path, key);
  if (!v.is_string()) throw PlanParseError(path + "." + key, "expected a string");
  return v.get<std::string>();
}

inline GeoCoord coord_field(const nlohmann::json& obj, const std::string& path, const char* key) {
  const auto& loc = field(obj, path, key);
  const std::string where = path + "." + key;
  GeoCoord c{number_field(loc, where, "lat"), number_field(loc, where, "lng")};
  if (!c.is_valid()) throw PlanParseError(where, "coordinate out of range");
  return c;
}

inline std::string strip_markup(std::string_view html) {
  std::string out;
  bool in_tag = false;
  for (char ch : html) {
    if (ch == '<') {
      in_tag = true;
    } else if (ch == '>') {
      in_tag = false;
    } else if (!in_tag) {
      out.push_back(ch);
    }
  }
  return out;
}

inline std::optional<std::string> optional_text(const nlohmann::json& obj,
                                                std::initializer_list<const char*> path) {
  const nlohmann::json* cur = &obj;
  for (const char* key : path) {
    cur = optional_field(*cur, key);
    if (!cur) return std::nullopt;
  }
  if (!cur->is_string()) return std::nullopt;
  return cur->get<std::string>();
}

}  // namespace detail

/// Extracts the steps of the first leg of the first route.
inline TransitPlan parse_plan(std::string_view fixture) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(fixture);
  } catch (const nlohmann::json::parse_error& e) {
    throw PlanParseError("$", std::string("not valid JSON: ") + e.what());
  }
  const auto& routes = detail::field(doc, "$", "routes");
  if (!routes.is_array() || routes.empty()) throw PlanParseError("$.routes", "no routes");
  const auto& legs = detail::field(routes[0], "$.routes[0]", "legs");
  if (!legs.is_array() || legs.empty()) throw PlanParseError("$.routes[0].legs", "no legs");
  const auto& leg = legs[0];
  const std::string leg_path = "$.routes[0].legs[0]";
  const auto& steps = detail::field(leg, leg_path, "steps");
  if (!steps.is_array() || steps.empty()) throw PlanParseError(leg_path + ".steps", "no steps");

  TransitPlan plan;
  if (detail::optional_field(leg, "end_location")) {
    plan.destination = detail::coord_field(leg, leg_path, "end_location");
  }
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& s = steps[i];
    const std::string path = leg_path + ".steps[" + std::to_string(i) + "]";
    TransitStep step;
    const std::string mode = detail::string_field(s, path, "travel_mode");
    if (mode == "WALKING") {
      step.mode = TravelMode::walk;
    } else if (mode == "TRANSIT") {
      step.mode = TravelMode::transit;
    } else {
      throw PlanParseError(path + ".travel_mode", "unsupported mode " + mode);
    }
    step.instruction = detail::strip_markup(detail::string_field(s, path, "html_instructions"));
    step.waypoint = detail::coord_field(s, path, "start_location");
    step.distance_m = detail::number_field(detail::field(s, path, "distance"), path + ".distance", "value");
    if (step.distance_m < 0.0) throw PlanParseError(path + ".distance.value", "negative distance");
    step.duration_min =
        detail::number_field(detail::field(s, path, "duration"), path + ".duration", "value") / 60.0;
    if (step.mode == TravelMode::transit) {
      const auto& td = detail::field(s, path, "transit_details");
      step.line = detail::optional_text(td, {"line", "short_name"});
      if (!step.line) step.line = detail::optional_text(td, {"line", "name"});
      step.departure_stop = detail::optional_text(td, {"departure_stop", "name"});
      step.departure_time = detail::optional_text(td, {"departure_time", "text"});
    }
    plan.steps.push_back(std::move(step));
  }
  return plan;
}

/// Writes a plan back as a minimal directions-response document.
inline std::string serialize_plan(const TransitPlan& plan) {
  auto coord = [](const GeoCoord& c) { return nlohmann::json{{"lat", c.lat}, {"lng", c.lon}}; };
  nlohmann::json steps = nlohmann::json::array();
  for (const TransitStep& s : plan.steps) {
    nlohmann::json j = {{"travel_mode", s.mode == TravelMode::walk ? "WALKING" : "TRANSIT"},
                        {"html_instructions", s.instruction},
                        {"start_location", coord(s.waypoint)},
                        {"distance", {{"value", s.distance_m}}},
                        {"duration", {{"value", s.duration_min * 60.0}}}};
    if (s.mode == TravelMode::transit) {
      nlohmann::json td = nlohmann::json::object();
      if (s.line) td["line"] = {{"short_name", *s.line}};
      if (s.departure_stop) td["departure_stop"] = {{"name", *s.departure_stop}};
      if (s.departure_time) td["departure_time"] = {{"text", *s.departure_time}};
      j["transit_details"] = td;
    }
    steps.push_back(j);
  }
  nlohmann::json leg = {{"steps", steps}};
  if (plan.destination) leg["end_location"] = coord(*plan.destination);
  return nlohmann::json{{"status", "OK"}, {"routes", {{{"legs", {leg}}}}}}.dump(2);
}

/// Compass bearing of step `i`, toward the next step's waypoint (or the
/// destination for the last step).
inline std::optional<double> step_bearing(const TransitPlan& plan, std::size_t i) {
  if (i + 1 < plan.steps.size()) return initial_bearing(plan.steps[i].waypoint, plan.steps[i + 1].waypoint);
  if (plan.destination) return initial_bearing(plan.steps[i].waypoint, *plan.destination);
  return std::nullopt;
}

/// Spoken form of step `i`: direction, distance in meters, duration in
/// minutes, then the provider's own wording.
inline std::string render_instruction(const TransitPlan& plan, std::size_t i) {
  const TransitStep& s = plan.steps.at(i);
  std::ostringstream out;
  if (s.mode == TravelMode::transit) {
    out << "Take " << (s.line ? "line " + *s.line : std::string("transit"));
    if (s.departure_stop) out << " from " << *s.departure_stop;
    if (s.departure_time) out << " at " << *s.departure_time;
  } else {
    out << "Walk";
    if (const auto bearing = step_bearing(plan, i)) {
      out << ' ' << compass_word(*bearing);
      if (i > 0) {
        if (const auto previous = step_bearing(plan, i - 1)) {
          out << ", " << relative_turn(*previous, *bearing);
        }
      }
    }
  }
  const long meters = std::lround(s.distance_m);
  const long minutes = std::max(s.duration_min > 0.0 ? 1L : 0L, std::lround(s.duration_min));
  out << ", " << meters << " meters, " << minutes << (minutes == 1 ? " minute" : " minutes");
  if (!s.instruction.empty()) out << ". " << s.instruction;
  return out.str();
}

struct TriggerState {
  std::shared_ptr<const TransitPlan> plan;
  std::size_t current_step = 0;  // next step to announce
  double trigger_radius = 15.0;

  static TriggerState start(TransitPlan plan, double trigger_radius = 15.0) {
    if (plan.steps.empty()) throw std::invalid_argument("TriggerState: plan has no steps");
    return {std::make_shared<const TransitPlan>(std::move(plan)), 0, trigger_radius};
  }
  bool finished() const { return !plan || current_step >= plan->steps.size(); }
};

/// Announces the pending step once the fix is within the trigger radius of
/// its waypoint. Returns nothing, and leaves the state alone, otherwise.
inline std::optional<std::pair<std::string, TriggerState>> next_instruction(const TriggerState& state,
                                                                            const GeoCoord& fix) {
  if (state.finished()) return std::nullopt;
  const TransitStep& step = state.plan->steps[state.current_step];
  if (haversine(fix, step.waypoint) > state.trigger_radius) return std::nullopt;
  TriggerState next = state;
  ++next.current_step;
  return std::make_pair(render_instruction(*state.plan, state.current_step), std::move(next));
}

// GPS feed ------------------------------------------------------------------

struct GpsFix {
  GeoCoord coord;
  double timestamp = 0.0;
};

/// Newline-delimited `lat,lon,timestamp`. Blank lines and lines starting with
/// '#' are skipped.
inline std::vector<GpsFix> parse_gps_feed(std::string_view text) {
  std::vector<GpsFix> fixes;
  std::istringstream in{std::string(text)};
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    GpsFix fix;
    char c1 = 0;
    char c2 = 0;
    if (!(fields >> fix.coord.lat >> c1 >> fix.coord.lon >> c2 >> fix.timestamp) || c1 != ',' ||
        c2 != ',' || !fix.coord.is_valid()) {
      throw PlanParseError("gps feed line " + std::to_string(lineno), "expected lat,lon,timestamp");
    }
    fixes.push_back(fix);
  }
  return fixes;
}

/// Source of transit plans; only fixture playback is provided.
class DirectionsProvider {
 public:
  virtual ~DirectionsProvider() = default;
  virtual TransitPlan directions(const GeoCoord& origin, const std::string& destination) = 0;
};

class FixtureDirectionsProvider : public DirectionsProvider {
 public:
  explicit FixtureDirectionsProvider(std::string fixture_path) : path_(std::move(fixture_path)) {}

  TransitPlan directions(const GeoCoord&, const std::string&) override {
    std::ifstream in(path_, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open directions fixture " + path_);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_plan(buf.str());
  }

 private:
  std::string path_;
};

}  // namespace navi

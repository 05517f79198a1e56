#include "aim/config.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace aim {

namespace {

struct UnitScale {
  std::string_view suffix;
  Unit unit;
  double scale; // to SI
};

constexpr UnitScale kUnits[] = {
    {"m", Unit::Length, 1.0},         {"km", Unit::Length, 1000.0},     {"s", Unit::Time, 1.0},
    {"ms", Unit::Time, 1e-3},         {"m/s", Unit::Speed, 1.0},        {"km/h", Unit::Speed, 1.0 / 3.6},
    {"m/s^2", Unit::Acceleration, 1.0}, {"m/s2", Unit::Acceleration, 1.0},
};

std::string_view unit_name(Unit u) {
  switch (u) {
    case Unit::Length: return "length (m, km)";
    case Unit::Time: return "time (s, ms)";
    case Unit::Speed: return "speed (m/s, km/h)";
    case Unit::Acceleration: return "acceleration (m/s^2)";
  }
  return "?";
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string where(const YAML::Node& n) {
  const auto m = n.Mark();
  if (m.is_null()) return "";
  return " (line " + std::to_string(m.line + 1) + ")";
}

void check_keys(const YAML::Node& map, std::string_view section, std::initializer_list<std::string_view> allowed) {
  if (!map.IsMap()) throw ConfigError(std::string(section) + " must be a mapping" + where(map));
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + std::string(section) + where(kv.first));
  }
}

class Reader {
 public:
  explicit Reader(const YAML::Node& node, std::string section) : node_(node), section_(std::move(section)) {}

  void quantity(const char* key, Unit unit, double& out) const {
    if (const auto n = node_[key]) out = parse_quantity(scalar(n, key), unit);
  }
  void number(const char* key, double& out) const {
    if (const auto n = node_[key]) out = parse_number(scalar(n, key), key);
  }
  template <typename Int>
  void integer(const char* key, Int& out) const {
    if (const auto n = node_[key]) {
      const auto s = scalar(n, key);
      Int v{};
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc{} || p != s.data() + s.size()) throw ConfigError(name(key) + ": expected an integer, got '" + s + "'");
      out = v;
    }
  }
  std::string text(const char* key) const {
    const auto n = node_[key];
    if (!n) throw ConfigError(name(key) + " is required" + where(node_));
    return scalar(n, key);
  }

 private:
  std::string name(const char* key) const { return section_.empty() ? key : section_ + "." + key; }
  std::string scalar(const YAML::Node& n, const char* key) const {
    if (!n.IsScalar()) throw ConfigError(name(key) + " must be a scalar" + where(n));
    return n.Scalar();
  }
  double parse_number(const std::string& s, const char* key) const {
    double v = 0.0;
    const auto t = trim(s);
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || p != t.data() + t.size())
      throw ConfigError(name(key) + ": expected a plain number, got '" + s + "'");
    return v;
  }

  YAML::Node node_;
  std::string section_;
};

Approach approach_of(const std::string& s) {
  try {
    return parse_approach(s);
  } catch (const std::exception&) {
    throw ConfigError("unknown approach '" + s + "', expected N, E, S or W");
  }
}

Maneuver maneuver_of(const std::string& s) {
  try {
    return parse_maneuver(s);
  } catch (const std::exception&) {
    throw ConfigError("unknown maneuver '" + s + "', expected straight or right");
  }
}

} // namespace

double parse_quantity(std::string_view text, Unit unit) {
  const auto t = trim(text);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{}) throw ConfigError("expected a number with a unit, got '" + std::string(text) + "'");
  const auto suffix = trim(t.substr(static_cast<std::size_t>(p - t.data())));
  if (suffix.empty())
    throw ConfigError("'" + std::string(text) + "' needs a unit of " + std::string(unit_name(unit)));
  for (const auto& u : kUnits)
    if (u.suffix == suffix) {
      if (u.unit != unit)
        throw ConfigError("'" + std::string(text) + "' is not a " + std::string(unit_name(unit)));
      return v * u.scale;
    }
  throw ConfigError("unknown unit '" + std::string(suffix) + "' in '" + std::string(text) + "'");
}

ScenarioConfig parse_config(std::string_view yaml) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("malformed scenario: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("scenario must be a mapping");
  check_keys(root, "scenario", {"mode", "duration", "seed", "step", "layout", "mpc", "bid", "vehicles", "spawn"});

  ScenarioConfig c;
  const Reader top(root, "");
  if (root["mode"]) {
    const auto m = top.text("mode");
    if (m == "scripted") c.mode = ScenarioMode::Scripted;
    else if (m == "generated") c.mode = ScenarioMode::Generated;
    else throw ConfigError("mode must be scripted or generated, got '" + m + "'");
  }
  top.quantity("duration", Unit::Time, c.duration);
  top.integer("seed", c.seed);

  if (const auto n = root["step"]) {
    check_keys(n, "step", {"sampling_time"});
    Reader(n, "step").quantity("sampling_time", Unit::Time, c.step.sampling_time);
  }
  if (const auto n = root["layout"]) {
    check_keys(n, "layout", {"lane_width", "road_length"});
    const Reader r(n, "layout");
    r.quantity("lane_width", Unit::Length, c.layout.lane_width);
    r.quantity("road_length", Unit::Length, c.layout.road_length);
  }
  if (const auto n = root["mpc"]) {
    check_keys(n, "mpc",
               {"horizon", "q_weight", "r_weight", "omega", "time_headway", "headway_relax", "standstill_gap",
                "slack_upper", "a_min", "a_max", "v_min", "v_max", "safety_backoff", "crossing_clearance"});
    const Reader r(n, "mpc");
    auto& m = c.mpc;
    r.integer("horizon", m.horizon);
    r.number("q_weight", m.q_weight);
    r.number("r_weight", m.r_weight);
    r.number("omega", m.omega);
    r.quantity("time_headway", Unit::Time, m.time_headway);
    r.quantity("headway_relax", Unit::Time, m.headway_relax);
    r.quantity("standstill_gap", Unit::Length, m.standstill_gap);
    r.quantity("slack_upper", Unit::Length, m.slack_upper);
    r.quantity("a_min", Unit::Acceleration, m.a_min);
    r.quantity("a_max", Unit::Acceleration, m.a_max);
    r.quantity("v_min", Unit::Speed, m.v_min);
    r.quantity("v_max", Unit::Speed, m.v_max);
    r.quantity("safety_backoff", Unit::Length, m.safety_backoff);
    r.quantity("crossing_clearance", Unit::Length, m.crossing_clearance);
  }
  if (const auto n = root["bid"]) {
    check_keys(n, "bid", {"p_v", "p_d", "epsilon"});
    const Reader r(n, "bid");
    r.number("p_v", c.bid.p_v);
    r.number("p_d", c.bid.p_d);
    r.quantity("epsilon", Unit::Length, c.bid.epsilon);
  }
  if (const auto n = root["spawn"]) {
    check_keys(n, "spawn", {"rate", "v_ref_mean", "v_ref_std", "right_turn_probability"});
    const Reader r(n, "spawn");
    r.number("rate", c.spawn.rate);
    r.quantity("v_ref_mean", Unit::Speed, c.spawn.v_ref_mean);
    r.quantity("v_ref_std", Unit::Speed, c.spawn.v_ref_std);
    r.number("right_turn_probability", c.spawn.right_turn_probability);
  }
  if (const auto n = root["vehicles"]) {
    if (!n.IsSequence()) throw ConfigError("vehicles must be a list" + where(n));
    for (std::size_t i = 0; i < n.size(); ++i) {
      const auto name = "vehicles[" + std::to_string(i) + "]";
      check_keys(n[i], name, {"approach", "maneuver", "arc", "speed", "v_ref"});
      const Reader r(n[i], name);
      ScriptedVehicle v;
      v.approach = approach_of(r.text("approach"));
      v.maneuver = maneuver_of(r.text("maneuver"));
      r.quantity("arc", Unit::Length, v.arc);
      r.quantity("speed", Unit::Speed, v.speed);
      v.v_ref = v.speed;
      r.quantity("v_ref", Unit::Speed, v.v_ref);
      c.vehicles.push_back(v);
    }
  }
  if (c.mode == ScenarioMode::Generated && !c.vehicles.empty())
    throw ConfigError("a generated scenario takes no scripted vehicles");

  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid scenario: ") + e.what());
  }
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFile(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const MissingFile&) {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

} // namespace aim

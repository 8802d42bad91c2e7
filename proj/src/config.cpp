#include "tap3/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace tap3 {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::optional<double> to_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t used = 0;
  try {
    double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

template <typename T>
std::optional<T> to_uint(const std::string& s) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(17);
  o << v;
  return o.str();
}

}  // namespace

ScenarioConfig parse_config(const std::string& text) {
  ScenarioConfig c;
  std::vector<std::string> bad;
  std::vector<std::string> reasons;
  std::set<std::string> seen;
  auto fail = [&](const std::string& field, const std::string& why) {
    bad.push_back(field);
    reasons.push_back(field + ": " + why);
  };

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail("line " + std::to_string(lineno), "expected key = value");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key != "attacker" && !seen.insert(key).second) {
      fail(key, "repeated key");
      continue;
    }

    auto real = [&](double& out) {
      if (auto v = to_double(value)) out = *v;
      else fail(key, "not a number: '" + value + "'");
    };
    auto count = [&](std::uint32_t& out) {
      if (auto v = to_uint<std::uint32_t>(value)) out = *v;
      else fail(key, "not a non-negative integer: '" + value + "'");
    };

    if (key == "area") {
      const auto x = value.find_first_of("xX");
      auto w = x == std::string::npos ? std::nullopt : to_double(trim(value.substr(0, x)));
      auto h = x == std::string::npos ? std::nullopt : to_double(trim(value.substr(x + 1)));
      if (w && h) {
        c.area_width = *w;
        c.area_height = *h;
      } else {
        fail(key, "expected <width>x<height>");
      }
    } else if (key == "node_count") {
      count(c.node_count);
    } else if (key == "max_speed") {
      real(c.max_speed);
    } else if (key == "pause_time") {
      real(c.pause_time);
    } else if (key == "sim_duration") {
      real(c.sim_duration);
    } else if (key == "flows") {
      count(c.flows);
    } else if (key == "pkt_rate") {
      real(c.pkt_rate);
    } else if (key == "pkt_size") {
      count(c.pkt_size);
    } else if (key == "radio_range") {
      real(c.radio_range);
    } else if (key == "protocol") {
      if (auto p = parse_protocol(value)) c.protocol = *p;
      else fail(key, "unknown protocol '" + value + "'");
    } else if (key == "rng_seed") {
      if (auto v = to_uint<std::uint64_t>(value)) c.rng_seed = *v;
      else fail(key, "not a 64-bit unsigned integer: '" + value + "'");
    } else if (key == "attacker") {
      const auto a = value.find(':');
      const auto b = a == std::string::npos ? a : value.find(':', a + 1);
      if (b == std::string::npos) {
        fail(key, "expected <node_id>:<kind>:<param>");
        continue;
      }
      auto id = to_uint<std::uint32_t>(trim(value.substr(0, a)));
      auto kind = parse_attack(trim(value.substr(a + 1, b - a - 1)));
      auto param = to_double(trim(value.substr(b + 1)));
      if (!id || !kind || !param) {
        fail(key, "cannot parse '" + value + "'");
        continue;
      }
      c.attackers.push_back(AttackSpec{*id, *kind, *param});
    } else {
      fail(key, "unknown key");
    }
  }

  if (!bad.empty()) {
    std::string msg = "invalid config: ";
    for (std::size_t i = 0; i < reasons.size(); ++i) msg += (i ? "; " : "") + reasons[i];
    throw ValidationError(bad, msg);
  }
  validate(c);
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError({"path"}, "cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_config(buf.str());
}

void validate(const ScenarioConfig& c) {
  std::vector<std::string> bad;
  std::vector<std::string> reasons;
  auto fail = [&](const std::string& field, const std::string& why) {
    bad.push_back(field);
    reasons.push_back(field + ": " + why);
  };

  if (!(c.area_width > 0) || !(c.area_height > 0)) fail("area", "must be positive");
  if (c.node_count < 2) fail("node_count", "at least 2 nodes required");
  if (!(c.max_speed >= 0)) fail("max_speed", "must be non-negative");
  if (!(c.sim_duration > 0)) fail("sim_duration", "must be positive");
  if (!(c.pause_time >= 0) || c.pause_time > c.sim_duration) {
    fail("pause_time", "must lie in [0, sim_duration]");
  }
  if (!(c.pkt_rate > 0)) fail("pkt_rate", "must be positive");
  if (c.pkt_size == 0) fail("pkt_size", "must be positive");
  if (!(c.radio_range > 0)) fail("radio_range", "must be positive");

  std::set<NodeId> ids;
  for (const auto& a : c.attackers) {
    const std::string field = "attacker " + std::to_string(a.node);
    if (a.node >= c.node_count) fail(field, "not a node of the scenario");
    if (!ids.insert(a.node).second) fail(field, "declared twice");
    switch (a.kind) {
      case AttackKind::PassiveDrop:
        if (!(a.param > 0 && a.param <= 1)) fail(field, "drop probability must lie in (0, 1]");
        break;
      case AttackKind::BlackHole:
      case AttackKind::SeqInflation:
        if (!(a.param > 0)) fail(field, "delta must be positive");
        break;
      case AttackKind::LogForgery:
        break;
    }
  }
  const std::uint64_t honest = c.node_count - std::min<std::uint64_t>(ids.size(), c.node_count);
  if (2ull * c.flows > honest) {
    fail("flows", "needs two distinct honest endpoints per flow");
  }

  if (!bad.empty()) {
    std::string msg = "invalid config: ";
    for (std::size_t i = 0; i < reasons.size(); ++i) msg += (i ? "; " : "") + reasons[i];
    throw ValidationError(bad, msg);
  }
}

std::string to_config_text(const ScenarioConfig& c) {
  std::ostringstream o;
  o << "area = " << fmt(c.area_width) << "x" << fmt(c.area_height) << "\n"
    << "node_count = " << c.node_count << "\n"
    << "max_speed = " << fmt(c.max_speed) << "\n"
    << "pause_time = " << fmt(c.pause_time) << "\n"
    << "sim_duration = " << fmt(c.sim_duration) << "\n"
    << "flows = " << c.flows << "\n"
    << "pkt_rate = " << fmt(c.pkt_rate) << "\n"
    << "pkt_size = " << c.pkt_size << "\n"
    << "radio_range = " << fmt(c.radio_range) << "\n"
    << "protocol = " << to_string(c.protocol) << "\n";
  for (const auto& a : c.attackers) {
    o << "attacker = " << a.node << ":" << to_string(a.kind) << ":" << fmt(a.param) << "\n";
  }
  o << "rng_seed = " << c.rng_seed << "\n";
  return o.str();
}

}  // namespace tap3

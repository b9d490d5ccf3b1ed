#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "phylomarkov/trajectory.hpp"

namespace phylomarkov {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json header_object(const ModelSpec& spec, const State& x0, double horizon, const std::string& metadata) {
  json h;
  try {
    h = json::parse(metadata);
  } catch (const json::parse_error& e) {
    throw ModelError(std::string("trajectory metadata is not JSON: ") + e.what());
  }
  if (!h.is_object()) throw ModelError("trajectory metadata must be a JSON object");
  h["x0"] = std::vector<int>(x0.coords().begin(), x0.coords().end());
  h["horizon"] = horizon;
  h["coordinates"] = spec.coordinate_names;
  return h;
}

std::string header_line(const ModelSpec& spec, const State& x0, double horizon, const std::string& metadata) {
  return "# " + header_object(spec, x0, horizon, metadata).dump() + "\n";
}

}  // namespace

std::string trajectory_to_csv(const ModelSpec& spec, const JumpSequence& omega, const std::string& metadata_json) {
  std::string out = header_line(spec, omega.x0, omega.horizon, metadata_json);
  out += "time,event,aux\n";
  for (const Jump& j : omega.jumps) {
    out += fmt(j.time) + "," + spec.events.at(j.event).name + "," + std::to_string(j.aux) + "\n";
  }
  return out;
}

std::string history_to_csv(const ModelSpec& spec, const History& h, const std::string& metadata_json) {
  std::string out = header_line(spec, h.x0, h.horizon, metadata_json);
  out += "time,event,aux\n";
  for (const HistoryEvent& e : h.events) out += fmt(e.time) + "," + spec.events.at(e.event).name + ",\n";
  return out;
}

TrajectoryFile trajectory_from_csv(const ModelSpec& spec, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& msg) -> void {
    throw ModelError("trajectory CSV line " + std::to_string(lineno) + ": " + msg);
  };

  TrajectoryFile file;
  ++lineno;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) fail("expected a '# {json}' header line");
  json h;
  try {
    h = json::parse(line.substr(2));
  } catch (const json::parse_error& e) {
    fail(std::string("header is not JSON: ") + e.what());
  }
  if (!h.is_object() || !h.contains("x0") || !h.contains("horizon")) fail("header needs x0 and horizon");
  const auto x0 = h["x0"];
  if (!x0.is_array() || x0.size() != spec.dim()) fail("x0 must have " + std::to_string(spec.dim()) + " integers");
  State x(spec.dim());
  for (std::size_t i = 0; i < x0.size(); ++i) {
    if (!x0[i].is_number_integer()) fail("x0 must hold integers");
    x[i] = x0[i].get<int>();
  }
  if (!h["horizon"].is_number()) fail("horizon must be a number");
  file.omega.x0 = x;
  file.omega.horizon = h["horizon"].get<double>();
  file.header_json = h.dump();

  ++lineno;
  if (!std::getline(in, line) || line != "time,event,aux") fail("expected the column line 'time,event,aux'");
  bool any_aux = false, any_blank = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c1 = line.find(','), c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) fail("expected three fields");
    Jump j;
    try {
      std::size_t used = 0;
      const std::string t = line.substr(0, c1);
      j.time = std::stod(t, &used);
      if (used != t.size()) fail("bad time '" + t + "'");
    } catch (const std::logic_error&) {
      fail("bad time");
    }
    try {
      j.event = spec.event_index(line.substr(c1 + 1, c2 - c1 - 1));
    } catch (const ModelError& e) {
      fail(e.what());
    }
    const std::string aux = line.substr(c2 + 1);
    if (aux.empty()) {
      any_blank = true;
    } else {
      if (aux.find_first_not_of("0123456789") != std::string::npos) fail("bad aux '" + aux + "'");
      try {
        j.aux = std::stoull(aux);
      } catch (const std::logic_error&) {
        fail("bad aux '" + aux + "'");
      }
      any_aux = true;
    }
    file.omega.jumps.push_back(j);
  }
  if (any_aux && any_blank) throw ModelError("trajectory CSV: aux column is only partly filled");
  file.has_aux = !any_blank;
  return file;
}

std::string trajectory_to_json(const ModelSpec& spec, const JumpSequence& omega, const std::string& metadata_json,
                               int indent) {
  json h = header_object(spec, omega.x0, omega.horizon, metadata_json);
  json jumps = json::array();
  for (const Jump& j : omega.jumps) {
    jumps.push_back({{"time", j.time}, {"event", spec.events.at(j.event).name}, {"aux", j.aux}});
  }
  h["jumps"] = std::move(jumps);
  return h.dump(indent) + (indent >= 0 ? "\n" : "");
}

JumpSequence trajectory_from_json(const ModelSpec& spec, const std::string& text) {
  json h;
  try {
    h = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ModelError(std::string("trajectory JSON: ") + e.what());
  }
  auto fail = [](const std::string& msg) { throw ModelError("trajectory JSON: " + msg); };
  if (!h.is_object() || !h.contains("x0") || !h.contains("horizon") || !h.contains("jumps")) {
    fail("needs x0, horizon and jumps");
  }
  JumpSequence omega;
  const json& x0 = h["x0"];
  if (!x0.is_array() || x0.size() != spec.dim()) fail("x0 must have " + std::to_string(spec.dim()) + " integers");
  omega.x0 = State(spec.dim());
  for (std::size_t i = 0; i < x0.size(); ++i) {
    if (!x0[i].is_number_integer()) fail("x0 must hold integers");
    omega.x0[i] = x0[i].get<int>();
  }
  if (!h["horizon"].is_number()) fail("horizon must be a number");
  omega.horizon = h["horizon"].get<double>();
  if (!h["jumps"].is_array()) fail("jumps must be an array");
  for (std::size_t n = 0; n < h["jumps"].size(); ++n) {
    const json& j = h["jumps"][n];
    const std::string at = "jumps[" + std::to_string(n) + "]";
    if (!j.is_object() || !j.contains("time") || !j.contains("event") || !j.contains("aux")) {
      fail(at + " needs time, event and aux");
    }
    if (!j["time"].is_number() || !j["event"].is_string() || !j["aux"].is_number_unsigned()) {
      fail(at + " has a field of the wrong type");
    }
    omega.jumps.push_back({j["time"].get<double>(), spec.event_index(j["event"].get<std::string>()),
                           j["aux"].get<std::uint64_t>()});
  }
  return omega;
}

}  // namespace phylomarkov

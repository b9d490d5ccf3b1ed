#include "phylomarkov/models.hpp"

#include <algorithm>
#include <cmath>

namespace phylomarkov {

namespace {

void require_nonnegative(const std::string& model, const std::string& what, double v) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw ModelError(model + ": parameter '" + what + "' must be finite and nonnegative");
  }
}

void check_schedule(const std::string& model, const RateSchedule& s) {
  if (s.empty()) return;
  if (s.values.size() != s.times.size() + 1) {
    throw ModelError(model + ": rate schedule needs one more value than change times");
  }
  for (std::size_t j = 0; j < s.times.size(); ++j) {
    if (!(s.times[j] > 0.0) || (j > 0 && !(s.times[j] > s.times[j - 1]))) {
      throw ModelError(model + ": rate schedule times must be positive and increasing");
    }
  }
  for (double v : s.values) require_nonnegative(model, "b schedule value", v);
}

State unit(std::size_t dim, std::initializer_list<std::pair<std::size_t, int>> entries) {
  State u(dim);
  for (auto [i, v] : entries) u[i] = v;
  return u;
}

int as_count(const std::string& model, const std::string& what, double v) {
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e9) {
    throw ModelError(model + ": parameter '" + what + "' must be a nonnegative integer");
  }
  return static_cast<int>(v);
}

}  // namespace

double RateSchedule::at(double t, double fallback) const {
  if (empty()) return fallback;
  const auto idx = std::upper_bound(times.begin(), times.end(), t) - times.begin();
  return values[static_cast<std::size_t>(idx)];
}

ModelSpec lbdp_spec(const LBDPParams& p) {
  require_nonnegative("lbdp", "lambda", p.lambda);
  require_nonnegative("lbdp", "delta", p.delta);
  require_nonnegative("lbdp", "psi", p.psi);
  if (p.n0 < 0) throw ModelError("lbdp: n0 must be nonnegative");

  ModelSpec m;
  m.name = "lbdp";
  m.parameters = {{"lambda", p.lambda}, {"delta", p.delta}, {"psi", p.psi}, {"n0", p.n0}};
  m.coordinate_names = {"n", "g"};
  m.counters = {false, true};
  m.events = {
      {"birth", unit(2, {{0, 1}}), true, false, false},
      {"death", unit(2, {{0, -1}}), false, true, false},
      {"sample", unit(2, {{1, 1}}), false, false, true},
  };
  m.rates = [p](double, const State& x, std::span<double> out) {
    const double n = x[0] > 0 ? x[0] : 0;
    out[0] = p.lambda * n;
    out[1] = p.delta * n;
    out[2] = p.psi * n;
  };
  m.focal_size = [](const State& x) { return x[0]; };
  m.initial = {{State{p.n0, 0}, 1.0}};
  return m;
}

ModelSpec sir_spec(const SIRParams& p) {
  SIRSParams q;
  q.b = p.b;
  q.gamma = p.gamma;
  q.psi = p.psi;
  q.S0 = p.S0;
  q.I0 = p.I0;
  q.R0 = p.R0;
  q.b_schedule = p.b_schedule;
  ModelSpec m = sirs_spec(q);
  m.name = "sir";
  m.parameters.erase("waning_rate");
  m.events.pop_back();
  auto full = m.rates;
  m.rates = [full](double t, const State& x, std::span<double> out) {
    double buf[4];
    full(t, x, std::span<double>(buf, 4));
    std::copy(buf, buf + 3, out.begin());
  };
  return m;
}

ModelSpec sirs_spec(const SIRSParams& p) {
  const std::string name = "sirs";
  require_nonnegative(name, "b", p.b);
  require_nonnegative(name, "gamma", p.gamma);
  require_nonnegative(name, "psi", p.psi);
  require_nonnegative(name, "waning_rate", p.waning_rate);
  if (p.S0 < 0 || p.I0 < 0 || p.R0 < 0) throw ModelError(name + ": initial counts must be nonnegative");
  check_schedule(name, p.b_schedule);

  ModelSpec m;
  m.name = name;
  m.parameters = {{"b", p.b}, {"gamma", p.gamma}, {"psi", p.psi}, {"waning_rate", p.waning_rate},
                  {"S0", p.S0}, {"I0", p.I0}, {"R0", p.R0}};
  m.coordinate_names = {"s", "i", "r", "g"};
  m.counters = {false, false, false, true};
  m.events = {
      {"infection", unit(4, {{0, -1}, {1, 1}}), true, false, false},
      {"recovery", unit(4, {{1, -1}, {2, 1}}), false, true, false},
      {"sample", unit(4, {{3, 1}}), false, false, true},
      {"waning", unit(4, {{0, 1}, {2, -1}}), false, false, false},
  };
  const RateSchedule schedule = p.b_schedule;
  m.rates = [p, schedule](double t, const State& x, std::span<double> out) {
    const double s = std::max(x[0], 0), i = std::max(x[1], 0), r = std::max(x[2], 0);
    out[0] = schedule.at(t, p.b) * s * i;
    out[1] = p.gamma * i;
    out[2] = p.psi * i;
    out[3] = p.waning_rate * r;
  };
  m.focal_size = [](const State& x) { return x[1]; };
  m.initial = {{State{p.S0, p.I0, p.R0, 0}, 1.0}};
  m.breakpoints = schedule.times;
  return m;
}

ModelSpec s2ir_spec(const S2IRParams& p) {
  const std::string name = "s2ir";
  require_nonnegative(name, "b1", p.b1);
  require_nonnegative(name, "b2", p.b2);
  require_nonnegative(name, "gamma", p.gamma);
  require_nonnegative(name, "psi", p.psi);
  if (p.S1_0 < 0 || p.S2_0 < 0 || p.I0 < 0) throw ModelError(name + ": initial counts must be nonnegative");

  ModelSpec m;
  m.name = name;
  m.parameters = {{"b1", p.b1}, {"b2", p.b2}, {"gamma", p.gamma}, {"psi", p.psi},
                  {"S1_0", p.S1_0}, {"S2_0", p.S2_0}, {"I0", p.I0}};
  m.coordinate_names = {"s1", "s2", "i", "g"};
  m.counters = {false, false, false, true};
  m.events = {
      {"infection1", unit(4, {{0, -1}, {2, 1}}), true, false, false},
      {"infection2", unit(4, {{1, -1}, {2, 1}}), true, false, false},
      {"recovery", unit(4, {{2, -1}}), false, true, false},
      {"sample", unit(4, {{3, 1}}), false, false, true},
  };
  m.rates = [p](double, const State& x, std::span<double> out) {
    const double s1 = std::max(x[0], 0), s2 = std::max(x[1], 0), i = std::max(x[2], 0);
    out[0] = p.b1 * s1 * i;
    out[1] = p.b2 * s2 * i;
    out[2] = p.gamma * i;
    out[3] = p.psi * i;
  };
  m.focal_size = [](const State& x) { return x[2]; };
  m.initial = {{State{p.S1_0, p.S2_0, p.I0, 0}, 1.0}};
  return m;
}

std::vector<std::string> builtin_model_names() { return {"lbdp", "sir", "sirs", "s2ir"}; }

std::map<std::string, double> builtin_defaults(const std::string& model) {
  if (model == "lbdp") return {{"lambda", 0.0}, {"delta", 0.0}, {"psi", 0.0}, {"n0", 1}};
  if (model == "sir") return {{"b", 0.0}, {"gamma", 0.0}, {"psi", 0.0}, {"S0", 0}, {"I0", 1}, {"R0", 0}};
  if (model == "sirs") {
    return {{"b", 0.0}, {"gamma", 0.0}, {"psi", 0.0}, {"waning_rate", 0.0}, {"S0", 0}, {"I0", 1}, {"R0", 0}};
  }
  if (model == "s2ir") {
    return {{"b1", 0.0}, {"b2", 0.0}, {"gamma", 0.0}, {"psi", 0.0}, {"S1_0", 0}, {"S2_0", 0}, {"I0", 1}};
  }
  throw ModelError("unknown model '" + model + "'");
}

ModelSpec make_builtin(const std::string& model, const std::map<std::string, double>& params,
                       const RateSchedule& schedule) {
  auto p = builtin_defaults(model);
  for (const auto& [k, v] : params) {
    if (!p.count(k)) throw ModelError(model + ": unknown parameter '" + k + "'");
    p[k] = v;
  }
  if (!schedule.empty() && model != "sir" && model != "sirs") {
    throw ModelError(model + ": a transmission schedule is only supported for sir and sirs");
  }
  if (model == "lbdp") {
    return lbdp_spec({p["lambda"], p["delta"], p["psi"], as_count(model, "n0", p["n0"])});
  }
  if (model == "sir") {
    SIRParams q{p["b"], p["gamma"], p["psi"], as_count(model, "S0", p["S0"]), as_count(model, "I0", p["I0"]),
                as_count(model, "R0", p["R0"]), schedule};
    return sir_spec(q);
  }
  if (model == "sirs") {
    SIRSParams q{p["b"], p["gamma"], p["psi"], p["waning_rate"], as_count(model, "S0", p["S0"]),
                 as_count(model, "I0", p["I0"]), as_count(model, "R0", p["R0"]), schedule};
    return sirs_spec(q);
  }
  S2IRParams q{p["b1"], p["b2"], p["gamma"], p["psi"], as_count(model, "S1_0", p["S1_0"]),
               as_count(model, "S2_0", p["S2_0"]), as_count(model, "I0", p["I0"])};
  return s2ir_spec(q);
}

}  // namespace phylomarkov

#include "phylomarkov/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace phylomarkov {

std::size_t ModelSpec::event_index(const std::string& event_name) const {
  for (std::size_t k = 0; k < events.size(); ++k) {
    if (events[k].name == event_name) return k;
  }
  throw ModelError("model '" + name + "' has no event named '" + event_name + "'");
}

double ModelSpec::rate(std::size_t k, double t, const State& x) const {
  std::vector<double> buf(events.size());
  rates(t, x, buf);
  return buf[k];
}

double ModelSpec::total_rate(double t, const State& x) const {
  std::vector<double> buf(events.size());
  rates(t, x, buf);
  double total = 0.0;
  for (double r : buf) total += r;
  return total;
}

double ModelSpec::init_pmf(const State& x) const {
  double p = 0.0;
  for (const auto& [s, w] : initial) {
    if (s == x) p += w;
  }
  return p;
}

State ModelSpec::init_sample(Rng& rng) const {
  if (initial.size() == 1) return initial.front().first;
  double u = uniform01(rng);
  for (const auto& [s, w] : initial) {
    if (u < w) return s;
    u -= w;
  }
  return initial.back().first;
}

State ModelSpec::project(const State& x) const {
  State y = x;
  for (std::size_t i = 0; i < counters.size() && i < y.dim(); ++i) {
    if (counters[i]) y[i] = 0;
  }
  return y;
}

double ModelSpec::next_breakpoint(double t) const {
  auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t);
  return it == breakpoints.end() ? std::numeric_limits<double>::infinity() : *it;
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (const auto& issue : issues) {
    os << "state " << issue.state.to_string();
    if (!issue.event.empty()) os << ", event '" << issue.event << "'";
    os << ": " << issue.message << "\n";
  }
  return os.str();
}

ValidationReport validate_model(const ModelSpec& spec, std::span<const State> probe_states) {
  ValidationReport report;
  auto add = [&](const State& x, const std::string& ev, std::string msg) {
    report.issues.push_back({x, ev, std::move(msg)});
  };

  for (const auto& ev : spec.events) {
    if (ev.displacement.dim() != spec.dim()) add(State{}, ev.name, "displacement has wrong dimension");
    if (ev.is_birth && ev.is_death) add(State{}, ev.name, "event is marked both birth and death");
    if (ev.is_sample && (ev.is_birth || ev.is_death)) {
      add(State{}, ev.name, "sample event is also marked birth or death");
    }
    for (std::size_t i = 0; i < spec.counters.size(); ++i) {
      if (spec.counters[i] && !ev.is_sample && ev.displacement[i] != 0) {
        add(State{}, ev.name, "non-sample event changes counter coordinate '" + spec.coordinate_names[i] + "'");
      }
    }
  }
  double mass = 0.0;
  for (const auto& [x, p] : spec.initial) {
    if (!(p >= 0.0)) add(x, "", "negative initial probability");
    mass += p;
  }
  if (std::abs(mass - 1.0) > 1e-12) add(State{}, "", "initial distribution sums to " + std::to_string(mass));
  if (!(spec.mu > 0.0)) add(State{}, "", "base-measure rate mu must be positive");

  std::vector<double> probe_times{0.0};
  probe_times.insert(probe_times.end(), spec.breakpoints.begin(), spec.breakpoints.end());

  std::vector<double> buf(spec.events.size());
  for (const State& x : probe_states) {
    const int focal = spec.focal_size(x);
    if (focal < 0) add(x, "", "negative focal size");
    for (double t : probe_times) {
      spec.rates(t, x, buf);
      double total = 0.0;
      for (std::size_t k = 0; k < buf.size(); ++k) {
        const auto& ev = spec.events[k];
        if (!(buf[k] >= 0.0)) add(x, ev.name, "rate is negative or NaN");
        total += buf[k];
        if (buf[k] > 0.0) {
          const int lhs = spec.focal_size(x + ev.displacement) - focal;
          const int rhs = int(ev.is_birth) - int(ev.is_death);
          if (lhs != rhs) {
            add(x, ev.name,
                "compatibility identity violated: I(x+u)-I(x) = " + std::to_string(lhs) +
                    " but B(u)-D(u) = " + std::to_string(rhs));
          }
          if (ev.is_marked() && focal <= 0) add(x, ev.name, "marked event has positive rate at empty focal population");
        }
      }
      if (!std::isfinite(total)) add(x, "", "total rate is not finite");
    }
  }
  return report;
}

}  // namespace phylomarkov

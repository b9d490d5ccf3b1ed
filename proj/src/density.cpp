#include "phylomarkov/density.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "phylomarkov/hazard.hpp"

namespace phylomarkov {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

double history_log_density(const ModelSpec& spec, const History& h) {
  const double p0 = spec.init_pmf(h.x0);
  if (!(p0 > 0.0)) return kNegInf;
  double logp = std::log(p0);

  std::vector<double> buf(spec.events.size());
  State x = h.x0;
  double t = 0.0;
  for (const HistoryEvent& e : h.events) {
    logp -= rate_integral(spec, x, t, e.time);
    spec.rates(e.time, x, buf);
    const double r = buf[e.event];
    if (!(r > 0.0)) return kNegInf;
    logp += std::log(r / spec.mu);
    x += spec.events[e.event].displacement;
    t = e.time;
  }
  logp -= rate_integral(spec, x, t, h.horizon);
  return logp + spec.mu * h.horizon;
}

double jump_log_density(const ModelSpec& spec, const JumpSequence& omega) {
  double beta = 0.0;
  State x = omega.x0;
  for (const Jump& j : omega.jumps) {
    const auto& ev = spec.events[j.event];
    if (ev.is_marked()) {
      const int focal = spec.focal_size(x);
      if (focal <= 0 || j.aux >= static_cast<std::uint64_t>(focal)) return kNegInf;
      beta -= std::log(static_cast<double>(focal));
    }
    x += ev.displacement;
  }
  return history_log_density(spec, project(omega)) + beta;
}

}  // namespace phylomarkov

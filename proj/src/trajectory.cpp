#include "phylomarkov/trajectory.hpp"

#include <string>

namespace phylomarkov {

History project(const JumpSequence& omega) {
  History h;
  h.horizon = omega.horizon;
  h.x0 = omega.x0;
  h.events.reserve(omega.jumps.size());
  for (const Jump& j : omega.jumps) h.events.push_back({j.time, j.event});
  return h;
}

JumpSequence restrict_to(const JumpSequence& omega, double t) {
  JumpSequence out;
  out.x0 = omega.x0;
  out.horizon = t;
  for (const Jump& j : omega.jumps) {
    if (j.time > t) break;
    out.jumps.push_back(j);
  }
  return out;
}

namespace {

template <class Events, class Keep>
State accumulate(const ModelSpec& spec, State x, const Events& events, Keep keep) {
  for (const auto& e : events) {
    if (!keep(e.time)) break;
    x += spec.events[e.event].displacement;
  }
  return x;
}

}  // namespace

State state_at(const ModelSpec& spec, const JumpSequence& omega, double t) {
  return accumulate(spec, omega.x0, omega.jumps, [t](double s) { return s <= t; });
}

State state_before(const ModelSpec& spec, const JumpSequence& omega, double t) {
  return accumulate(spec, omega.x0, omega.jumps, [t](double s) { return s < t; });
}

State state_at(const ModelSpec& spec, const History& h, double t) {
  return accumulate(spec, h.x0, h.events, [t](double s) { return s <= t; });
}

void check_jump_sequence(const ModelSpec& spec, const JumpSequence& omega) {
  if (omega.x0.dim() != spec.dim()) throw ModelError("initial state has wrong dimension");
  State x = omega.x0;
  double last = 0.0;
  for (std::size_t k = 0; k < omega.jumps.size(); ++k) {
    const Jump& j = omega.jumps[k];
    const std::string where = "jump " + std::to_string(k);
    if (j.event >= spec.events.size()) throw ModelError(where + ": unknown event index");
    if (!(j.time > last)) throw ModelError(where + ": jump times must be positive and strictly increasing");
    if (j.time > omega.horizon) throw ModelError(where + ": jump after the horizon");
    const auto& ev = spec.events[j.event];
    if (ev.is_marked()) {
      const int focal = spec.focal_size(x);
      if (focal <= 0 || j.aux >= static_cast<std::uint64_t>(focal)) {
        throw ModelError(where + ": auxiliary number " + std::to_string(j.aux) + " out of range for focal size " +
                         std::to_string(focal));
      }
    }
    x += ev.displacement;
    last = j.time;
  }
}

}  // namespace phylomarkov

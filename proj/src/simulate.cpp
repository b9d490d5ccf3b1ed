#include "phylomarkov/simulate.hpp"

namespace phylomarkov {

JumpSequence simulate(const ModelSpec& spec, double t_end, Rng& rng, const SimulateOptions& options) {
  if (!(t_end >= 0.0)) throw ModelError("simulation horizon must be nonnegative");
  JumpSequence omega;
  omega.x0 = spec.init_sample(rng);
  omega.horizon = t_end;

  JumpProcessStepper stepper(spec);
  double t = 0.0;
  State x = omega.x0;
  stepper.advance(
      t, x, t_end, rng,
      [&](double time, std::size_t k, const State& before, const State&) {
        std::uint64_t aux = 0;
        if (spec.events[k].is_marked()) {
          const int focal = spec.focal_size(before);
          if (focal <= 0) {
            throw ModelError("event '" + spec.events[k].name + "' fired with empty focal population in state " +
                             before.to_string());
          }
          aux = std::uniform_int_distribution<std::uint64_t>(0, static_cast<std::uint64_t>(focal) - 1)(rng);
        }
        omega.jumps.push_back({time, k, aux});
        return true;
      },
      options.max_jumps);
  return omega;
}

}  // namespace phylomarkov

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "phylomarkov/hazard.hpp"
#include "phylomarkov/model.hpp"
#include "phylomarkov/random.hpp"
#include "phylomarkov/trajectory.hpp"

namespace phylomarkov {

inline constexpr std::size_t kDefaultMaxJumps = 10'000'000;

class RateBoundViolation : public ModelError {
 public:
  using ModelError::ModelError;
};

class JumpCapExceeded : public ModelError {
 public:
  using ModelError::ModelError;
};

/// Exact event-driven simulation of a ModelSpec. Channels can be disabled; the
/// integrated hazard of disabled channels along the path is returned by
/// `advance` so callers can weight by the probability that none of them fired.
class JumpProcessStepper {
 public:
  explicit JumpProcessStepper(const ModelSpec& spec, std::vector<bool> enabled = {})
      : spec_(&spec), enabled_(std::move(enabled)), rates_(spec.events.size()) {
    if (enabled_.empty()) enabled_.assign(spec.events.size(), true);
    for (bool e : enabled_) any_disabled_ |= !e;
  }

  /// Advances (t, x) to t_end, or until `on_jump(time, k, before, after)` returns
  /// false. Returns the integral of the disabled channels' total rate.
  template <class OnJump>
  double advance(double& t, State& x, double t_end, Rng& rng, OnJump&& on_jump,
                 std::size_t max_jumps = kDefaultMaxJumps) {
    double hidden_hazard = 0.0;
    std::size_t jumps = 0;
    std::exponential_distribution<double> expo(1.0);
    const bool thinning = spec_->time_dependence == TimeDependence::continuous;

    while (t < t_end) {
      const double seg_end = std::min(t_end, spec_->next_breakpoint(t));
      std::size_t k = 0;
      double t_next = 0.0;

      if (!thinning) {
        spec_->rates(t, x, rates_);
        double total = 0.0, hidden = 0.0;
        for (std::size_t i = 0; i < rates_.size(); ++i) (enabled_[i] ? total : hidden) += rates_[i];
        const double tau = total > 0.0 ? expo(rng) / total : std::numeric_limits<double>::infinity();
        if (t + tau >= seg_end) {
          hidden_hazard += hidden * (seg_end - t);
          t = seg_end;
          continue;
        }
        hidden_hazard += hidden * tau;
        t_next = t + tau;
        k = choose(total, rng);
      } else {
        const double w_end = std::min(seg_end, t + spec_->thinning_window);
        double bound = 0.0;
        for (std::size_t i = 0; i < rates_.size(); ++i) {
          if (enabled_[i]) bound += spec_->rate_bound(i, t, w_end, x);
        }
        const double tau = bound > 0.0 ? expo(rng) / bound : std::numeric_limits<double>::infinity();
        if (t + tau >= w_end) {
          if (any_disabled_) hidden_hazard += rate_integral(*spec_, x, t, w_end, disabled_mask());
          t = w_end;
          continue;
        }
        if (any_disabled_) hidden_hazard += rate_integral(*spec_, x, t, t + tau, disabled_mask());
        t += tau;
        spec_->rates(t, x, rates_);
        double total = 0.0;
        for (std::size_t i = 0; i < rates_.size(); ++i) {
          if (enabled_[i]) total += rates_[i];
        }
        if (total > bound * (1.0 + 1e-12)) {
          throw RateBoundViolation("rate bound exceeded on interval [" + std::to_string(t - tau) + ", " +
                                   std::to_string(w_end) + "] at t=" + std::to_string(t) + " in state " +
                                   x.to_string() + ": total rate " + std::to_string(total) + " > bound " +
                                   std::to_string(bound));
        }
        if (uniform01(rng) * bound >= total) continue;
        t_next = t;
        k = choose(total, rng);
      }

      if (++jumps > max_jumps) {
        throw JumpCapExceeded("jump cap of " + std::to_string(max_jumps) + " exceeded at t=" + std::to_string(t_next));
      }
      t = t_next;
      const State before = x;
      x += spec_->events[k].displacement;
      if (!on_jump(t, k, before, x)) return hidden_hazard;
    }
    return hidden_hazard;
  }

 private:
  std::size_t choose(double total, Rng& rng) const {
    double u = uniform01(rng) * total;
    std::size_t last = 0;
    for (std::size_t i = 0; i < rates_.size(); ++i) {
      if (!enabled_[i] || rates_[i] <= 0.0) continue;
      last = i;
      if (u < rates_[i]) return i;
      u -= rates_[i];
    }
    return last;
  }

  const std::vector<bool>& disabled_mask() {
    if (disabled_.empty()) {
      disabled_.resize(enabled_.size());
      for (std::size_t i = 0; i < enabled_.size(); ++i) disabled_[i] = !enabled_[i];
    }
    return disabled_;
  }

  const ModelSpec* spec_;
  std::vector<bool> enabled_;
  std::vector<bool> disabled_;
  std::vector<double> rates_;
  bool any_disabled_ = false;
};

struct SimulateOptions {
  std::size_t max_jumps = kDefaultMaxJumps;
};

/// Exact realization on [0, t_end] including auxiliary numbers drawn
/// uniformly on {0, ..., I(x-)-1} for marked events.
JumpSequence simulate(const ModelSpec& spec, double t_end, Rng& rng, const SimulateOptions& options = {});

}  // namespace phylomarkov

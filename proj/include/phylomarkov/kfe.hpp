#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <unordered_map>
#include <vector>

#include "phylomarkov/model.hpp"
#include "phylomarkov/state.hpp"

namespace phylomarkov {

/// A finite truncation of the (counter-projected) state space with the
/// event transition table precomputed.
class Lattice {
 public:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  Lattice() = default;
  /// States are projected through spec.project and deduplicated; order is kept.
  Lattice(const ModelSpec& spec, const std::vector<State>& states);

  std::size_t size() const { return states_.size(); }
  std::size_t n_events() const { return n_events_; }
  const State& state(std::size_t i) const { return states_[i]; }
  const std::vector<State>& states() const { return states_; }

  /// Index of a projected state, or npos.
  std::size_t find(const State& x) const;
  /// Index reached from state i by event k, or npos when it leaves the truncation.
  std::size_t target(std::size_t i, std::size_t k) const { return targets_[i * n_events_ + k]; }

  /// p0 projected onto the lattice; support outside the truncation is dropped.
  std::vector<double> initial_weights(const ModelSpec& spec) const;
  std::vector<double> to_vector(const std::map<State, double>& w) const;
  std::map<State, double> to_map(const std::vector<double>& w) const;

 private:
  std::vector<State> states_;
  std::unordered_map<State, std::size_t, StateHash> index_;
  std::vector<std::size_t> targets_;
  std::size_t n_events_ = 0;
};

/// Breadth-first closure of the projected support of p0 under events with
/// positive rate at t=0 or at a breakpoint, keeping only states satisfying `keep`.
/// Throws ModelError when more than max_states states would be visited.
Lattice reachable_lattice(const ModelSpec& spec, const std::function<bool(const State&)>& keep,
                          std::size_t max_states = 2'000'000);

/// Rates and inflow multipliers for every (state, event) pair of a lattice.
/// Outflow is rate * w; the target receives gain * rate * w, or the flux is
/// booked as leaked when the target lies outside the truncation.
struct FlowTable {
  std::vector<double> rate;
  std::vector<double> gain;
};

/// Fills table.rate at time t (gain untouched).
void fill_rates(const ModelSpec& spec, const Lattice& lattice, double t, FlowTable& table);

/// Integrates dw/dt = flow(w) from t0 to t1 with a fresh table supplied per
/// time by `refresh(t, table)`. Piecewise-constant models are refreshed once per
/// constant segment, at its midpoint. Returns the mass that left the truncation.
double integrate_flow(const ModelSpec& spec, const Lattice& lattice,
                      const std::function<void(double, FlowTable&)>& refresh, std::vector<double>& w, double t0,
                      double t1, double tol);

/// Forward (master) equation on the truncation. Mass leaving the truncation is
/// discarded, so the result is a lower bound on the true probabilities.
std::vector<double> kfe_integrate(const ModelSpec& spec, const Lattice& lattice, std::vector<double> w0, double t0,
                                  double t1, double tol, double* leaked = nullptr);

std::map<State, double> kfe_integrate(const ModelSpec& spec, const std::vector<State>& truncation,
                                      const std::map<State, double>& w0, double t0, double t1, double tol);

}  // namespace phylomarkov

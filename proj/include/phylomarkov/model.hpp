#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "phylomarkov/random.hpp"
#include "phylomarkov/state.hpp"

namespace phylomarkov {

/// One entry of a model's event catalog: a lattice displacement plus the
/// birth/death/sample markers of the focal subpopulation.
struct EventType {
  std::string name;
  State displacement;
  bool is_birth = false;
  bool is_death = false;
  bool is_sample = false;

  bool is_marked() const { return is_birth || is_death || is_sample; }
};

enum class TimeDependence {
  /// Rates depend on time only through jumps at `breakpoints`.
  piecewise_constant,
  /// Rates vary continuously; simulation thins against `rate_bound`.
  continuous,
};

/// Fills `out[k]` with the rate of event k at (t, x).
using RateFn = std::function<void(double t, const State& x, std::span<double> out)>;
/// Upper bound for the rate of event k over [t0, t1] while the state stays at x.
using RateBoundFn = std::function<double(std::size_t k, double t0, double t1, const State& x)>;
using FocalFn = std::function<int(const State& x)>;

/// A Markov jump population process on Z^d with a finite event catalog.
struct ModelSpec {
  std::string name;
  std::map<std::string, double> parameters;
  std::vector<std::string> coordinate_names;
  std::vector<EventType> events;
  RateFn rates;
  FocalFn focal_size;
  /// Finite-support initial distribution p0.
  std::vector<std::pair<State, double>> initial;
  /// Rate of the Poisson base measure.
  double mu = 1.0;

  TimeDependence time_dependence = TimeDependence::piecewise_constant;
  std::vector<double> breakpoints;
  RateBoundFn rate_bound;
  /// Lookahead window for thinning bounds.
  double thinning_window = 1.0;
  /// Sample-counter coordinates: touched only by sample events and ignored by
  /// `rates` and `focal_size`. Lattice computations project them out.
  std::vector<bool> counters;

  std::size_t dim() const { return coordinate_names.size(); }
  std::size_t event_index(const std::string& event_name) const;

  double rate(std::size_t k, double t, const State& x) const;
  double total_rate(double t, const State& x) const;

  double init_pmf(const State& x) const;
  State init_sample(Rng& rng) const;

  /// Zeroes the counter coordinates.
  State project(const State& x) const;

  /// First breakpoint strictly after t, or +inf.
  double next_breakpoint(double t) const;
};

struct ValidationIssue {
  State state;
  std::string event;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
  std::string summary() const;
};

/// Checks catalog markers, rate nonnegativity/finiteness and the focal-size
/// compatibility identity I(x+u) - I(x) = B(u) - D(u) at the probe states.
ValidationReport validate_model(const ModelSpec& spec, std::span<const State> probe_states);

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace phylomarkov

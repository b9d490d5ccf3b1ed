#include "phylomarkov/kfe.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <span>

#include "phylomarkov/ode.hpp"

namespace phylomarkov {

Lattice::Lattice(const ModelSpec& spec, const std::vector<State>& states) : n_events_(spec.events.size()) {
  states_.reserve(states.size());
  for (const State& s : states) {
    const State p = spec.project(s);
    if (index_.emplace(p, states_.size()).second) states_.push_back(p);
  }
  targets_.assign(states_.size() * n_events_, npos);
  for (std::size_t i = 0; i < states_.size(); ++i) {
    for (std::size_t k = 0; k < n_events_; ++k) {
      targets_[i * n_events_ + k] = find(spec.project(states_[i] + spec.events[k].displacement));
    }
  }
}

std::size_t Lattice::find(const State& x) const {
  auto it = index_.find(x);
  return it == index_.end() ? npos : it->second;
}

std::vector<double> Lattice::initial_weights(const ModelSpec& spec) const {
  std::vector<double> w(size(), 0.0);
  for (const auto& [x, p] : spec.initial) {
    const std::size_t i = find(spec.project(x));
    if (i != npos) w[i] += p;
  }
  return w;
}

std::vector<double> Lattice::to_vector(const std::map<State, double>& w) const {
  std::vector<double> out(size(), 0.0);
  for (const auto& [x, v] : w) {
    const std::size_t i = find(x);
    if (i != npos) out[i] += v;
  }
  return out;
}

std::map<State, double> Lattice::to_map(const std::vector<double>& w) const {
  std::map<State, double> out;
  for (std::size_t i = 0; i < size(); ++i) out[states_[i]] = w[i];
  return out;
}

Lattice reachable_lattice(const ModelSpec& spec, const std::function<bool(const State&)>& keep,
                          std::size_t max_states) {
  std::vector<double> probe_times{0.0};
  probe_times.insert(probe_times.end(), spec.breakpoints.begin(), spec.breakpoints.end());

  std::unordered_map<State, bool, StateHash> seen;
  std::vector<State> order;
  std::deque<State> queue;
  auto visit = [&](const State& x) {
    const State p = spec.project(x);
    if (seen.count(p) || !keep(p)) return;
    if (seen.size() >= max_states) {
      throw ModelError("reachable lattice exceeds " + std::to_string(max_states) + " states");
    }
    seen.emplace(p, true);
    order.push_back(p);
    queue.push_back(p);
  };
  for (const auto& [x, p] : spec.initial) {
    if (p > 0.0) visit(x);
  }
  std::vector<double> buf(spec.events.size());
  while (!queue.empty()) {
    const State x = queue.front();
    queue.pop_front();
    for (double t : probe_times) {
      spec.rates(t, x, buf);
      for (std::size_t k = 0; k < buf.size(); ++k) {
        if (buf[k] > 0.0) visit(x + spec.events[k].displacement);
      }
    }
  }
  return Lattice(spec, order);
}

void fill_rates(const ModelSpec& spec, const Lattice& lattice, double t, FlowTable& table) {
  const std::size_t K = lattice.n_events();
  table.rate.resize(lattice.size() * K);
  for (std::size_t i = 0; i < lattice.size(); ++i) {
    spec.rates(t, lattice.state(i), std::span<double>(table.rate.data() + i * K, K));
  }
}

double integrate_flow(const ModelSpec& spec, const Lattice& lattice,
                      const std::function<void(double, FlowTable&)>& refresh, std::vector<double>& w, double t0,
                      double t1, double tol) {
  if (!(t1 > t0)) return 0.0;
  const std::size_t n = lattice.size();
  const std::size_t K = lattice.n_events();
  FlowTable table;

  // The last component accumulates the mass that leaves the truncation.
  auto rhs = [&](double, const std::vector<double>& y, std::vector<double>& dy) {
    std::fill(dy.begin(), dy.end(), 0.0);
    double leak = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double wi = y[i];
      if (wi == 0.0) continue;
      for (std::size_t k = 0; k < K; ++k) {
        const double r = table.rate[i * K + k];
        if (r == 0.0) continue;
        const std::size_t j = lattice.target(i, k);
        const double g = table.gain[i * K + k];
        if (j == i && g == 1.0) continue;
        const double flux = r * wi;
        dy[i] -= flux;
        if (j == Lattice::npos) {
          leak += flux;
        } else {
          dy[j] += g * flux;
        }
      }
    }
    dy[n] = leak;
  };

  std::vector<double> y(w);
  y.push_back(0.0);
  Dopri5 solver(tol);
  const bool continuous = spec.time_dependence == TimeDependence::continuous;

  double lo = t0;
  while (lo < t1) {
    const double hi = std::min(t1, spec.next_breakpoint(lo));
    if (continuous) {
      solver.integrate(
          [&](double t, const std::vector<double>& yy, std::vector<double>& dy) {
            refresh(t, table);
            rhs(t, yy, dy);
          },
          y, lo, hi);
    } else {
      refresh(0.5 * (lo + hi), table);
      solver.integrate(rhs, y, lo, hi);
    }
    lo = hi;
  }
  const double leaked = y[n];
  y.pop_back();
  w.swap(y);
  return leaked;
}

std::vector<double> kfe_integrate(const ModelSpec& spec, const Lattice& lattice, std::vector<double> w0, double t0,
                                  double t1, double tol, double* leaked) {
  if (w0.size() != lattice.size()) throw ModelError("weight vector does not match the lattice");
  auto refresh = [&](double t, FlowTable& table) {
    fill_rates(spec, lattice, t, table);
    table.gain.assign(table.rate.size(), 1.0);
  };
  const double lost = integrate_flow(spec, lattice, refresh, w0, t0, t1, tol);
  if (leaked) *leaked = lost;
  return w0;
}

std::map<State, double> kfe_integrate(const ModelSpec& spec, const std::vector<State>& truncation,
                                      const std::map<State, double>& w0, double t0, double t1, double tol) {
  const Lattice lattice(spec, truncation);
  return lattice.to_map(kfe_integrate(spec, lattice, lattice.to_vector(w0), t0, t1, tol));
}

}  // namespace phylomarkov

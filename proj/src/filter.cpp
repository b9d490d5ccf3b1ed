#include "phylomarkov/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <cstdio>

#include "phylomarkov/random.hpp"
#include "phylomarkov/simulate.hpp"

namespace phylomarkov {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Stream salts.
constexpr std::uint64_t kInitStream = 0x1;
constexpr std::uint64_t kPropagateStream = 0x2;
constexpr std::uint64_t kEventStream = 0x3;
constexpr std::uint64_t kResampleStream = 0x4;

double choose2(double n) { return n * (n - 1.0) / 2.0; }

// Weight of an unobserved birth into a population of size I with ell lineages present.
double unobserved_birth_factor(double I, double ell) {
  const double lost = choose2(ell);
  if (lost == 0.0) return 1.0;
  const double pairs = choose2(I);
  return pairs > 0.0 ? std::max(0.0, 1.0 - lost / pairs) : 0.0;
}

double event_factor(GenealogyEventKind kind, double I, double ell) {
  switch (kind) {
    case GenealogyEventKind::C: return choose2(I) > 0.0 ? 1.0 / choose2(I) : 0.0;
    case GenealogyEventKind::D: return I > 0.0 ? 1.0 / I : 0.0;
    case GenealogyEventKind::L: return I > 0.0 ? std::max(0.0, 1.0 - ell / I) : 0.0;
  }
  return 0.0;
}

std::vector<std::size_t> event_channels(const ModelSpec& spec, GenealogyEventKind kind) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < spec.events.size(); ++k) {
    const EventType& ev = spec.events[k];
    if (kind == GenealogyEventKind::C ? ev.is_birth : ev.is_sample) out.push_back(k);
  }
  if (out.empty()) {
    throw ConfigurationError(std::string("genealogy demands an event the model cannot produce: ") +
                             (kind == GenealogyEventKind::C ? "no birth channel" : "no sample channel") +
                             " in model '" + spec.name + "'");
  }
  return out;
}

double log_mean_weight(const std::vector<Particle>& ps) {
  double m = kNegInf;
  for (const Particle& p : ps) m = std::max(m, p.log_weight);
  if (m == kNegInf) return kNegInf;
  double sum = 0.0;
  for (const Particle& p : ps) sum += std::exp(p.log_weight - m);
  return m + std::log(sum / double(ps.size()));
}

double effective_sample_size(const std::vector<Particle>& ps) {
  double s1 = 0.0, s2 = 0.0;
  for (const Particle& p : ps) {
    const double w = std::exp(p.log_weight);
    s1 += w;
    s2 += w * w;
  }
  return s2 > 0.0 ? s1 * s1 / s2 : 0.0;
}

void resample(std::vector<Particle>& ps, ResamplingScheme scheme, Rng& rng) {
  const std::size_t n = ps.size();
  std::vector<double> cum(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) cum[i] = acc += std::exp(ps[i].log_weight);
  std::vector<double> u(n);
  if (scheme == ResamplingScheme::systematic) {
    const double u0 = uniform01(rng);
    for (std::size_t i = 0; i < n; ++i) u[i] = (double(i) + u0) / double(n) * acc;
  } else {
    for (double& v : u) v = uniform01(rng) * acc;
    std::sort(u.begin(), u.end());
  }
  std::vector<Particle> out(n);
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (j + 1 < n && cum[j] <= u[i]) ++j;
    out[i] = {ps[j].x, 0.0};
  }
  ps.swap(out);
}

void propagate_with(const ModelSpec& spec, std::vector<Particle>& particles, int ell, double t0, double t1,
                    WeightingMode mode, std::uint64_t stream) {
  if (!(t1 > t0)) return;
  std::vector<bool> enabled(spec.events.size(), true);
  if (mode == WeightingMode::analytic_survival) {
    for (std::size_t k = 0; k < spec.events.size(); ++k) enabled[k] = !spec.events[k].is_sample;
  }
  const auto n = static_cast<std::ptrdiff_t>(particles.size());

#ifdef PHYLOMARKOV_HAVE_OPENMP
#pragma omp parallel
#endif
  {
    JumpProcessStepper stepper(spec, enabled);
#ifdef PHYLOMARKOV_HAVE_OPENMP
#pragma omp for schedule(static)
#endif
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      Particle& p = particles[static_cast<std::size_t>(i)];
      if (p.log_weight == kNegInf) continue;
      Rng rng = make_rng(derive_seed(stream, static_cast<std::uint64_t>(i)));
      double t = t0;
      double lw = p.log_weight;
      auto on_jump = [&](double, std::size_t k, const State&, const State& after) {
        const EventType& ev = spec.events[k];
        if (ev.is_sample) {
          lw = kNegInf;
          return false;
        }
        const int I = spec.focal_size(after);
        if (I < ell) {
          lw = kNegInf;
          return false;
        }
        if (ev.is_birth) {
          const double f = unobserved_birth_factor(I, ell);
          if (f <= 0.0) {
            lw = kNegInf;
            return false;
          }
          lw += std::log(f);
        }
        return true;
      };
      const double hidden = stepper.advance(t, p.x, t1, rng, on_jump);
      p.log_weight = lw == kNegInf ? kNegInf : lw - hidden;
    }
  }
}

void update_with(const ModelSpec& spec, std::vector<Particle>& particles, int ell, double e, GenealogyEventKind kind,
                 std::uint64_t stream) {
  const auto channels = event_channels(spec, kind);
  const auto n = static_cast<std::ptrdiff_t>(particles.size());

#ifdef PHYLOMARKOV_HAVE_OPENMP
#pragma omp parallel
#endif
  {
    std::vector<double> rates(spec.events.size());
    std::vector<double> terms(channels.size());
#ifdef PHYLOMARKOV_HAVE_OPENMP
#pragma omp for schedule(static)
#endif
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      Particle& p = particles[static_cast<std::size_t>(i)];
      if (p.log_weight == kNegInf) continue;
      spec.rates(e, p.x, rates);
      double total = 0.0;
      for (std::size_t c = 0; c < channels.size(); ++c) {
        const std::size_t k = channels[c];
        const int I = spec.focal_size(p.x + spec.events[k].displacement);
        terms[c] = rates[k] > 0.0 && I >= ell ? rates[k] / spec.mu * event_factor(kind, I, ell) : 0.0;
        total += terms[c];
      }
      if (!(total > 0.0)) {
        p.log_weight = kNegInf;
        continue;
      }
      std::size_t pick = 0;
      if (channels.size() > 1) {
        Rng rng = make_rng(derive_seed(stream, static_cast<std::uint64_t>(i)));
        double u = uniform01(rng) * total;
        for (pick = 0; pick + 1 < channels.size(); ++pick) {
          if (terms[pick] > 0.0 && u < terms[pick]) break;
          u -= terms[pick];
        }
        while (terms[pick] == 0.0) --pick;
      } else {
        pick = 0;
      }
      p.x += spec.events[channels[pick]].displacement;
      p.log_weight += std::log(total);
    }
  }
}

}  // namespace

double unobserved_birth_weight(int I, int ell) { return unobserved_birth_factor(I, ell); }

double event_weight(const ModelSpec& spec, const State& x_minus, double e, GenealogyEventKind kind, int ell) {
  std::vector<double> rates(spec.events.size());
  spec.rates(e, x_minus, rates);
  double total = 0.0;
  for (std::size_t k : event_channels(spec, kind)) {
    const int I = spec.focal_size(x_minus + spec.events[k].displacement);
    if (rates[k] > 0.0 && I >= ell) total += rates[k] / spec.mu * event_factor(kind, I, ell);
  }
  return total;
}

const char* scheme_name(ResamplingScheme s) {
  return s == ResamplingScheme::systematic ? "systematic" : "multinomial";
}

const char* mode_name(WeightingMode m) {
  return m == WeightingMode::rejection ? "rejection" : "analytic-survival";
}

ResamplingScheme parse_scheme(const std::string& s) {
  if (s == "systematic") return ResamplingScheme::systematic;
  if (s == "multinomial") return ResamplingScheme::multinomial;
  throw ConfigurationError("unknown resampling scheme '" + s + "' (expected systematic or multinomial)");
}

WeightingMode parse_mode(const std::string& s) {
  if (s == "rejection") return WeightingMode::rejection;
  if (s == "analytic-survival") return WeightingMode::analytic_survival;
  throw ConfigurationError("unknown weighting mode '" + s + "' (expected rejection or analytic-survival)");
}

void check_config(const FilterConfig& c) {
  if (c.n_particles < 1) throw ConfigurationError("n_particles must be at least 1");
  if (!(c.ess_threshold >= 0.0 && c.ess_threshold <= 1.0)) {
    throw ConfigurationError("ess_threshold must lie in [0, 1]");
  }
}

const char* kind_name(GenealogyEventKind k) {
  switch (k) {
    case GenealogyEventKind::C: return "C";
    case GenealogyEventKind::D: return "D";
    case GenealogyEventKind::L: return "L";
  }
  return "?";
}

std::vector<GenealogyEvent> genealogy_events(const Genealogy& V) {
  const EventTimeSets s = event_times(V);
  std::vector<GenealogyEvent> out;
  std::vector<double> roots = s.R;
  for (double c : s.C) {
    const auto r = std::find(roots.begin(), roots.end(), c);
    if (r != roots.end()) {
      roots.erase(r);
    } else {
      out.push_back({c, GenealogyEventKind::C});
    }
  }
  for (double d : s.D) out.push_back({d, GenealogyEventKind::D});
  for (double l : s.L) out.push_back({l, GenealogyEventKind::L});
  std::stable_sort(out.begin(), out.end(), [](const GenealogyEvent& a, const GenealogyEvent& b) {
    return a.time < b.time || (a.time == b.time && a.kind < b.kind);
  });
  return out;
}

void propagate_interval(const ModelSpec& spec, std::vector<Particle>& particles, const Genealogy& V, double t0,
                        double t1, WeightingMode mode, std::uint64_t stream) {
  propagate_with(spec, particles, lineage_count(V, t0), t0, t1, mode, stream);
}

void event_update(const ModelSpec& spec, std::vector<Particle>& particles, const Genealogy& V, double e,
                  GenealogyEventKind kind, std::uint64_t stream) {
  update_with(spec, particles, lineage_count(V, e), e, kind, stream);
}

FilterResult smc_loglik(const ModelSpec& spec, const Genealogy& V, const FilterConfig& config) {
  check_config(config);
  const auto events = genealogy_events(V);
  const LineageCurve curve = lineage_curve(V);
  if (!events.empty() && events.back().time > V.time()) {
    throw GenealogyError("genealogy has events after its time");
  }
  const std::size_t n = config.n_particles;

  std::vector<Particle> particles(n);
  const int ell0 = curve.at(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = make_rng(derive_seed(config.seed, kInitStream, i));
    particles[i].x = spec.init_sample(rng);
    particles[i].log_weight = spec.focal_size(particles[i].x) < ell0 ? kNegInf : 0.0;
  }

  FilterResult result;
  FilterDiagnostics& diag = result.diagnostics;
  double t = 0.0;
  auto settle = [&](double time, const char* kind, std::size_t step, bool may_resample) {
    FilterStep row{time, kind, log_mean_weight(particles), 0.0, false};
    if (row.log_mean_weight == kNegInf) {
      diag.steps.push_back(row);
      diag.collapsed = true;
      diag.collapse_time = time;
      result.loglik = kNegInf;
      return false;
    }
    result.loglik += row.log_mean_weight;
    for (Particle& p : particles) p.log_weight -= row.log_mean_weight;
    row.ess = effective_sample_size(particles);
    if (may_resample && row.ess < config.ess_threshold * double(n)) {
      Rng rng = make_rng(derive_seed(config.seed, kResampleStream, step));
      resample(particles, config.resampling, rng);
      row.resampled = true;
      ++diag.resample_count;
    }
    diag.steps.push_back(row);
    return true;
  };

  for (std::size_t s = 0; s < events.size(); ++s) {
    const GenealogyEvent& ev = events[s];
    propagate_with(spec, particles, curve.at(t), t, ev.time, config.mode,
                   derive_seed(config.seed, kPropagateStream, s));
    update_with(spec, particles, curve.at(ev.time), ev.time, ev.kind, derive_seed(config.seed, kEventStream, s));
    t = ev.time;
    if (!settle(t, kind_name(ev.kind), s, true)) return result;
  }
  propagate_with(spec, particles, curve.at(t), t, V.time(), config.mode,
                 derive_seed(config.seed, kPropagateStream, events.size()));
  settle(V.time(), "end", events.size(), false);
  return result;
}

std::string diagnostics_csv(const FilterDiagnostics& d) {
  std::ostringstream out;
  out << "time,kind,log_mean_weight,ess,resampled\n";
  char buf[64];
  for (const FilterStep& s : d.steps) {
    std::snprintf(buf, sizeof buf, "%.17g", s.time);
    out << buf << ',' << s.kind << ',';
    if (std::isinf(s.log_mean_weight)) {
      out << "-inf";
    } else {
      std::snprintf(buf, sizeof buf, "%.17g", s.log_mean_weight);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g", s.ess);
    out << ',' << buf << ',' << (s.resampled ? 1 : 0) << '\n';
  }
  return out.str();
}

ReplicateSummary summarize_estimates(std::vector<double> estimates, std::size_t n_collapsed) {
  ReplicateSummary out;
  out.n_reps = estimates.size();
  out.n_collapsed = n_collapsed;
  out.estimates = std::move(estimates);
  std::vector<double> finite;
  for (double e : out.estimates)
    if (std::isfinite(e)) finite.push_back(e);
  out.n_finite = finite.size();
  if (finite.empty()) {
    out.mean = kNegInf;
    return out;
  }
  out.mean = std::accumulate(finite.begin(), finite.end(), 0.0) / double(finite.size());
  if (finite.size() >= 2) {
    double ss = 0.0;
    for (double e : finite) ss += (e - out.mean) * (e - out.mean);
    out.se = std::sqrt(ss / double(finite.size() - 1) / double(finite.size()));
  }
  return out;
}

ReplicateSummary replicate_loglik(const ModelSpec& spec, const Genealogy& V, const FilterConfig& config,
                                  const std::vector<std::uint64_t>& seeds) {
  if (seeds.size() < 2) throw ConfigurationError("replicate_loglik needs at least 2 replicates");
  std::vector<double> estimates;
  std::size_t collapsed = 0;
  for (std::uint64_t seed : seeds) {
    FilterConfig c = config;
    c.seed = seed;
    const FilterResult r = smc_loglik(spec, V, c);
    estimates.push_back(r.loglik);
    if (r.diagnostics.collapsed) ++collapsed;
  }
  return summarize_estimates(std::move(estimates), collapsed);
}

ReplicateSummary replicate_loglik(const ModelSpec& spec, const Genealogy& V, const FilterConfig& config,
                                  std::size_t n_reps) {
  std::vector<std::uint64_t> seeds(n_reps);
  for (std::size_t r = 0; r < n_reps; ++r) seeds[r] = derive_seed(config.seed, r);
  return replicate_loglik(spec, V, config, seeds);
}

OracleResult dmz_oracle(const ModelSpec& spec, const Genealogy& V, const Lattice& lattice, double tol,
                        const OracleObserver& observer) {
  const auto events = genealogy_events(V);
  const LineageCurve curve = lineage_curve(V);
  const std::size_t n = lattice.size(), K = lattice.n_events();

  std::vector<int> focal(n);
  for (std::size_t i = 0; i < n; ++i) focal[i] = spec.focal_size(lattice.state(i));

  OracleResult result;
  std::vector<double> w = lattice.initial_weights(spec);
  auto zero_incompatible = [&](int ell) {
    for (std::size_t i = 0; i < n; ++i)
      if (focal[i] < ell) w[i] = 0.0;
  };
  auto notify = [&](double t) {
    if (observer) observer(t, lattice, w);
  };

  double t = 0.0;
  zero_incompatible(curve.at(0.0));
  notify(0.0);

  std::vector<double> gains(n * K);
  auto integrate_to = [&](double t1) {
    const int ell = curve.at(t);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < K; ++k) {
        const EventType& ev = spec.events[k];
        const std::size_t j = lattice.target(i, k);
        double g = 1.0;
        if (ev.is_sample) {
          g = 0.0;
        } else if (j != Lattice::npos && focal[j] < ell) {
          g = 0.0;
        } else if (ev.is_birth && j != Lattice::npos) {
          g = unobserved_birth_factor(focal[j], ell);
        }
        gains[i * K + k] = g;
      }
    }
    auto refresh = [&](double time, FlowTable& table) {
      fill_rates(spec, lattice, time, table);
      if (table.gain.size() != gains.size()) table.gain = gains;
    };
    result.leaked += integrate_flow(spec, lattice, refresh, w, t, t1, tol);
    t = t1;
  };

  FlowTable table;
  std::vector<double> next(n);
  for (const GenealogyEvent& ev : events) {
    integrate_to(ev.time);
    const int ell = curve.at(ev.time);
    const auto channels = event_channels(spec, ev.kind);
    fill_rates(spec, lattice, ev.time, table);
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (w[i] == 0.0) continue;
      for (std::size_t k : channels) {
        const double flux = table.rate[i * K + k] / spec.mu * w[i];
        if (flux == 0.0) continue;
        const std::size_t j = lattice.target(i, k);
        if (j == Lattice::npos) {
          result.leaked += flux;
          continue;
        }
        if (focal[j] >= ell) next[j] += flux * event_factor(ev.kind, focal[j], ell);
      }
    }
    w.swap(next);
    zero_incompatible(ell);
    notify(ev.time);
  }
  integrate_to(std::max(t, V.time()));
  notify(t);

  result.mass = 0.0;
  for (double v : w) result.mass += v;
  result.loglik = result.mass > 0.0 ? std::log(result.mass) : kNegInf;
  return result;
}

}  // namespace phylomarkov

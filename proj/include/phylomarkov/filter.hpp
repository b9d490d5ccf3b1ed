#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "phylomarkov/genealogy.hpp"
#include "phylomarkov/kfe.hpp"
#include "phylomarkov/model.hpp"
#include "phylomarkov/state.hpp"

namespace phylomarkov {

struct Particle {
  State x;
  double log_weight = 0.0;
};

enum class ResamplingScheme { systematic, multinomial };
enum class WeightingMode { rejection, analytic_survival };

const char* scheme_name(ResamplingScheme s);
const char* mode_name(WeightingMode m);
ResamplingScheme parse_scheme(const std::string& s);
WeightingMode parse_mode(const std::string& s);

struct FilterConfig {
  std::size_t n_particles = 1000;
  double ess_threshold = 0.5;  ///< fraction of n_particles
  ResamplingScheme resampling = ResamplingScheme::systematic;
  WeightingMode mode = WeightingMode::analytic_survival;
  std::uint64_t seed = 0;
};

/// The model cannot produce an event the genealogy demands, or the filter
/// configuration is out of range.
class ConfigurationError : public ModelError {
 public:
  using ModelError::ModelError;
};

void check_config(const FilterConfig& config);

enum class GenealogyEventKind { C, D, L };
const char* kind_name(GenealogyEventKind k);

struct GenealogyEvent {
  double time = 0.0;
  GenealogyEventKind kind = GenealogyEventKind::C;
};

/// Event times of V excluding roots, sorted by time (ties: C, D, L).
std::vector<GenealogyEvent> genealogy_events(const Genealogy& V);

/// Weight of an unobserved birth leaving focal size I while ell lineages are present.
double unobserved_birth_weight(int I, int ell);

/// Total factor F = sum over applicable channels u of alpha_u(e, x-)/mu * g(x- + u)
/// for a genealogical event of the given kind; ell is the lineage count at e.
double event_weight(const ModelSpec& spec, const State& x_minus, double e, GenealogyEventKind kind, int ell);

/// Moves every particle from t0 to t1 by simulating the population process,
/// weighting for the absence of genealogical events on (t0, t1). Randomness
/// for particle i comes from the stream derive_seed(stream, i).
void propagate_interval(const ModelSpec& spec, std::vector<Particle>& particles, const Genealogy& V, double t0,
                        double t1, WeightingMode mode, std::uint64_t stream);

/// Applies the jump demanded by a genealogical event at time e to every particle.
void event_update(const ModelSpec& spec, std::vector<Particle>& particles, const Genealogy& V, double e,
                  GenealogyEventKind kind, std::uint64_t stream);

struct FilterStep {
  double time = 0.0;
  std::string kind;  ///< "C", "D", "L" or "end"
  double log_mean_weight = 0.0;
  double ess = 0.0;
  bool resampled = false;
};

struct FilterDiagnostics {
  std::vector<FilterStep> steps;
  std::size_t resample_count = 0;
  bool collapsed = false;  ///< every particle reached zero weight
  double collapse_time = 0.0;
};

struct FilterResult {
  double loglik = 0.0;
  FilterDiagnostics diagnostics;
};

FilterResult smc_loglik(const ModelSpec& spec, const Genealogy& V, const FilterConfig& config);

std::string diagnostics_csv(const FilterDiagnostics& d);

struct ReplicateSummary {
  double mean = 0.0;  ///< over finite replicates
  double se = 0.0;
  std::size_t n_reps = 0;
  std::size_t n_finite = 0;
  std::size_t n_collapsed = 0;
  std::vector<double> estimates;
};

/// Mean and standard error over the finite estimates.
ReplicateSummary summarize_estimates(std::vector<double> estimates, std::size_t n_collapsed);

/// Replicate r uses seed derive_seed(config.seed, r).
ReplicateSummary replicate_loglik(const ModelSpec& spec, const Genealogy& V, const FilterConfig& config,
                                  std::size_t n_reps);
ReplicateSummary replicate_loglik(const ModelSpec& spec, const Genealogy& V, const FilterConfig& config,
                                  const std::vector<std::uint64_t>& seeds);

struct OracleResult {
  double loglik = 0.0;
  double mass = 0.0;     ///< sum of final weights
  double leaked = 0.0;   ///< weight that left the truncation, all intervals and events
};

/// Called after initialization, after every event update, and at the end with
/// the current time and the weight grid.
using OracleObserver = std::function<void(double t, const Lattice& lattice, const std::vector<double>& w)>;

/// Deterministic solution of the partial-weight equations on a finite lattice.
OracleResult dmz_oracle(const ModelSpec& spec, const Genealogy& V, const Lattice& truncation, double tol = 1e-8,
                        const OracleObserver& observer = {});

}  // namespace phylomarkov

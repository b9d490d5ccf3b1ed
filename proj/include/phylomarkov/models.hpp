#pragma once

#include <map>
#include <string>
#include <vector>

#include "phylomarkov/model.hpp"

namespace phylomarkov {

/// Linear birth-death-sampling process on (n, g).
struct LBDPParams {
  double lambda = 0.0;  ///< per-capita birth rate
  double delta = 0.0;   ///< per-capita death rate
  double psi = 0.0;     ///< per-capita sampling rate
  int n0 = 1;
};

/// Piecewise-constant transmission schedule: values[j] applies on
/// [times[j-1], times[j]), with times[-1] = 0 and times[size] = inf.
/// An empty schedule means the constant rate.
struct RateSchedule {
  std::vector<double> times;
  std::vector<double> values;

  bool empty() const { return times.empty(); }
  double at(double t, double fallback) const;
};

/// SIR on (s, i, r, g).
struct SIRParams {
  double b = 0.0;
  double gamma = 0.0;
  double psi = 0.0;
  int S0 = 0;
  int I0 = 1;
  int R0 = 0;
  RateSchedule b_schedule;
};

/// SIRS adds loss of immunity (r -> s) at per-capita rate waning_rate.
struct SIRSParams {
  double b = 0.0;
  double gamma = 0.0;
  double psi = 0.0;
  double waning_rate = 0.0;
  int S0 = 0;
  int I0 = 1;
  int R0 = 0;
  RateSchedule b_schedule;
};

/// Two susceptible classes on (s1, s2, i, g).
struct S2IRParams {
  double b1 = 0.0;
  double b2 = 0.0;
  double gamma = 0.0;
  double psi = 0.0;
  int S1_0 = 0;
  int S2_0 = 0;
  int I0 = 1;
};

ModelSpec lbdp_spec(const LBDPParams& p);
ModelSpec sir_spec(const SIRParams& p);
ModelSpec sirs_spec(const SIRSParams& p);
ModelSpec s2ir_spec(const S2IRParams& p);

/// Names of the built-in models: "lbdp", "sir", "sirs", "s2ir".
std::vector<std::string> builtin_model_names();

/// Canonical parameter names of a built-in model with their defaults.
std::map<std::string, double> builtin_defaults(const std::string& model);

/// Builds a built-in model from named parameters. Unknown names throw
/// ModelError; missing names take their defaults.
ModelSpec make_builtin(const std::string& model, const std::map<std::string, double>& params,
                       const RateSchedule& schedule = {});

}  // namespace phylomarkov

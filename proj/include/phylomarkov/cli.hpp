#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "phylomarkov/filter.hpp"
#include "phylomarkov/genealogy.hpp"
#include "phylomarkov/model.hpp"
#include "phylomarkov/models.hpp"

namespace phylomarkov::cli {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

/// Schema violations; the message starts with the offending JSON path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable or malformed input files.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModelConfig {
  std::string name = "lbdp";
  std::map<std::string, double> parameters;
  RateSchedule b_schedule;
};

struct OracleConfig {
  double tol = 1e-8;
  /// Upper bound per coordinate name; coordinates not listed are unbounded.
  std::map<std::string, int> max;
  std::size_t max_states = 2'000'000;
};

struct ProfileConfig {
  std::string parameter;
  std::vector<double> values;
  bool with_oracle = false;
};

struct RunConfig {
  ModelConfig model;
  double horizon = 1.0;
  bool horizon_set = false;
  std::uint64_t seed = 0;
  FilterConfig filter;
  std::size_t n_reps = 10;
  OracleConfig oracle;
  ProfileConfig profile;
  std::string genealogy_path;
  std::string trajectory_path;
  std::string out_dir = ".";
};

/// Parses and validates a config document. Unknown keys and wrong types throw
/// ConfigError before anything is computed.
RunConfig parse_config(const std::string& text);

/// Flag values that take precedence over the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> genealogy_path;
  std::optional<std::string> trajectory_path;
};

void apply_overrides(RunConfig& config, const Overrides& o);

/// The effective config as canonical JSON (sorted keys, output dir omitted).
std::string effective_config_json(const RunConfig& config);

std::uint64_t fnv1a64(std::string_view bytes);

ModelSpec build_model(const ModelConfig& m);

/// Reads a genealogy from .json (node sequence) or .nwk/.newick (forest).
Genealogy read_genealogy(const std::string& path, const RunConfig& config);

/// Each command writes into config.out_dir and returns the written paths.
std::vector<std::string> cmd_simulate(const RunConfig& config);
std::vector<std::string> cmd_prune(const RunConfig& config);
std::vector<std::string> cmd_filter(const RunConfig& config);
std::vector<std::string> cmd_oracle(const RunConfig& config);
std::vector<std::string> cmd_exact(const RunConfig& config);
std::vector<std::string> cmd_profile(const RunConfig& config);

/// Exit codes: 0 success, 1 unexpected failure, 2 usage or config error,
/// 3 input or structural error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace phylomarkov::cli

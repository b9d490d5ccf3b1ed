#include "phylomarkov/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "phylomarkov/exact.hpp"
#include "phylomarkov/kfe.hpp"
#include "phylomarkov/simulate.hpp"
#include "phylomarkov/trajectory.hpp"

namespace phylomarkov::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Schema helpers. Paths look like $.filter.n_particles.

void only_keys(const json& obj, const std::set<std::string>& keys, const std::string& path) {
  for (const auto& [k, v] : obj.items()) {
    if (!keys.count(k)) throw ConfigError(path + "." + k + ": unknown key");
  }
}

const json& object_at(const json& obj, const char* key, const std::string& path) {
  const json& v = obj.at(key);
  if (!v.is_object()) throw ConfigError(path + "." + key + ": expected an object");
  return v;
}

double number_at(const json& obj, const char* key, const std::string& path) {
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(path + "." + key + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(path + "." + key + ": expected a finite number");
  return d;
}

std::uint64_t uint_at(const json& obj, const char* key, const std::string& path) {
  const json& v = obj.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
  throw ConfigError(path + "." + key + ": expected a nonnegative integer");
}

std::string string_at(const json& obj, const char* key, const std::string& path) {
  const json& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(path + "." + key + ": expected a string");
  return v.get<std::string>();
}

bool bool_at(const json& obj, const char* key, const std::string& path) {
  const json& v = obj.at(key);
  if (!v.is_boolean()) throw ConfigError(path + "." + key + ": expected a boolean");
  return v.get<bool>();
}

std::vector<double> numbers_at(const json& obj, const char* key, const std::string& path) {
  const json& v = obj.at(key);
  const std::string p = path + "." + key;
  if (!v.is_array()) throw ConfigError(p + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
      throw ConfigError(p + "[" + std::to_string(i) + "]: expected a finite number");
    }
    out.push_back(v[i].get<double>());
  }
  return out;
}

void parse_model(const json& m, ModelConfig& out) {
  const std::string path = "$.model";
  only_keys(m, {"name", "parameters", "b_schedule"}, path);
  if (!m.contains("name")) throw ConfigError(path + ".name: missing");
  out.name = string_at(m, "name", path);
  std::map<std::string, double> defaults;
  try {
    defaults = builtin_defaults(out.name);
  } catch (const ModelError&) {
    std::string names;
    for (const auto& n : builtin_model_names()) names += (names.empty() ? "" : ", ") + n;
    throw ConfigError(path + ".name: unknown model '" + out.name + "' (expected one of " + names + ")");
  }
  if (m.contains("parameters")) {
    const json& p = object_at(m, "parameters", path);
    for (const auto& [k, v] : p.items()) {
      if (!defaults.count(k)) throw ConfigError(path + ".parameters." + k + ": unknown parameter for " + out.name);
      out.parameters[k] = number_at(p, k.c_str(), path + ".parameters");
    }
  }
  if (m.contains("b_schedule")) {
    const json& s = object_at(m, "b_schedule", path);
    const std::string sp = path + ".b_schedule";
    only_keys(s, {"times", "values"}, sp);
    if (!s.contains("times") || !s.contains("values")) throw ConfigError(sp + ": needs times and values");
    out.b_schedule.times = numbers_at(s, "times", sp);
    out.b_schedule.values = numbers_at(s, "values", sp);
  }
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Non-finite values are written as the strings "-inf", "inf" or "nan".
json number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string write_atomic(const std::string& dir, const std::string& name, const std::string& content) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory '" + dir + "': " + ec.message());
  const fs::path target = fs::path(dir) / name;
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out.flush()) throw InputError("cannot write '" + tmp.string() + "'");
  }
  fs::rename(tmp, target, ec);
  if (ec) throw InputError("cannot rename to '" + target.string() + "': " + ec.message());
  return target.string();
}

json provenance(const RunConfig& c) {
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a64(effective_config_json(c))));
  return {{"tool", "phylomarkov"}, {"version", kToolVersion}, {"config_hash", hash}, {"seed", c.seed}};
}

std::string provenance_line(const RunConfig& c) { return "# " + json{{"provenance", provenance(c)}}.dump() + "\n"; }

std::string with_provenance(const std::string& doc_text, const RunConfig& c) {
  json doc = json::parse(doc_text);
  doc["provenance"] = provenance(c);
  return doc.dump(2) + "\n";
}

std::string newick_file(const Genealogy& v, const RunConfig& c) {
  return "[" + json{{"provenance", provenance(c)}, {"time", v.time()}}.dump() + "]\n" + to_newick(v);
}

struct Replicates {
  ReplicateSummary summary;
  std::vector<FilterResult> results;
  std::vector<std::uint64_t> seeds;
};

// Replicate r runs with seed derive_seed(config.seed, r), as in replicate_loglik.
Replicates run_replicates(const ModelSpec& spec, const Genealogy& V, const RunConfig& c) {
  Replicates out;
  std::vector<double> estimates;
  std::size_t collapsed = 0;
  for (std::size_t r = 0; r < c.n_reps; ++r) {
    FilterConfig fc = c.filter;
    fc.seed = derive_seed(c.seed, r);
    out.seeds.push_back(fc.seed);
    out.results.push_back(smc_loglik(spec, V, fc));
    estimates.push_back(out.results.back().loglik);
    if (out.results.back().diagnostics.collapsed) ++collapsed;
  }
  out.summary = summarize_estimates(std::move(estimates), collapsed);
  return out;
}

Lattice truncation_lattice(const ModelSpec& spec, const OracleConfig& o) {
  std::vector<std::pair<std::size_t, int>> bounds;
  for (const auto& [name, bound] : o.max) {
    for (std::size_t i = 0; i < spec.dim(); ++i) {
      if (spec.coordinate_names[i] == name) bounds.emplace_back(i, bound);
    }
  }
  return reachable_lattice(
      spec,
      [&](const State& x) {
        for (const auto& [i, b] : bounds)
          if (x[i] > b) return false;
        return true;
      },
      o.max_states);
}

// Newick branch lengths are time differences, so node times read back from a
// Newick file can differ from the recorded event times in the last bits.
Genealogy snap_times(const Genealogy& v, const History& h) {
  std::vector<double> times{0.0};
  for (const HistoryEvent& e : h.events) times.push_back(e.time);
  std::sort(times.begin(), times.end());
  std::vector<GNode> nodes = v.nodes();
  for (GNode& p : nodes) {
    const auto it = std::lower_bound(times.begin(), times.end(), p.time);
    for (auto c : {it, it == times.begin() ? it : std::prev(it)}) {
      if (c != times.end() && std::fabs(*c - p.time) <= 1e-9 * std::max(1.0, std::fabs(p.time))) p.time = *c;
    }
  }
  return Genealogy::from_nodes(v.time(), nodes);
}

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("$: not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("$: expected an object");
  only_keys(doc, {"schema_version", "model", "horizon", "seed", "filter", "oracle", "profile", "input", "output"}, "$");
  if (!doc.contains("schema_version")) throw ConfigError("$.schema_version: missing");
  if (uint_at(doc, "schema_version", "$") != std::uint64_t(kSchemaVersion)) {
    throw ConfigError("$.schema_version: unsupported version (expected " + std::to_string(kSchemaVersion) + ")");
  }
  if (!doc.contains("model")) throw ConfigError("$.model: missing");

  RunConfig c;
  parse_model(object_at(doc, "model", "$"), c.model);
  if (doc.contains("horizon")) {
    c.horizon = number_at(doc, "horizon", "$");
    if (!(c.horizon > 0)) throw ConfigError("$.horizon: must be positive");
    c.horizon_set = true;
  }
  if (doc.contains("seed")) c.seed = uint_at(doc, "seed", "$");

  if (doc.contains("filter")) {
    const json& f = object_at(doc, "filter", "$");
    const std::string p = "$.filter";
    only_keys(f, {"n_particles", "n_reps", "ess_threshold", "resampling", "mode"}, p);
    if (f.contains("n_particles")) {
      c.filter.n_particles = uint_at(f, "n_particles", p);
      if (c.filter.n_particles == 0) throw ConfigError(p + ".n_particles: must be at least 1");
    }
    if (f.contains("n_reps")) {
      c.n_reps = uint_at(f, "n_reps", p);
      if (c.n_reps == 0) throw ConfigError(p + ".n_reps: must be at least 1");
    }
    if (f.contains("ess_threshold")) {
      c.filter.ess_threshold = number_at(f, "ess_threshold", p);
      if (c.filter.ess_threshold < 0 || c.filter.ess_threshold > 1) {
        throw ConfigError(p + ".ess_threshold: must lie in [0, 1]");
      }
    }
    try {
      if (f.contains("resampling")) c.filter.resampling = parse_scheme(string_at(f, "resampling", p));
    } catch (const ModelError& e) {
      throw ConfigError(p + ".resampling: " + e.what());
    }
    try {
      if (f.contains("mode")) c.filter.mode = parse_mode(string_at(f, "mode", p));
    } catch (const ModelError& e) {
      throw ConfigError(p + ".mode: " + e.what());
    }
  }

  // Built once here so model errors surface before any computation.
  ModelSpec spec;
  try {
    spec = build_model(c.model);
  } catch (const ModelError& e) {
    throw ConfigError(std::string("$.model: ") + e.what());
  }

  if (doc.contains("oracle")) {
    const json& o = object_at(doc, "oracle", "$");
    const std::string p = "$.oracle";
    only_keys(o, {"tol", "truncation", "max_states"}, p);
    if (o.contains("tol")) {
      c.oracle.tol = number_at(o, "tol", p);
      if (!(c.oracle.tol > 0)) throw ConfigError(p + ".tol: must be positive");
    }
    if (o.contains("max_states")) c.oracle.max_states = uint_at(o, "max_states", p);
    if (o.contains("truncation")) {
      const json& t = object_at(o, "truncation", p);
      for (const auto& [k, v] : t.items()) {
        const std::string kp = p + ".truncation." + k;
        bool known = false;
        for (const auto& n : spec.coordinate_names) known = known || n == k;
        if (!known) throw ConfigError(kp + ": unknown coordinate for " + c.model.name);
        const std::uint64_t b = uint_at(t, k.c_str(), p + ".truncation");
        if (b > std::uint64_t(std::numeric_limits<int>::max())) throw ConfigError(kp + ": too large");
        c.oracle.max[k] = int(b);
      }
    }
  }

  if (doc.contains("profile")) {
    const json& pr = object_at(doc, "profile", "$");
    const std::string p = "$.profile";
    only_keys(pr, {"parameter", "values", "grid", "with_oracle"}, p);
    if (pr.contains("parameter")) {
      c.profile.parameter = string_at(pr, "parameter", p);
      if (!builtin_defaults(c.model.name).count(c.profile.parameter)) {
        throw ConfigError(p + ".parameter: unknown parameter '" + c.profile.parameter + "' for " + c.model.name);
      }
    }
    if (pr.contains("values") && pr.contains("grid")) throw ConfigError(p + ": give either values or grid");
    if (pr.contains("values")) c.profile.values = numbers_at(pr, "values", p);
    if (pr.contains("grid")) {
      const json& g = object_at(pr, "grid", p);
      const std::string gp = p + ".grid";
      only_keys(g, {"from", "to", "points"}, gp);
      if (!g.contains("from") || !g.contains("to") || !g.contains("points")) {
        throw ConfigError(gp + ": needs from, to and points");
      }
      const double a = number_at(g, "from", gp), b = number_at(g, "to", gp);
      const std::uint64_t n = uint_at(g, "points", gp);
      if (n == 0) throw ConfigError(gp + ".points: must be at least 1");
      for (std::uint64_t k = 0; k < n; ++k) {
        c.profile.values.push_back(n == 1 ? a : a + (b - a) * double(k) / double(n - 1));
      }
    }
    if (pr.contains("with_oracle")) c.profile.with_oracle = bool_at(pr, "with_oracle", p);
  }

  if (doc.contains("input")) {
    const json& in = object_at(doc, "input", "$");
    only_keys(in, {"genealogy", "trajectory"}, "$.input");
    if (in.contains("genealogy")) c.genealogy_path = string_at(in, "genealogy", "$.input");
    if (in.contains("trajectory")) c.trajectory_path = string_at(in, "trajectory", "$.input");
  }
  if (doc.contains("output")) {
    const json& out = object_at(doc, "output", "$");
    only_keys(out, {"dir"}, "$.output");
    if (out.contains("dir")) c.out_dir = string_at(out, "dir", "$.output");
  }
  return c;
}

void apply_overrides(RunConfig& c, const Overrides& o) {
  if (o.seed) c.seed = *o.seed;
  if (o.out_dir) c.out_dir = *o.out_dir;
  if (o.genealogy_path) c.genealogy_path = *o.genealogy_path;
  if (o.trajectory_path) c.trajectory_path = *o.trajectory_path;
}

std::string effective_config_json(const RunConfig& c) {
  json model{{"name", c.model.name}, {"parameters", c.model.parameters}};
  if (!c.model.b_schedule.empty()) {
    model["b_schedule"] = {{"times", c.model.b_schedule.times}, {"values", c.model.b_schedule.values}};
  }
  json doc{{"schema_version", kSchemaVersion},
           {"model", model},
           {"seed", c.seed},
           {"filter",
            {{"n_particles", c.filter.n_particles},
             {"n_reps", c.n_reps},
             {"ess_threshold", c.filter.ess_threshold},
             {"resampling", scheme_name(c.filter.resampling)},
             {"mode", mode_name(c.filter.mode)}}},
           {"oracle", {{"tol", c.oracle.tol}, {"truncation", c.oracle.max}, {"max_states", c.oracle.max_states}}},
           {"profile",
            {{"parameter", c.profile.parameter}, {"values", c.profile.values}, {"with_oracle", c.profile.with_oracle}}},
           {"input", {{"genealogy", c.genealogy_path}, {"trajectory", c.trajectory_path}}}};
  if (c.horizon_set) doc["horizon"] = c.horizon;
  return doc.dump();
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

ModelSpec build_model(const ModelConfig& m) { return make_builtin(m.name, m.parameters, m.b_schedule); }

Genealogy read_genealogy(const std::string& path, const RunConfig& c) {
  const std::string text = read_file(path);
  try {
    if (has_suffix(path, ".nwk") || has_suffix(path, ".newick")) {
      // A leading [{"time": ...}] comment, as written by this tool, fixes the
      // genealogy time; otherwise the configured horizon or the last node time.
      std::optional<double> time;
      if (!text.empty() && text[0] == '[') {
        const auto close = text.find(']');
        if (close != std::string::npos) {
          const json meta = json::parse(text.substr(1, close - 1), nullptr, false);
          if (meta.is_object() && meta.contains("time") && meta["time"].is_number()) time = meta["time"].get<double>();
        }
      }
      if (!time && c.horizon_set) time = c.horizon;
      return from_newick(text, time);
    }
    return genealogy_from_json(text);
  } catch (const GenealogyError& e) {
    throw InputError("'" + path + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Commands

std::vector<std::string> cmd_simulate(const RunConfig& c) {
  const ModelSpec spec = build_model(c.model);
  Rng rng = make_rng(c.seed);
  const JumpSequence omega = simulate(spec, c.horizon, rng);
  const std::string meta = json{{"provenance", provenance(c)}, {"model", c.model.name}}.dump();
  const auto [G, inventory] = build_genealogy(spec, omega);
  const Genealogy V = prune(G);
  return {
      write_atomic(c.out_dir, "trajectory.csv", trajectory_to_csv(spec, omega, meta)),
      write_atomic(c.out_dir, "trajectory.json", trajectory_to_json(spec, omega, meta, 2)),
      write_atomic(c.out_dir, "genealogy.json", with_provenance(to_json(G), c)),
      write_atomic(c.out_dir, "visible.json", with_provenance(to_json(V), c)),
      write_atomic(c.out_dir, "visible.nwk", newick_file(V, c)),
  };
}

std::vector<std::string> cmd_prune(const RunConfig& c) {
  if (c.genealogy_path.empty()) throw ConfigError("$.input.genealogy: required by prune");
  const Genealogy V = prune(read_genealogy(c.genealogy_path, c));
  return {
      write_atomic(c.out_dir, "visible.json", with_provenance(to_json(V), c)),
      write_atomic(c.out_dir, "visible.nwk", newick_file(V, c)),
  };
}

std::vector<std::string> cmd_filter(const RunConfig& c) {
  if (c.genealogy_path.empty()) throw ConfigError("$.input.genealogy: required by filter");
  const ModelSpec spec = build_model(c.model);
  const Genealogy V = read_genealogy(c.genealogy_path, c);
  const Replicates reps = run_replicates(spec, V, c);

  json estimates = json::array(), replicates = json::array();
  std::string csv = provenance_line(c) + "replicate,time,kind,log_mean_weight,ess,resampled\n";
  for (std::size_t r = 0; r < reps.results.size(); ++r) {
    const FilterResult& res = reps.results[r];
    estimates.push_back(number(res.loglik));
    replicates.push_back({{"seed", reps.seeds[r]},
                          {"loglik", number(res.loglik)},
                          {"collapsed", res.diagnostics.collapsed},
                          {"collapse_time", res.diagnostics.collapsed ? json(res.diagnostics.collapse_time) : json()},
                          {"resample_count", res.diagnostics.resample_count}});
    std::istringstream rows(diagnostics_csv(res.diagnostics));
    std::string line;
    std::getline(rows, line);  // header
    while (std::getline(rows, line))
      if (!line.empty()) csv += std::to_string(r) + "," + line + "\n";
  }
  const ReplicateSummary& s = reps.summary;
  json doc{{"provenance", provenance(c)},
           {"model", {{"name", c.model.name}, {"parameters", spec.parameters}}},
           {"n_particles", c.filter.n_particles},
           {"n_reps", c.n_reps},
           {"ess_threshold", c.filter.ess_threshold},
           {"resampling", scheme_name(c.filter.resampling)},
           {"mode", mode_name(c.filter.mode)},
           {"mean", number(s.mean)},
           {"se", s.n_finite >= 2 ? number(s.se) : json()},
           {"n_finite", s.n_finite},
           {"n_collapsed", s.n_collapsed},
           {"estimates", estimates},
           {"replicates", replicates},
           {"diagnostics", "filter_diagnostics.csv"}};
  return {
      write_atomic(c.out_dir, "filter.json", doc.dump(2) + "\n"),
      write_atomic(c.out_dir, "filter_diagnostics.csv", csv),
  };
}

std::vector<std::string> cmd_oracle(const RunConfig& c) {
  if (c.genealogy_path.empty()) throw ConfigError("$.input.genealogy: required by oracle");
  const ModelSpec spec = build_model(c.model);
  const Genealogy V = read_genealogy(c.genealogy_path, c);
  const Lattice lattice = truncation_lattice(spec, c.oracle);
  const OracleResult r = dmz_oracle(spec, V, lattice, c.oracle.tol);
  json doc{{"provenance", provenance(c)},
           {"model", {{"name", c.model.name}, {"parameters", spec.parameters}}},
           {"loglik", number(r.loglik)},
           {"mass", r.mass},
           {"leaked", r.leaked},
           {"lattice_size", lattice.size()},
           {"truncation", c.oracle.max},
           {"tol", c.oracle.tol}};
  return {write_atomic(c.out_dir, "oracle.json", doc.dump(2) + "\n")};
}

std::vector<std::string> cmd_exact(const RunConfig& c) {
  if (c.trajectory_path.empty()) throw ConfigError("$.input.trajectory: required by exact");
  const ModelSpec spec = build_model(c.model);
  const std::string text = read_file(c.trajectory_path);
  JumpSequence omega;
  bool has_aux = true;
  try {
    if (has_suffix(c.trajectory_path, ".json")) {
      omega = trajectory_from_json(spec, text);
    } else {
      TrajectoryFile f = trajectory_from_csv(spec, text);
      omega = std::move(f.omega);
      has_aux = f.has_aux;
    }
    check_jump_sequence(spec, has_aux ? omega : JumpSequence{omega.x0, {}, omega.horizon});
  } catch (const ModelError& e) {
    throw InputError("'" + c.trajectory_path + "': " + e.what());
  }
  Genealogy V;
  if (!c.genealogy_path.empty()) {
    V = read_genealogy(c.genealogy_path, c);
  } else if (has_aux) {
    V = visible_genealogy(spec, omega);
  } else {
    throw ConfigError("$.input.genealogy: required when the trajectory has no auxiliary numbers");
  }

  std::optional<double> thm1;
  double thm2 = 0.0;
  std::size_t samples = 0;
  for (const Jump& j : omega.jumps) samples += spec.events.at(j.event).is_sample;
  try {
    if (has_aux) thm1 = loglik_thm1(spec, omega);
    thm2 = loglik_thm2(spec, project(omega), snap_times(V, project(omega)));
  } catch (const StructuralMismatch& e) {
    throw InputError(std::string("structural mismatch: ") + e.what());
  } catch (const GenealogyError& e) {
    throw InputError(std::string("genealogy: ") + e.what());
  }
  json doc{{"provenance", provenance(c)},
           {"model", {{"name", c.model.name}, {"parameters", spec.parameters}}},
           {"n_samples", samples},
           {"thm1", thm1 ? number(*thm1) : json()},
           {"thm2", number(thm2)}};
  if (thm1) {
    double diff = 0.0, rel = 0.0;
    if (*thm1 != thm2) {
      diff = std::fabs(*thm1 - thm2);
      rel = diff / std::max({std::fabs(*thm1), std::fabs(thm2), 1.0});
    }
    doc["difference"] = number(diff);
    doc["relative_difference"] = number(rel);
  } else {
    doc["difference"] = json();
    doc["relative_difference"] = json();
  }
  return {write_atomic(c.out_dir, "exact.json", doc.dump(2) + "\n")};
}

std::vector<std::string> cmd_profile(const RunConfig& c) {
  if (c.genealogy_path.empty()) throw ConfigError("$.input.genealogy: required by profile");
  if (c.profile.parameter.empty()) throw ConfigError("$.profile.parameter: required by profile");
  if (c.profile.values.empty()) throw ConfigError("$.profile.values: required by profile");
  const Genealogy V = read_genealogy(c.genealogy_path, c);

  std::string csv = provenance_line(c) + "# parameter " + c.profile.parameter + "\n";
  csv += "value,mean,se,n_particles,n_reps,n_finite,n_collapsed";
  csv += c.profile.with_oracle ? ",oracle,oracle_leaked\n" : "\n";
  for (double value : c.profile.values) {
    ModelConfig m = c.model;
    m.parameters[c.profile.parameter] = value;
    ModelSpec spec;
    try {
      spec = build_model(m);
    } catch (const ModelError& e) {
      throw ConfigError("$.profile.values: " + format_double(value) + ": " + e.what());
    }
    const ReplicateSummary s = run_replicates(spec, V, c).summary;
    csv += format_double(value) + "," + format_double(s.mean) + "," + (s.n_finite >= 2 ? format_double(s.se) : "") +
           "," + std::to_string(c.filter.n_particles) + "," + std::to_string(c.n_reps) + "," +
           std::to_string(s.n_finite) + "," + std::to_string(s.n_collapsed);
    if (c.profile.with_oracle) {
      const OracleResult o = dmz_oracle(spec, V, truncation_lattice(spec, c.oracle), c.oracle.tol);
      csv += "," + format_double(o.loglik) + "," + format_double(o.leaked);
    }
    csv += "\n";
  }
  return {write_atomic(c.out_dir, "profile.csv", csv)};
}

// ---------------------------------------------------------------------------
// Entry point

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Markov population processes, their genealogies and genealogy likelihoods", "phylomarkov"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir, genealogy, trajectory;
  struct Command {
    const char* name;
    const char* help;
    std::vector<std::string> (*fn)(const RunConfig&);
  };
  const std::vector<Command> commands{
      {"simulate", "Simulate a trajectory, its genealogy and the visible genealogy", cmd_simulate},
      {"prune", "Prune a genealogy to its sample-visible part", cmd_prune},
      {"filter", "Particle-filter likelihood estimate with replicate standard error", cmd_filter},
      {"oracle", "Deterministic likelihood on a truncated state space", cmd_oracle},
      {"exact", "Exact likelihoods of a genealogy given a full trajectory", cmd_exact},
      {"profile", "Likelihood along a grid of one parameter", cmd_profile},
  };
  for (const Command& cmd : commands) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--seed", seed, "Overrides seed");
    sub->add_option("--out", out_dir, "Overrides output.dir");
    sub->add_option("--genealogy", genealogy, "Overrides input.genealogy (.json or .nwk)");
    sub->add_option("--trajectory", trajectory, "Overrides input.trajectory (.csv or .json)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  const Command* chosen = nullptr;
  for (const Command& cmd : commands)
    if (app.got_subcommand(cmd.name)) chosen = &cmd;

  try {
    std::string text;
    try {
      text = read_file(config_path);
    } catch (const InputError& e) {
      throw ConfigError(e.what());
    }
    RunConfig config = parse_config(text);
    apply_overrides(config, {seed, out_dir, genealogy, trajectory});
    for (const std::string& path : chosen->fn(config)) out << path << "\n";
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return 3;
  } catch (const ModelError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace phylomarkov::cli

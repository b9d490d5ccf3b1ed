#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "phylomarkov/cli.hpp"
#include "phylomarkov/exact.hpp"
#include "phylomarkov/simulate.hpp"
#include "phylomarkov/trajectory.hpp"
#include "support/filter_fixtures.hpp"

using namespace phylomarkov;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "phylomarkov");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(int(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("phylomarkov_test_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const fs::path& dir, const json& doc, const std::string& name = "config.json") {
  const fs::path p = dir / name;
  std::ofstream(p) << doc.dump(2);
  return p;
}

json fig5_config() {
  return {{"schema_version", 1},
          {"model", {{"name", "lbdp"}, {"parameters", {{"lambda", 1.5}, {"delta", 0.8}, {"psi", 1.0}, {"n0", 1}}}}},
          {"horizon", 2.0},
          {"seed", 1}};
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

double as_double(const json& v) {
  if (v.is_string()) return v.get<std::string>() == "-inf" ? -INFINITY : NAN;
  return v.get<double>();
}

std::vector<std::vector<std::string>> read_csv_rows(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(cell);
    if (!line.empty() && line.back() == ',') row.emplace_back();
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("fnv1a64 reference values") {
  CHECK(cli::fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(cli::fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(cli::fnv1a64("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("config schema rejects unknown keys and wrong types with a path") {
  const std::vector<std::pair<json, std::string>> bad{
      {{{"model", {{"name", "lbdp"}}}}, "$.schema_version"},
      {{{"schema_version", 2}, {"model", {{"name", "lbdp"}}}}, "$.schema_version"},
      {{{"schema_version", 1}, {"model", {{"name", "lbdp"}}}, {"extra", 1}}, "$.extra"},
      {{{"schema_version", 1}, {"model", {{"name", "moran"}}}}, "$.model.name"},
      {{{"schema_version", 1}, {"model", {{"name", "lbdp"}, {"parameters", {{"beta", 1}}}}}},
       "$.model.parameters.beta"},
      {{{"schema_version", 1}, {"model", {{"name", "lbdp"}, {"parameters", {{"psi", "1"}}}}}},
       "$.model.parameters.psi"},
      {{{"schema_version", 1}, {"model", {{"name", "lbdp"}}}, {"horizon", "2"}}, "$.horizon"},
      {{{"schema_version", 1}, {"model", {{"name", "lbdp"}}}, {"seed", -1}}, "$.seed"},
      {{{"schema_version", 1}, {"model", {{"name", "lbdp"}}}, {"filter", {{"n_particles", 1.5}}}},
       "$.filter.n_particles"},
      {{{"schema_version", 1}, {"model", {{"name", "lbdp"}}}, {"filter", {{"mode", "exact"}}}}, "$.filter.mode"},
      {{{"schema_version", 1}, {"model", {{"name", "lbdp"}}}, {"oracle", {{"truncation", {{"i", 5}}}}}},
       "$.oracle.truncation.i"},
      {{{"schema_version", 1}, {"model", {{"name", "sir"}}}, {"profile", {{"parameter", "lambda"}}}},
       "$.profile.parameter"},
      {{{"schema_version", 1}, {"model", {{"name", "lbdp"}}}, {"profile", {{"values", {1, "x"}}}}},
       "$.profile.values[1]"},
      {{{"schema_version", 1}, {"model", {{"name", "lbdp"}}}, {"input", {{"genealogy", 3}}}}, "$.input.genealogy"},
      {{{"schema_version", 1}, {"model", {{"name", "lbdp"}}}, {"output", {{"directory", "x"}}}},
       "$.output.directory"},
  };
  for (const auto& [doc, path] : bad) {
    CAPTURE(doc.dump());
    try {
      cli::parse_config(doc.dump());
      FAIL("accepted");
    } catch (const cli::ConfigError& e) {
      CHECK(std::string(e.what()).rfind(path + ":", 0) == 0);
    }
  }
  CHECK_THROWS_AS(cli::parse_config("{"), cli::ConfigError);

  // Rejected before anything is written.
  const fs::path d = fresh_dir("schema");
  json doc = fig5_config();
  doc["filter"] = {{"n_particle", 10}};
  const Run r = run_cli({"simulate", "--config", write_config(d, doc).string(), "--out", (d / "out").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("$.filter.n_particle") != std::string::npos);
  CHECK_FALSE(fs::exists(d / "out"));
}

TEST_CASE("flags override config fields") {
  json doc = fig5_config();
  doc["output"] = {{"dir", "a"}};
  doc["input"] = {{"genealogy", "g.json"}};
  cli::RunConfig c = cli::parse_config(doc.dump());
  CHECK(c.seed == 1);
  cli::apply_overrides(c, {7, std::string("b"), std::nullopt, std::string("t.csv")});
  CHECK(c.seed == 7);
  CHECK(c.out_dir == "b");
  CHECK(c.genealogy_path == "g.json");
  CHECK(c.trajectory_path == "t.csv");
}

TEST_CASE("usage errors exit nonzero") {
  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"simulate"}).code == 2);
  CHECK(run_cli({"bogus", "--config", "x"}).code == 2);
  CHECK(run_cli({"simulate", "--config", "/nonexistent/config.json"}).code == 2);
  CHECK(run_cli({"--help"}).code == 0);
}

TEST_CASE("trajectory CSV and JSON round trips are exact") {
  const auto m = make_builtin("sir", {{"b", 0.15}, {"gamma", 1}, {"psi", 1}, {"S0", 27}, {"I0", 3}});
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng = make_rng(seed);
    const JumpSequence omega = simulate(m, 3.0, rng);
    const TrajectoryFile f = trajectory_from_csv(m, trajectory_to_csv(m, omega, R"({"note":"x"})"));
    CHECK(f.omega == omega);
    CHECK(f.has_aux);
    CHECK(json::parse(f.header_json)["note"] == "x");
    CHECK(trajectory_from_json(m, trajectory_to_json(m, omega)) == omega);

    const TrajectoryFile h = trajectory_from_csv(m, history_to_csv(m, project(omega)));
    CHECK_FALSE(h.has_aux);
    CHECK(project(h.omega) == project(omega));
  }
}

TEST_CASE("malformed trajectory CSV names the line") {
  const auto m = make_builtin("lbdp", {{"lambda", 1}, {"psi", 1}});
  const std::string head = R"(# {"x0":[1,0],"horizon":1})" "\ntime,event,aux\n";
  const std::vector<std::pair<std::string, std::string>> bad{
      {"time,event,aux\n", "line 1"},
      {R"(# {"x0":[1],"horizon":1})" "\ntime,event,aux\n", "line 1"},
      {head + "0.5,birth,0\nx,birth,0\n", "line 4"},
      {head + "0.5,jump,0\n", "line 3"},
      {head + "0.5,birth,-1\n", "line 3"},
      {head + "0.5,birth\n", "line 3"},
  };
  for (const auto& [text, where] : bad) {
    CAPTURE(text);
    try {
      trajectory_from_csv(m, text);
      FAIL("accepted");
    } catch (const ModelError& e) {
      CHECK(std::string(e.what()).find(where) != std::string::npos);
    }
  }
  CHECK_THROWS_AS(trajectory_from_csv(m, head + "0.5,birth,0\n0.7,birth,\n"), ModelError);
}

TEST_CASE("simulate writes all files and the Newick parses back") {
  const fs::path d = fresh_dir("simulate");
  const Run r = run_cli({"simulate", "--config", write_config(d, fig5_config()).string(), "--out", (d / "out").string()});
  REQUIRE(r.code == 0);
  for (const char* f : {"trajectory.csv", "trajectory.json", "genealogy.json", "visible.json", "visible.nwk"}) {
    CHECK(fs::exists(d / "out" / f));
  }

  cli::RunConfig c = cli::parse_config(fig5_config().dump());
  const Genealogy vj = cli::read_genealogy((d / "out" / "visible.json").string(), c);
  const Genealogy vn = cli::read_genealogy((d / "out" / "visible.nwk").string(), c);
  CHECK(validate_genealogy(vn).ok());
  CHECK(vn.time() == vj.time());
  const EventTimeSets a = event_times(vj), b = event_times(vn);
  REQUIRE(a.C.size() == b.C.size());
  REQUIRE(a.D.size() == b.D.size());
  REQUIRE(a.L.size() == b.L.size());
  for (std::size_t i = 0; i < a.C.size(); ++i) CHECK(std::fabs(a.C[i] - b.C[i]) <= 1e-12);
  for (std::size_t i = 0; i < a.D.size(); ++i) CHECK(std::fabs(a.D[i] - b.D[i]) <= 1e-12);
  for (std::size_t i = 0; i < a.L.size(); ++i) CHECK(std::fabs(a.L[i] - b.L[i]) <= 1e-12);

  // The files agree with the library run on the same seed.
  const ModelSpec m = cli::build_model(c.model);
  Rng rng = make_rng(1);
  const JumpSequence omega = simulate(m, 2.0, rng);
  CHECK(trajectory_from_csv(m, slurp(d / "out" / "trajectory.csv")).omega == omega);
  CHECK(trajectory_from_json(m, slurp(d / "out" / "trajectory.json")) == omega);
  CHECK(vj == visible_genealogy(m, omega));
  CHECK(cli::read_genealogy((d / "out" / "genealogy.json").string(), c) == build_genealogy(m, omega).first);

  const json prov = read_json(d / "out" / "visible.json")["provenance"];
  CHECK(prov["version"] == cli::kToolVersion);
  CHECK(prov["seed"] == 1);
  CHECK(prov["config_hash"].get<std::string>().size() == 16);
}

TEST_CASE("repeated invocations are byte-identical") {
  const fs::path d = fresh_dir("determinism");
  json doc = fig5_config();
  doc["filter"] = {{"n_particles", 100}, {"n_reps", 3}};
  const std::string cfg = write_config(d, doc).string();
  REQUIRE(run_cli({"simulate", "--config", cfg, "--out", (d / "in").string()}).code == 0);
  const std::string g = (d / "in" / "visible.json").string(), t = (d / "in" / "trajectory.csv").string();
  for (const char* out : {"a", "b"}) {
    const std::string o = (d / out).string();
    REQUIRE(run_cli({"simulate", "--config", cfg, "--out", o}).code == 0);
    REQUIRE(run_cli({"filter", "--config", cfg, "--out", o, "--genealogy", g}).code == 0);
    REQUIRE(run_cli({"exact", "--config", cfg, "--out", o, "--trajectory", t, "--genealogy", g}).code == 0);
  }
  for (const char* f : {"trajectory.csv", "trajectory.json", "genealogy.json", "visible.json", "visible.nwk",
                        "filter.json", "filter_diagnostics.csv", "exact.json"}) {
    CAPTURE(f);
    CHECK(slurp(d / "a" / f) == slurp(d / "b" / f));
  }

  // A different seed changes the provenance hash and the trajectory.
  REQUIRE(run_cli({"simulate", "--config", cfg, "--out", (d / "c").string(), "--seed", "2"}).code == 0);
  CHECK(slurp(d / "a" / "trajectory.csv") != slurp(d / "c" / "trajectory.csv"));
  CHECK(read_json(d / "c" / "visible.json")["provenance"]["seed"] == 2);
}

TEST_CASE("psi = 0 gives an empty visible genealogy") {
  const fs::path d = fresh_dir("psi0");
  json doc = fig5_config();
  doc["model"]["parameters"]["psi"] = 0.0;
  REQUIRE(run_cli({"simulate", "--config", write_config(d, doc).string(), "--out", d.string()}).code == 0);
  const json v = read_json(d / "visible.json");
  CHECK(v["nodes"].is_array());
  CHECK(v["nodes"].empty());
  CHECK(v["time"] == 2.0);
  const Genealogy vn = cli::read_genealogy((d / "visible.nwk").string(), cli::parse_config(doc.dump()));
  CHECK(vn.empty());
  CHECK(vn.time() == 2.0);
}

TEST_CASE("prune reproduces the visible genealogy") {
  const fs::path d = fresh_dir("prune");
  const std::string cfg = write_config(d, fig5_config()).string();
  REQUIRE(run_cli({"simulate", "--config", cfg, "--out", (d / "sim").string()}).code == 0);
  REQUIRE(run_cli({"prune", "--config", cfg, "--out", (d / "pr").string(), "--genealogy",
                   (d / "sim" / "genealogy.json").string()})
              .code == 0);
  json a = read_json(d / "sim" / "visible.json"), b = read_json(d / "pr" / "visible.json");
  a.erase("provenance");
  b.erase("provenance");
  CHECK(a == b);
  CHECK(slurp(d / "sim" / "visible.nwk") != "");
  CHECK(run_cli({"prune", "--config", cfg, "--out", (d / "pr").string()}).code == 2);
}

TEST_CASE("exact agrees between the two theorems on simulated SIR runs") {
  const fs::path d = fresh_dir("exact");
  json doc{{"schema_version", 1},
           {"model",
            {{"name", "sir"}, {"parameters", {{"b", 0.15}, {"gamma", 1}, {"psi", 1}, {"S0", 27}, {"I0", 3}}}}},
           {"horizon", 2.0}};
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    doc["seed"] = seed;
    const std::string cfg = write_config(d, doc).string();
    const std::string out = (d / std::to_string(seed)).string();
    REQUIRE(run_cli({"simulate", "--config", cfg, "--out", out}).code == 0);
    const Run r = run_cli({"exact", "--config", cfg, "--out", out, "--trajectory", out + "/trajectory.csv"});
    REQUIRE(r.code == 0);
    const json e = read_json(fs::path(out) / "exact.json");
    const double t1 = as_double(e["thm1"]), t2 = as_double(e["thm2"]);
    CHECK(std::fabs(t1 - t2) <= 1e-9 * std::max(1.0, std::fabs(t1)));
    CHECK(as_double(e["relative_difference"]) <= 1e-9);
    checked += e["n_samples"].get<int>() > 0;

    // The JSON trajectory and the Newick genealogy give the same values.
    REQUIRE(run_cli({"exact", "--config", cfg, "--out", out + "/j", "--trajectory", out + "/trajectory.json",
                     "--genealogy", out + "/visible.nwk"})
                .code == 0);
    const json ej = read_json(fs::path(out) / "j" / "exact.json");
    CHECK(as_double(ej["thm1"]) == t1);
    CHECK(std::fabs(as_double(ej["thm2"]) - t2) <= 1e-9 * std::max(1.0, std::fabs(t2)));
  }
  CHECK(checked > 5);
}

TEST_CASE("exact reports structural errors with a nonzero exit") {
  const fs::path d = fresh_dir("exact_bad");
  json doc = fig5_config();
  const std::string cfg = write_config(d, doc).string();
  REQUIRE(run_cli({"simulate", "--config", cfg, "--out", (d / "a").string()}).code == 0);
  REQUIRE(run_cli({"simulate", "--config", cfg, "--out", (d / "b").string(), "--seed", "5"}).code == 0);
  // Trajectory of one run, genealogy of another.
  const Run r = run_cli({"exact", "--config", cfg, "--out", (d / "x").string(), "--trajectory",
                         (d / "a" / "trajectory.csv").string(), "--genealogy", (d / "b" / "visible.json").string()});
  CHECK(r.code == 3);
  CHECK_FALSE(fs::exists(d / "x" / "exact.json"));
  CHECK(run_cli({"exact", "--config", cfg, "--out", (d / "x").string()}).code == 2);

  std::ofstream(d / "broken.csv") << "time,event,aux\n";
  CHECK(run_cli({"exact", "--config", cfg, "--out", (d / "x").string(), "--trajectory", (d / "broken.csv").string()})
            .code == 3);
}

TEST_CASE("filter with two replicates is reproducible and matches the library") {
  const fs::path d = fresh_dir("filter");
  json doc = fig5_config();
  doc["filter"] = {{"n_particles", 200}, {"n_reps", 2}};
  const std::string cfg = write_config(d, doc).string();
  REQUIRE(run_cli({"simulate", "--config", cfg, "--out", d.string()}).code == 0);
  const std::string g = (d / "visible.json").string();
  REQUIRE(run_cli({"filter", "--config", cfg, "--out", (d / "a").string(), "--genealogy", g}).code == 0);
  REQUIRE(run_cli({"filter", "--config", cfg, "--out", (d / "b").string(), "--genealogy", g}).code == 0);
  const json a = read_json(d / "a" / "filter.json"), b = read_json(d / "b" / "filter.json");
  CHECK(a["mean"] == b["mean"]);
  CHECK(a["se"] == b["se"]);
  CHECK(a["estimates"].size() == 2);

  const cli::RunConfig c = cli::parse_config(doc.dump());
  FilterConfig fc = c.filter;
  fc.seed = 1;
  const ReplicateSummary s = replicate_loglik(cli::build_model(c.model), cli::read_genealogy(g, c), fc, 2);
  CHECK(a["mean"].get<double>() == s.mean);
  CHECK(a["se"].get<double>() == s.se);

  const auto rows = read_csv_rows(d / "a" / "filter_diagnostics.csv");
  REQUIRE(rows.size() > 2);
  CHECK(rows[0] == std::vector<std::string>{"replicate", "time", "kind", "log_mean_weight", "ess", "resampled"});
  CHECK(rows.back()[2] == "end");
}

TEST_CASE("filter records an incompatible genealogy as -inf with exit 0") {
  const fs::path d = fresh_dir("filter_inf");
  json doc = fig5_config();
  doc["filter"] = {{"n_particles", 50}, {"n_reps", 2}};
  const std::string cfg = write_config(d, doc).string();
  REQUIRE(run_cli({"simulate", "--config", cfg, "--out", d.string()}).code == 0);
  doc["model"]["parameters"]["psi"] = 0.0;
  const std::string cfg0 = write_config(d, doc, "psi0.json").string();
  const Run r = run_cli({"filter", "--config", cfg0, "--out", d.string(), "--genealogy", (d / "visible.json").string()});
  CHECK(r.code == 0);
  const json f = read_json(d / "filter.json");
  CHECK(f["mean"] == "-inf");
  CHECK(f["estimates"][0] == "-inf");
  CHECK(f["n_collapsed"] == 2);
}

TEST_CASE("oracle on an empty genealogy with psi = 0 gives 0") {
  const fs::path d = fresh_dir("oracle0");
  json doc{{"schema_version", 1},
           {"model", {{"name", "sir"}, {"parameters", {{"b", 0.04}, {"gamma", 1}, {"psi", 0}, {"S0", 47}, {"I0", 3}}}}},
           {"horizon", 1.5},
           {"seed", 3}};
  const std::string cfg = write_config(d, doc).string();
  REQUIRE(run_cli({"simulate", "--config", cfg, "--out", d.string()}).code == 0);
  REQUIRE(run_cli({"oracle", "--config", cfg, "--out", d.string(), "--genealogy", (d / "visible.json").string()})
              .code == 0);
  const json o = read_json(d / "oracle.json");
  CHECK(std::fabs(as_double(o["loglik"])) <= 1e-7);
  CHECK(o["leaked"].get<double>() == 0.0);
  CHECK(o["lattice_size"].get<int>() > 100);
}

TEST_CASE("single-point profile equals filter output") {
  const fs::path d = fresh_dir("profile1");
  json doc = fig5_config();
  doc["filter"] = {{"n_particles", 150}, {"n_reps", 4}};
  doc["profile"] = {{"parameter", "lambda"}, {"values", {1.5}}};
  const std::string cfg = write_config(d, doc).string();
  REQUIRE(run_cli({"simulate", "--config", cfg, "--out", d.string()}).code == 0);
  const std::string g = (d / "visible.nwk").string();
  REQUIRE(run_cli({"filter", "--config", cfg, "--out", d.string(), "--genealogy", g}).code == 0);
  REQUIRE(run_cli({"profile", "--config", cfg, "--out", d.string(), "--genealogy", g}).code == 0);
  const json f = read_json(d / "filter.json");
  const auto rows = read_csv_rows(d / "profile.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"value", "mean", "se", "n_particles", "n_reps", "n_finite", "n_collapsed"});
  CHECK(std::stod(rows[1][0]) == 1.5);
  CHECK(std::stod(rows[1][1]) == f["mean"].get<double>());
  CHECK(std::stod(rows[1][2]) == f["se"].get<double>());
  CHECK(rows[1][3] == "150");
  CHECK(rows[1][4] == "4");
}

TEST_CASE("lambda profile brackets the oracle at nearly every grid point") {
  const fs::path d = fresh_dir("profile_lambda");
  // A genealogy with 5-15 samples drawn at the true parameters.
  const auto truth = lbdp_spec({1.5, 0.8, 1.0, 1});
  const auto sim = fixture::simulated_genealogy(truth, 2.0, 5, 15);
  std::ofstream(d / "v.json") << to_json(sim.V);

  json doc = fig5_config();
  doc["seed"] = 11;
  doc["filter"] = {{"n_particles", 400}, {"n_reps", 10}};
  doc["oracle"] = {{"truncation", {{"n", 250}}}};
  doc["profile"] = {{"parameter", "lambda"}, {"grid", {{"from", 1.0}, {"to", 2.0}, {"points", 21}}}, {"with_oracle", true}};
  const std::string cfg = write_config(d, doc).string();
  REQUIRE(run_cli({"profile", "--config", cfg, "--out", d.string(), "--genealogy", (d / "v.json").string()}).code ==
          0);
  const auto rows = read_csv_rows(d / "profile.csv");
  REQUIRE(rows.size() == 22);
  int covered = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double mean = std::stod(rows[i][1]), se = std::stod(rows[i][2]), oracle = std::stod(rows[i][7]);
    CAPTURE(rows[i][0]);
    covered += std::fabs(mean - oracle) <= 2 * se;
    CHECK(std::stod(rows[i][8]) < 1e-6);
  }
  CHECK(covered >= 20);  // at least 95% of 21 points
}

TEST_CASE("SIR transmission-rate profile emits one row per grid point") {
  const fs::path d = fresh_dir("profile_sir");
  json doc{{"schema_version", 1},
           {"model",
            {{"name", "sir"}, {"parameters", {{"b", 0.04}, {"gamma", 1}, {"psi", 1}, {"S0", 97}, {"I0", 3}}}}},
           {"horizon", 1.0},
           {"seed", 2},
           {"filter", {{"n_particles", 100}, {"n_reps", 2}}},
           {"profile", {{"parameter", "b"}, {"values", {0.02, 0.04, 0.06}}}}};
  const std::string cfg = write_config(d, doc).string();
  REQUIRE(run_cli({"simulate", "--config", cfg, "--out", d.string()}).code == 0);
  REQUIRE(run_cli({"profile", "--config", cfg, "--out", d.string(), "--genealogy", (d / "visible.json").string()})
              .code == 0);
  const auto rows = read_csv_rows(d / "profile.csv");
  REQUIRE(rows.size() == 4);
  CHECK(std::stod(rows[2][0]) == 0.04);
}

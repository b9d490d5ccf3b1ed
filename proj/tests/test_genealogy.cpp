#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "phylomarkov/genealogy.hpp"
#include "phylomarkov/models.hpp"
#include "phylomarkov/simulate.hpp"
#include "support/genealogy_oracles.hpp"

using namespace phylomarkov;

namespace {

constexpr Color G = Color::green, K = Color::black, B = Color::blue, R = Color::red;

GNode node(std::uint64_t name, double t, Ball a, Ball b) { return make_node(name, t, a, b); }

const GNode& at(const Genealogy& g, std::uint64_t name) {
  const GNode* p = g.find_node(name);
  REQUIRE(p != nullptr);
  return *p;
}

int count_color(const Genealogy& g, Color c) {
  int n = 0;
  g.for_each_node([&](const GNode& p) { n += p.count(c); });
  return n;
}

// Newick text with branch lengths removed.
std::string topology(const std::string& nwk) {
  std::string out;
  bool skipping = false;
  for (char c : nwk) {
    if (c == ':') skipping = true;
    else if (c == ',' || c == ')' || c == ';') skipping = false;
    if (!skipping) out += c;
  }
  return out;
}

Genealogy single_sample() { return apply_sample(new_genealogy(1), 0, 1.0); }

}  // namespace

TEST_CASE("new_genealogy") {
  CHECK(new_genealogy(0).empty());
  const auto one = new_genealogy(1);
  REQUIRE(one.size() == 1);
  CHECK(one.nodes()[0] == node(0, 0.0, {G, 0}, {K, 0}));
  const auto three = new_genealogy(3);
  CHECK(validate_genealogy(three).ok());
  CHECK(inventory_of(three) == Inventory{0, 1, 2});
  CHECK(three.time() == 0.0);
}

TEST_CASE("birth exchanges the new green ball for the parent's black ball") {
  const auto g = apply_birth(new_genealogy(1), 0, 1.0);
  REQUIRE(g.size() == 2);
  CHECK(at(g, 0) == node(0, 0.0, {G, 0}, {G, 1}));
  CHECK(at(g, 1) == node(1, 1.0, {K, 0}, {K, 1}));
  CHECK(g.time() == 1.0);
  CHECK(inventory_of(g) == Inventory{0, 1});

  // A black ball held by node 4 is chosen; the newborn's node is named 6.
  const auto a = Genealogy::from_nodes(3.5, {node(0, 0, {G, 0}, {G, 2}), node(1, 0, {G, 1}, {K, 1}),
                                              node(2, 1, {G, 3}, {G, 4}), node(3, 2, {G, 5}, {K, 2}),
                                              node(4, 3, {K, 0}, {K, 4}), node(5, 3.5, {K, 3}, {K, 5})});
  REQUIRE(validate_genealogy(a).ok());
  const auto b = apply_birth(a, 0, 4.0);
  CHECK(b.size() == 7);
  CHECK(b.nodes().back() == node(6, 4.0, {K, 0}, {K, 6}));
  CHECK(at(b, 4).holds({G, 6}));
  CHECK(validate_genealogy(b).ok());
}

TEST_CASE("sample adds a node holding a new blue ball") {
  const auto g = single_sample();
  CHECK(at(g, 0) == node(0, 0.0, {G, 0}, {G, 1}));
  CHECK(at(g, 1) == node(1, 1.0, {K, 0}, {B, 0}));
  CHECK(g.black_count() == 1);

  // The black ball held by node 2 is sampled; the new node is named 8.
  const auto c = Genealogy::from_nodes(
      3.6, {node(0, 0, {G, 0}, {G, 1}), node(1, 1, {G, 2}, {G, 3}), node(2, 2, {K, 2}, {K, 0}),
            node(3, 2.5, {G, 4}, {G, 5}), node(4, 3, {G, 6}, {K, 1}), node(5, 3.2, {K, 5}, {G, 7}),
            node(6, 3.4, {K, 6}, {K, 3}), node(7, 3.6, {K, 7}, {B, 0})});
  REQUIRE(validate_genealogy(c).ok());
  const auto d = apply_sample(c, 0, 5.0);
  CHECK(d.nodes().back() == node(8, 5.0, {K, 0}, {B, 1}));
  CHECK(at(d, 2).holds({G, 8}));
  CHECK(validate_genealogy(d).ok());
}

TEST_CASE("death removes a node unless the mate is blue") {
  const auto g = apply_death(apply_birth(new_genealogy(1), 0, 1.0), 0, 2.0);
  REQUIRE(g.size() == 1);
  CHECK(at(g, 0) == node(0, 0.0, {G, 0}, {K, 1}));

  // Node 5 holds the chosen black ball and green ball 9; its own green ball is held by node 1.
  const auto a = Genealogy::from_nodes(3.0, {node(0, 0, {G, 0}, {G, 1}), node(1, 1, {G, 5}, {K, 1}),
                                              node(5, 2, {K, 5}, {G, 9}), node(9, 3, {K, 9}, {K, 3})});
  REQUIRE(validate_genealogy(a).ok());
  const auto b = apply_death(a, 2, 4.0);
  CHECK(b.find_node(5) == nullptr);
  CHECK(at(b, 1) == node(1, 1, {G, 9}, {K, 1}));
  CHECK(validate_genealogy(b).ok());

  // Node 14 holds the chosen black ball next to a blue ball.
  const auto c = Genealogy::from_nodes(1.0, {node(0, 0, {G, 0}, {G, 14}), node(14, 1, {K, 14}, {B, 0})});
  const auto d = apply_death(c, 0, 2.0);
  CHECK(d.size() == 2);
  CHECK(at(d, 14) == node(14, 1, {R, 0}, {B, 0}));

  // A root whose mate is its own green ball disappears.
  CHECK(apply_death(new_genealogy(1), 0, 1.0).empty());
}

TEST_CASE("updates reject out-of-range indices and earlier times") {
  const auto g = new_genealogy(2);
  CHECK_THROWS_AS(apply_birth(g, 2, 1.0), GenealogyError);
  CHECK_THROWS_AS(apply_death(g, 5, 1.0), GenealogyError);
  const auto h = apply_birth(g, 0, 2.0);
  CHECK_THROWS_AS(apply_sample(h, 0, 1.0), GenealogyError);
}

TEST_CASE("random updates preserve validity and ball counts") {
  Rng rng = make_rng(11);
  for (int rep = 0; rep < 1000; ++rep) {
    Genealogy prev = new_genealogy(1 + rep % 4);
    int samples = 0;
    oracle::random_updates(rng, prev.black_count(), 40, [&](const Genealogy& g) {
      REQUIRE(validate_genealogy(g).ok());
      const int dk = count_color(g, K) - count_color(prev, K);
      const int dg = count_color(g, G) - count_color(prev, G);
      const int db = count_color(g, B) - count_color(prev, B);
      if (g.size() > prev.size() && db == 0) {
        CHECK(dk == 1);
        CHECK(dg == 1);
      }
      if (db == 1) ++samples;
      if (g.size() <= prev.size()) CHECK(db == 0);
      prev = g;
    });
    std::vector<std::uint64_t> blues;
    prev.for_each_node([&](const GNode& p) {
      for (const Ball& b : p.pocket)
        if (b.color == B) blues.push_back(b.name);
    });
    std::sort(blues.begin(), blues.end());
    std::vector<std::uint64_t> expect(static_cast<std::size_t>(samples));
    for (int i = 0; i < samples; ++i) expect[static_cast<std::size_t>(i)] = static_cast<std::uint64_t>(i);
    CHECK(blues == expect);
  }
}

TEST_CASE("build_genealogy") {
  const auto m = lbdp_spec({1.0, 1.0, 1.0, 3});
  JumpSequence empty{State{3, 0}, {}, 2.0};
  auto [g0, inv0] = build_genealogy(m, empty);
  auto expect = new_genealogy(3);
  expect.set_time(2.0);
  CHECK(g0 == expect);
  CHECK(inv0 == Inventory{0, 1, 2});

  // A birth followed by the death of the newborn restores the initial shape.
  JumpSequence bd{State{3, 0}, {{0.5, 0, 1}, {0.7, 1, 3}}, 2.0};
  CHECK(oracle::canonical(build_genealogy(m, bd).first) == oracle::canonical(expect));

  JumpSequence bad{State{3, 0}, {{0.5, 0, 1}, {0.7, 1, 4}}, 2.0};
  try {
    build_genealogy(m, bad);
    FAIL("expected an error");
  } catch (const ModelError& e) {
    CHECK(std::string(e.what()).find("jump 1") != std::string::npos);
  }
}

TEST_CASE("inventory agrees with the focal size and the direct fold") {
  const auto m = sir_spec({0.08, 1.0, 0.5, 40, 3, 0, {}});
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng = make_rng(seed);
    const auto omega = simulate(m, 4.0, rng);
    const auto [g, inv] = build_genealogy(m, omega);
    REQUIRE(inventory_of(g) == inv);
    REQUIRE(static_cast<int>(inv.size()) == m.focal_size(state_at(m, omega, 4.0)));
  }
}

TEST_CASE("prune") {
  Rng rng = make_rng(3);
  const auto no_samples = lbdp_spec({1.0, 0.5, 0.0, 2});
  CHECK(prune(build_genealogy(no_samples, simulate(no_samples, 2.0, rng)).first).empty());

  const auto v = prune(single_sample());
  REQUIRE(v.size() == 2);
  CHECK(at(v, 0) == node(0, 0.0, {G, 0}, {G, 1}));
  CHECK(at(v, 1) == node(1, 1.0, {R, 0}, {B, 0}));
}

TEST_CASE("prune: idempotence, trichotomy, blue conservation, order-insensitivity") {
  Rng rng = make_rng(17);
  for (int rep = 0; rep < 1000; ++rep) {
    const auto g = oracle::random_updates(rng, 1 + rep % 3, 30, [](const Genealogy&) {});
    const auto v = prune(g);
    CHECK(validate_genealogy(v).ok());
    CHECK(is_visible(v));
    CHECK(prune(v) == v);
    CHECK(count_color(v, B) == count_color(g, B));

    Genealogy shuffled = g;
    while (shuffled.black_count() > 0) {
      const auto n = std::uniform_int_distribution<std::size_t>(0, shuffled.black_count() - 1)(rng);
      shuffled.death(n, shuffled.time());
    }
    CHECK(shuffled.nodes() == v.nodes());
  }
}

TEST_CASE("event times of a single-sample visible genealogy") {
  CHECK(event_times(Genealogy{}) == EventTimeSets{});
  const auto v = prune(single_sample());
  const auto s = event_times(v);
  // The root holds its own green ball and the green ball of the sample node.
  CHECK(s.C == std::vector<double>{0.0});
  CHECK(s.R == std::vector<double>{0.0});
  CHECK(s.A == std::vector<double>{0.0});
  CHECK(s.D.empty());
  CHECK(s.L == std::vector<double>{1.0});
  CHECK(s.S == std::vector<double>{1.0});
}

TEST_CASE("event-time identities, lineage count and attachment times on random visible genealogies") {
  Rng rng = make_rng(23);
  auto merged = [](std::vector<double> a, const std::vector<double>& b) {
    a.insert(a.end(), b.begin(), b.end());
    std::sort(a.begin(), a.end());
    return a;
  };
  for (int rep = 0; rep < 500; ++rep) {
    const auto v = prune(oracle::random_updates(rng, 1 + rep % 3, 40, [](const Genealogy&) {}));
    const auto s = event_times(v);
    CHECK(s.A == merged(s.C, s.D));
    CHECK(s.S == merged(s.D, s.L));
    CHECK(s.E == merged(merged(s.C, s.D), s.L));

    const auto curve = lineage_curve(v);
    const auto att = attach_times(v);
    CHECK(att.size() == s.S.size());
    std::vector<double> probes;
    for (int k = 0; k < 100; ++k) probes.push_back(uniform01(rng) * (v.time() + 1.0));
    probes.insert(probes.end(), s.E.begin(), s.E.end());
    for (double t : probes) {
      int tele = 0;
      for (const auto& a : att) tele += (a.a <= t && t < a.s);
      CHECK(curve.at(t) == tele);
      CHECK(curve.at(t) == oracle::traversal_lineages(v, t));
      // Both forms of the lineage count agree.
      const int as_form = int(std::upper_bound(s.A.begin(), s.A.end(), t) - s.A.begin()) -
                          int(std::upper_bound(s.S.begin(), s.S.end(), t) - s.S.begin());
      CHECK(curve.at(t) == as_form);
    }
  }
}

TEST_CASE("lineage count on a single sample") {
  const auto v = prune(single_sample());
  CHECK(lineage_count(v, -0.5) == 0);
  CHECK(lineage_count(v, 0.0) == 1);
  CHECK(lineage_count(v, 0.999) == 1);
  CHECK(lineage_count(v, 1.0) == 0);

  const auto corrupt = Genealogy::from_nodes(1.0, {node(3, 0.5, {R, 0}, {B, 0})});
  CHECK_THROWS_AS(lineage_curve(corrupt), GenealogyError);
}

TEST_CASE("attachment times") {
  const auto one = attach_times(prune(single_sample()));
  REQUIRE(one.size() == 1);
  CHECK(one[0].a == 0.0);
  CHECK(one[0].s == 1.0);
  CHECK(one[0].kind == AttachKind::root);

  // Two samples whose lineages meet at a birth at c=0.5.
  Genealogy g = new_genealogy(1);
  g.birth(0, 0.5);
  g.sample(0, 1.0);
  g.sample(1, 2.0);
  const auto two = attach_times(prune(g));
  REQUIRE(two.size() == 2);
  CHECK(two[1].a == 0.5);
  CHECK(two[1].s == 2.0);
  CHECK(two[1].kind == AttachKind::coalescence);

  // A later sample on the same lineage attaches by direct descent.
  Genealogy h = new_genealogy(1);
  h.sample(0, 1.0);
  h.sample(0, 2.0);
  const auto dd = attach_times(prune(h));
  REQUIRE(dd.size() == 2);
  CHECK(dd[1].a == 1.0);
  CHECK(dd[1].kind == AttachKind::direct_descent);

  CHECK_THROWS_AS(attach_times(new_genealogy(1)), GenealogyError);
}

TEST_CASE("validate_genealogy reports corruption") {
  CHECK(validate_genealogy(new_genealogy(4)).ok());
  const auto dup = Genealogy::from_nodes(1.0, {node(0, 0, {G, 0}, {G, 1}), node(1, 1, {G, 1}, {K, 1})});
  const auto r = validate_genealogy(dup);
  REQUIRE_FALSE(r.ok());
  CHECK(std::any_of(r.issues.begin(), r.issues.end(), [](const auto& i) { return i.condition == "iii"; }));

  const auto late = Genealogy::from_nodes(0.5, {node(0, 0, {G, 0}, {K, 0}), node(1, 1, {G, 1}, {K, 1})});
  const auto r2 = validate_genealogy(late);
  CHECK(std::any_of(r2.issues.begin(), r2.issues.end(), [](const auto& i) { return i.condition == "i"; }));

  const auto order = Genealogy::from_nodes(2.0, {node(0, 0, {G, 0}, {G, 1}), node(1, 1, {K, 1}, {G, 2}),
                                                  node(2, 0.5, {K, 2}, {K, 0})});
  const auto r3 = validate_genealogy(order);
  CHECK(std::any_of(r3.issues.begin(), r3.issues.end(), [](const auto& i) { return i.condition == "ii"; }));

  const auto backwards = Genealogy::from_nodes(2.0, {node(0, 0, {G, 0}, {K, 0}), node(1, 1, {G, 1}, {K, 1}),
                                                      node(2, 1, {G, 3}, {K, 2}), node(3, 1, {G, 2}, {K, 3})});
  const auto r4 = validate_genealogy(backwards);
  CHECK(std::any_of(r4.issues.begin(), r4.issues.end(), [](const auto& i) { return i.condition == "iv"; }));

  const auto orphan = Genealogy::from_nodes(2.0, {node(0, 0, {K, 4}, {K, 0})});
  const auto r5 = validate_genealogy(orphan);
  CHECK(std::any_of(r5.issues.begin(), r5.issues.end(), [](const auto& i) { return i.condition == "v"; }));
}

TEST_CASE("JSON round trip is exact") {
  Rng rng = make_rng(5);
  for (int rep = 0; rep < 200; ++rep) {
    const auto g = oracle::random_updates(rng, 2, 25, [](const Genealogy&) {});
    const auto back = genealogy_from_json(to_json(g));
    CHECK(back == g);
    CHECK(event_times(back) == event_times(g));
    const auto v = prune(g);
    CHECK(genealogy_from_json(to_json(v, 2)) == v);
  }
  CHECK_THROWS_AS(genealogy_from_json(R"({"time": 1, "nodes": [], "extra": 0})"), GenealogyError);
  CHECK_THROWS_AS(genealogy_from_json(R"({"time": 1, "nodes": [{"name": 0, "time": 0, "pocket": [{"color": "teal", "name": 0}, {"color": "green", "name": 0}]}]})"),
                  GenealogyError);
}

TEST_CASE("Newick output and round trip") {
  CHECK(to_newick(Genealogy{}).empty());
  CHECK(to_newick(prune(single_sample())) == "(r0:1):0;\n");

  Genealogy h = new_genealogy(1);
  h.sample(0, 1.0);
  h.sample(0, 2.0);
  CHECK(to_newick(prune(h)) == "((r1:1)b0:1):0;\n");

  Rng rng = make_rng(9);
  for (int rep = 0; rep < 300; ++rep) {
    const auto v = prune(oracle::random_updates(rng, 1 + rep % 3, 40, [](const Genealogy&) {}));
    const auto back = from_newick(to_newick(v), v.time());
    CHECK(validate_genealogy(back).ok());
    const auto a = event_times(v), b = event_times(back);
    for (auto [x, y] : {std::pair{&a.E, &b.E}, {&a.C, &b.C}, {&a.D, &b.D}, {&a.L, &b.L}, {&a.R, &b.R}}) {
      REQUIRE(x->size() == y->size());
      for (std::size_t i = 0; i < x->size(); ++i) CHECK(std::abs((*x)[i] - (*y)[i]) <= 1e-12);
    }
    CHECK(topology(to_newick(back)) == topology(to_newick(v)));
  }
}

TEST_CASE("Newick parse errors carry a position") {
  try {
    from_newick("((r0:1,r1:2):0;");
    FAIL("expected an error");
  } catch (const GenealogyError& e) {
    CHECK(std::string(e.what()).find("position") != std::string::npos);
  }
  CHECK_THROWS_AS(from_newick("(r0):0;"), GenealogyError);
  CHECK_THROWS_AS(from_newick("(x0:1):0;"), GenealogyError);
  CHECK_NOTHROW(from_newick("[provenance: test]\n(r0:1):0;\n"));
}

#include "phylomarkov/genealogy.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace phylomarkov {

const char* color_name(Color c) {
  switch (c) {
    case Color::green: return "green";
    case Color::black: return "black";
    case Color::blue: return "blue";
    case Color::red: return "red";
  }
  return "?";
}

Color parse_color(const std::string& s) {
  if (s == "green") return Color::green;
  if (s == "black") return Color::black;
  if (s == "blue") return Color::blue;
  if (s == "red") return Color::red;
  throw GenealogyError("unknown ball color '" + s + "'");
}

std::size_t BallHash::operator()(const Ball& b) const noexcept {
  return std::hash<std::uint64_t>{}(b.name * 4 + static_cast<std::uint64_t>(b.color));
}

GNode make_node(std::uint64_t name, double time, Ball a, Ball b) {
  if (b < a) std::swap(a, b);
  return GNode{name, time, {a, b}};
}

namespace {

std::string ball_str(const Ball& b) { return std::string(color_name(b.color)) + " " + std::to_string(b.name); }

}  // namespace

// ---------------------------------------------------------------------------

Genealogy Genealogy::from_nodes(double time, const std::vector<GNode>& nodes) {
  Genealogy g;
  g.time_ = time;
  std::uint64_t max_name = 0;
  bool any = false;
  for (GNode node : nodes) {
    if (node.pocket[1] < node.pocket[0]) std::swap(node.pocket[0], node.pocket[1]);
    g.append(node);
    for (const Ball& b : node.pocket) {
      if (b.color == Color::black) g.blacks_.push_back(b.name);
      if (b.color == Color::blue) ++g.blues_;
      max_name = std::max(max_name, b.name);
    }
    max_name = std::max(max_name, node.name);
    any = true;
  }
  std::sort(g.blacks_.begin(), g.blacks_.end());
  g.blacks_.erase(std::unique(g.blacks_.begin(), g.blacks_.end()), g.blacks_.end());
  g.next_name_ = any ? max_name + 1 : 0;
  return g;
}

std::vector<GNode> Genealogy::nodes() const {
  std::vector<GNode> out;
  out.reserve(seq_.size());
  for (const auto& [key, node] : seq_) out.push_back(node);
  return out;
}

const GNode* Genealogy::find_node(std::uint64_t name) const {
  auto it = key_of_name_.find(name);
  if (it == key_of_name_.end()) return nullptr;
  return &seq_.at(it->second);
}

std::optional<std::uint64_t> Genealogy::holder(const Ball& b) const {
  auto it = holder_.find(b);
  if (it == holder_.end()) return std::nullopt;
  return it->second;
}

const GNode* Genealogy::parent(const GNode& p) const {
  const auto h = holder({Color::green, p.name});
  return h ? find_node(*h) : nullptr;
}

GNode& Genealogy::node_by_name(std::uint64_t name) {
  auto it = key_of_name_.find(name);
  if (it == key_of_name_.end()) throw GenealogyError("no node named " + std::to_string(name));
  return seq_.at(it->second);
}

void Genealogy::append(const GNode& node) {
  const std::uint64_t key = next_key_++;
  seq_.emplace(key, node);
  key_of_name_[node.name] = key;
  for (const Ball& b : node.pocket) holder_[b] = node.name;
}

void Genealogy::erase(std::uint64_t name) {
  auto it = key_of_name_.find(name);
  seq_.erase(it->second);
  key_of_name_.erase(it);
}

void Genealogy::replace_ball(GNode& node, const Ball& from, const Ball& to) {
  if (node.pocket[0] == from) {
    node.pocket[0] = to;
  } else if (node.pocket[1] == from) {
    node.pocket[1] = to;
  } else {
    throw GenealogyError("node " + std::to_string(node.name) + " does not hold " + ball_str(from));
  }
  if (node.pocket[1] < node.pocket[0]) std::swap(node.pocket[0], node.pocket[1]);
  auto it = holder_.find(from);
  if (it != holder_.end() && it->second == node.name) holder_.erase(it);
  holder_[to] = node.name;
}

void Genealogy::check_update(std::size_t n, double t, const char* what) const {
  if (n >= blacks_.size()) {
    throw GenealogyError(std::string(what) + ": black-ball index " + std::to_string(n) + " out of range (" +
                         std::to_string(blacks_.size()) + " black balls)");
  }
  const double last = seq_.empty() ? time_ : std::max(time_, seq_.rbegin()->second.time);
  if (t < last) throw GenealogyError(std::string(what) + ": time " + std::to_string(t) + " precedes the genealogy");
}

void Genealogy::birth(std::size_t n, double t) {
  check_update(n, t, "birth");
  const Ball b{Color::black, blacks_[n]};
  const std::uint64_t parent_name = holder_.at(b);
  const std::uint64_t cm = next_name_++;
  const Ball g{Color::green, cm};
  const Ball newborn{Color::black, cm};
  // After the exchange the parent's node holds g and the new node holds {b, newborn}.
  replace_ball(node_by_name(parent_name), b, g);
  append(make_node(cm, t, b, newborn));
  blacks_.insert(std::upper_bound(blacks_.begin(), blacks_.end(), cm), cm);
  time_ = t;
}

void Genealogy::sample(std::size_t n, double t) {
  check_update(n, t, "sample");
  const Ball b{Color::black, blacks_[n]};
  const std::uint64_t holder_name = holder_.at(b);
  const std::uint64_t cm = next_name_++;
  const Ball g{Color::green, cm};
  const Ball blue{Color::blue, blues_++};
  replace_ball(node_by_name(holder_name), b, g);
  append(make_node(cm, t, b, blue));
  time_ = t;
}

void Genealogy::death(std::size_t n, double t) {
  check_update(n, t, "death");
  const Ball b{Color::black, blacks_[n]};
  GNode& p = node_by_name(holder_.at(b));
  const Ball mate = p.mate(b);
  blacks_.erase(blacks_.begin() + static_cast<std::ptrdiff_t>(n));
  if (mate.color == Color::blue) {
    replace_ball(p, b, Ball{Color::red, mate.name});
  } else if (mate.color == Color::red) {
    throw GenealogyError("node " + std::to_string(p.name) + " pairs a black ball with a red ball");
  } else {
    const Ball g{Color::green, p.name};
    const std::uint64_t p_name = p.name;
    const std::uint64_t p2_name = holder_.at(g);
    holder_.erase(b);
    if (p2_name != p_name) {
      holder_.erase(mate);
      replace_ball(node_by_name(p2_name), g, mate);
    } else {
      holder_.erase(g);
    }
    erase(p_name);
  }
  time_ = t;
}

Genealogy new_genealogy(std::size_t n0) {
  std::vector<GNode> nodes;
  for (std::size_t k = 0; k < n0; ++k) nodes.push_back(make_node(k, 0.0, {Color::green, k}, {Color::black, k}));
  return Genealogy::from_nodes(0.0, nodes);
}

Genealogy apply_birth(Genealogy g, std::size_t n, double t) {
  g.birth(n, t);
  return g;
}

Genealogy apply_sample(Genealogy g, std::size_t n, double t) {
  g.sample(n, t);
  return g;
}

Genealogy apply_death(Genealogy g, std::size_t n, double t) {
  g.death(n, t);
  return g;
}

// ---------------------------------------------------------------------------

InventoryFold::InventoryFold(std::size_t n0) : next_name_(n0) {
  for (std::size_t k = 0; k < n0; ++k) names_.push_back(k);
}

void InventoryFold::add() { names_.push_back(next_name_++); }

void InventoryFold::drop(std::size_t n) {
  if (n >= names_.size()) throw GenealogyError("inventory drop index out of range");
  names_.erase(names_.begin() + static_cast<std::ptrdiff_t>(n));
}

void InventoryFold::sample() { ++next_name_; }

std::pair<Genealogy, Inventory> build_genealogy(const ModelSpec& spec, const JumpSequence& omega) {
  const int n0 = spec.focal_size(omega.x0);
  if (n0 < 0) throw ModelError("negative initial focal size");
  Genealogy g = new_genealogy(static_cast<std::size_t>(n0));
  InventoryFold inv(static_cast<std::size_t>(n0));
  for (std::size_t k = 0; k < omega.jumps.size(); ++k) {
    const Jump& j = omega.jumps[k];
    if (j.event >= spec.events.size()) throw ModelError("jump " + std::to_string(k) + ": unknown event index");
    const EventType& ev = spec.events[j.event];
    if (!ev.is_marked()) continue;
    if (j.aux >= g.black_count()) {
      throw ModelError("jump " + std::to_string(k) + ": auxiliary number " + std::to_string(j.aux) +
                       " out of range for " + std::to_string(g.black_count()) + " extant individuals");
    }
    const auto n = static_cast<std::size_t>(j.aux);
    if (ev.is_birth) {
      g.birth(n, j.time);
      inv.add();
    } else if (ev.is_death) {
      g.death(n, j.time);
      inv.drop(n);
    } else {
      g.sample(n, j.time);
      inv.sample();
    }
  }
  g.set_time(omega.horizon);
  return {std::move(g), inv.names()};
}

Inventory inventory_of(const Genealogy& g) {
  Inventory out;
  g.for_each_node([&](const GNode& node) {
    for (const Ball& b : node.pocket)
      if (b.color == Color::black) out.push_back(b.name);
  });
  std::sort(out.begin(), out.end());
  return out;
}

Genealogy prune(Genealogy g) {
  while (g.black_count() > 0) g.death(0, g.time());
  return g;
}

// ---------------------------------------------------------------------------

EventTimeSets event_times(const Genealogy& v) {
  EventTimeSets s;
  v.for_each_node([&](const GNode& p) {
    const int greens = p.count(Color::green);
    s.E.push_back(p.time);
    if (greens >= 1) s.A.push_back(p.time);
    if (greens == 2) s.C.push_back(p.time);
    if (greens == 0) s.L.push_back(p.time);
    if (p.count(Color::blue) >= 1) {
      s.S.push_back(p.time);
      if (greens >= 1) s.D.push_back(p.time);
    }
    if (p.is_root()) s.R.push_back(p.time);
  });
  for (auto* set : {&s.E, &s.A, &s.C, &s.L, &s.S, &s.D, &s.R}) std::sort(set->begin(), set->end());
  return s;
}

int LineageCurve::at(double t) const {
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 0;
  return values[static_cast<std::size_t>(it - times.begin()) - 1];
}

LineageCurve lineage_curve(const Genealogy& v) {
  const EventTimeSets s = event_times(v);
  std::vector<std::pair<double, int>> steps;
  for (double c : s.C) steps.push_back({c, +1});
  for (double e : s.L) steps.push_back({e, -1});
  std::sort(steps.begin(), steps.end());
  LineageCurve curve;
  int level = 0;
  for (std::size_t i = 0; i < steps.size();) {
    const double t = steps[i].first;
    for (; i < steps.size() && steps[i].first == t; ++i) level += steps[i].second;
    if (level < 0) {
      throw GenealogyError("lineage count becomes negative at t=" + std::to_string(t) + ": corrupt genealogy");
    }
    curve.times.push_back(t);
    curve.values.push_back(level);
  }
  return curve;
}

int lineage_count(const Genealogy& v, double t) { return lineage_curve(v).at(t); }

bool is_visible(const Genealogy& g) {
  bool ok = true;
  g.for_each_node([&](const GNode& p) {
    const int greens = p.count(Color::green), blues = p.count(Color::blue), reds = p.count(Color::red);
    ok = ok && (greens == 2 || (greens == 1 && blues == 1) || (reds == 1 && blues == 1));
  });
  return ok;
}

std::vector<Attachment> attach_times(const Genealogy& v) {
  if (!is_visible(v)) throw GenealogyError("attach_times requires a visible genealogy");
  std::map<std::uint64_t, const GNode*> sample_nodes;
  v.for_each_node([&](const GNode& p) {
    for (const Ball& b : p.pocket)
      if (b.color == Color::blue) sample_nodes[b.name] = &p;
  });

  std::set<std::uint64_t> spanned;
  std::vector<Attachment> out;
  for (const auto& [q, node] : sample_nodes) {
    Attachment att;
    att.sample = q;
    att.s = node->time;
    spanned.insert(node->name);
    const GNode* cur = node;
    for (;;) {
      const GNode* par = v.parent(*cur);
      if (!par) throw GenealogyError("node " + std::to_string(cur->name) + " has no parent green ball");
      if (par == cur) {
        att.a = cur->time;
        att.kind = AttachKind::root;
        break;
      }
      if (spanned.count(par->name)) {
        att.a = par->time;
        att.kind = par->count(Color::blue) ? AttachKind::direct_descent : AttachKind::coalescence;
        break;
      }
      spanned.insert(par->name);
      cur = par;
    }
    out.push_back(att);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string GenealogyReport::summary() const {
  std::ostringstream os;
  for (const auto& issue : issues) os << "(" << issue.condition << ") " << issue.message << "\n";
  return os.str();
}

GenealogyReport validate_genealogy(const Genealogy& g) {
  GenealogyReport r;
  auto add = [&](const char* cond, std::string msg) { r.issues.push_back({cond, std::move(msg)}); };
  const std::vector<GNode> nodes = g.nodes();

  std::map<Ball, std::vector<std::size_t>> where;
  std::map<std::uint64_t, std::size_t> position;
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const GNode& p = nodes[j];
    const std::string label = "node " + std::to_string(p.name);
    if (p.time > g.time()) add("i", label + " is later than the genealogy time");
    if (j > 0 && p.time < nodes[j - 1].time) add("ii", label + " is earlier than its predecessor");
    if (!position.emplace(p.name, j).second) add("balls", "node name " + std::to_string(p.name) + " is repeated");
    for (const Ball& b : p.pocket) where[b].push_back(j);
  }
  for (const auto& [b, holders] : where) {
    if (holders.size() > 1) add("iii", ball_str(b) + " appears in " + std::to_string(holders.size()) + " places");
    if (b.color == Color::green) {
      auto it = position.find(b.name);
      if (it == position.end()) {
        add("balls", ball_str(b) + " names no node");
      } else {
        for (std::size_t k : holders)
          if (k > it->second) add("iv", ball_str(b) + " is held by a later node");
      }
    }
    if (b.color == Color::red && !where.count({Color::blue, b.name})) {
      add("balls", ball_str(b) + " has no matching blue ball");
    }
  }
  for (const GNode& p : nodes) {
    if (!where.count({Color::green, p.name})) add("v", "no green ball names node " + std::to_string(p.name));
  }
  return r;
}

}  // namespace phylomarkov

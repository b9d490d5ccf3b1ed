#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>

#include "json.hpp"
#include "phylomarkov/genealogy.hpp"

namespace phylomarkov {

using nlohmann::json;

// ---------------------------------------------------------------------------
// JSON

std::string to_json(const Genealogy& g, int indent) {
  json nodes = json::array();
  g.for_each_node([&](const GNode& p) {
    json pocket = json::array();
    for (const Ball& b : p.pocket) pocket.push_back({{"color", color_name(b.color)}, {"name", b.name}});
    nodes.push_back({{"name", p.name}, {"time", p.time}, {"pocket", std::move(pocket)}});
  });
  json doc{{"time", g.time()}, {"nodes", std::move(nodes)}};
  return doc.dump(indent);
}

namespace {

const json& field(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw GenealogyError(path + ": missing key '" + key + "'");
  return *it;
}

void only_keys(const json& obj, std::initializer_list<const char*> keys, const std::string& path) {
  for (const auto& [k, v] : obj.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) {
      throw GenealogyError(path + ": unknown key '" + k + "'");
    }
  }
}

double as_time(const json& v, const std::string& path) {
  if (!v.is_number()) throw GenealogyError(path + ": expected a number");
  return v.get<double>();
}

std::uint64_t as_name(const json& v, const std::string& path) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw GenealogyError(path + ": expected a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

}  // namespace

Genealogy genealogy_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw GenealogyError(std::string("genealogy JSON: ") + e.what());
  }
  if (!doc.is_object()) throw GenealogyError("$: expected an object");
  only_keys(doc, {"time", "nodes", "provenance"}, "$");
  const double time = as_time(field(doc, "time", "$"), "$.time");
  const json& arr = field(doc, "nodes", "$");
  if (!arr.is_array()) throw GenealogyError("$.nodes: expected an array");
  std::vector<GNode> nodes;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string path = "$.nodes[" + std::to_string(i) + "]";
    const json& n = arr[i];
    if (!n.is_object()) throw GenealogyError(path + ": expected an object");
    only_keys(n, {"name", "time", "pocket"}, path);
    const json& pocket = field(n, "pocket", path);
    if (!pocket.is_array() || pocket.size() != 2) throw GenealogyError(path + ".pocket: expected two balls");
    Ball balls[2];
    for (std::size_t b = 0; b < 2; ++b) {
      const std::string bpath = path + ".pocket[" + std::to_string(b) + "]";
      if (!pocket[b].is_object()) throw GenealogyError(bpath + ": expected an object");
      only_keys(pocket[b], {"color", "name"}, bpath);
      const json& color = field(pocket[b], "color", bpath);
      if (!color.is_string()) throw GenealogyError(bpath + ".color: expected a string");
      try {
        balls[b].color = parse_color(color.get<std::string>());
      } catch (const GenealogyError& e) {
        throw GenealogyError(bpath + ".color: " + e.what());
      }
      balls[b].name = as_name(field(pocket[b], "name", bpath), bpath + ".name");
    }
    nodes.push_back(make_node(as_name(field(n, "name", path), path + ".name"),
                              as_time(field(n, "time", path), path + ".time"), balls[0], balls[1]));
  }
  return Genealogy::from_nodes(time, nodes);
}

// ---------------------------------------------------------------------------
// Newick

namespace {

std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string to_newick(const Genealogy& v) {
  if (!is_visible(v)) throw GenealogyError("to_newick requires a visible genealogy");

  // Children of each node, and the smallest sample label below it.
  std::map<std::uint64_t, std::uint64_t> min_blue;
  std::function<std::uint64_t(const GNode&)> lowest = [&](const GNode& p) -> std::uint64_t {
    auto it = min_blue.find(p.name);
    if (it != min_blue.end()) return it->second;
    std::uint64_t m = std::numeric_limits<std::uint64_t>::max();
    for (const Ball& b : p.pocket) {
      if (b.color == Color::blue) m = std::min(m, b.name);
      if (b.color == Color::green && b.name != p.name) m = std::min(m, lowest(*v.find_node(b.name)));
    }
    return min_blue[p.name] = m;
  };

  std::function<std::string(const GNode&, double)> write = [&](const GNode& p, double parent_time) {
    const std::string len = ":" + fmt_num(p.time - parent_time);
    if (p.count(Color::red) == 1) return "r" + std::to_string(p.pocket[1].name) + len;
    std::vector<const GNode*> kids;
    std::uint64_t blue = std::numeric_limits<std::uint64_t>::max();
    for (const Ball& b : p.pocket) {
      if (b.color == Color::green && b.name != p.name) kids.push_back(v.find_node(b.name));
      if (b.color == Color::blue) blue = b.name;
    }
    std::sort(kids.begin(), kids.end(), [&](const GNode* a, const GNode* b) { return lowest(*a) < lowest(*b); });
    std::string s = "(";
    for (std::size_t i = 0; i < kids.size(); ++i) {
      if (i) s += ",";
      s += write(*kids[i], p.time);
    }
    s += ")";
    if (blue != std::numeric_limits<std::uint64_t>::max()) s += "b" + std::to_string(blue);
    return s + len;
  };

  std::string out;
  v.for_each_node([&](const GNode& p) {
    if (p.is_root()) out += write(p, 0.0) + ";\n";
  });
  return out;
}

namespace {

struct ParsedNode {
  std::string label;
  double length = 0.0;
  std::size_t pos = 0;
  std::vector<std::unique_ptr<ParsedNode>> children;
};

class NewickParser {
 public:
  explicit NewickParser(const std::string& text) : s_(text) {}

  std::vector<std::unique_ptr<ParsedNode>> forest() {
    std::vector<std::unique_ptr<ParsedNode>> trees;
    skip();
    while (i_ < s_.size()) {
      trees.push_back(subtree());
      skip();
      expect(';');
      skip();
    }
    return trees;
  }

  [[noreturn]] void fail(const std::string& msg, std::size_t pos) const {
    throw GenealogyError("Newick parse error at position " + std::to_string(pos) + ": " + msg);
  }

 private:
  void skip() {
    for (;;) {
      while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
      if (i_ < s_.size() && s_[i_] == '[') {
        const auto close = s_.find(']', i_);
        if (close == std::string::npos) fail("unterminated comment", i_);
        i_ = close + 1;
        continue;
      }
      return;
    }
  }

  void expect(char c) {
    if (i_ >= s_.size() || s_[i_] != c) fail(std::string("expected '") + c + "'", i_);
    ++i_;
  }

  std::unique_ptr<ParsedNode> subtree() {
    auto node = std::make_unique<ParsedNode>();
    skip();
    node->pos = i_;
    if (i_ < s_.size() && s_[i_] == '(') {
      ++i_;
      node->children.push_back(subtree());
      skip();
      while (i_ < s_.size() && s_[i_] == ',') {
        ++i_;
        node->children.push_back(subtree());
        skip();
      }
      expect(')');
    }
    skip();
    const std::size_t start = i_;
    while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_')) ++i_;
    node->label = s_.substr(start, i_ - start);
    skip();
    if (i_ >= s_.size() || s_[i_] != ':') fail("missing branch length", i_);
    ++i_;
    skip();
    const std::size_t num = i_;
    while (i_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[i_])) || std::strchr("+-.eE", s_[i_]))) ++i_;
    const std::string token = s_.substr(num, i_ - num);
    try {
      std::size_t used = 0;
      node->length = std::stod(token, &used);
      if (used != token.size()) fail("bad branch length '" + token + "'", num);
    } catch (const std::logic_error&) {
      fail("bad branch length '" + token + "'", num);
    }
    if (!(node->length >= 0.0)) fail("negative branch length", num);
    return node;
  }

  const std::string& s_;
  std::size_t i_ = 0;
};

std::uint64_t label_number(const NewickParser& parser, const ParsedNode& n, char prefix) {
  if (n.label.size() < 2 || n.label[0] != prefix ||
      !std::all_of(n.label.begin() + 1, n.label.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    parser.fail("expected a label of the form " + std::string(1, prefix) + "<number>, got '" + n.label + "'", n.pos);
  }
  return std::stoull(n.label.substr(1));
}

}  // namespace

Genealogy from_newick(const std::string& text, std::optional<double> time) {
  NewickParser parser(text);
  const auto trees = parser.forest();

  enum class Kind { root, green, blue, red };
  struct Flat {
    Kind kind;
    double time;
    std::size_t order;
    std::vector<std::size_t> kids;
    std::uint64_t sample = 0;
  };
  std::vector<Flat> flat;

  std::function<std::size_t(const ParsedNode&, double, bool)> visit = [&](const ParsedNode& n, double parent_time,
                                                                          bool top) -> std::size_t {
    const std::size_t idx = flat.size();
    flat.push_back({Kind::green, parent_time + n.length, idx, {}, 0});
    if (top) {
      if (!n.label.empty() || n.children.size() != 1) parser.fail("a tree must start with an unlabeled single-child root", n.pos);
      flat[idx].kind = Kind::root;
    } else if (n.children.empty()) {
      flat[idx].kind = Kind::red;
      flat[idx].sample = label_number(parser, n, 'r');
    } else if (n.children.size() == 1) {
      flat[idx].kind = Kind::blue;
      flat[idx].sample = label_number(parser, n, 'b');
    } else if (n.children.size() == 2) {
      if (!n.label.empty()) parser.fail("branch points must be unlabeled", n.pos);
    } else {
      parser.fail("nodes may have at most two children", n.pos);
    }
    const double t = flat[idx].time;
    for (const auto& c : n.children) {
      const std::size_t k = visit(*c, t, false);
      flat[idx].kids.push_back(k);
    }
    return idx;
  };
  for (const auto& tree : trees) visit(*tree, 0.0, true);

  std::vector<std::size_t> order(flat.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return flat[a].time < flat[b].time; });
  std::vector<std::uint64_t> name(flat.size());
  for (std::size_t r = 0; r < order.size(); ++r) name[order[r]] = r;

  std::vector<GNode> nodes;
  double latest = 0.0;
  for (std::size_t idx : order) {
    const Flat& f = flat[idx];
    const std::uint64_t nm = name[idx];
    latest = std::max(latest, f.time);
    switch (f.kind) {
      case Kind::root:
        nodes.push_back(make_node(nm, f.time, {Color::green, nm}, {Color::green, name[f.kids[0]]}));
        break;
      case Kind::green:
        nodes.push_back(make_node(nm, f.time, {Color::green, name[f.kids[0]]}, {Color::green, name[f.kids[1]]}));
        break;
      case Kind::blue:
        nodes.push_back(make_node(nm, f.time, {Color::green, name[f.kids[0]]}, {Color::blue, f.sample}));
        break;
      case Kind::red:
        nodes.push_back(make_node(nm, f.time, {Color::red, f.sample}, {Color::blue, f.sample}));
        break;
    }
  }
  return Genealogy::from_nodes(time.value_or(latest), nodes);
}

}  // namespace phylomarkov

#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "phylomarkov/model.hpp"
#include "phylomarkov/trajectory.hpp"

namespace phylomarkov {

enum class Color : std::uint8_t { green, black, blue, red };

const char* color_name(Color c);
Color parse_color(const std::string& s);

struct Ball {
  Color color = Color::green;
  std::uint64_t name = 0;

  friend bool operator==(const Ball&, const Ball&) = default;
  friend auto operator<=>(const Ball&, const Ball&) = default;
};

struct BallHash {
  std::size_t operator()(const Ball& b) const noexcept;
};

/// A genealogical node. The pocket is kept sorted so that equality does not
/// depend on the order of the two balls.
struct GNode {
  std::uint64_t name = 0;
  double time = 0.0;
  std::array<Ball, 2> pocket{};

  bool holds(const Ball& b) const { return pocket[0] == b || pocket[1] == b; }
  /// The ball sharing the pocket with b (b must be held).
  const Ball& mate(const Ball& b) const { return pocket[0] == b ? pocket[1] : pocket[0]; }
  int count(Color c) const { return int(pocket[0].color == c) + int(pocket[1].color == c); }
  /// Holds the green ball bearing its own name.
  bool is_root() const { return holds({Color::green, name}); }

  friend bool operator==(const GNode&, const GNode&) = default;
};

GNode make_node(std::uint64_t name, double time, Ball a, Ball b);

/// Sorted names of extant individuals.
using Inventory = std::vector<std::uint64_t>;

class GenealogyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A time-stamped node sequence of colored-ball pockets.
///
/// Newborn and sample nodes take their names from a serial counter that
/// never reuses a name, so node and ball names stay unique after deaths and
/// samples. Ball holders and node positions are indexed for O(log) updates;
/// the indexes are derived data.
class Genealogy {
 public:
  Genealogy() = default;

  /// Wraps an arbitrary node sequence without checking it (see validate_genealogy).
  static Genealogy from_nodes(double time, const std::vector<GNode>& nodes);

  double time() const { return time_; }
  void set_time(double t) { time_ = t; }

  std::size_t size() const { return seq_.size(); }
  bool empty() const { return seq_.empty(); }
  std::vector<GNode> nodes() const;

  template <class F>
  void for_each_node(F&& f) const {
    for (const auto& [key, node] : seq_) f(node);
  }

  const GNode* find_node(std::uint64_t name) const;
  /// Name of the node holding ball b, if any.
  std::optional<std::uint64_t> holder(const Ball& b) const;
  /// Node whose pocket holds the green ball of `name`.
  const GNode* parent(const GNode& p) const;

  const Inventory& blacks() const { return blacks_; }
  std::size_t black_count() const { return blacks_.size(); }
  std::size_t blue_count() const { return blues_; }
  std::uint64_t next_name() const { return next_name_; }

  /// In-place updates; n indexes the black balls sorted by name.
  void birth(std::size_t n, double t);
  void sample(std::size_t n, double t);
  void death(std::size_t n, double t);

  friend bool operator==(const Genealogy& a, const Genealogy& b) {
    return a.time_ == b.time_ && a.nodes() == b.nodes();
  }

 private:
  GNode& node_by_name(std::uint64_t name);
  void check_update(std::size_t n, double t, const char* what) const;
  void append(const GNode& node);
  void erase(std::uint64_t name);
  void replace_ball(GNode& node, const Ball& from, const Ball& to);

  double time_ = 0.0;
  std::map<std::uint64_t, GNode> seq_;  // keyed by position
  std::uint64_t next_key_ = 0;
  std::unordered_map<std::uint64_t, std::uint64_t> key_of_name_;
  std::unordered_map<Ball, std::uint64_t, BallHash> holder_;
  Inventory blacks_;
  std::size_t blues_ = 0;
  std::uint64_t next_name_ = 0;
};

Genealogy new_genealogy(std::size_t n0);
Genealogy apply_birth(Genealogy g, std::size_t n, double t);
Genealogy apply_sample(Genealogy g, std::size_t n, double t);
Genealogy apply_death(Genealogy g, std::size_t n, double t);

/// Inventory process folded directly from the jump sequence, naming newborns
/// with the same serial counter as the genealogy.
class InventoryFold {
 public:
  explicit InventoryFold(std::size_t n0);
  void add();
  void drop(std::size_t n);
  void sample();
  const Inventory& names() const { return names_; }

 private:
  Inventory names_;
  std::uint64_t next_name_;
};

/// Folds birth/death/sample updates over the jumps of omega, using each
/// jump's auxiliary number as the black-ball index.
std::pair<Genealogy, Inventory> build_genealogy(const ModelSpec& spec, const JumpSequence& omega);

Inventory inventory_of(const Genealogy& g);

/// Drops the smallest-named black ball until none remain.
Genealogy prune(Genealogy g);

/// Genealogical event times as sorted multisets. R holds the times of root
/// nodes (nodes holding their own green ball); roots carry two green balls,
/// so R is a subset of C.
struct EventTimeSets {
  std::vector<double> E, A, C, L, S, D, R;

  friend bool operator==(const EventTimeSets&, const EventTimeSets&) = default;
};

EventTimeSets event_times(const Genealogy& v);

/// Right-continuous step function: value[i] on [times[i], times[i+1]), 0 before times[0].
struct LineageCurve {
  std::vector<double> times;
  std::vector<int> values;

  int at(double t) const;
};

/// l(t) = #{c in C : c <= t} - #{e in L : e <= t}. Throws GenealogyError if it
/// would become negative.
LineageCurve lineage_curve(const Genealogy& v);
int lineage_count(const Genealogy& v, double t);

enum class AttachKind { root, coalescence, direct_descent };

struct Attachment {
  std::uint64_t sample = 0;  ///< blue-ball name
  double a = 0.0;            ///< attachment time
  double s = 0.0;            ///< sample time
  AttachKind kind = AttachKind::root;
};

/// Sample and attachment times of the embedded chain, ordered by blue-ball name.
std::vector<Attachment> attach_times(const Genealogy& v);

/// True when every pocket is {green,green}, {green,blue} or {red,blue}.
bool is_visible(const Genealogy& g);

struct GenealogyIssue {
  std::string condition;  ///< "i".."v" or "balls"
  std::string message;
};

struct GenealogyReport {
  std::vector<GenealogyIssue> issues;
  bool ok() const { return issues.empty(); }
  std::string summary() const;
};

GenealogyReport validate_genealogy(const Genealogy& g);

/// Node-sequence JSON.
std::string to_json(const Genealogy& g, int indent = -1);
Genealogy genealogy_from_json(const std::string& text);

/// Newick forest, one tree per root, one line per tree.
std::string to_newick(const Genealogy& v);
/// Parses a forest written by to_newick. Node names are reassigned in time
/// order; the genealogy time is `time` if given, else the latest node time.
Genealogy from_newick(const std::string& text, std::optional<double> time = std::nullopt);

}  // namespace phylomarkov

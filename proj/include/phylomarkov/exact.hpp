#pragma once

#include <stdexcept>
#include <vector>

#include "phylomarkov/genealogy.hpp"
#include "phylomarkov/model.hpp"
#include "phylomarkov/trajectory.hpp"

namespace phylomarkov {

enum class QEventKind { birth, sample, other };

/// Everything the per-event factor q_jk depends on: history event k seen from
/// sample lineage j.
struct QContext {
  double t = 0.0;
  QEventKind kind = QEventKind::other;
  int I = 0;    ///< focal size just after the event
  int ell = 0;  ///< lineage count of W_{j-1} at t (right-continuous)
  double a = 0.0;
  double s = 0.0;
  bool in_prev_CD = false;  ///< t in C(W_{j-1}) or D(W_{j-1})
  bool in_prev_L = false;   ///< t in L(W_{j-1})
  bool in_cur_C = false;    ///< t in C(W_j)
};

struct QFactor {
  double value = 1.0;
  bool incompatible = false;  ///< a vanishing denominator or no applicable branch
};

QFactor q_factor(const QContext& ctx);

/// Raised when a genealogy and a history cannot belong together at all
/// (an event time of V missing from h, or a tie with an unrelated event).
class StructuralMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// prune(build_genealogy(spec, omega)).
Genealogy visible_genealogy(const ModelSpec& spec, const JumpSequence& omega);

/// W_1..W_i: the visible genealogy just after each sample.
std::vector<Genealogy> embedded_chain(const ModelSpec& spec, const JumpSequence& omega);

/// log P(V | h) as the double product over lineages and history events.
double loglik_thm1(const ModelSpec& spec, const JumpSequence& omega);

/// log P(V | h) as a single pass over the history.
double loglik_thm2(const ModelSpec& spec, const History& h, const Genealogy& V);

}  // namespace phylomarkov

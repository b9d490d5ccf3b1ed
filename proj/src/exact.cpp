#include "phylomarkov/exact.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace phylomarkov {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double choose2(double n) { return n * (n - 1.0) / 2.0; }

bool contains(const std::vector<double>& sorted, double t) {
  return std::binary_search(sorted.begin(), sorted.end(), t);
}

QEventKind kind_of(const EventType& ev) {
  if (ev.is_birth) return QEventKind::birth;
  if (ev.is_sample) return QEventKind::sample;
  return QEventKind::other;
}

double log_or_neg_inf(double v) { return v > 0.0 ? std::log(v) : kNegInf; }

}  // namespace

QFactor q_factor(const QContext& c) {
  if (!(c.a <= c.t && c.t < c.s)) return {1.0, false};
  if (c.kind == QEventKind::other) return {1.0, false};
  if (c.in_prev_CD) return {1.0, false};

  const bool inside = c.a < c.t;
  const double free_samples = double(c.I) - double(c.ell);
  const double free_pairs = choose2(c.I) - choose2(c.ell);
  if (inside && c.kind == QEventKind::sample) {
    if (free_samples <= 0.0) return {0.0, true};
    return {1.0 - 1.0 / free_samples, false};
  }
  if (c.t == c.a && c.in_prev_L) {
    if (free_samples <= 0.0) return {0.0, true};
    return {1.0 / free_samples, false};
  }
  if (inside && c.kind == QEventKind::birth) {
    if (free_pairs <= 0.0) return {0.0, true};
    return {1.0 - double(c.ell) / free_pairs, false};
  }
  if (c.t == c.a && c.in_cur_C) {
    if (free_pairs <= 0.0) return {0.0, true};
    return {1.0 / free_pairs, false};
  }
  return {0.0, true};
}

Genealogy visible_genealogy(const ModelSpec& spec, const JumpSequence& omega) {
  return prune(build_genealogy(spec, omega).first);
}

std::vector<Genealogy> embedded_chain(const ModelSpec& spec, const JumpSequence& omega) {
  std::vector<Genealogy> chain;
  for (const Jump& j : omega.jumps) {
    if (j.event < spec.events.size() && spec.events[j.event].is_sample) {
      chain.push_back(visible_genealogy(spec, restrict_to(omega, j.time)));
    }
  }
  return chain;
}

double loglik_thm1(const ModelSpec& spec, const JumpSequence& omega) {
  check_jump_sequence(spec, omega);
  const auto chain = embedded_chain(spec, omega);
  if (chain.empty()) return 0.0;

  // Post-event focal sizes of the history.
  std::vector<int> focal(omega.jumps.size());
  State x = omega.x0;
  for (std::size_t k = 0; k < omega.jumps.size(); ++k) {
    x += spec.events[omega.jumps[k].event].displacement;
    focal[k] = spec.focal_size(x);
  }

  const auto attach = attach_times(chain.back());
  const Genealogy empty;
  double total = 0.0;
  for (std::size_t j = 0; j < chain.size(); ++j) {
    const Genealogy& prev = j == 0 ? empty : chain[j - 1];
    const EventTimeSets before = event_times(prev);
    const EventTimeSets after = event_times(chain[j]);
    const LineageCurve ell = lineage_curve(prev);
    for (std::size_t k = 0; k < omega.jumps.size(); ++k) {
      const Jump& jump = omega.jumps[k];
      QContext ctx;
      ctx.t = jump.time;
      ctx.kind = kind_of(spec.events[jump.event]);
      ctx.I = focal[k];
      ctx.ell = ell.at(jump.time);
      ctx.a = attach[j].a;
      ctx.s = attach[j].s;
      ctx.in_prev_CD = contains(before.C, jump.time) || contains(before.D, jump.time);
      ctx.in_prev_L = contains(before.L, jump.time);
      ctx.in_cur_C = contains(after.C, jump.time);
      const QFactor q = q_factor(ctx);
      if (q.incompatible || q.value <= 0.0) return kNegInf;
      total += std::log(q.value);
    }
  }
  return total;
}

double loglik_thm2(const ModelSpec& spec, const History& h, const Genealogy& V) {
  const EventTimeSets sets = event_times(V);
  const LineageCurve ell = lineage_curve(V);

  // Genealogical events still waiting to be matched, by time.
  enum Slot { C, D, L };
  std::map<double, std::array<int, 3>> pending;
  std::vector<double> roots = sets.R;
  for (double c : sets.C) {
    const auto r = std::find(roots.begin(), roots.end(), c);
    if (r != roots.end()) {
      roots.erase(r);
      continue;
    }
    ++pending[c][C];
  }
  for (double d : sets.D) ++pending[d][D];
  for (double l : sets.L) ++pending[l][L];
  std::vector<double> event_times_of_v;
  for (const auto& [t, counts] : pending) event_times_of_v.push_back(t);
  auto is_v_time = [&](double t) { return contains(event_times_of_v, t); };

  auto take = [&](double t, Slot slot) {
    auto it = pending.find(t);
    if (it == pending.end() || it->second[slot] == 0) return false;
    if (--it->second[slot] == 0 && it->second == std::array<int, 3>{0, 0, 0}) pending.erase(it);
    return true;
  };

  State x = h.x0;
  double total = 0.0;
  for (const HistoryEvent& e : h.events) {
    if (e.event >= spec.events.size()) throw StructuralMismatch("history names an unknown event");
    const EventType& ev = spec.events[e.event];
    x += ev.displacement;
    const double I = spec.focal_size(x);
    const double l = ell.at(e.time);
    if (ev.is_birth) {
      if (take(e.time, C)) {
        total += choose2(I) > 0.0 ? -std::log(choose2(I)) : kNegInf;
      } else {
        if (is_v_time(e.time)) {
          throw StructuralMismatch("birth at t=" + std::to_string(e.time) + " ties with a genealogical event");
        }
        const double denom = choose2(I);
        const double lost = choose2(l);
        if (lost > 0.0) total += denom > 0.0 ? log_or_neg_inf(1.0 - lost / denom) : kNegInf;
      }
    } else if (ev.is_sample) {
      if (take(e.time, D)) {
        total += I > 0.0 ? -std::log(I) : kNegInf;
      } else if (take(e.time, L)) {
        total += I > 0.0 ? log_or_neg_inf(1.0 - l / I) : kNegInf;
      } else {
        throw StructuralMismatch("sample at t=" + std::to_string(e.time) + " is absent from the genealogy");
      }
    } else if (is_v_time(e.time)) {
      throw StructuralMismatch("event '" + ev.name + "' at t=" + std::to_string(e.time) +
                               " ties with a genealogical event");
    }
    if (std::isinf(total)) return kNegInf;
  }
  if (!pending.empty()) {
    throw StructuralMismatch("genealogical event at t=" + std::to_string(pending.begin()->first) +
                             " has no matching history event");
  }
  return total;
}

}  // namespace phylomarkov

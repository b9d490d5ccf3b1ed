#pragma once

#include "phylomarkov/model.hpp"
#include "phylomarkov/trajectory.hpp"

namespace phylomarkov {

/// Log density of a history with respect to the rate-mu Poisson base measure:
///   log p0(x0) + sum_j log(rate_j / mu) + mu t - int_0^t sum_u rate_u(s, x_s) ds.
/// Returns -inf when a realized event has zero rate.
double history_log_density(const ModelSpec& spec, const History& h);

/// history_log_density of the projection plus -log I(x-) for every marked jump.
/// Returns -inf when an auxiliary number is out of range.
double jump_log_density(const ModelSpec& spec, const JumpSequence& omega);

}  // namespace phylomarkov

#pragma once

#include <vector>

#include "phylomarkov/model.hpp"

namespace phylomarkov {

/// Relative tolerance for hazard quadrature when rates vary continuously in time.
inline constexpr double kHazardQuadratureTol = 1e-9;

/// Integral over [a, b] of the summed rates of the selected events while the
/// state is held at x. `include` selects events (empty selects all). Exact on
/// piecewise-constant models; adaptive Gauss-Kronrod otherwise.
double rate_integral(const ModelSpec& spec, const State& x, double a, double b, const std::vector<bool>& include = {});

}  // namespace phylomarkov

#include "phylomarkov/hazard.hpp"

#include <algorithm>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace phylomarkov {

namespace {

double selected_total(const std::vector<double>& rates, const std::vector<bool>& include) {
  double s = 0.0;
  for (std::size_t k = 0; k < rates.size(); ++k) {
    if (include.empty() || include[k]) s += rates[k];
  }
  return s;
}

}  // namespace

double rate_integral(const ModelSpec& spec, const State& x, double a, double b, const std::vector<bool>& include) {
  if (!(b > a)) return 0.0;
  std::vector<double> buf(spec.events.size());
  auto integrand = [&](double s) {
    spec.rates(s, x, buf);
    return selected_total(buf, include);
  };

  double total = 0.0;
  double lo = a;
  while (lo < b) {
    const double hi = std::min(b, spec.next_breakpoint(lo));
    if (spec.time_dependence == TimeDependence::piecewise_constant) {
      total += integrand(lo) * (hi - lo);
    } else {
      double err = 0.0;
      total += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(integrand, lo, hi, 15,
                                                                             kHazardQuadratureTol, &err);
    }
    lo = hi;
  }
  return total;
}

}  // namespace phylomarkov

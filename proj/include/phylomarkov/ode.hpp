#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace phylomarkov {

class StepUnderflow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OdeStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

/// Dormand-Prince 5(4) with local extrapolation. The local error of every
/// accepted step satisfies |err_i| <= tol/10 * (|y|_max + |y_i|) componentwise, so
/// accuracy is relative to the size of the solution rather than absolute. The
/// factor 1/10 keeps the error accumulated over O(1) time spans below tol.
class Dopri5 {
 public:
  explicit Dopri5(double tol) : tol_(0.1 * tol) {}

  /// Integrates dy/dt = f(t, y) from t0 to t1 in place.
  /// f has signature void(double t, const std::vector<double>& y, std::vector<double>& dydt).
  template <class F>
  OdeStats integrate(F&& f, std::vector<double>& y, double t0, double t1) {
    OdeStats stats;
    if (!(t1 > t0)) return stats;
    const std::size_t n = y.size();
    for (auto* v : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &tmp_, &ynew_}) v->assign(n, 0.0);

    double t = t0;
    double h = h_ > 0.0 ? std::min(h_, t1 - t0) : initial_step(f, y, t0, t1);
    f(t, y, k1_);
    while (t < t1) {
      const bool last = t + h >= t1;
      if (last) h = t1 - t;
      if (h <= 1e-14 * std::max(1.0, std::abs(t))) {
        throw StepUnderflow("step size underflow at t=" + std::to_string(t));
      }
      for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + h * a21 * k1_[i];
      f(t + c2 * h, tmp_, k2_);
      for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + h * (a31 * k1_[i] + a32 * k2_[i]);
      f(t + c3 * h, tmp_, k3_);
      for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + h * (a41 * k1_[i] + a42 * k2_[i] + a43 * k3_[i]);
      f(t + c4 * h, tmp_, k4_);
      for (std::size_t i = 0; i < n; ++i) {
        tmp_[i] = y[i] + h * (a51 * k1_[i] + a52 * k2_[i] + a53 * k3_[i] + a54 * k4_[i]);
      }
      f(t + c5 * h, tmp_, k5_);
      for (std::size_t i = 0; i < n; ++i) {
        tmp_[i] = y[i] + h * (a61 * k1_[i] + a62 * k2_[i] + a63 * k3_[i] + a64 * k4_[i] + a65 * k5_[i]);
      }
      f(t + h, tmp_, k6_);
      for (std::size_t i = 0; i < n; ++i) {
        ynew_[i] = y[i] + h * (b1 * k1_[i] + b3 * k3_[i] + b4 * k4_[i] + b5 * k5_[i] + b6 * k6_[i]);
      }
      const double t_new = last ? t1 : t + h;
      f(t_new, ynew_, k7_);

      double ymax = std::numeric_limits<double>::min();
      for (std::size_t i = 0; i < n; ++i) ymax = std::max({ymax, std::abs(y[i]), std::abs(ynew_[i])});
      double err = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double e = h * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] + e6 * k6_[i] + e7 * k7_[i]);
        const double scale = tol_ * (ymax + std::max(std::abs(y[i]), std::abs(ynew_[i])));
        err = std::max(err, std::abs(e) / scale);
      }
      if (!std::isfinite(err)) err = 1e10;

      if (err <= 1.0) {
        ++stats.accepted;
        y.swap(ynew_);
        k1_.swap(k7_);
        t = t_new;
        const double grow = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
        if (!last) h_ = h * std::clamp(grow, 0.2, 5.0);
        h = h_ > 0.0 ? h_ : h;
      } else {
        ++stats.rejected;
        h *= std::max(0.1, 0.9 * std::pow(err, -0.2));
      }
    }
    return stats;
  }

  /// Step size carried over between calls.
  double last_step() const { return h_; }
  void reset() { h_ = 0.0; }

 private:
  template <class F>
  double initial_step(F& f, const std::vector<double>& y, double t0, double t1) {
    f(t0, y, k1_);
    double ymax = std::numeric_limits<double>::min();
    for (double v : y) ymax = std::max(ymax, std::abs(v));
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double sc = tol_ * (ymax + std::abs(y[i]));
      d0 = std::max(d0, std::abs(y[i]) / sc);
      d1 = std::max(d1, std::abs(k1_[i]) / sc);
    }
    double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h = std::max(h, 1e-10 * (t1 - t0));
    return std::min(h, t1 - t0);
  }

  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  double tol_;
  double h_ = 0.0;
  std::vector<double> k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_, ynew_;
};

}  // namespace phylomarkov

#pragma once

// Dormand-Prince 5(4) embedded Runge-Kutta for linear complex systems
// dy/dt = L(t) y. The right-hand side is called as rhs(t, y, out). The error of each accepted step is at most rtol relative to
// the max-norm of the state (plus atol), which keeps bins carrying
// exponentially small binomial weight from dictating the step size.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cwsim {

struct StepControl {
  double rtol = 1e-8;
  double atol = 0.0;
  double max_step = std::numeric_limits<double>::infinity();
  double zero_below = 0.0;  // a state whose max-norm falls below this is set to exactly 0
};

class StepSizeUnderflow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Rhs>
class DormandPrince {
 public:
  using value_type = std::complex<double>;

  DormandPrince(Rhs rhs, std::size_t n, StepControl control)
      : rhs_(std::move(rhs)), control_(control), k_(7, std::vector<value_type>(n)), tmp_(n), err_(n) {}

  const Rhs& rhs() const { return rhs_; }
  std::size_t accepted_steps() const { return accepted_; }
  std::size_t rejected_steps() const { return rejected_; }

  // Discards FSAL state; call whenever the right-hand side changes.
  void reset() { have_fsal_ = false; }

  /// Advances y from t to t_end, landing exactly on t_end.
  void advance(std::vector<value_type>& y, double& t, double t_end) {
    if (t_end <= t) return;
    if (!have_fsal_) {
      rhs_(t, std::span<const value_type>(y), std::span<value_type>(k_[0]));
      have_fsal_ = true;
    }
    double scale_y = max_abs(y);
    if (scale_y == 0.0 && control_.atol == 0.0) {
      t = t_end;  // the zero state is a fixed point of a linear system
      return;
    }
    if (h_ <= 0.0) h_ = initial_step(y, t_end - t);

    while (t < t_end) {
      double h = std::min({h_, control_.max_step, t_end - t});
      const bool clipped = h < h_;
      if (h < 1e-13 * std::max(1.0, std::abs(t))) {
        throw StepSizeUnderflow("step size underflow at t=" + std::to_string(t));
      }
      stage(y, t, h);
      double err = 0.0;
      const double scale = control_.atol + control_.rtol * std::max(scale_y, max_abs(tmp_));
      err = max_abs(err_) / scale;

      if (err <= 1.0) {
        const bool last = t + h >= t_end;
        t = last ? t_end : t + h;
        y.swap(tmp_);
        k_[0].swap(k_[6]);
        scale_y = max_abs(y);
        ++accepted_;
        if (scale_y < control_.zero_below) {
          std::fill(y.begin(), y.end(), value_type{});
          std::fill(k_[0].begin(), k_[0].end(), value_type{});
          t = t_end;
          return;
        }
        const double grow = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        // Clipped steps say nothing about the natural step; keep it.
        if (!clipped) h_ = h * grow;
        else h_ = std::max(h_, h * grow);
      } else {
        ++rejected_;
        h_ = std::isfinite(err) ? h * std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0) : 0.2 * h;
      }
    }
  }

 private:
  // max |v_i|, with a single square root instead of one hypot per entry.
  // A NaN entry makes the result NaN so the step is rejected.
  static double max_abs(const std::vector<value_type>& v) {
    double m = 0.0;
    for (const auto& x : v) {
      const double s = x.real() * x.real() + x.imag() * x.imag();
      if (s > m || s != s) m = s;
      if (m != m) break;
    }
    return std::sqrt(m);
  }

  double initial_step(const std::vector<value_type>& y, double span) const {
    const double fy = max_abs(k_[0]);
    const double yy = max_abs(y);
    double h = fy > 0.0 ? 0.01 * yy / fy : span;
    return std::min({h, span, control_.max_step});
  }

  // Writes the 5th-order solution into tmp_, the error estimate into err_,
  // and f(t+h, tmp_) into k_[6].
  void stage(const std::vector<value_type>& y, double t, double h) {
    static constexpr double a21 = 1.0 / 5.0;
    static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                            a54 = -212.0 / 729.0;
    static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                            a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
    static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0, b5 = -2187.0 / 6784.0,
                            b6 = 11.0 / 84.0;
    static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                            e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

    const std::size_t n = y.size();
    auto& k = k_;
    auto eval = [&](double c, std::vector<value_type>& out) {
      rhs_(t + c * h, std::span<const value_type>(tmp_), std::span<value_type>(out));
    };
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + h * (a21 * k[0][i]);
    eval(1.0 / 5.0, k[1]);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + h * (a31 * k[0][i] + a32 * k[1][i]);
    eval(3.0 / 10.0, k[2]);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + h * (a41 * k[0][i] + a42 * k[1][i] + a43 * k[2][i]);
    eval(4.0 / 5.0, k[3]);
    for (std::size_t i = 0; i < n; ++i)
      tmp_[i] = y[i] + h * (a51 * k[0][i] + a52 * k[1][i] + a53 * k[2][i] + a54 * k[3][i]);
    eval(8.0 / 9.0, k[4]);
    for (std::size_t i = 0; i < n; ++i)
      tmp_[i] = y[i] + h * (a61 * k[0][i] + a62 * k[1][i] + a63 * k[2][i] + a64 * k[3][i] + a65 * k[4][i]);
    eval(1.0, k[5]);
    for (std::size_t i = 0; i < n; ++i)
      tmp_[i] = y[i] + h * (b1 * k[0][i] + b3 * k[2][i] + b4 * k[3][i] + b5 * k[4][i] + b6 * k[5][i]);
    eval(1.0, k[6]);
    for (std::size_t i = 0; i < n; ++i) {
      err_[i] = h * (e1 * k[0][i] + e3 * k[2][i] + e4 * k[3][i] + e5 * k[4][i] + e6 * k[5][i] + e7 * k[6][i]);
    }
  }

  Rhs rhs_;
  StepControl control_;
  std::vector<std::vector<value_type>> k_;
  std::vector<value_type> tmp_;
  std::vector<value_type> err_;
  double h_ = 0.0;
  bool have_fsal_ = false;
  std::size_t accepted_ = 0;
  std::size_t rejected_ = 0;
};

}  // namespace cwsim

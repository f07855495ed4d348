#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace potflow {

/// Piecewise cubic Hermite interpolant with Fritsch-Carlson slopes. Monotone
/// data yields a monotone C1 interpolant.
class MonotoneCubic {
 public:
  struct Eval {
    double value;
    double d1;
    double d2;
  };

  /// Cubic on one segment written in the local offset s = x - x_k:
  /// y = c0 + c1 s + c2 s^2 + c3 s^3.
  struct Segment {
    double x0;
    double x1;
    double c0, c1, c2, c3;
  };

  MonotoneCubic() = default;
  /// Requires at least two strictly increasing abscissae.
  MonotoneCubic(std::vector<double> x, std::vector<double> y);

  Eval eval(double x) const;
  /// Segment index containing x (clamped to the table).
  std::size_t locate(double x) const;
  Segment segment(std::size_t k) const;

  std::size_t size() const { return x_.size(); }
  double front_x() const { return x_.front(); }
  double back_x() const { return x_.back(); }
  std::span<const double> xs() const { return x_; }
  std::span<const double> ys() const { return y_; }
  std::span<const double> slopes() const { return m_; }

 private:
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> m_;
};

}  // namespace potflow

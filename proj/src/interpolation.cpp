#include "potflow/interpolation.hpp"

#include <algorithm>
#include <cmath>

#include "potflow/errors.hpp"

namespace potflow {

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n)
    throw DomainError("monotone cubic needs at least two matching samples");
  for (std::size_t k = 0; k + 1 < n; ++k)
    if (!(x_[k + 1] > x_[k]))
      throw DomainError("interpolation abscissae must be strictly increasing");

  std::vector<double> delta(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k)
    delta[k] = (y_[k + 1] - y_[k]) / (x_[k + 1] - x_[k]);

  m_.assign(n, 0.0);
  m_[0] = delta[0];
  m_[n - 1] = delta[n - 2];
  for (std::size_t k = 1; k + 1 < n; ++k) {
    if (delta[k - 1] * delta[k] > 0.0) m_[k] = 0.5 * (delta[k - 1] + delta[k]);
  }
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (delta[k] == 0.0) {
      m_[k] = 0.0;
      m_[k + 1] = 0.0;
      continue;
    }
    const double a = m_[k] / delta[k];
    const double b = m_[k + 1] / delta[k];
    const double r2 = a * a + b * b;
    if (r2 > 9.0) {
      const double tau = 3.0 / std::sqrt(r2);
      m_[k] = tau * a * delta[k];
      m_[k + 1] = tau * b * delta[k];
    }
  }
}

std::size_t MonotoneCubic::locate(double x) const {
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  if (it == x_.begin()) return 0;
  std::size_t k = static_cast<std::size_t>(it - x_.begin()) - 1;
  return std::min(k, x_.size() - 2);
}

MonotoneCubic::Segment MonotoneCubic::segment(std::size_t k) const {
  const double h = x_[k + 1] - x_[k];
  const double delta = (y_[k + 1] - y_[k]) / h;
  Segment s;
  s.x0 = x_[k];
  s.x1 = x_[k + 1];
  s.c0 = y_[k];
  s.c1 = m_[k];
  s.c2 = (3.0 * delta - 2.0 * m_[k] - m_[k + 1]) / h;
  s.c3 = (m_[k] + m_[k + 1] - 2.0 * delta) / (h * h);
  return s;
}

MonotoneCubic::Eval MonotoneCubic::eval(double x) const {
  const Segment s = segment(locate(x));
  const double t = x - s.x0;
  return {s.c0 + t * (s.c1 + t * (s.c2 + t * s.c3)),
          s.c1 + t * (2.0 * s.c2 + 3.0 * t * s.c3), 2.0 * s.c2 + 6.0 * s.c3 * t};
}

}  // namespace potflow

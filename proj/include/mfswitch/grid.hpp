#pragma once

#include <stdexcept>

namespace mfc {

// Uniform space-time grid on [0, horizon] x [0, 1].
// Time nodes t(k) = k*dt for k = 0..nt, space nodes s(m) = m*ds for m = 0..ns.
struct GridSpec {
  int nt = 0;
  int ns = 0;
  double horizon = 0.0;

  static GridSpec make(int nt, int ns, double horizon) {
    if (nt < 2 || ns < 2) throw std::invalid_argument("GridSpec: nt and ns must be >= 2");
    if (!(horizon > 0.0)) throw std::invalid_argument("GridSpec: horizon must be positive");
    return GridSpec{nt, ns, horizon};
  }

  double dt() const { return horizon / nt; }
  double ds() const { return 1.0 / ns; }
  double t(int k) const { return horizon * k / nt; }
  double s(int m) const { return static_cast<double>(m) / ns; }
};

}  // namespace mfc

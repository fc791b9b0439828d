#pragma once

#include <cmath>

namespace mfc {

// Interpolation along one contiguous row of ns+1 uniformly spaced samples on
// [0,1].  Queries are clamped to the unit interval.

inline double lerp_row(const double* row, int ns, double x) {
  double u = x * ns;
  if (u <= 0.0) return row[0];
  if (u >= ns) return row[ns];
  int j = static_cast<int>(u);
  double w = u - j;
  return row[j] + w * (row[j + 1] - row[j]);
}

// 4-point Lagrange cubic on the uniform grid; falls back to the one-sided
// stencil at the ends.  Exact for cubics, O(ds^4) for smooth data.
inline double cubic_row(const double* row, int ns, double x) {
  if (ns < 3) return lerp_row(row, ns, x);
  double u = x * ns;
  if (u <= 0.0) return row[0];
  if (u >= ns) return row[ns];
  int j = static_cast<int>(u);
  int base = j - 1;
  if (base < 0) base = 0;
  if (base > ns - 3) base = ns - 3;
  double w = u - base;  // in [0,3]
  double w0 = -(w - 1) * (w - 2) * (w - 3) / 6.0;
  double w1 = w * (w - 2) * (w - 3) / 2.0;
  double w2 = -w * (w - 1) * (w - 3) / 2.0;
  double w3 = w * (w - 1) * (w - 2) / 6.0;
  return w0 * row[base] + w1 * row[base + 1] + w2 * row[base + 2] + w3 * row[base + 3];
}

}  // namespace mfc
